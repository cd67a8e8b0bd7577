//! The two objectives the solvers descend: the energy `K/p - P/q` and the
//! quotient `K / C_r^{p/r}` with `C_r = ∫a|u|^r`.

use crate::energy::ProblemSpec;
use crate::error::Result;
use crate::scalar::Scalar;

use super::descent::{relative_defect, Composite, Linearization};

/// Node coefficient `a_i w_i` split into its positive and negative parts.
fn split_weight<T: Scalar>(ps: &ProblemSpec<T>) -> (Vec<T>, Vec<T>) {
    ps.weight()
        .values()
        .iter()
        .zip(ps.quadrature())
        .map(|(&a, &w)| (a.max(T::zero()) * w, (-a).max(T::zero()) * w))
        .unzip()
}

/// `|x|^{e-1} sign(x)`, 0 at 0.
fn signed_pow<T: Scalar>(x: T, em1: T) -> T {
    if x == T::zero() {
        T::zero()
    } else {
        x.abs().powf(em1) * x.signum()
    }
}

pub(crate) struct Energy<'a, T> {
    ps: &'a ProblemSpec<T>,
    eps: T,
    pos: Vec<T>,
    neg: Vec<T>,
    free: Vec<bool>,
}

impl<'a, T: Scalar> Energy<'a, T> {
    pub fn new(ps: &'a ProblemSpec<T>, eps: T) -> Self {
        let (pos, neg) = split_weight(ps);
        Energy {
            ps,
            eps,
            pos,
            neg,
            free: ps.free_mask().to_vec(),
        }
    }

    /// Moves along the ray `t u` toward its minimizer, with `|ln t|` capped at
    /// `max_log`, when `P(u) > 0`. The energy is unimodal along the ray, so a
    /// capped step still decreases it. Returns the objective change.
    pub fn rescale_toward_ray_minimum(&self, u: &mut [T], max_log: T) -> T {
        let (p, q) = (self.ps.p(), self.ps.q());
        let k = self.ps.kinetic(u);
        let pot = self.ps.weighted_power(u, q);
        if !(k > T::zero() && pot > T::zero()) {
            return T::zero();
        }
        let ln_t = ((pot / k).ln() / (p - q)).max(-max_log).min(max_log);
        let t = ln_t.exp();
        if !(t.is_finite() && t > T::zero()) {
            return T::zero();
        }
        for x in u.iter_mut() {
            *x *= t;
        }
        k * (p * ln_t).exp_m1() / p - pot * (q * ln_t).exp_m1() / q
    }
}

impl<T: Scalar> Composite<T> for Energy<'_, T> {
    fn exponent(&self) -> T {
        self.ps.q()
    }

    fn free(&self) -> &[bool] {
        &self.free
    }

    fn value(&self, u: &[T]) -> T {
        self.ps.breakdown(u).total
    }

    fn increment(&self, u: &[T], d: &[T]) -> T {
        let (p, q) = (self.ps.p(), self.ps.q());
        self.ps.kinetic_increment(u, d) / p - self.ps.weighted_power_increment(u, d, q) / q
    }

    fn linearize(&self, u: &[T]) -> Result<Linearization<T>> {
        let em1 = self.ps.q() - T::one();
        let kin = self.ps.kinetic_gradient(u, self.eps)?;
        let mut grad = kin.clone();
        let mut pot = vec![T::zero(); u.len()];
        for i in 0..u.len() {
            if self.free[i] {
                let s = signed_pow(u[i], em1);
                grad[i] -= self.pos[i] * s;
                pot[i] = (self.pos[i] - self.neg[i]) * s;
            }
        }
        let residual = relative_defect(&kin, &pot, &self.free);
        let gamma = self.neg.clone();
        Ok(Linearization {
            grad,
            gamma,
            residual,
        })
    }

    fn normalize(&self, u: &mut [T]) -> T {
        // the energy is nearly flat along rays when q is close to p; the
        // optimal factor (P/K)^{1/(p-q)} of an unconverged shape is not
        // trustworthy there, hence the cap
        let mut trial = u.to_vec();
        let change = self.rescale_toward_ray_minimum(&mut trial, T::LN_2());
        if change < T::zero() {
            u.copy_from_slice(&trial);
            change
        } else {
            T::zero()
        }
    }
}

/// `K(u) / (∫a|u|^r)^{p/r}` with extra nodes optionally pinned to zero.
/// `normalize` projects back to `∫a|u|^r = 1`.
pub(crate) struct Quotient<'a, T> {
    ps: &'a ProblemSpec<T>,
    r: T,
    eps: T,
    pos: Vec<T>,
    neg: Vec<T>,
    free: Vec<bool>,
}

impl<'a, T: Scalar> Quotient<'a, T> {
    pub fn new(ps: &'a ProblemSpec<T>, r: T, eps: T, pinned: Option<&[bool]>) -> Self {
        let (pos, neg) = split_weight(ps);
        let mut free = ps.free_mask().to_vec();
        if let Some(pin) = pinned {
            for (f, &x) in free.iter_mut().zip(pin) {
                *f = *f && !x;
            }
        }
        Quotient {
            ps,
            r,
            eps,
            pos,
            neg,
            free,
        }
    }

    pub fn constraint(&self, u: &[T]) -> T {
        self.ps.weighted_power(u, self.r)
    }

    /// Zeroes pinned nodes and scales onto the constraint set; `false` if the
    /// constraint is not positive.
    pub fn project(&self, u: &mut [T]) -> bool {
        for (x, &f) in u.iter_mut().zip(&self.free) {
            if !f {
                *x = T::zero();
            }
        }
        let c = self.constraint(u);
        if !(c > T::zero()) {
            return false;
        }
        let s = c.powf(-T::one() / self.r);
        for x in u.iter_mut() {
            *x *= s;
        }
        true
    }

    pub fn free_nodes(&self) -> &[bool] {
        &self.free
    }
}

impl<T: Scalar> Composite<T> for Quotient<'_, T> {
    fn exponent(&self) -> T {
        self.r
    }

    fn free(&self) -> &[bool] {
        &self.free
    }

    fn value(&self, u: &[T]) -> T {
        let c = self.constraint(u);
        if !(c > T::zero()) {
            return T::infinity();
        }
        self.ps.kinetic(u) / c.powf(self.ps.p() / self.r)
    }

    fn increment(&self, u: &[T], d: &[T]) -> T {
        let p = self.ps.p();
        let k = self.ps.kinetic(u);
        let c = self.constraint(u);
        let dc = self.ps.weighted_power_increment(u, d, self.r);
        if !(c + dc > T::zero()) {
            return T::infinity();
        }
        let dk = self.ps.kinetic_increment(u, d);
        let base = k / c.powf(p / self.r);
        if k == T::zero() {
            return (k + dk) / (c + dc).powf(p / self.r);
        }
        base * ((dk / k).ln_1p() - p / self.r * (dc / c).ln_1p()).exp_m1()
    }

    fn linearize(&self, u: &[T]) -> Result<Linearization<T>> {
        let p = self.ps.p();
        let em1 = self.r - T::one();
        let k = self.ps.kinetic(u);
        let c = self.constraint(u);
        let kc = k / c;
        let scale = p / c.powf(p / self.r);
        let kin = self.ps.kinetic_gradient(u, self.eps)?;
        let mut grad = vec![T::zero(); u.len()];
        let mut gamma = vec![T::zero(); u.len()];
        let mut con = vec![T::zero(); u.len()];
        for i in 0..u.len() {
            if self.free[i] {
                let s = signed_pow(u[i], em1);
                grad[i] = scale * (kin[i] - kc * self.pos[i] * s);
                gamma[i] = scale * kc * self.neg[i];
                con[i] = kc * (self.pos[i] - self.neg[i]) * s;
            }
        }
        let residual = relative_defect(&kin, &con, &self.free);
        Ok(Linearization {
            grad,
            gamma,
            residual,
        })
    }

    fn normalize(&self, u: &mut [T]) -> T {
        // the quotient is scale invariant, so projecting costs nothing
        self.project(u);
        T::zero()
    }
}
