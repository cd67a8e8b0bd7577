//! The discrete energy `I_q(u) = K(u)/p - P(u)/q`, with `K(u) = ∫|∇u|^p` and
//! `P(u) = ∫a|u|^q`, plus the quotients and pointwise inequalities built on it.
//!
//! The kinetic term uses the grid's gradient samples (one per cell in 1-D, one
//! per cell corner in 2-D); the potential uses trapezoidal node weights.

use crate::error::{Error, Result};
use crate::grid::{BoundaryMode, Field, GradientSamples, Grid};
use crate::scalar::{pow_increment, Scalar};
use crate::weight::{neumann_admissible, WeightField};

/// A grid, a weight and the exponents `p`, `q`.
#[derive(Clone, Debug)]
pub struct ProblemSpec<T> {
    grid: Grid<T>,
    weight: WeightField<T>,
    p: T,
    q: T,
    quad: Vec<T>,
    free: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnergyBreakdown<T> {
    /// `∫|∇u|^p`
    pub kinetic: T,
    /// `∫a|u|^q`
    pub potential: T,
    /// `kinetic/p - potential/q`
    pub total: T,
}

impl<T: Scalar> ProblemSpec<T> {
    /// Accepts `1 <= q <= p`, `p > 1`. Solvers narrow this further.
    pub fn new(grid: Grid<T>, weight: WeightField<T>, p: T, q: T) -> Result<Self> {
        let exps = |reason| Error::Exponents {
            p: p.to_f64_lossy(),
            q: q.to_f64_lossy(),
            reason,
        };
        if !(p > T::one()) || !p.is_finite() {
            return Err(exps("p must exceed 1"));
        }
        if !(q >= T::one() && q <= p) {
            return Err(exps("q must lie in [1, p]"));
        }
        if weight.values().len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                got: weight.values().len(),
            });
        }
        if grid.boundary() == BoundaryMode::Neumann && !neumann_admissible(&weight, &grid) {
            return Err(Error::NeumannInadmissible(
                grid.integrate_nodes(weight.field()).to_f64_lossy(),
            ));
        }
        let quad = grid.quadrature_weights();
        let free = grid.free_mask();
        Ok(ProblemSpec {
            grid,
            weight,
            p,
            q,
            quad,
            free,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn weight(&self) -> &WeightField<T> {
        &self.weight
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn q(&self) -> T {
        self.q
    }

    pub fn quadrature(&self) -> &[T] {
        &self.quad
    }

    pub fn free_mask(&self) -> &[bool] {
        &self.free
    }

    /// Same grid and weight with a different `q`.
    pub fn with_q(&self, q: T) -> Result<Self> {
        ProblemSpec::new(self.grid.clone(), self.weight.clone(), self.p, q)
    }

    /// Same problem with the weight multiplied by `c > 0`.
    pub fn with_weight_scale(&self, c: T) -> Result<Self> {
        ProblemSpec::new(self.grid.clone(), self.weight.scaled(c), self.p, self.q)
    }

    pub(crate) fn require_sublinear(&self) -> Result<()> {
        if !(self.q > T::one() && self.q < self.p) {
            return Err(Error::Exponents {
                p: self.p.to_f64_lossy(),
                q: self.q.to_f64_lossy(),
                reason: "q must lie in (1, p)",
            });
        }
        Ok(())
    }

    pub(crate) fn check_field(&self, u: &[T]) -> Result<()> {
        if u.len() != self.grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: self.grid.node_count(),
                got: u.len(),
            });
        }
        Ok(())
    }

    /// `∫|∇u|^p`.
    pub fn kinetic(&self, u: &[T]) -> T {
        let p = self.p;
        self.grid.gradient_samples(u).integrate_norm(|n| n.powf(p))
    }

    /// `∫a|u|^r`.
    pub fn weighted_power(&self, u: &[T], r: T) -> T {
        let a = self.weight.values();
        u.iter()
            .zip(a)
            .zip(&self.quad)
            .map(|((&v, &ai), &w)| {
                if v == T::zero() {
                    T::zero()
                } else {
                    ai * w * v.abs().powf(r)
                }
            })
            .sum()
    }

    pub fn breakdown(&self, u: &[T]) -> EnergyBreakdown<T> {
        let kinetic = self.kinetic(u);
        let potential = self.weighted_power(u, self.q);
        EnergyBreakdown {
            kinetic,
            potential,
            total: kinetic / self.p - potential / self.q,
        }
    }

    /// Gradient of `K(u)/p`, with `|∇u|^{p-2}` regularized to
    /// `(|∇u|^2 + eps^2)^{(p-2)/2}`. Boundary rows are zeroed in Dirichlet mode.
    pub fn kinetic_gradient(&self, u: &[T], eps: T) -> Result<Vec<T>> {
        let samples = self.grid.gradient_samples(u);
        let coeffs = kinetic_coefficients(&samples, self.p, eps)?;
        let mut g = self.grid.gradient_samples_adjoint(&coeffs);
        self.zero_pinned(&mut g);
        Ok(g)
    }

    /// Gradient of `∫a|u|^r`: `r a |u|^{r-2} u` per node, 0 where `u = 0`.
    pub fn weighted_power_gradient(&self, u: &[T], r: T) -> Vec<T> {
        let a = self.weight.values();
        let mut g: Vec<T> = u
            .iter()
            .zip(a)
            .zip(&self.quad)
            .map(|((&v, &ai), &w)| {
                if v == T::zero() {
                    T::zero()
                } else {
                    r * ai * w * v.abs().powf(r - T::one()) * v.signum()
                }
            })
            .collect();
        self.zero_pinned(&mut g);
        g
    }

    pub(crate) fn zero_pinned(&self, g: &mut [T]) {
        for (gi, &f) in g.iter_mut().zip(&self.free) {
            if !f {
                *gi = T::zero();
            }
        }
    }

    /// `K(u + d) - K(u)`, free of cancellation for small `d`.
    pub fn kinetic_increment(&self, u: &[T], d: &[T]) -> T {
        let gu = self.grid.gradient_samples(u);
        let gd = self.grid.gradient_samples(d);
        let dim = gu.dim();
        let (cu, cd) = (gu.comps(), gd.comps());
        let p = self.p;
        let two = T::c(2.0);
        (0..gu.len())
            .map(|s| {
                let mut a2 = T::zero();
                let mut delta2 = T::zero();
                for k in s * dim..(s + 1) * dim {
                    a2 += cu[k] * cu[k];
                    delta2 += cd[k] * (two * cu[k] + cd[k]);
                }
                pow_increment(a2, delta2, p)
            })
            .sum::<T>()
            * gu.weight()
    }

    /// `∫a(|u + d|^r - |u|^r)`, free of cancellation for small `d`.
    pub fn weighted_power_increment(&self, u: &[T], d: &[T], r: T) -> T {
        let a = self.weight.values();
        let two = T::c(2.0);
        u.iter()
            .zip(d)
            .zip(a.iter().zip(&self.quad))
            .map(|((&ui, &di), (&ai, &w))| {
                if ai == T::zero() || di == T::zero() {
                    T::zero()
                } else {
                    ai * w * pow_increment(ui * ui, di * (two * ui + di), r)
                }
            })
            .sum()
    }
}

/// Per-sample coefficients `w * phi(|g|) * g` whose adjoint is `∇(K/p)`.
fn kinetic_coefficients<T: Scalar>(samples: &GradientSamples<T>, p: T, eps: T) -> Result<Vec<T>> {
    let dim = samples.dim();
    let w = samples.weight();
    let expo = (p - T::c(2.0)) * T::c(0.5);
    let eps2 = eps * eps;
    let mut out = Vec::with_capacity(samples.comps().len());
    for s in 0..samples.len() {
        let n2 = samples.norm_sq(s);
        let factor = if n2 + eps2 == T::zero() {
            if p < T::c(2.0) {
                return Err(Error::DegenerateGradient);
            }
            T::zero()
        } else {
            (n2 + eps2).powf(expo)
        };
        for &g in samples.get(s) {
            out.push(w * factor * g);
        }
        debug_assert_eq!(out.len(), (s + 1) * dim);
    }
    Ok(out)
}

/// Kinetic, potential and total energy of `u`.
pub fn energy<T: Scalar>(u: &Field<T>, ps: &ProblemSpec<T>) -> Result<EnergyBreakdown<T>> {
    ps.check_field(u.values())?;
    Ok(ps.breakdown(u.values()))
}

/// Gradient of the discrete energy with respect to the node values.
///
/// `eps` only regularizes the `|∇u|^{p-2}` factor. With `eps = 0` and `p < 2`
/// a vanishing sample gradient is an error.
pub fn energy_gradient<T: Scalar>(u: &Field<T>, ps: &ProblemSpec<T>, eps: T) -> Result<Field<T>> {
    ps.check_field(u.values())?;
    let mut g = ps.kinetic_gradient(u.values(), eps)?;
    let pot = ps.weighted_power_gradient(u.values(), ps.q);
    let inv_q = T::one() / ps.q;
    for (gi, pi) in g.iter_mut().zip(pot) {
        *gi -= pi * inv_q;
    }
    Ok(Field::from_vec_unchecked(g))
}

/// `∫a|u|^q`.
pub fn constraint_value<T: Scalar>(u: &Field<T>, ps: &ProblemSpec<T>) -> T {
    ps.weighted_power(u.values(), ps.q)
}

/// Radial projection onto `{∫a|u|^q = 1}`.
pub fn project_to_sa<T: Scalar>(u: &Field<T>, ps: &ProblemSpec<T>) -> Result<Field<T>> {
    project_with_exponent(u, ps, ps.q)
}

pub(crate) fn project_with_exponent<T: Scalar>(
    u: &Field<T>,
    ps: &ProblemSpec<T>,
    r: T,
) -> Result<Field<T>> {
    let c = ps.weighted_power(u.values(), r);
    if !(c > T::zero()) {
        return Err(Error::NonPositiveConstraint(c.to_f64_lossy()));
    }
    Ok(u.scaled(c.powf(-T::one() / r)))
}

/// `K(u) / (∫a|u|^r)^{p/r}`; scale invariant.
pub fn rayleigh<T: Scalar>(u: &Field<T>, ps: &ProblemSpec<T>, r: T) -> Result<T> {
    ps.check_field(u.values())?;
    let c = ps.weighted_power(u.values(), r);
    if !(c > T::zero()) {
        return Err(Error::NonPositiveConstraint(c.to_f64_lossy()));
    }
    Ok(ps.kinetic(u.values()) / c.powf(ps.p / r))
}

/// Cellwise slack of the generalized Picone inequality
/// `|∇U|^{p-2}∇U·∇(v^q/U^{q-1}) <= |∇U|^{p-q}|∇v|^q` with `U = u + eps`.
///
/// The test field `v^q / U^{q-1}` is formed at the nodes and then
/// differentiated with the cell gradient.
pub fn picone_gap<T: Scalar>(
    u: &Field<T>,
    v: &Field<T>,
    ps: &ProblemSpec<T>,
    eps: T,
) -> Result<Vec<T>> {
    ps.check_field(u.values())?;
    ps.check_field(v.values())?;
    if !(eps > T::zero()) {
        return Err(Error::InvalidArgument("picone_gap needs eps > 0".into()));
    }
    for f in [u, v] {
        if let Some((node, &value)) = f.values().iter().enumerate().find(|(_, &x)| x < T::zero()) {
            return Err(Error::NegativeField {
                node,
                value: value.to_f64_lossy(),
            });
        }
    }
    let (p, q) = (ps.p, ps.q);
    let shifted: Vec<T> = u.values().iter().map(|&x| x + eps).collect();
    let test: Vec<T> = shifted
        .iter()
        .zip(v.values())
        .map(|(&s, &vv)| vv.powf(q) / s.powf(q - T::one()))
        .collect();
    let grid = ps.grid();
    let gu = grid.gradient_of(&shifted);
    let gv = grid.gradient_of(v.values());
    let gt = grid.gradient_of(&test);
    Ok((0..gu.len())
        .map(|c| {
            let nu = gu.norm(c);
            let lhs = if nu == T::zero() {
                T::zero()
            } else {
                nu.powf(p - T::c(2.0)) * gu.dot(&gt, c)
            };
            let rhs = nu.powf(p - q) * gv.norm(c).powf(q);
            rhs - lhs
        })
        .collect())
}

/// Tolerance below zero that [`picone_gap`] entries may reach from
/// discretization: `1e-8 * (max cell gradient magnitude)^p`.
pub fn picone_tolerance<T: Scalar>(u: &Field<T>, v: &Field<T>, ps: &ProblemSpec<T>) -> T {
    let grid = ps.grid();
    let gu = grid.gradient(u);
    let gv = grid.gradient(v);
    let scale = (0..gu.len()).fold(T::zero(), |m, c| m.max(gu.norm(c)).max(gv.norm(c)));
    T::c(1e-8) * scale.powf(ps.p).max(T::one())
}

/// `2^{p/q-1}(|η1|^p + |η2|^p) - |α1^{q-1}η1 + α2^{q-1}η2|^p`; nonnegative for
/// `α1^q + α2^q = 1`, `q ∈ [1, p]`.
pub fn hidden_convexity_gap<T: Scalar>(
    alpha1: T,
    alpha2: T,
    eta1: &[T],
    eta2: &[T],
    p: T,
    q: T,
) -> Result<T> {
    if eta1.len() != eta2.len() {
        return Err(Error::LengthMismatch {
            expected: eta1.len(),
            got: eta2.len(),
        });
    }
    if !(q >= T::one() && q <= p) {
        return Err(Error::Exponents {
            p: p.to_f64_lossy(),
            q: q.to_f64_lossy(),
            reason: "q must lie in [1, p]",
        });
    }
    let unit = T::zero()..=T::one();
    if !unit.contains(&alpha1) || !unit.contains(&alpha2) {
        return Err(Error::InvalidArgument("alpha must lie in [0, 1]".into()));
    }
    let s = alpha1.powf(q) + alpha2.powf(q);
    if (s - T::one()).abs() > T::c(1e-12) {
        return Err(Error::AlphaConstraint(s.to_f64_lossy()));
    }
    let norm = |v: &[T]| v.iter().map(|&x| x * x).sum::<T>().sqrt();
    let (c1, c2) = (alpha1.powf(q - T::one()), alpha2.powf(q - T::one()));
    let mixed: Vec<T> = eta1
        .iter()
        .zip(eta2)
        .map(|(&a, &b)| c1 * a + c2 * b)
        .collect();
    let rhs = T::c(2.0).powf(p / q - T::one()) * (norm(eta1).powf(p) + norm(eta2).powf(p));
    Ok(rhs - norm(&mixed).powf(p))
}

/// `K(u)^{(p-q)/p} K(v)^{q/p} - ∫|∇u|^{p-q}|∇v|^q`, the slack of Hölder's
/// inequality on the kinetic quadrature.
pub fn holder_gap<T: Scalar>(u: &Field<T>, v: &Field<T>, ps: &ProblemSpec<T>) -> Result<T> {
    ps.check_field(u.values())?;
    ps.check_field(v.values())?;
    let (p, q) = (ps.p, ps.q);
    let mixed = mixed_kinetic(u.values(), v.values(), ps);
    let bound = ps.kinetic(u.values()).powf((p - q) / p) * ps.kinetic(v.values()).powf(q / p);
    Ok(bound - mixed)
}

/// `∫|∇u|^{p-q}|∇v|^q` on the kinetic quadrature.
pub(crate) fn mixed_kinetic<T: Scalar>(u: &[T], v: &[T], ps: &ProblemSpec<T>) -> T {
    let (p, q) = (ps.p, ps.q);
    let gu = ps.grid().gradient_samples(u);
    let gv = ps.grid().gradient_samples(v);
    (0..gu.len())
        .map(|s| gu.norm_sq(s).sqrt().powf(p - q) * gv.norm_sq(s).sqrt().powf(q))
        .sum::<T>()
        * gu.weight()
}
