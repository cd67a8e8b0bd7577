//! Ground states, constrained minimizers and principal eigenpairs.
//!
//! All four solvers share one forward-backward descent: a gradient step on
//! the kinetic and `a^+` terms, a proximal step on the `a^-` term, Armijo
//! backtracking (factor 0.5, slope 1e-4) seeded by a Barzilai-Borwein step.
//! After convergence the field is replaced by `|u|` and polished.

mod descent;
mod objective;
mod prox;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::energy::{energy_gradient, ProblemSpec};
use crate::error::{Error, Result};
use crate::grid::Field;
use crate::scalar::Scalar;
use crate::weight::component_mask;

use descent::{descend, Composite, Tolerances};
use objective::{Energy, Quotient};

pub use descent::{ARMIJO_SLOPE, BACKTRACK};

/// Cap on `|ln t|` for the ray rescaling of the initial guess.
const INIT_RAY_LOG: f64 = 30.0;

#[derive(Clone, Debug, PartialEq)]
pub enum Init<T> {
    /// Uniform(0.5, 1.5) on free nodes from the seeded generator.
    RandomPositive,
    Given(Field<T>),
    /// 1 on free nodes where `a > 0`, 0 elsewhere.
    IndicatorOfPositiveSet,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveOptions<T> {
    /// Bound on the relative Euler-Lagrange defect.
    pub tol_grad: f64,
    /// Bound on the last relative objective decrease.
    pub tol_energy: f64,
    pub max_iter: usize,
    /// Regularization of `|∇u|^{p-2}`; only used when `p < 2`.
    pub eps: f64,
    pub seed: u64,
    pub init: Init<T>,
}

impl<T> Default for SolveOptions<T> {
    fn default() -> Self {
        SolveOptions {
            tol_grad: 1e-8,
            tol_energy: 1e-12,
            max_iter: 50_000,
            eps: 1e-8,
            seed: 0,
            init: Init::RandomPositive,
        }
    }
}

impl<T> SolveOptions<T> {
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_init(mut self, init: Init<T>) -> Self {
        self.init = init;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.tol_grad > 0.0 && self.tol_energy > 0.0) {
            return Err(Error::InvalidArgument("tolerances must be positive".into()));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be at least 1".into()));
        }
        if !(self.eps >= 0.0) {
            return Err(Error::InvalidArgument("eps must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Mode {
    Global,
    Constrained,
    Restricted,
    Eigen,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Global => "global",
            Mode::Constrained => "constrained",
            Mode::Restricted => "restricted",
            Mode::Eigen => "eigen",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolveResult<T> {
    /// `U_q` in global mode; otherwise normalized to constraint value 1.
    pub u: Field<T>,
    /// `M`, `m`, `m_J` or `λ₁`.
    pub objective: T,
    pub iterations: usize,
    pub converged: bool,
    /// Relative Euler-Lagrange defect at `u`.
    pub residual: T,
    pub mode: Mode,
    /// Global: objective `>= 0`, so the iterate collapsed to zero.
    /// Quotient modes: objective `<= 0`.
    pub suspect_trivial: bool,
    /// Initial guess had to be replaced by the positive-set indicator.
    pub reinitialized: bool,
    /// Objective after every accepted step.
    pub history: Vec<T>,
}

impl<T: Scalar> SolveResult<T> {
    /// `u / ||u||_inf`, the reporting normalization for eigenfunctions.
    pub fn max_normalized(&self) -> Field<T> {
        let m = self.u.max_abs();
        if m > T::zero() {
            self.u.scaled(T::one() / m)
        } else {
            self.u.clone()
        }
    }
}

fn tolerances<T: Scalar>(opts: &SolveOptions<T>, max_iter: usize) -> Tolerances<T> {
    Tolerances {
        grad: T::c(opts.tol_grad),
        energy: T::c(opts.tol_energy),
        max_iter,
    }
}

fn solver_eps<T: Scalar>(ps: &ProblemSpec<T>, opts: &SolveOptions<T>) -> T {
    if ps.p() >= T::c(2.0) {
        T::zero()
    } else {
        T::c(opts.eps).max(T::epsilon())
    }
}

fn indicator<T: Scalar>(ps: &ProblemSpec<T>, free: &[bool]) -> Vec<T> {
    ps.weight()
        .values()
        .iter()
        .zip(free)
        .map(|(&a, &f)| {
            if f && a > T::zero() {
                T::one()
            } else {
                T::zero()
            }
        })
        .collect()
}

fn initial_field<T: Scalar>(
    ps: &ProblemSpec<T>,
    opts: &SolveOptions<T>,
    free: &[bool],
) -> Result<Vec<T>> {
    match &opts.init {
        Init::RandomPositive => {
            let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
            Ok(free
                .iter()
                .map(|&f| {
                    let x: f64 = rng.gen_range(0.5..1.5);
                    if f {
                        T::c(x)
                    } else {
                        T::zero()
                    }
                })
                .collect())
        }
        Init::Given(u) => {
            ps.check_field(u.values())?;
            if u.values().iter().any(|x| !x.is_finite()) {
                return Err(Error::NonFinite(
                    u.values().iter().position(|x| !x.is_finite()).unwrap_or(0),
                ));
            }
            Ok(u.values()
                .iter()
                .zip(free)
                .map(|(&x, &f)| if f { x } else { T::zero() })
                .collect())
        }
        Init::IndicatorOfPositiveSet => Ok(indicator(ps, free)),
    }
}

/// Global minimizer `U_q >= 0` of `I_q` and `M = I_q(U_q)`.
///
/// If the descent collapses to zero while the weight has positive mass on
/// free nodes, it is restarted once from the positive-set indicator.
pub fn minimize_global<T: Scalar>(
    ps: &ProblemSpec<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>> {
    opts.validate()?;
    ps.require_sublinear()?;
    let obj = Energy::new(ps, solver_eps(ps, opts));
    let free = obj.free().to_vec();
    let first = global_descent(&obj, initial_field(ps, opts, &free)?, opts)?;
    if !first.suspect_trivial {
        return Ok(first);
    }
    let ind = indicator(ps, &free);
    if !(ps.weighted_power(&ind, ps.q()) > T::zero()) {
        return Ok(first);
    }
    let mut again = global_descent(&obj, ind, opts)?;
    again.reinitialized = true;
    again.iterations += first.iterations;
    Ok(again)
}

fn global_descent<T: Scalar>(
    obj: &Energy<'_, T>,
    mut u: Vec<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>> {
    obj.rescale_toward_ray_minimum(&mut u, T::c(INIT_RAY_LOG));
    let mut history = Vec::new();
    let first = descend(obj, u, &tolerances(opts, opts.max_iter), &mut history)?;
    let mut iterations = first.iterations;
    let u: Vec<T> = first.u.iter().map(|x| x.abs()).collect();
    // I(|u|) <= I(u); restart the running objective from the exact value
    history.push(obj.value(&u).min(*history.last().unwrap_or(&T::infinity())));
    let left = opts.max_iter.saturating_sub(iterations).max(1);
    let polish = descend(obj, u, &tolerances(opts, left), &mut history)?;
    iterations += polish.iterations;

    let objective = obj.value(&polish.u);
    Ok(SolveResult {
        u: Field::from_vec_unchecked(polish.u),
        objective,
        iterations,
        converged: polish.converged,
        residual: polish.residual,
        mode: Mode::Global,
        suspect_trivial: !(objective < T::zero()),
        reinitialized: false,
        history,
    })
}

fn minimize_quotient<T: Scalar>(
    ps: &ProblemSpec<T>,
    opts: &SolveOptions<T>,
    r: T,
    pinned: Option<&[bool]>,
    mode: Mode,
) -> Result<SolveResult<T>> {
    opts.validate()?;
    let obj = Quotient::new(ps, r, solver_eps(ps, opts), pinned);
    let free = obj.free_nodes().to_vec();
    let ind = indicator(ps, &free);
    if !(obj.constraint(&ind) > T::zero()) {
        return Err(Error::Infeasible);
    }
    let mut u = initial_field(ps, opts, &free)?;
    let mut reinitialized = false;
    if !obj.project(&mut u) {
        u = ind;
        reinitialized = true;
        if !obj.project(&mut u) {
            return Err(Error::LeftFeasibleCone);
        }
    }

    let mut history = Vec::new();
    let first = descend(&obj, u, &tolerances(opts, opts.max_iter), &mut history)?;
    let mut iterations = first.iterations;
    let mut u: Vec<T> = first.u.iter().map(|x| x.abs()).collect();
    if !obj.project(&mut u) {
        return Err(Error::LeftFeasibleCone);
    }
    history.push(obj.value(&u).min(*history.last().unwrap_or(&T::infinity())));
    let left = opts.max_iter.saturating_sub(iterations).max(1);
    let polish = descend(&obj, u, &tolerances(opts, left), &mut history)?;
    iterations += polish.iterations;
    u = polish.u;
    obj.project(&mut u);

    let objective = obj.value(&u);
    // m > 0 and, in Neumann mode, a nonconstant minimizer
    let suspect_trivial = !(objective > T::zero());
    Ok(SolveResult {
        u: Field::from_vec_unchecked(u),
        objective,
        iterations,
        converged: polish.converged && !suspect_trivial,
        residual: polish.residual,
        mode,
        suspect_trivial,
        reinitialized,
        history,
    })
}

/// `V_q` on `{∫a|u|^q = 1}` minimizing the kinetic term; objective `m`.
pub fn minimize_constrained<T: Scalar>(
    ps: &ProblemSpec<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>> {
    ps.require_sublinear()?;
    minimize_quotient(ps, opts, ps.q(), None, Mode::Constrained)
}

/// Constrained minimizer vanishing on the positive components not in `keep`;
/// objective `m_J`.
pub fn minimize_restricted<T: Scalar>(
    ps: &ProblemSpec<T>,
    keep: &[usize],
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>> {
    ps.require_sublinear()?;
    if keep.is_empty() {
        return Err(Error::InvalidArgument(
            "restricted solve needs at least one component".into(),
        ));
    }
    let mask = component_mask(ps.weight(), keep)?;
    minimize_quotient(ps, opts, ps.q(), Some(&mask), Mode::Restricted)
}

/// `λ₁(a)` and `φ₁ >= 0` with `∫a φ₁^p = 1`; see
/// [`SolveResult::max_normalized`] for the max-norm scaling.
pub fn principal_eigen<T: Scalar>(
    ps: &ProblemSpec<T>,
    opts: &SolveOptions<T>,
) -> Result<SolveResult<T>> {
    minimize_quotient(ps, opts, ps.p(), None, Mode::Eigen)
}

/// Max-norm of [`energy_gradient`] over free nodes.
pub fn residual<T: Scalar>(u: &Field<T>, ps: &ProblemSpec<T>, eps: T) -> Result<T> {
    let g = energy_gradient(u, ps, eps)?;
    Ok(g.values()
        .iter()
        .zip(ps.free_mask())
        .filter(|(_, &f)| f)
        .fold(T::zero(), |m, (&x, _)| m.max(x.abs())))
}
