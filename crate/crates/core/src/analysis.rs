//! Experiments on computed minimizers: positivity and dead cores, multistart
//! agreement, the threshold `q₀` past which minimizers are interior, bump
//! flipping, the Picone chain behind uniqueness, and the `q -> p` trend.

use rayon::prelude::*;

use crate::energy::{mixed_kinetic, rayleigh, ProblemSpec};
use crate::error::{Error, Result};
use crate::grid::{BoundaryMode, Field};
use crate::scalar::Scalar;
use crate::solve::{minimize_global, principal_eigen, SolveOptions, SolveResult};
use crate::weight::{label_components, WeightField};

/// Relative threshold for membership in the interior cone.
pub const TAU: f64 = 1e-6;
/// Relative threshold below which a node counts as dead.
pub const TAU_ZERO: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct PositivityReport<T> {
    /// Minimum over domain nodes with `a > 0`; `+inf` if there are none.
    pub min_on_positive_set: T,
    /// Minimum over all nodes, boundary included.
    pub global_min: T,
    /// Domain nodes with `u <= tau_zero * ||u||_inf`.
    pub dead_core_nodes: Vec<usize>,
    pub in_cone: bool,
    /// Dirichlet: every non-corner boundary node has an outward difference
    /// quotient below `-tau * ||u||_inf / h`. Always true for Neumann.
    pub boundary_flux_ok: bool,
}

/// Classifies `u >= 0` against the positive set of the weight and the
/// interior cone.
///
/// Domain nodes are the free nodes: Dirichlet boundary nodes are zero by
/// construction and are left out of the dead-core set and the minima on the
/// positive set.
pub fn positivity_report<T: Scalar>(
    u: &Field<T>,
    ps: &ProblemSpec<T>,
    tau: T,
    tau_zero: T,
) -> Result<PositivityReport<T>> {
    ps.check_field(u.values())?;
    let v = u.values();
    if let Some((node, &value)) = v.iter().enumerate().find(|(_, &x)| x < T::zero()) {
        return Err(Error::NegativeField {
            node,
            value: value.to_f64_lossy(),
        });
    }
    let grid = ps.grid();
    let a = ps.weight().values();
    let free = ps.free_mask();
    let max = u.max_abs();
    let zero_level = tau_zero * max;

    let mut min_on_positive_set = T::infinity();
    let mut interior_min = T::infinity();
    let mut dead_core_nodes = Vec::new();
    for i in 0..v.len() {
        if !free[i] {
            continue;
        }
        interior_min = interior_min.min(v[i]);
        if a[i] > T::zero() {
            min_on_positive_set = min_on_positive_set.min(v[i]);
        }
        if v[i] <= zero_level {
            dead_core_nodes.push(i);
        }
    }
    let global_min = v.iter().fold(T::infinity(), |m, &x| m.min(x));

    let cone_level = tau * max;
    let boundary_flux_ok = match grid.boundary() {
        BoundaryMode::Neumann => true,
        BoundaryMode::Dirichlet => (0..v.len())
            .filter(|&i| grid.boundary_faces(i) == 1)
            .all(|i| {
                let m = grid.node_multi(i);
                let (k, axis) = grid
                    .axes()
                    .iter()
                    .enumerate()
                    .find(|(k, ax)| m[*k] == 0 || m[*k] == ax.nodes - 1)
                    .expect("boundary node has a boundary axis");
                let mut inner = m;
                inner[k] = if m[k] == 0 { 1 } else { m[k] - 1 };
                let h = axis.spacing;
                (v[i] - v[grid.node_index(inner)]) / h < -cone_level / h
            }),
    };
    let in_cone = max > T::zero() && interior_min > cone_level && boundary_flux_ok;
    Ok(PositivityReport {
        min_on_positive_set,
        global_min,
        dead_core_nodes,
        in_cone,
        boundary_flux_ok,
    })
}

/// Length of the longest run of consecutive node indices in a sorted list.
pub fn longest_run(nodes: &[usize]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for (k, &n) in nodes.iter().enumerate() {
        run = if k > 0 && nodes[k - 1] + 1 == n {
            run + 1
        } else {
            1
        };
        best = best.max(run);
    }
    best
}

#[derive(Clone, Debug, PartialEq)]
pub struct UniquenessReport<T> {
    pub runs: Vec<SolveResult<T>>,
    /// `max_{i<j} || |u_i| - |u_j| ||_inf / max(||u_i||_inf, ||u_j||_inf)`.
    pub max_pairwise_distance: T,
    pub tolerance: T,
    pub agree: bool,
    /// Some run did not converge.
    pub incomplete: bool,
}

fn relative_distance<T: Scalar>(u: &Field<T>, v: &Field<T>) -> T {
    let scale = u.max_abs().max(v.max_abs());
    if scale == T::zero() {
        return T::zero();
    }
    u.abs().distance_inf(&v.abs()) / scale
}

/// Pairwise agreement of already computed runs.
pub fn compare_runs<T: Scalar>(runs: Vec<SolveResult<T>>, tolerance: T) -> UniquenessReport<T> {
    let mut max_pairwise_distance = T::zero();
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            max_pairwise_distance =
                max_pairwise_distance.max(relative_distance(&runs[i].u, &runs[j].u));
        }
    }
    let incomplete = runs.iter().any(|r| !r.converged);
    UniquenessReport {
        agree: max_pairwise_distance <= tolerance,
        max_pairwise_distance,
        tolerance,
        incomplete,
        runs,
    }
}

/// `k` global solves with seeds `opts.seed, ..., opts.seed + k - 1`.
pub fn multistart_uniqueness<T: Scalar>(
    ps: &ProblemSpec<T>,
    k: usize,
    opts: &SolveOptions<T>,
    tolerance: T,
) -> Result<UniquenessReport<T>> {
    if k < 2 {
        return Err(Error::InvalidArgument(
            "multistart needs at least two runs".into(),
        ));
    }
    let runs = (0..k as u64)
        .into_par_iter()
        .map(|i| minimize_global(ps, &opts.clone().with_seed(opts.seed.wrapping_add(i))))
        .collect::<Result<Vec<_>>>()?;
    Ok(compare_runs(runs, tolerance))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Q0Flag {
    /// A bracket `[false, true]` was bisected to the requested width.
    Bracketed,
    /// Every tested `q` was in the cone; `q0` is the lower endpoint 1.
    AlwaysInCone,
    /// No tested `q` was in the cone; `q0` is the upper endpoint `p`.
    NeverInCone,
    /// The classification was not monotone in `q`; `q0` comes from an
    /// exhaustive scan.
    NonMonotone,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Q0Estimate<T> {
    pub q0: T,
    /// `(q, in_cone)` for every solve, sorted by `q`.
    pub samples: Vec<(T, bool)>,
    pub flag: Q0Flag,
    /// Width of the final bracket.
    pub width: T,
    /// Every solve converged.
    pub all_converged: bool,
    /// `λ₁(a)`; the solves use the weight `a / λ₁(a)`.
    pub lambda1: T,
}

const Q0_COARSE: usize = 9;

fn classify<T: Scalar>(ps: &ProblemSpec<T>, q: T, opts: &SolveOptions<T>) -> Result<(bool, bool)> {
    let r = minimize_global(&ps.with_q(q)?, opts)?;
    let rep = positivity_report(&r.u, ps, T::c(TAU), T::c(TAU_ZERO))?;
    Ok((rep.in_cone, r.converged))
}

fn classify_many<T: Scalar>(
    ps: &ProblemSpec<T>,
    qs: &[T],
    opts: &SolveOptions<T>,
) -> Result<Vec<(T, bool, bool)>> {
    qs.par_iter()
        .map(|&q| classify(ps, q, opts).map(|(c, ok)| (q, c, ok)))
        .collect()
}

fn is_monotone<T: Scalar>(samples: &[(T, bool)]) -> bool {
    samples.windows(2).all(|w| w[0].1 <= w[1].1)
}

/// Smallest tested `q` such that every tested `q' >= q` is in the cone.
fn threshold_from<T: Scalar>(samples: &[(T, bool)], p: T) -> T {
    let mut q0 = p;
    for &(q, c) in samples.iter().rev() {
        if !c {
            break;
        }
        q0 = q;
    }
    q0
}

/// Estimates the `q` above which global minimizers lie in the interior cone.
///
/// A coarse scan over `(1, p)` brackets the transition, which is then
/// bisected to width `q_tol`. The scan is checked for monotonicity; if it is
/// not monotone the interval is scanned exhaustively at spacing `q_tol`
/// instead.
///
/// `U_q` scales like `λ₁(a)^{-1/(p-q)}`, which leaves floating-point range as
/// `q -> p`. Cone membership is invariant under `a -> c a`, so the solves use
/// the weight normalized to `λ₁ = 1`.
pub fn estimate_q0<T: Scalar>(
    ps: &ProblemSpec<T>,
    opts: &SolveOptions<T>,
    q_tol: T,
) -> Result<Q0Estimate<T>> {
    if !(q_tol > T::zero()) {
        return Err(Error::InvalidArgument("q_tol must be positive".into()));
    }
    let lambda1 = principal_eigen(ps, opts)?.objective;
    let normalized = ps.with_weight_scale(lambda1)?;
    let ps = &normalized;
    let (one, p) = (T::one(), ps.p());
    let span = p - one;
    let coarse: Vec<T> = (1..=Q0_COARSE)
        .map(|k| one + span * T::from_usize_lossy(k) / T::from_usize_lossy(Q0_COARSE + 1))
        .collect();
    let mut all_converged = true;
    let mut samples = Vec::new();
    for (q, c, ok) in classify_many(ps, &coarse, opts)? {
        all_converged &= ok;
        samples.push((q, c));
    }
    let step = span / T::from_usize_lossy(Q0_COARSE + 1);
    if samples.iter().all(|s| s.1) {
        return Ok(Q0Estimate {
            q0: one,
            samples,
            flag: Q0Flag::AlwaysInCone,
            width: step,
            all_converged,
            lambda1,
        });
    }
    if samples.iter().all(|s| !s.1) {
        return Ok(Q0Estimate {
            q0: p,
            samples,
            flag: Q0Flag::NeverInCone,
            width: step,
            all_converged,
            lambda1,
        });
    }
    if is_monotone(&samples) {
        let hi_idx = samples
            .iter()
            .position(|s| s.1)
            .expect("some sample is in the cone");
        let (mut lo, mut hi) = (samples[hi_idx - 1].0, samples[hi_idx].0);
        let two = T::c(2.0);
        while hi - lo > q_tol {
            let mid = (lo + hi) / two;
            let (c, ok) = classify(ps, mid, opts)?;
            all_converged &= ok;
            samples.push((mid, c));
            if c {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        samples.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite q"));
        return Ok(Q0Estimate {
            q0: hi,
            samples,
            flag: Q0Flag::Bracketed,
            width: hi - lo,
            all_converged,
            lambda1,
        });
    }

    // non-monotone: scan everything at spacing q_tol
    let n = ((span / q_tol).ceil().to_usize().unwrap_or(1)).max(2);
    let fine: Vec<T> = (1..n)
        .map(|k| one + span * T::from_usize_lossy(k) / T::from_usize_lossy(n))
        .collect();
    for (q, c, ok) in classify_many(ps, &fine, opts)? {
        all_converged &= ok;
        samples.push((q, c));
    }
    samples.sort_by(|x, y| x.0.partial_cmp(&y.0).expect("finite q"));
    let q0 = threshold_from(&samples, p);
    Ok(Q0Estimate {
        q0,
        samples,
        flag: Q0Flag::NonMonotone,
        width: span / T::from_usize_lossy(n),
        all_converged,
        lambda1,
    })
}

/// Negates `u` on the connected component of `{|u| > tau_zero ||u||_inf}`
/// that meets the positive-set component `label` of `w`.
///
/// The component must not be all of the support; otherwise no dead-core
/// nodes separate it and the flip would change the gradient.
pub fn flip_bump<T: Scalar>(
    u: &Field<T>,
    w: &WeightField<T>,
    grid: &crate::grid::Grid<T>,
    label: usize,
) -> Result<Field<T>> {
    if u.len() != grid.node_count() || w.values().len() != grid.node_count() {
        return Err(Error::LengthMismatch {
            expected: grid.node_count(),
            got: u.len(),
        });
    }
    if label == 0 || label > w.n_components() {
        return Err(Error::UnknownLabel(label));
    }
    let level = T::c(TAU_ZERO) * u.max_abs();
    let excess: Vec<T> = u.values().iter().map(|&x| x.abs() - level).collect();
    let (support, n_support) = label_components(grid, &excess);
    let target = w
        .component_nodes(label)
        .into_iter()
        .find_map(|i| support[i])
        .ok_or(Error::NotSeparated)?;
    if n_support < 2 {
        return Err(Error::NotSeparated);
    }
    let values = u
        .values()
        .iter()
        .zip(&support)
        .map(|(&x, s)| if *s == Some(target) { -x } else { x })
        .collect();
    Ok(Field::from_vec_unchecked(values))
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiconeRow<T> {
    pub eps: T,
    /// `∫|∇u|^{p-2}∇u·∇(V^q/(u+eps)^{q-1})`, the weak-form side.
    pub picone_lhs: T,
    /// `∫|∇u|^{p-q}|∇V|^q`.
    pub mixed: T,
    /// `∫a V^q (u/(u+eps))^{q-1}`.
    pub weighted: T,
    /// `mixed - picone_lhs`.
    pub picone_slack: T,
    /// `m^{q/p} K(u)^{(p-q)/p} - mixed`.
    pub holder_slack: T,
    /// `m^{q/p} K(u)^{(p-q)/p} - weighted`.
    pub chain_slack: T,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PiconeReport<T> {
    pub rows: Vec<PiconeRow<T>>,
    /// `∫ a V^q` over the nodes where `u > tau_zero ||u||_inf`.
    pub positive_set_integral: T,
    /// `m^{q/p} K(u)^{(p-q)/p}`.
    pub holder_bound: T,
    /// `rayleigh(u, q) / m - 1`.
    pub final_gap: T,
    /// `m (1 + tol) - rayleigh(u, q)`.
    pub final_slack: T,
}

/// Evaluates the inequality chain that pins a nonnegative solution `u` to the
/// constrained minimizer `reference` (`V` with objective `m`, or a restricted
/// `V_J` with `m_J`), for each `eps` in `eps_seq`.
pub fn certify_by_picone<T: Scalar>(
    u: &SolveResult<T>,
    ps: &ProblemSpec<T>,
    eps_seq: &[T],
    reference: &SolveResult<T>,
    tol: T,
) -> Result<PiconeReport<T>> {
    let uv = u.u.values();
    let vv = reference.u.values();
    ps.check_field(uv)?;
    ps.check_field(vv)?;
    for f in [uv, vv] {
        if let Some((node, &value)) = f.iter().enumerate().find(|(_, &x)| x < T::zero()) {
            return Err(Error::NegativeField {
                node,
                value: value.to_f64_lossy(),
            });
        }
    }
    let (p, q) = (ps.p(), ps.q());
    let m = reference.objective;
    let a = ps.weight().values();
    let quad = ps.quadrature();
    let k_u = ps.kinetic(uv);
    let holder_bound = m.powf(q / p) * k_u.powf((p - q) / p);
    let mixed = mixed_kinetic(uv, vv, ps);
    // ∇(K/p) paired with a node field gives ∫|∇u|^{p-2}∇u·∇φ
    let kin_grad = ps.kinetic_gradient(uv, T::zero())?;

    let mut rows = Vec::with_capacity(eps_seq.len());
    for &eps in eps_seq {
        if !(eps > T::zero()) {
            return Err(Error::InvalidArgument("eps must be positive".into()));
        }
        let test: Vec<T> = uv
            .iter()
            .zip(vv)
            .map(|(&x, &v)| v.powf(q) / (x + eps).powf(q - T::one()))
            .collect();
        let picone_lhs: T = kin_grad.iter().zip(&test).map(|(&g, &t)| g * t).sum();
        let weighted: T = (0..uv.len())
            .map(|i| a[i] * quad[i] * vv[i].powf(q) * (uv[i] / (uv[i] + eps)).powf(q - T::one()))
            .sum();
        rows.push(PiconeRow {
            eps,
            picone_lhs,
            mixed,
            weighted,
            picone_slack: mixed - picone_lhs,
            holder_slack: holder_bound - mixed,
            chain_slack: holder_bound - weighted,
        });
    }
    let level = T::c(TAU_ZERO) * u.u.max_abs();
    let positive_set_integral: T = (0..uv.len())
        .filter(|&i| uv[i] > level)
        .map(|i| a[i] * quad[i] * vv[i].powf(q))
        .sum();
    let r = rayleigh(&u.u, ps, q)?;
    Ok(PiconeReport {
        rows,
        positive_set_integral,
        holder_bound,
        final_gap: r / m - T::one(),
        final_slack: m * (T::one() + tol) - r,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    Neither,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow<T> {
    pub q: T,
    pub sup_norm: T,
    /// `M` at this `q`.
    pub energy: T,
    pub in_cone: bool,
    pub converged: bool,
    pub result: SolveResult<T>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepTable<T> {
    pub rows: Vec<SweepRow<T>>,
    /// Strict monotonicity of `sup_norm` over the last half of the rows.
    pub trend: Trend,
}

pub fn strict_trend<T: Scalar>(values: &[T]) -> Trend {
    if values.len() < 2 {
        return Trend::Neither;
    }
    if values.windows(2).all(|w| w[1] > w[0]) {
        Trend::Increasing
    } else if values.windows(2).all(|w| w[1] < w[0]) {
        Trend::Decreasing
    } else {
        Trend::Neither
    }
}

/// Global minimizers along an increasing list of `q` in `(1, p)`.
pub fn q_sweep_asymptotics<T: Scalar>(
    ps: &ProblemSpec<T>,
    qs: &[T],
    opts: &SolveOptions<T>,
) -> Result<SweepTable<T>> {
    if qs.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "q list must be strictly increasing".into(),
        ));
    }
    if qs.iter().any(|&q| !(q > T::one() && q < ps.p())) {
        return Err(Error::InvalidArgument("q list must lie in (1, p)".into()));
    }
    let rows = qs
        .par_iter()
        .map(|&q| {
            let pq = ps.with_q(q)?;
            let r = minimize_global(&pq, opts)?;
            let rep = positivity_report(&r.u, &pq, T::c(TAU), T::c(TAU_ZERO))?;
            Ok(SweepRow {
                q,
                sup_norm: r.u.max_abs(),
                energy: r.objective,
                in_cone: rep.in_cone,
                converged: r.converged,
                result: r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let norms: Vec<T> = rows.iter().map(|r| r.sup_norm).collect();
    let trend = strict_trend(&norms[norms.len() / 2..]);
    Ok(SweepTable { rows, trend })
}
