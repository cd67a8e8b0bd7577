mod common;

use common::{two_bump_problem, two_bump_weight};
use plaplab::{
    constraint_value, energy, evaluate_weight, minimize_constrained, minimize_global,
    minimize_restricted, principal_eigen, project_to_sa, rayleigh, residual, BoundaryMode, Field64,
    Grid64, Init, Mode, ProblemSpec64, SolveOptions64, WeightSpec,
};

fn opts() -> SolveOptions64 {
    SolveOptions64::default()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn nonpositive_weight_collapses_to_zero() {
    let g = Grid64::interval(0.0, 1.0, 51, BoundaryMode::Dirichlet).unwrap();
    let w = evaluate_weight(&WeightSpec::Tabulated(vec![-1.0; 51]), &g).unwrap();
    let ps = ProblemSpec64::new(g, w, 2.0, 1.5).unwrap();
    let r = minimize_global(&ps, &opts()).unwrap();
    assert!(r.suspect_trivial);
    assert!(!r.reinitialized);
    assert!(r.u.max_abs() < 1e-6, "{}", r.u.max_abs());
    assert!(r.objective >= 0.0 && r.objective < 1e-10);
}

#[test]
fn global_minimizer_is_nonnegative_and_negative_energy() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let r = minimize_global(&ps, &opts()).unwrap();
    assert!(r.converged && !r.suspect_trivial);
    assert_eq!(r.mode, Mode::Global);
    assert!(r.objective < 0.0);
    assert!(r.u.values().iter().all(|&x| x >= 0.0));
    assert_eq!(r.objective, energy(&r.u, &ps).unwrap().total);
    assert!(r.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn constrained_minimizer_lies_on_the_constraint_set() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let v = minimize_constrained(&ps, &opts()).unwrap();
    assert!(v.converged);
    assert!(v.objective > 0.0);
    assert!((constraint_value(&v.u, &ps) - 1.0).abs() < 1e-10);
    assert!(v.history.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn projected_ground_state_attains_m_and_rescaled_constrained_attains_m_energy() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let u = minimize_global(&ps, &opts()).unwrap();
    let v = minimize_constrained(&ps, &opts()).unwrap();
    let m = v.objective;
    let projected = project_to_sa(&u.u, &ps).unwrap();
    assert!(rel(rayleigh(&projected, &ps, ps.q()).unwrap(), m) < 1e-6);
    let c = m.powf(1.0 / (ps.q() - ps.p()));
    let rescaled = energy(&v.u.scaled(c), &ps).unwrap().total;
    assert!(
        rel(rescaled, u.objective) < 1e-6,
        "{rescaled} vs {}",
        u.objective
    );
}

#[test]
fn restricted_to_all_components_matches_constrained() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let v = minimize_constrained(&ps, &opts()).unwrap();
    let all: Vec<usize> = (1..=ps.weight().n_components()).collect();
    let vj = minimize_restricted(&ps, &all, &opts()).unwrap();
    assert_eq!(vj.mode, Mode::Restricted);
    assert!(rel(vj.objective, v.objective) < 1e-6);
}

#[test]
fn restricted_minimizer_vanishes_off_its_bump_and_mirror_images_agree() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let w = ps.weight();
    assert_eq!(w.n_components(), 2);
    let m = minimize_constrained(&ps, &opts()).unwrap().objective;
    let left = minimize_restricted(&ps, &[1], &opts()).unwrap();
    let right = minimize_restricted(&ps, &[2], &opts()).unwrap();
    for i in w.component_nodes(2) {
        assert_eq!(left.u.values()[i], 0.0);
    }
    for i in w.component_nodes(1) {
        assert_eq!(right.u.values()[i], 0.0);
    }
    assert!(left.objective >= m * (1.0 - 1e-8));
    assert!(right.objective >= m * (1.0 - 1e-8));
    assert!(rel(left.objective, right.objective) < 1e-6);
    // the reflected left solution is the right one
    let n = left.u.len();
    let reflected = Field64::new(
        ps.grid(),
        (0..n).map(|i| left.u.values()[n - 1 - i]).collect(),
    )
    .unwrap();
    assert!(reflected.distance_inf(&right.u) / right.u.max_abs() < 1e-4);
}

#[test]
fn restricted_rejects_empty_and_unknown_labels() {
    let ps = two_bump_problem(51, -10.0, 2.0, 1.5);
    assert!(minimize_restricted(&ps, &[], &opts()).is_err());
    assert!(minimize_restricted(&ps, &[3], &opts()).is_err());
}

#[test]
fn eigen_scaling_and_normalizations() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let e = principal_eigen(&ps, &opts()).unwrap();
    let e4 = principal_eigen(&ps.with_weight_scale(4.0).unwrap(), &opts()).unwrap();
    assert_eq!(e.mode, Mode::Eigen);
    assert!(rel(e4.objective * 4.0, e.objective) < 1e-6);
    assert!((ps.weighted_power(e.u.values(), ps.p()) - 1.0).abs() < 1e-10);
    assert!((e.max_normalized().max_abs() - 1.0).abs() < 1e-15);
    assert!(e.u.values().iter().all(|&x| x >= 0.0));
}

#[test]
fn sign_flipped_start_reaches_the_same_ground_state() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let base = minimize_global(&ps, &opts().with_seed(7)).unwrap();
    let start = Field64::from_fn(ps.grid(), |x, _| -(1.0 + 0.3 * (7.0 * x).sin()));
    let flipped = minimize_global(&ps, &opts().with_init(Init::Given(start))).unwrap();
    assert!(flipped.converged);
    assert!(base.u.distance_inf(&flipped.u) / base.u.max_abs() < 1e-4);
}

#[test]
fn identical_inputs_give_identical_results() {
    let ps = two_bump_problem(101, -10.0, 2.5, 1.4);
    let a = minimize_global(&ps, &opts().with_seed(11)).unwrap();
    let b = minimize_global(&ps, &opts().with_seed(11)).unwrap();
    assert_eq!(a, b);
    let c = minimize_constrained(&ps, &opts().with_seed(11)).unwrap();
    let d = minimize_constrained(&ps, &opts().with_seed(11)).unwrap();
    assert_eq!(c, d);
}

#[test]
fn residual_examples() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    assert_eq!(residual(&Field64::zeros(ps.grid()), &ps, 0.0).unwrap(), 0.0);
    let r = minimize_global(&ps, &opts()).unwrap();
    assert!(residual(&r.u, &ps, 0.0).unwrap() <= opts().tol_grad);
    let bumpy = Field64::from_fn(ps.grid(), |x, _| x * (1.0 - x) * (1.0 + x));
    assert!(residual(&bumpy, &ps, 0.0).unwrap() > 0.0);
}

#[test]
fn invalid_options_and_exponents_are_rejected() {
    let ps = two_bump_problem(51, -10.0, 2.0, 1.5);
    let bad = SolveOptions64 {
        tol_grad: 0.0,
        ..opts()
    };
    assert!(minimize_global(&ps, &bad).is_err());
    let bad = SolveOptions64 {
        max_iter: 0,
        ..opts()
    };
    assert!(minimize_constrained(&ps, &bad).is_err());
    let linear = ps.with_q(2.0).unwrap();
    assert!(minimize_global(&linear, &opts()).is_err());
    // the eigenproblem only needs the weight
    assert!(principal_eigen(&linear, &opts()).is_ok());
}

#[test]
fn neumann_constrained_minimizer_is_not_constant() {
    let g = Grid64::interval(0.0, 1.0, 101, BoundaryMode::Neumann).unwrap();
    let w = evaluate_weight(&two_bump_weight(-10.0), &g).unwrap();
    let ps = ProblemSpec64::new(g, w, 2.0, 1.5).unwrap();
    let v = minimize_constrained(&ps, &opts()).unwrap();
    assert!(v.converged && v.objective > 0.0);
    let vals = v.u.values();
    let spread = vals.iter().cloned().fold(f64::MIN, f64::max)
        - vals.iter().cloned().fold(f64::MAX, f64::min);
    assert!(spread > 1e-3 * v.u.max_abs());
}

#[test]
fn single_precision_solve() {
    let g = plaplab::Grid32::interval(0.0, 1.0, 41, BoundaryMode::Dirichlet).unwrap();
    let spec = WeightSpec::Piecewise {
        breakpoints: vec![0.5f32],
        values: vec![40.0, -1.0],
    };
    let w = evaluate_weight(&spec, &g).unwrap();
    let ps = plaplab::ProblemSpec32::new(g, w, 2.0, 1.5).unwrap();
    let o = plaplab::SolveOptions32 {
        tol_grad: 1e-4,
        tol_energy: 1e-6,
        ..Default::default()
    };
    let r = minimize_global(&ps, &o).unwrap();
    assert!(r.objective < 0.0);
    let g = Grid64::interval(0.0, 1.0, 41, BoundaryMode::Dirichlet).unwrap();
    let spec = WeightSpec::Piecewise {
        breakpoints: vec![0.5],
        values: vec![40.0, -1.0],
    };
    let w = evaluate_weight(&spec, &g).unwrap();
    let r64 = minimize_global(&ProblemSpec64::new(g, w, 2.0, 1.5).unwrap(), &opts()).unwrap();
    assert!(
        ((r.objective as f64) - r64.objective).abs() < 1e-3 * r64.objective.abs(),
        "{} vs {}",
        r.objective,
        r64.objective
    );
}
