mod common;

use common::two_bump_problem;
use plaplab::{
    certify_by_picone, compare_runs, energy, estimate_q0, evaluate_weight, flip_bump,
    minimize_constrained, minimize_global, minimize_restricted, multistart_uniqueness,
    positivity_report, principal_eigen, q_sweep_asymptotics, BoundaryMode, Error, Field64, Grid64,
    ProblemSpec64, Q0Flag, SolveOptions64, WeightSpec, TAU, TAU_ZERO,
};

fn opts() -> SolveOptions64 {
    SolveOptions64::default()
}

#[test]
fn flipping_a_separated_bump_keeps_the_energy() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let g = ps.grid();
    let u = Field64::from_fn(g, |x, _| {
        if x < 0.3 {
            (std::f64::consts::PI * x / 0.3).sin()
        } else if x > 0.7 {
            2.0 * (std::f64::consts::PI * (x - 0.7) / 0.3).sin()
        } else {
            0.0
        }
    });
    let u = g.enforce_boundary(&u);
    let f = flip_bump(&u, ps.weight(), g, 1).unwrap();
    assert!(f.values().iter().any(|&x| x < 0.0) && f.values().iter().any(|&x| x > 0.0));
    let (e, ef) = (
        energy(&u, &ps).unwrap().total,
        energy(&f, &ps).unwrap().total,
    );
    assert!((e - ef).abs() <= 1e-12, "{e} vs {ef}");
    assert_eq!(flip_bump(&f, ps.weight(), g, 1).unwrap(), u);
}

#[test]
fn identical_runs_are_at_distance_zero() {
    let ps = two_bump_problem(101, -10.0, 2.0, 1.5);
    let r = minimize_global(&ps, &opts()).unwrap();
    let rep = compare_runs(vec![r.clone(), r], 1e-4);
    assert_eq!(rep.max_pairwise_distance, 0.0);
    assert!(rep.agree && !rep.incomplete);
}

#[test]
fn small_multistart_agrees_and_rejects_single_run() {
    let ps = two_bump_problem(101, -10.0, 2.0, 1.5);
    let rep = multistart_uniqueness(&ps, 4, &opts().with_seed(3), 1e-4).unwrap();
    assert_eq!(rep.runs.len(), 4);
    assert!(
        rep.agree && !rep.incomplete,
        "{:e}",
        rep.max_pairwise_distance
    );
    assert!(multistart_uniqueness(&ps, 1, &opts(), 1e-4).is_err());
}

#[test]
fn converged_ground_states_are_positive_on_the_positive_set() {
    for (neg, q) in [(-10.0, 1.5), (-3.0, 1.3), (-50.0, 1.8)] {
        let ps = two_bump_problem(201, neg, 2.0, q);
        let r = minimize_global(&ps, &opts()).unwrap();
        assert!(r.converged);
        let rep = positivity_report(&r.u, &ps, TAU, TAU_ZERO).unwrap();
        assert!(rep.min_on_positive_set > 0.0, "neg={neg} q={q}");
    }
}

#[test]
fn positive_weight_is_always_in_cone() {
    let g = Grid64::interval(0.0, 1.0, 101, BoundaryMode::Dirichlet).unwrap();
    let w = evaluate_weight(&WeightSpec::Tabulated(vec![1.0; 101]), &g).unwrap();
    let ps = ProblemSpec64::new(g, w, 2.0, 1.5).unwrap();
    let est = estimate_q0(&ps, &opts(), 0.01).unwrap();
    assert_eq!(est.flag, Q0Flag::AlwaysInCone);
    assert_eq!(est.q0, 1.0);
    assert!(est.samples.iter().all(|s| s.1));
}

#[test]
fn q0_bracket_on_a_mild_weight_is_reproducible_and_tolerance_consistent() {
    let ps = two_bump_problem(201, -1.0, 2.0, 1.5);
    let fine = estimate_q0(&ps, &opts().with_seed(1), 0.01).unwrap();
    assert_eq!(fine.flag, Q0Flag::Bracketed);
    assert!(fine.q0 > 1.0 && fine.q0 < 2.0 && fine.width <= 0.01);
    assert!(fine.samples.iter().filter(|s| s.0 >= fine.q0).all(|s| s.1));
    assert!(fine.samples.iter().filter(|s| s.0 < fine.q0).all(|s| !s.1));
    assert_eq!(estimate_q0(&ps, &opts().with_seed(1), 0.01).unwrap(), fine);

    let coarse = estimate_q0(&ps, &opts().with_seed(1), 0.5).unwrap();
    assert_eq!(coarse.flag, Q0Flag::Bracketed);
    assert!(fine.q0 <= coarse.q0 && fine.q0 >= coarse.q0 - coarse.width);
    assert!(estimate_q0(&ps, &opts(), 0.0).is_err());
}

#[test]
fn picone_certificate_of_the_ground_state_is_tight() {
    // eps is absolute; scale the weight so that U_q is of order one
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5)
        .with_weight_scale(1e3)
        .unwrap();
    let u = minimize_global(&ps, &opts()).unwrap();
    let v = minimize_constrained(&ps, &opts()).unwrap();
    let rep = certify_by_picone(&u, &ps, &[1e-2, 1e-4, 1e-6], &v, 1e-6).unwrap();
    assert_eq!(rep.rows.len(), 3);
    assert!(rep.final_gap.abs() < 1e-6, "{:e}", rep.final_gap);
    assert!(rep.final_slack >= 0.0);
    let scale = rep.holder_bound;
    for row in &rep.rows {
        assert!(row.holder_slack >= -1e-8 * scale);
        assert!(row.picone_slack >= -1e-8 * scale);
    }
    // the chain closes as eps -> 0
    let last = rep.rows.last().unwrap();
    assert!(
        last.chain_slack.abs() < 1e-4 * scale,
        "{:e}",
        last.chain_slack
    );
}

#[test]
fn picone_chain_holds_for_a_restricted_minimizer_with_its_own_level() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let vj = minimize_restricted(&ps, &[1], &opts()).unwrap();
    let c = vj.objective.powf(1.0 / (ps.q() - ps.p()));
    let mut u = vj.clone();
    u.u = vj.u.scaled(c);
    let rep = certify_by_picone(&u, &ps, &[1e-2, 1e-4, 1e-6], &vj, 1e-6).unwrap();
    assert!(rep.final_gap.abs() < 1e-9);
    for row in &rep.rows {
        assert!(row.chain_slack >= -1e-8 * rep.holder_bound);
    }
}

#[test]
fn picone_rejects_negative_fields() {
    let ps = two_bump_problem(51, -10.0, 2.0, 1.5);
    let v = minimize_constrained(&ps, &opts()).unwrap();
    let mut u = v.clone();
    u.u = v.u.scaled(-1.0);
    assert!(matches!(
        certify_by_picone(&u, &ps, &[1e-3], &v, 1e-6),
        Err(Error::NegativeField { .. })
    ));
}

#[test]
fn sweep_rows_follow_the_q_list_and_bad_lists_fail() {
    let ps = two_bump_problem(101, -10.0, 2.0, 1.5);
    let qs = [1.3, 1.5, 1.7];
    let t = q_sweep_asymptotics(&ps, &qs, &opts()).unwrap();
    assert_eq!(t.rows.iter().map(|r| r.q).collect::<Vec<_>>(), qs);
    assert!(t.rows.iter().all(|r| r.converged && r.energy < 0.0));
    assert!(q_sweep_asymptotics(&ps, &[1.5, 1.3], &opts()).is_err());
    assert!(q_sweep_asymptotics(&ps, &[1.5, 2.0], &opts()).is_err());
}

#[test]
fn scaling_by_the_inverse_eigenvalue_gives_unit_eigenvalue() {
    let ps = two_bump_problem(201, -10.0, 2.0, 1.5);
    let l1 = principal_eigen(&ps, &opts()).unwrap().objective;
    let unit = principal_eigen(&ps.with_weight_scale(l1).unwrap(), &opts())
        .unwrap()
        .objective;
    assert!((unit - 1.0).abs() < 1e-6);
}
