//! Problem builders and independent oracles shared by the integration tests.
//! The oracles do not call into the solver.

#![allow(dead_code)]

use plaplab::{evaluate_weight, BoundaryMode, Bump, Grid64, ProblemSpec64, WeightSpec};

/// `+1` on `(0, 0.1) ∪ (0.9, 1)`, `neg` on `[0.1, 0.9]`.
pub fn two_bump_weight(neg: f64) -> WeightSpec<f64> {
    WeightSpec::Piecewise {
        breakpoints: vec![0.1, 0.9],
        values: vec![1.0, neg, 1.0],
    }
}

pub fn two_bump_problem(nodes: usize, neg: f64, p: f64, q: f64) -> ProblemSpec64 {
    let g = Grid64::interval(0.0, 1.0, nodes, BoundaryMode::Dirichlet).unwrap();
    let w = evaluate_weight(&two_bump_weight(neg), &g).unwrap();
    ProblemSpec64::new(g, w, p, q).unwrap()
}

pub fn constant_weight_problem(nodes: usize, p: f64, q: f64) -> ProblemSpec64 {
    let g = Grid64::interval(0.0, 1.0, nodes, BoundaryMode::Dirichlet).unwrap();
    let w = evaluate_weight(&WeightSpec::Tabulated(vec![1.0; nodes]), &g).unwrap();
    ProblemSpec64::new(g, w, p, q).unwrap()
}

/// The five mixed 1-D/2-D, Dirichlet/Neumann problems of the identity suite.
pub fn identity_suite() -> Vec<(&'static str, ProblemSpec64)> {
    let mut out = Vec::new();
    out.push((
        "1d-dirichlet p=2 q=1.5",
        two_bump_problem(201, -10.0, 2.0, 1.5),
    ));

    let g = Grid64::interval(0.0, 1.0, 201, BoundaryMode::Neumann).unwrap();
    let spec = WeightSpec::Piecewise {
        breakpoints: vec![0.3],
        values: vec![1.0, -2.0],
    };
    let w = evaluate_weight(&spec, &g).unwrap();
    out.push((
        "1d-neumann p=2.5 q=1.3",
        ProblemSpec64::new(g, w, 2.5, 1.3).unwrap(),
    ));

    let g = Grid64::interval(0.0, 1.0, 201, BoundaryMode::Dirichlet).unwrap();
    let spec = WeightSpec::Piecewise {
        breakpoints: vec![0.25, 0.6],
        values: vec![2.0, -5.0, 1.0],
    };
    let w = evaluate_weight(&spec, &g).unwrap();
    out.push((
        "1d-dirichlet p=3 q=1.8",
        ProblemSpec64::new(g, w, 3.0, 1.8).unwrap(),
    ));

    let g = Grid64::rectangle((0.0, 1.0), (0.0, 1.0), (33, 33), BoundaryMode::Dirichlet).unwrap();
    let bump = |cx: f64, cy: f64, amp: f64| Bump {
        center: [cx, cy],
        radius: 0.2,
        amplitude: amp,
    };
    let spec = WeightSpec::Bumps {
        background: -1.0,
        bumps: vec![bump(0.3, 0.35, 4.0), bump(0.7, 0.65, 3.0)],
    };
    let w = evaluate_weight(&spec, &g).unwrap();
    out.push((
        "2d-dirichlet p=2 q=1.5",
        ProblemSpec64::new(g, w, 2.0, 1.5).unwrap(),
    ));

    let g = Grid64::rectangle((0.0, 1.0), (0.0, 0.8), (29, 25), BoundaryMode::Neumann).unwrap();
    let spec = WeightSpec::Bumps {
        background: -1.0,
        bumps: vec![bump(0.5, 0.4, 5.0)],
    };
    let w = evaluate_weight(&spec, &g).unwrap();
    out.push((
        "2d-neumann p=2.5 q=1.8",
        ProblemSpec64::new(g, w, 2.5, 1.8).unwrap(),
    ));
    out
}

/// Smallest eigenvalue of the symmetric tridiagonal matrix with diagonal `d`
/// and off-diagonal `e`, by Sturm-sequence bisection.
pub fn tridiagonal_min_eigenvalue(d: &[f64], e: &[f64]) -> f64 {
    let count_below = |x: f64| {
        let mut count = 0;
        let mut q = 1.0;
        for i in 0..d.len() {
            let off = if i == 0 { 0.0 } else { e[i - 1] * e[i - 1] / q };
            q = d[i] - x - off;
            if q == 0.0 {
                q = -1e-300;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    };
    // Gershgorin bounds
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..d.len() {
        let r =
            if i > 0 { e[i - 1].abs() } else { 0.0 } + if i < e.len() { e[i].abs() } else { 0.0 };
        lo = lo.min(d[i] - r);
        hi = hi.max(d[i] + r);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if count_below(mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First Dirichlet eigenvalue of `-u'' = λ u` on `(0, 1)` discretized with
/// `nodes` points: the stiffness matrix over the lumped trapezoidal mass.
pub fn dirichlet_laplacian_eigen_oracle(nodes: usize) -> f64 {
    let h = 1.0 / (nodes - 1) as f64;
    let n = nodes - 2;
    let d = vec![2.0 / (h * h); n];
    let e = vec![-1.0 / (h * h); n - 1];
    tridiagonal_min_eigenvalue(&d, &e)
}

/// First Dirichlet eigenvalue of `-(|φ'|^{p-2}φ')' = λ|φ|^{p-2}φ` on `(0, 1)`
/// by shooting: integrate from `φ(0) = 0`, `φ'(0) = 1` and bisect on `λ`
/// until the first zero of `φ` lands at `x = 1`.
pub fn shooting_eigen_oracle(p: f64) -> f64 {
    // state (φ, w) with w = |φ'|^{p-2}φ'; φ' = |w|^{1/(p-1)} sign(w)
    let rhs = |lambda: f64, y: [f64; 2]| {
        let dphi = y[1].abs().powf(1.0 / (p - 1.0)) * y[1].signum();
        let dw = -lambda * y[0].abs().powf(p - 1.0) * y[0].signum();
        [dphi, dw]
    };
    let first_zero = |lambda: f64| -> f64 {
        let steps = 20_000;
        let dx = 4.0 / steps as f64;
        let mut y = [0.0, 1.0];
        let mut x = 0.0;
        for _ in 0..steps {
            let k1 = rhs(lambda, y);
            let k2 = rhs(lambda, [y[0] + 0.5 * dx * k1[0], y[1] + 0.5 * dx * k1[1]]);
            let k3 = rhs(lambda, [y[0] + 0.5 * dx * k2[0], y[1] + 0.5 * dx * k2[1]]);
            let k4 = rhs(lambda, [y[0] + dx * k3[0], y[1] + dx * k3[1]]);
            let next = [
                y[0] + dx / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
                y[1] + dx / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
            ];
            if next[0] <= 0.0 && x > 0.0 {
                // linear interpolation of the crossing
                return x + dx * y[0] / (y[0] - next[0]);
            }
            y = next;
            x += dx;
        }
        f64::INFINITY
    };
    let (mut lo, mut hi): (f64, f64) = (1.0, 1e4);
    for _ in 0..100 {
        let mid = (lo * hi).sqrt();
        if first_zero(mid) > 1.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// `(p - 1) π_p^p` with `π_p = 2π / (p sin(π/p))`.
pub fn p_laplacian_eigen_formula(p: f64) -> f64 {
    let pi_p = 2.0 * std::f64::consts::PI / (p * (std::f64::consts::PI / p).sin());
    (p - 1.0) * pi_p.powf(p)
}

/// Energy of the 5-node Dirichlet problem on `[0, 1]` with interior values
/// `x`, written out by hand: `h Σ |Δx/h|^p / p - Σ w a |x|^q / q`.
pub fn five_node_energy(x: [f64; 3], p: f64, q: f64) -> f64 {
    let h = 0.25;
    let v = [0.0, x[0], x[1], x[2], 0.0];
    let mut kin = 0.0;
    for i in 0..4 {
        kin += h * ((v[i + 1] - v[i]) / h).abs().powf(p);
    }
    let pot: f64 = x.iter().map(|&t| h * t.abs().powf(q)).sum();
    kin / p - pot / q
}

/// Exhaustive search on `[0, 3]^3` with step 0.01, then pattern-search
/// refinement down to step 1e-9.
pub fn lattice_oracle(p: f64, q: f64) -> (f64, [f64; 3]) {
    let mut best = (f64::INFINITY, [0.0; 3]);
    for i in 0..=300 {
        for j in 0..=300 {
            for k in 0..=300 {
                let x = [i as f64 * 0.01, j as f64 * 0.01, k as f64 * 0.01];
                let e = five_node_energy(x, p, q);
                if e < best.0 {
                    best = (e, x);
                }
            }
        }
    }
    let mut step = 0.01;
    while step > 1e-9 {
        let mut improved = false;
        for c in 0..3 {
            for s in [-step, step] {
                let mut x = best.1;
                x[c] += s;
                let e = five_node_energy(x, p, q);
                if e < best.0 {
                    best = (e, x);
                    improved = true;
                }
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}
