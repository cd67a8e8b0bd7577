//! Experiment dispatch and artifact writing.
//!
//! Every run writes into the output directory:
//! - `manifest.toml`: the resolved config, seed and CSV schema version;
//! - `results.csv`: one row per solve, header [`CSV_HEADER`];
//! - `fields/*.dat`: a dump of every converged solution (grid dump format);
//! - experiment-specific two-column `.dat` files and text reports.
//!
//! Nothing depends on time or environment, so re-running a config
//! reproduces every file byte for byte.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use plaplab::{
    certify_by_picone, energy, energy_gradient, estimate_q0, flip_bump, longest_run,
    minimize_constrained, minimize_global, minimize_restricted, multistart_uniqueness,
    positivity_report, principal_eigen, project_to_sa, q_sweep_asymptotics, rayleigh, write_dump,
    Field64, PositivityReport, ProblemSpec64, Q0Flag, SolveOptions64, SolveResult64, Trend, TAU,
    TAU_ZERO,
};
use serde::Serialize;

use crate::config::{ExperimentConfig, ExperimentKind};

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CSV_HEADER: [&str; 10] = [
    "q",
    "p",
    "mode",
    "objective",
    "residual",
    "iterations",
    "converged",
    "min_on_positive_set",
    "dead_core_count",
    "in_cone",
];

#[derive(Serialize)]
struct Row<'a> {
    q: f64,
    p: f64,
    mode: &'a str,
    objective: f64,
    residual: f64,
    iterations: usize,
    converged: bool,
    min_on_positive_set: f64,
    dead_core_count: usize,
    in_cone: bool,
}

/// Outcome of a run. `failures` lists every failed assertion and every solve
/// that did not converge; the process exits nonzero iff it is non-empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunReport {
    pub failures: Vec<String>,
    pub summary: Vec<String>,
}

impl RunReport {
    pub fn ok(&self) -> bool {
        self.failures.is_empty()
    }

    fn note(&mut self, line: String) {
        self.summary.push(line);
    }

    fn require(&mut self, cond: bool, what: String) {
        if !cond {
            self.failures.push(what);
        }
    }
}

struct Artifacts {
    dir: PathBuf,
    csv: csv::Writer<File>,
    dumps: bool,
}

impl Artifacts {
    fn create(dir: &Path, dumps: bool) -> Result<Self> {
        fs::create_dir_all(dir.join("fields"))
            .with_context(|| format!("creating {}", dir.display()))?;
        let mut csv = csv::WriterBuilder::new()
            .has_headers(false)
            .from_path(dir.join("results.csv"))?;
        csv.write_record(CSV_HEADER)?;
        csv.flush()?;
        Ok(Artifacts {
            dir: dir.to_path_buf(),
            csv,
            dumps,
        })
    }

    /// Appends the CSV row for `r` and dumps its field if it converged.
    fn record(
        &mut self,
        ps: &ProblemSpec64,
        r: &SolveResult64,
        name: &str,
    ) -> Result<PositivityReport<f64>> {
        let rep = positivity_report(&r.u, ps, TAU, TAU_ZERO)?;
        self.csv.serialize(Row {
            q: ps.q(),
            p: ps.p(),
            mode: r.mode.name(),
            objective: r.objective,
            residual: r.residual,
            iterations: r.iterations,
            converged: r.converged,
            min_on_positive_set: rep.min_on_positive_set,
            dead_core_count: rep.dead_core_nodes.len(),
            in_cone: rep.in_cone,
        })?;
        self.csv.flush()?;
        if r.converged {
            self.dump(ps, &r.u, name)?;
        }
        Ok(rep)
    }

    fn dump(&self, ps: &ProblemSpec64, u: &Field64, name: &str) -> Result<()> {
        if self.dumps {
            fs::write(
                self.dir.join("fields").join(format!("{name}.dat")),
                write_dump(ps.grid(), u),
            )?;
        }
        Ok(())
    }

    fn text(&self, name: &str, body: &str) -> Result<()> {
        fs::write(self.dir.join(name), body)?;
        Ok(())
    }

    fn columns(&self, name: &str, header: &str, rows: &[(f64, f64)]) -> Result<()> {
        let mut f = File::create(self.dir.join(name))?;
        writeln!(f, "# {header}")?;
        for (x, y) in rows {
            writeln!(f, "{x:e} {y:e}")?;
        }
        Ok(())
    }
}

fn write_manifest(cfg: &ExperimentConfig, dir: &Path, weight_factor: f64) -> Result<()> {
    let mut t = toml::Table::new();
    t.insert("tool".into(), env!("CARGO_PKG_NAME").into());
    t.insert("tool_version".into(), env!("CARGO_PKG_VERSION").into());
    t.insert("experiment".into(), cfg.kind().name().into());
    t.insert("seed".into(), toml::Value::Integer(cfg.solver.seed as i64));
    t.insert(
        "csv_schema_version".into(),
        toml::Value::Integer(CSV_SCHEMA_VERSION as i64),
    );
    t.insert("csv_header".into(), CSV_HEADER.join(",").into());
    // product of weight_scale and the target_lambda1 rescaling
    t.insert(
        "effective_weight_factor".into(),
        (cfg.problem.weight_scale * weight_factor).into(),
    );
    t.insert("config".into(), toml::Value::try_from(cfg)?);
    fs::write(dir.join("manifest.toml"), toml::to_string(&t)?)?;
    Ok(())
}

/// Problem at `q`, rescaled to the configured principal eigenvalue, and the
/// rescaling factor.
fn resolved_problem(
    cfg: &ExperimentConfig,
    q: f64,
    opts: &SolveOptions64,
) -> Result<(ProblemSpec64, f64)> {
    let ps = cfg.problem_at(q)?;
    match cfg.problem.target_lambda1 {
        None => Ok((ps, 1.0)),
        Some(target) => {
            let l1 = principal_eigen(&ps, opts)?.objective;
            let factor = l1 / target;
            Ok((ps.with_weight_scale(factor)?, factor))
        }
    }
}

/// Runs the experiment and writes its artifacts into `out`.
pub fn run(cfg: &ExperimentConfig, out: &Path) -> Result<RunReport> {
    let opts = cfg.solver.options();
    let (ps, factor) = resolved_problem(cfg, cfg.base_q(), &opts)?;
    let mut art = Artifacts::create(out, cfg.output.dumps)?;
    write_manifest(cfg, out, factor)?;
    let mut rep = RunReport::default();
    if cfg.problem.target_lambda1.is_some() {
        rep.note(format!(
            "weight rescaled by {factor:e} to reach the requested λ₁"
        ));
    }
    match cfg.kind() {
        ExperimentKind::Solve => solve(&ps, &opts, &mut art, &mut rep)?,
        ExperimentKind::Eigen => eigen(&ps, &opts, &mut art, &mut rep)?,
        ExperimentKind::Multistart => multistart(cfg, &ps, &opts, &mut art, &mut rep)?,
        ExperimentKind::Q0 => q0(cfg, &ps, &opts, &mut art, &mut rep)?,
        ExperimentKind::Sweep => sweep(cfg, &ps, &opts, &mut art, &mut rep)?,
        ExperimentKind::Deadcore => deadcore(cfg, &ps, &opts, &mut art, &mut rep)?,
        ExperimentKind::Restricted => restricted(cfg, &ps, &opts, &mut art, &mut rep)?,
        ExperimentKind::Check => check(cfg, &ps, &opts, &mut art, &mut rep)?,
    }
    let mut summary = rep.summary.join("\n");
    summary.push('\n');
    for f in &rep.failures {
        summary.push_str(&format!("FAILED: {f}\n"));
    }
    art.text("summary.txt", &summary)?;
    Ok(rep)
}

fn require_converged(rep: &mut RunReport, r: &SolveResult64, what: &str) {
    rep.require(
        r.converged,
        format!(
            "{what} did not converge (residual {:e}, {} iterations)",
            r.residual, r.iterations
        ),
    );
}

fn solve(
    ps: &ProblemSpec64,
    opts: &SolveOptions64,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<()> {
    let r = minimize_global(ps, opts)?;
    let pos = art.record(ps, &r, "global")?;
    rep.note(format!(
        "M = {:e}, residual {:e}, {} iterations",
        r.objective, r.residual, r.iterations
    ));
    require_converged(rep, &r, "global solve");
    rep.require(
        r.objective < 0.0,
        format!("M = {:e} is not negative", r.objective),
    );
    rep.require(
        pos.min_on_positive_set > 0.0,
        format!(
            "ground state vanishes on the positive set (min {:e})",
            pos.min_on_positive_set
        ),
    );
    Ok(())
}

fn eigen(
    ps: &ProblemSpec64,
    opts: &SolveOptions64,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<()> {
    let r = principal_eigen(ps, opts)?;
    art.record(ps, &r, "eigen")?;
    if r.converged {
        // reporting scale: max-norm 1
        art.dump(ps, &r.max_normalized(), "eigen_max_normalized")?;
    }
    rep.note(format!(
        "λ₁ = {:e}, residual {:e}, {} iterations",
        r.objective, r.residual, r.iterations
    ));
    require_converged(rep, &r, "eigen solve");
    rep.require(
        r.objective > 0.0,
        format!("λ₁ = {:e} is not positive", r.objective),
    );
    Ok(())
}

fn multistart(
    cfg: &ExperimentConfig,
    ps: &ProblemSpec64,
    opts: &SolveOptions64,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<()> {
    let e = &cfg.experiment;
    let u = multistart_uniqueness(ps, e.runs, opts, e.agree_tol)?;
    for (k, r) in u.runs.iter().enumerate() {
        art.record(
            ps,
            r,
            &format!("multistart_seed{}", opts.seed.wrapping_add(k as u64)),
        )?;
    }
    rep.note(format!(
        "{} runs, max pairwise distance {:e} (tolerance {:e}), agree = {}",
        e.runs, u.max_pairwise_distance, u.tolerance, u.agree
    ));
    rep.require(!u.incomplete, "some multistart run did not converge".into());
    rep.require(
        u.agree,
        format!(
            "runs disagree: max pairwise distance {:e}",
            u.max_pairwise_distance
        ),
    );
    Ok(())
}

fn q0(
    cfg: &ExperimentConfig,
    ps: &ProblemSpec64,
    opts: &SolveOptions64,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<()> {
    let est = estimate_q0(ps, opts, cfg.experiment.q_tol)?;
    let rows: Vec<(f64, f64)> = est
        .samples
        .iter()
        .map(|&(q, c)| (q, if c { 1.0 } else { 0.0 }))
        .collect();
    art.columns("q0_samples.dat", "q in_cone", &rows)?;
    rep.note(format!(
        "q0 = {} ({:?}), bracket width {:e}, λ₁ = {:e}, {} solves",
        est.q0,
        est.flag,
        est.width,
        est.lambda1,
        est.samples.len()
    ));
    rep.require(
        est.all_converged,
        "some q0 classification solve did not converge".into(),
    );
    rep.require(
        est.flag != Q0Flag::NeverInCone,
        "no tested q gave a minimizer in the interior cone".into(),
    );
    Ok(())
}

fn sweep(
    cfg: &ExperimentConfig,
    ps: &ProblemSpec64,
    opts: &SolveOptions64,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<()> {
    let table = q_sweep_asymptotics(ps, &cfg.problem.q_list, opts)?;
    for row in &table.rows {
        let pq = ps.with_q(row.q)?;
        art.record(&pq, &row.result, &format!("sweep_q{}", row.q))?;
        require_converged(rep, &row.result, &format!("sweep solve at q = {}", row.q));
    }
    let sup: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.q, r.sup_norm)).collect();
    let en: Vec<(f64, f64)> = table.rows.iter().map(|r| (r.q, r.energy)).collect();
    art.columns("sweep_sup_norm.dat", "q sup_norm", &sup)?;
    art.columns("sweep_energy.dat", "q M", &en)?;
    let trend = match table.trend {
        Trend::Increasing => "increasing",
        Trend::Decreasing => "decreasing",
        Trend::Neither => "not monotone",
    };
    rep.note(format!(
        "sup-norm over the last half of the q list: {trend}"
    ));
    Ok(())
}

fn deadcore(
    cfg: &ExperimentConfig,
    ps: &ProblemSpec64,
    opts: &SolveOptions64,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<()> {
    let e = &cfg.experiment;
    let r = minimize_global(ps, opts)?;
    let pos = art.record(ps, &r, "global")?;
    require_converged(rep, &r, "global solve");
    let run = longest_run(&pos.dead_core_nodes);
    rep.note(format!(
        "{} dead-core nodes, longest run {run}",
        pos.dead_core_nodes.len()
    ));
    rep.require(
        run >= e.min_dead_run,
        format!(
            "longest dead-core run {run} is shorter than {}",
            e.min_dead_run
        ),
    );
    match flip_bump(&r.u, ps.weight(), ps.grid(), e.flip_label) {
        Ok(flipped) => {
            let ef = energy(&flipped, ps)?.total;
            let diff = (ef - r.objective).abs();
            art.dump(ps, &flipped, "flipped")?;
            let sign_changing = flipped.values().iter().any(|&x| x < 0.0)
                && flipped.values().iter().any(|&x| x > 0.0);
            rep.note(format!(
                "flip of component {}: |I(flip) - M| = {diff:e}",
                e.flip_label
            ));
            rep.require(
                diff <= e.flip_energy_tol,
                format!("flip changed the energy by {diff:e}"),
            );
            rep.require(sign_changing, "flipped field does not change sign".into());
        }
        Err(err) => rep.require(
            false,
            format!("flip of component {} failed: {err}", e.flip_label),
        ),
    }
    Ok(())
}

fn restricted(
    cfg: &ExperimentConfig,
    ps: &ProblemSpec64,
    opts: &SolveOptions64,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<()> {
    let labels = &cfg.experiment.labels;
    let v = minimize_constrained(ps, opts)?;
    art.record(ps, &v, "constrained")?;
    let vj = minimize_restricted(ps, labels, opts)?;
    let name: Vec<String> = labels.iter().map(|l| l.to_string()).collect();
    art.record(ps, &vj, &format!("restricted_{}", name.join("_")))?;
    require_converged(rep, &v, "constrained solve");
    require_converged(rep, &vj, "restricted solve");
    rep.note(format!(
        "m = {:e}, m_J = {:e} for J = {labels:?}",
        v.objective, vj.objective
    ));
    let slack = (cfg.solver.tol_grad).max(1e-8);
    rep.require(
        vj.objective >= v.objective * (1.0 - slack),
        format!("m_J = {:e} is below m = {:e}", vj.objective, v.objective),
    );
    Ok(())
}

/// The invariant suite on one problem; writes `check.txt` with one PASS/FAIL
/// line per check.
fn check(
    cfg: &ExperimentConfig,
    ps: &ProblemSpec64,
    opts: &SolveOptions64,
    art: &mut Artifacts,
    rep: &mut RunReport,
) -> Result<()> {
    let e = &cfg.experiment;
    let (p, q) = (ps.p(), ps.q());
    let u = minimize_global(ps, opts)?;
    let pos = art.record(ps, &u, "global")?;
    let v = minimize_constrained(ps, opts)?;
    art.record(ps, &v, "constrained")?;
    let m = v.objective;
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();

    let mut table: Vec<(bool, &str, String)> = Vec::new();
    table.push((
        u.converged && v.converged,
        "convergence",
        format!("global {} / constrained {}", u.converged, v.converged),
    ));
    table.push((u.objective < 0.0, "M < 0", format!("M = {:e}", u.objective)));
    table.push((m > 0.0, "m > 0", format!("m = {m:e}")));
    let predicted = (1.0 / p - 1.0 / q) * m.powf(q / (q - p));
    let err = rel(u.objective, predicted);
    table.push((
        err <= e.identity_tol,
        "energy identity",
        format!("rel err {err:.2e} (<= {:e})", e.identity_tol),
    ));
    let c = m.powf(1.0 / (q - p));
    let err = rel(energy(&v.u.scaled(c), ps)?.total, u.objective);
    table.push((
        err <= 1e-6,
        "rescaled constrained minimizer attains M",
        format!("rel err {err:.2e} (<= 1e-6)"),
    ));
    let err = rel(rayleigh(&project_to_sa(&u.u, ps)?, ps, q)?, m);
    table.push((
        err <= 1e-6,
        "projected ground state attains m",
        format!("rel err {err:.2e} (<= 1e-6)"),
    ));
    table.push((
        pos.min_on_positive_set > 0.0,
        "positivity on the positive set",
        format!(
            "min / max = {:.3e}",
            pos.min_on_positive_set / u.u.max_abs()
        ),
    ));
    let mono = |r: &SolveResult64| r.history.windows(2).all(|w| w[1] <= w[0]);
    table.push((
        mono(&u) && mono(&v),
        "monotone descent",
        format!("{} + {} accepted steps", u.history.len(), v.history.len()),
    ));
    let again = minimize_global(ps, opts)?;
    table.push((again == u, "determinism", "identical re-run".into()));
    let pic = certify_by_picone(&u, ps, &e.eps_seq, &v, e.picone_tol)?;
    table.push((
        pic.final_slack >= 0.0,
        "Picone certificate",
        format!(
            "rayleigh(U)/m - 1 = {:.2e} (tol {:e})",
            pic.final_gap, e.picone_tol
        ),
    ));
    let fd = finite_difference_error(ps, &u.u, opts)?;
    table.push((
        fd <= 1e-5,
        "gradient vs finite differences",
        format!("rel err {fd:.2e} (<= 1e-5)"),
    ));

    let mut body = String::new();
    for (ok, name, detail) in &table {
        let line = format!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
        body.push_str(&line);
        body.push('\n');
        rep.note(line);
        rep.require(*ok, format!("check '{name}' failed: {detail}"));
    }
    art.text("check.txt", &body)?;
    Ok(())
}

/// Worst relative mismatch between the energy gradient and central
/// differences at three perturbations of `u`.
fn finite_difference_error(ps: &ProblemSpec64, u: &Field64, opts: &SolveOptions64) -> Result<f64> {
    let scale = u.max_abs().max(1e-300);
    let eps = if ps.p() >= 2.0 {
        0.0
    } else {
        opts.eps.max(f64::EPSILON)
    };
    let free = ps.free_mask();
    let mut worst: f64 = 0.0;
    for k in 1..=3 {
        let kf = k as f64;
        let mut base = u.clone();
        for (i, x) in base.values_mut().iter_mut().enumerate() {
            if free[i] {
                *x += 0.1 * scale * (kf * 0.37 * i as f64).sin();
            }
        }
        let g = energy_gradient(&base, ps, eps)?;
        let h = 1e-5 * scale;
        let mut num = 0.0f64;
        let mut den = 0.0f64;
        for i in (0..base.len()).filter(|&i| free[i]) {
            let mut plus = base.clone();
            plus.values_mut()[i] += h;
            let mut minus = base.clone();
            minus.values_mut()[i] -= h;
            let fd = (energy(&plus, ps)?.total - energy(&minus, ps)?.total) / (2.0 * h);
            num = num.max((fd - g.values()[i]).abs());
            den = den.max(fd.abs());
        }
        if den > 0.0 {
            worst = worst.max(num / den);
        }
    }
    Ok(worst)
}
