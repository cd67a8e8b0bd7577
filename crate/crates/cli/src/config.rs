//! Experiment configuration files (TOML, one experiment per file).
//!
//! ```toml
//! [problem]
//! extents = [[0.0, 1.0]]
//! nodes = [201]
//! boundary = "dirichlet"
//! p = 2.0
//! q = 1.5
//!
//! [problem.weight]
//! kind = "piecewise"
//! breakpoints = [0.1, 0.9]
//! values = [1.0, -10.0, 1.0]
//! ```
//!
//! Missing `[solver]`, `[experiment]` and `[output]` tables take their
//! defaults. Validation reports every violation it finds, not just the first.

use std::fmt;

use plaplab::{
    evaluate_weight, neumann_admissible, BoundaryMode, Bump, Grid64, ProblemSpec64, SolveOptions64,
    WeightField64, WeightSpec,
};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExperimentKind {
    Solve,
    Eigen,
    Multistart,
    Q0,
    Sweep,
    Deadcore,
    Restricted,
    Check,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Solve => "solve",
            ExperimentKind::Eigen => "eigen",
            ExperimentKind::Multistart => "multistart",
            ExperimentKind::Q0 => "q0",
            ExperimentKind::Sweep => "sweep",
            ExperimentKind::Deadcore => "deadcore",
            ExperimentKind::Restricted => "restricted",
            ExperimentKind::Check => "check",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    #[default]
    Dirichlet,
    Neumann,
}

impl From<Boundary> for BoundaryMode {
    fn from(b: Boundary) -> Self {
        match b {
            Boundary::Dirichlet => BoundaryMode::Dirichlet,
            Boundary::Neumann => BoundaryMode::Neumann,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BumpConfig {
    pub center: Vec<f64>,
    pub radius: f64,
    pub amplitude: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum WeightConfig {
    Piecewise {
        breakpoints: Vec<f64>,
        values: Vec<f64>,
    },
    Bumps {
        background: f64,
        bumps: Vec<BumpConfig>,
    },
    Tabulated {
        values: Vec<f64>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// Filled in from `extents` when omitted.
    #[serde(default)]
    pub dim: Option<usize>,
    pub extents: Vec<[f64; 2]>,
    pub nodes: Vec<usize>,
    #[serde(default)]
    pub boundary: Boundary,
    pub p: f64,
    /// Required except for `eigen` and `sweep`.
    #[serde(default)]
    pub q: Option<f64>,
    /// `sweep` only.
    #[serde(default)]
    pub q_list: Vec<f64>,
    /// Multiplies the weight.
    #[serde(default = "one")]
    pub weight_scale: f64,
    /// Rescales the weight so that its principal eigenvalue takes this value;
    /// applied after `weight_scale`.
    #[serde(default)]
    pub target_lambda1: Option<f64>,
    pub weight: WeightConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum InitKind {
    #[default]
    Random,
    Indicator,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SolverConfig {
    pub tol_grad: f64,
    pub tol_energy: f64,
    pub max_iter: usize,
    pub eps: f64,
    pub seed: u64,
    pub init: InitKind,
}

impl Default for SolverConfig {
    fn default() -> Self {
        let d = SolveOptions64::default();
        SolverConfig {
            tol_grad: d.tol_grad,
            tol_energy: d.tol_energy,
            max_iter: d.max_iter,
            eps: d.eps,
            seed: d.seed,
            init: InitKind::Random,
        }
    }
}

impl SolverConfig {
    pub fn options(&self) -> SolveOptions64 {
        let init = match self.init {
            InitKind::Random => plaplab::Init::RandomPositive,
            InitKind::Indicator => plaplab::Init::IndicatorOfPositiveSet,
        };
        SolveOptions64 {
            tol_grad: self.tol_grad,
            tol_energy: self.tol_energy,
            max_iter: self.max_iter,
            eps: self.eps,
            seed: self.seed,
            init,
        }
    }
}

/// Parameters of the individual experiments; each experiment reads only its
/// own keys.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentParams {
    /// Must match the subcommand when present.
    pub kind: Option<ExperimentKind>,
    /// multistart
    pub runs: usize,
    pub agree_tol: f64,
    /// q0
    pub q_tol: f64,
    /// restricted
    pub labels: Vec<usize>,
    /// deadcore
    pub flip_label: usize,
    pub min_dead_run: usize,
    pub flip_energy_tol: f64,
    /// check
    pub eps_seq: Vec<f64>,
    pub identity_tol: f64,
    pub picone_tol: f64,
}

impl Default for ExperimentParams {
    fn default() -> Self {
        ExperimentParams {
            kind: None,
            runs: 20,
            agree_tol: 1e-4,
            q_tol: 0.01,
            labels: Vec::new(),
            flip_label: 1,
            min_dead_run: 1,
            flip_energy_tol: 1e-10,
            eps_seq: vec![1e-2, 1e-4, 1e-6],
            identity_tol: 1e-3,
            picone_tol: 1e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Write a field dump for every converged solution.
    pub dumps: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig { dumps: true }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub experiment: ExperimentParams,
    #[serde(default)]
    pub output: OutputConfig,
}

fn one() -> f64 {
    1.0
}

/// Every violation found in a config.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub violations: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid config ({} problem(s)):", self.violations.len())?;
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl ExperimentConfig {
    pub fn kind(&self) -> ExperimentKind {
        self.experiment.kind.unwrap_or(ExperimentKind::Solve)
    }

    pub fn grid(&self) -> Result<Grid64, plaplab::Error> {
        let pc = &self.problem;
        let extents: Vec<(f64, f64)> = pc.extents.iter().map(|e| (e[0], e[1])).collect();
        Grid64::new(&extents, &pc.nodes, pc.boundary.into())
    }

    pub fn weight_spec(&self) -> WeightSpec<f64> {
        let s = self.problem.weight_scale;
        match &self.problem.weight {
            WeightConfig::Piecewise {
                breakpoints,
                values,
            } => WeightSpec::Piecewise {
                breakpoints: breakpoints.clone(),
                values: values.iter().map(|v| v * s).collect(),
            },
            WeightConfig::Bumps { background, bumps } => WeightSpec::Bumps {
                background: background * s,
                bumps: bumps
                    .iter()
                    .map(|b| Bump {
                        center: [b.center[0], b.center.get(1).copied().unwrap_or(0.0)],
                        radius: b.radius,
                        amplitude: b.amplitude * s,
                    })
                    .collect(),
            },
            WeightConfig::Tabulated { values } => {
                WeightSpec::Tabulated(values.iter().map(|v| v * s).collect())
            }
        }
    }

    /// The problem at exponent `q`, before any `target_lambda1` rescaling.
    pub fn problem_at(&self, q: f64) -> Result<ProblemSpec64, plaplab::Error> {
        let grid = self.grid()?;
        let w = evaluate_weight(&self.weight_spec(), &grid)?;
        ProblemSpec64::new(grid, w, self.problem.p, q)
    }

    /// The `q` used for single-exponent experiments; `p` for an eigen run
    /// without `q`.
    pub fn base_q(&self) -> f64 {
        match (self.problem.q, self.problem.q_list.first()) {
            (Some(q), _) => q,
            (None, Some(&q)) => q,
            (None, None) => self.problem.p,
        }
    }
}

/// Parses and validates a config. `command` is the experiment named on the
/// command line; a `kind` key in the file must agree with it.
pub fn parse_config(
    text: &str,
    command: Option<ExperimentKind>,
) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg: ExperimentConfig = toml::from_str(text).map_err(|e| ConfigError {
        violations: vec![e.message().to_string()],
    })?;
    let mut v = Vec::new();
    match (command, cfg.experiment.kind) {
        (Some(c), Some(k)) if c != k => v.push(format!(
            "config is for experiment '{}' but '{}' was requested",
            k.name(),
            c.name()
        )),
        (Some(c), _) => cfg.experiment.kind = Some(c),
        (None, None) => cfg.experiment.kind = Some(ExperimentKind::Solve),
        _ => {}
    }
    validate(&mut cfg, &mut v);
    if v.is_empty() {
        Ok(cfg)
    } else {
        Err(ConfigError { violations: v })
    }
}

fn validate(cfg: &mut ExperimentConfig, v: &mut Vec<String>) {
    let kind = cfg.kind();
    let pc = &mut cfg.problem;
    let dim = pc.extents.len();
    if !(1..=2).contains(&dim) {
        v.push(format!("extents must describe 1 or 2 axes, got {dim}"));
    }
    if pc.nodes.len() != dim {
        v.push(format!(
            "nodes has {} entries for {} axes",
            pc.nodes.len(),
            dim
        ));
    }
    match pc.dim {
        Some(d) if d != dim => v.push(format!("dim = {d} does not match the {dim} extents")),
        _ => pc.dim = Some(dim),
    }
    let p = pc.p;
    let p_ok = p > 1.0 && p.is_finite();
    if !p_ok {
        v.push(format!("p must exceed 1, got {p}"));
    }
    let in_range = |q: f64| q > 1.0 && q < p;
    match kind {
        ExperimentKind::Sweep => {
            if pc.q_list.is_empty() {
                v.push("sweep needs a non-empty q_list".into());
            }
            if pc.q_list.windows(2).any(|w| !(w[1] > w[0])) {
                v.push("q_list must be strictly increasing".into());
            }
            if let Some(&q) = pc.q_list.iter().find(|&&q| !in_range(q)) {
                v.push(format!(
                    "q must lie in (1,p); q_list contains {q} with p = {p}"
                ));
            }
            if pc.q.is_some() {
                v.push("sweep takes q_list, not q".into());
            }
        }
        _ => {
            if !pc.q_list.is_empty() {
                v.push("q_list is only used by sweep".into());
            }
            match pc.q {
                Some(q) if !in_range(q) => {
                    v.push(format!("q must lie in (1,p); got q = {q}, p = {p}"))
                }
                None if kind != ExperimentKind::Eigen => v.push("q is required".into()),
                _ => {}
            }
        }
    }
    if !(pc.weight_scale > 0.0 && pc.weight_scale.is_finite()) {
        v.push(format!(
            "weight_scale must be positive, got {}",
            pc.weight_scale
        ));
    }
    if let Some(t) = pc.target_lambda1 {
        if !(t > 0.0 && t.is_finite()) {
            v.push(format!("target_lambda1 must be positive, got {t}"));
        }
    }
    if let WeightConfig::Bumps { bumps, .. } = &pc.weight {
        if bumps.iter().any(|b| b.center.len() != dim) {
            v.push(format!("bump centers must have {dim} coordinates"));
        }
    }

    let s = &cfg.solver;
    if !(s.tol_grad > 0.0 && s.tol_energy > 0.0) {
        v.push("solver tolerances must be positive".into());
    }
    if s.max_iter == 0 {
        v.push("max_iter must be at least 1".into());
    }
    if !(s.eps >= 0.0) {
        v.push("eps must be nonnegative".into());
    }

    // the rest needs the sampled weight
    let shape_ok = (1..=2).contains(&dim) && cfg.problem.nodes.len() == dim;
    let weight = if shape_ok {
        sampled_weight(cfg, v)
    } else {
        None
    };
    let e = &cfg.experiment;
    match kind {
        ExperimentKind::Multistart if e.runs < 2 => {
            v.push(format!("multistart needs runs >= 2, got {}", e.runs))
        }
        ExperimentKind::Q0 if !(e.q_tol > 0.0) => {
            v.push(format!("q_tol must be positive, got {}", e.q_tol))
        }
        ExperimentKind::Check if e.eps_seq.is_empty() || e.eps_seq.iter().any(|&x| !(x > 0.0)) => {
            v.push("eps_seq must be a non-empty list of positive values".into())
        }
        ExperimentKind::Restricted if e.labels.is_empty() => {
            v.push("restricted needs a non-empty labels list".into())
        }
        _ => {}
    }
    if let Some(w) = weight {
        let n = w.n_components();
        if kind == ExperimentKind::Restricted {
            if let Some(l) = e.labels.iter().find(|&&l| l == 0 || l > n) {
                v.push(format!(
                    "label {l} does not name one of the {n} positive components"
                ));
            }
        }
        if kind == ExperimentKind::Deadcore && (e.flip_label == 0 || e.flip_label > n) {
            v.push(format!(
                "flip_label {} does not name one of the {n} positive components",
                e.flip_label
            ));
        }
    }
}

fn sampled_weight(cfg: &ExperimentConfig, v: &mut Vec<String>) -> Option<WeightField64> {
    let grid = match cfg.grid() {
        Ok(g) => g,
        Err(e) => {
            v.push(e.to_string());
            return None;
        }
    };
    let w = match evaluate_weight(&cfg.weight_spec(), &grid) {
        Ok(w) => w,
        Err(e) => {
            v.push(e.to_string());
            return None;
        }
    };
    if grid.boundary() == BoundaryMode::Neumann && !neumann_admissible(&w, &grid) {
        v.push(format!(
            "Neumann mode requires ∫a < 0 (necessary for a positive solution); this weight has ∫a = {}",
            grid.integrate_nodes(w.field())
        ));
    }
    if cfg.kind() == ExperimentKind::Eigen {
        if w.n_components() == 0 {
            v.push("weight must be positive somewhere".into());
        }
    } else if !w.changes_sign() {
        v.push("weight must change sign".into());
    }
    Some(w)
}
