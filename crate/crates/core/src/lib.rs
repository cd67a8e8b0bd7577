//! Finite-difference experiments for the indefinite sublinear p-Laplacian
//! energy `I_q(u) = ∫|∇u|^p/p - ∫a|u|^q/q` on intervals and rectangles.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` and
//! `*32` aliases below fix the scalar type.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod energy;
pub mod error;
pub mod grid;
pub mod scalar;
pub mod solve;
pub mod weight;

pub use analysis::{
    certify_by_picone, compare_runs, estimate_q0, flip_bump, longest_run, multistart_uniqueness,
    positivity_report, q_sweep_asymptotics, strict_trend, PiconeReport, PiconeRow,
    PositivityReport, Q0Estimate, Q0Flag, SweepRow, SweepTable, Trend, UniquenessReport, TAU,
    TAU_ZERO,
};
pub use energy::{
    constraint_value, energy, energy_gradient, hidden_convexity_gap, holder_gap, picone_gap,
    picone_tolerance, project_to_sa, rayleigh, EnergyBreakdown, ProblemSpec,
};
pub use error::{Error, Result};
pub use grid::{
    parse_dump, write_dump, Axis, BoundaryMode, CellVectorField, Field, GradientSamples, Grid,
};
pub use scalar::Scalar;
pub use solve::{
    minimize_constrained, minimize_global, minimize_restricted, principal_eigen, residual, Init,
    Mode, SolveOptions, SolveResult,
};
pub use weight::{
    component_mask, evaluate_weight, neumann_admissible, Bump, WeightField, WeightSpec,
};

pub type Grid64 = Grid<f64>;
pub type Field64 = Field<f64>;
pub type WeightSpec64 = WeightSpec<f64>;
pub type WeightField64 = WeightField<f64>;
pub type ProblemSpec64 = ProblemSpec<f64>;
pub type SolveOptions64 = SolveOptions<f64>;
pub type SolveResult64 = SolveResult<f64>;

pub type Grid32 = Grid<f32>;
pub type Field32 = Field<f32>;
pub type WeightSpec32 = WeightSpec<f32>;
pub type WeightField32 = WeightField<f32>;
pub type ProblemSpec32 = ProblemSpec<f32>;
pub type SolveOptions32 = SolveOptions<f32>;
pub type SolveResult32 = SolveResult<f32>;
