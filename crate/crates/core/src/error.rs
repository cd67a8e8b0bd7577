use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("grid must be 1-D or 2-D, got dim={0}")]
    UnsupportedDimension(usize),
    #[error("degenerate extents on axis {axis}: [{lo}, {hi}]")]
    DegenerateExtents { axis: usize, lo: f64, hi: f64 },
    #[error("axis {axis} has {nodes} nodes, need at least 3")]
    TooFewNodes { axis: usize, nodes: usize },
    #[error("expected {expected} values for this grid, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("non-finite value at node {0}")]
    NonFinite(usize),
    #[error("weight spec does not fit the grid: {0}")]
    WeightDomain(String),
    #[error("unknown component label {0}")]
    UnknownLabel(usize),
    #[error("invalid exponents p={p}, q={q}: {reason}")]
    Exponents {
        p: f64,
        q: f64,
        reason: &'static str,
    },
    #[error("Neumann mode requires the weight to have negative integral, got {0}")]
    NeumannInadmissible(f64),
    #[error("weight does not change sign")]
    NotSignChanging,
    #[error("gradient vanishes on a sample with p < 2; pass eps > 0")]
    DegenerateGradient,
    #[error("constraint value {0} is not positive")]
    NonPositiveConstraint(f64),
    #[error("negative value {value} at node {node}")]
    NegativeField { node: usize, value: f64 },
    #[error("alpha_1^q + alpha_2^q = {0}, expected 1")]
    AlphaConstraint(f64),
    #[error("no positive weight left on free nodes; the constraint cannot be met")]
    Infeasible,
    #[error("iterate left the feasible cone {{constraint > 0}} after reinitialization")]
    LeftFeasibleCone,
    #[error("supports are not separated by dead-core nodes")]
    NotSeparated,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("malformed field dump: {0}")]
    Dump(String),
}

pub type Result<T> = std::result::Result<T, Error>;
