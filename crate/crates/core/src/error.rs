use thiserror::Error;

/// Errors raised by the library. Failing verdicts (a property that does not
/// hold) are not errors; they are returned inside reports.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("stacked linear maps have rank {rank} < {dim}; the composition vanishes on a line")]
    KernelIntersectionNonTrivial { rank: usize, dim: usize },

    #[error("growth ratio neither bounded nor diverging on the radius schedule (tail factor {tail_factor:.3e}); widen the schedule")]
    InconclusiveGrowth { tail_factor: f64 },

    #[error("sphere minimization did not stabilize at radius {radius}")]
    SphereMinimizationFailed { radius: f64 },

    #[error("value {value} outside the profile range [0, {max}]")]
    OutOfRange { value: f64, max: f64 },

    #[error("conjugate maximizer could not be bracketed for |zeta| = {norm}")]
    MaximizerNotBracketed { norm: f64 },

    #[error("Luxemburg norm bracket failed after {doublings} doublings")]
    BracketFailure { doublings: usize },

    #[error("radial profile covers values up to {available}, but {needed} is required")]
    ProfileRangeExceeded { needed: f64, available: f64 },

    #[error("missing hypothesis data: {0}")]
    MissingHypothesisData(&'static str),

    #[error("ordering precondition Phi0 << Phi fails at k = {k}")]
    OrderingViolation { k: f64 },

    #[error("exponent {name} = {value} outside the window [{lo}, {hi})")]
    ExponentOutOfWindow {
        name: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },

    #[error("time derivative of grad Phi(u*') is unstable: {0}")]
    DifferentiationUnstable(String),

    #[error("line search stalled after {iterations} iterations")]
    LineSearchStall { iterations: usize },

    #[error("hypotheses fail: {failed:?}; set the override flag to solve anyway")]
    HypothesesRejected { failed: Vec<String> },

    #[error("Phi overflowed during evaluation; try a smaller initial perturbation")]
    OverflowInPhi,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
