use thiserror::Error;

use crate::montecarlo::IndexHistogram;
use crate::montecarlo::ProbabilityVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("tolerance must be a positive finite number, got {0}")]
    InvalidTolerance(f64),

    #[error("polynomial needs at least one coefficient")]
    EmptyPolynomial,

    #[error("leading coefficient is zero at the working tolerance")]
    ZeroLeadingCoefficient,

    #[error("companion matrix needs degree >= 1")]
    DegreeTooLow,

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("disk radius must be positive and finite, got {0}")]
    InvalidRadius(f64),

    #[error("eigenvalue iteration did not converge for a {dimension}x{dimension} matrix")]
    EigenNoConvergence { dimension: usize },

    #[error("invalid model order n={0}; need n >= 1")]
    InvalidOrder(usize),

    #[error("invalid estimation config: {0}")]
    InvalidConfig(String),

    #[error("indeterminate fraction {fraction:.3e} exceeds the abort threshold {threshold:.0e}")]
    TooManyIndeterminate {
        fraction: f64,
        threshold: f64,
        histogram: Box<IndexHistogram>,
    },

    #[error("histogram has no determinate samples")]
    AllIndeterminate,

    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },

    #[error("constraint design matrix is rank deficient")]
    RankDeficient,

    #[error("pinning indices {0:?} to zero is inconsistent with the constraints")]
    InconsistentPinning(Vec<usize>),

    #[error("negative entries remain after {rounds} repair rounds")]
    RepairExhausted {
        rounds: usize,
        last: Box<ProbabilityVector>,
    },

    #[error("{0} must be positive, got {1}")]
    NonPositiveArgument(&'static str, f64),

    #[error("no exact value known for {family} index {index}")]
    NoExactValue { family: String, index: usize },

    #[error("unknown model family '{0}' (expected cont-sys, cont-eq, disc-sys or disc-eq)")]
    UnknownFamily(String),
}
