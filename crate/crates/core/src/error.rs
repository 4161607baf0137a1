use thiserror::Error;

/// Errors raised by the problem definitions and the solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CbeError {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid breakage distribution: {0}")]
    InvalidBreakage(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("unknown case id `{0}`")]
    UnknownCase(String),

    #[error("case `{0}` has no exact concentration")]
    NoExactConcentration(String),

    #[error("case `{case}` has no exact moment of order {order}")]
    NoExactMoment { case: String, order: usize },

    #[error("no oracle terms for case `{case}`, method {method}, order {order}")]
    NoOracle {
        case: String,
        method: String,
        order: usize,
    },

    #[error("requested order {requested} exceeds series order {available}")]
    OrderTooLarge { requested: usize, available: usize },

    #[error("step size underflow at t = {time:e} (h = {step:e}); problem looks stiff")]
    Stiffness { time: f64, step: f64 },

    #[error("non-finite state at t = {time:e}")]
    Divergence { time: f64 },

    #[error("non-finite averaged residual at alpha = {alpha}")]
    NonFiniteResidual { alpha: f64 },

    #[error("EOC undefined for errors ({coarse:e}, {fine:e})")]
    UndefinedEoc { coarse: f64, fine: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, CbeError>;
