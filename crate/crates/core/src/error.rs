use thiserror::Error;

/// Errors raised by the lab.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty sample set")]
    EmptySampleSet,
    #[error("node outside domain: {0:?}")]
    NodeOutsideDomain(Vec<f64>),
    #[error("degenerate set: at least two distinct nodes are required")]
    DegenerateSet,
    #[error("budget exceeded: {required} nodes required, cap is {cap}")]
    BudgetExceeded { required: usize, cap: usize },
    #[error("jet order exceeded: requested {requested}, available {available}")]
    JetOrderExceeded { requested: usize, available: usize },
    #[error("not fractional: order {0} has no fractional part in (0,1)")]
    NotFractional(f64),
    #[error("quadrature budget exceeded: {required} evaluation pairs required, cap is {cap}")]
    QuadratureBudget { required: usize, cap: usize },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("unknown problem id `{0}`")]
    UnknownProblem(String),
    #[error("system numerically zero")]
    SystemNumericallyZero,
    #[error("untestable trial space")]
    UntestableTrialSpace,
    #[error("empty test set for component {0}")]
    EmptyTestSet(&'static str),
    #[error("too few points for rate fit: {0} usable, 3 required")]
    TooFewPoints(usize),
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("config error: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
