use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("insufficient data: need at least {needed} observations, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("invalid data: {0}")]
    InvalidData(String),
    #[error("length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: (usize, usize), got: (usize, usize) },
    #[error("correlation undefined: zero variance in {0}")]
    UndefinedCorrelation(&'static str),
    #[error("comovement undefined: all first differences of {0} are zero")]
    UndefinedComovement(&'static str),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),
    #[error("invalid threshold c = {0}: must be positive")]
    InvalidThreshold(f64),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid bandwidth {0}: must be positive and finite")]
    InvalidBandwidth(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid contamination parameters: {0}")]
    InvalidContamination(String),
    #[error("singular fit: {0}")]
    SingularFit(String),
    #[error("independence covariance is rank deficient along dimension {dimension}")]
    SingularIndependence { dimension: usize },
    #[error("numerical failure: {0}")]
    NumericFailure(String),
    #[error("fit failure: {0}")]
    FitFailure(String),
    #[error("invalid model: {0}")]
    ModelInvalid(String),
    #[error("invalid lattice specification: {0}")]
    InvalidSpec(String),
    #[error("{sites} sites exceed the exact-likelihood budget of {budget}")]
    BudgetExceeded { sites: usize, budget: usize },
}
