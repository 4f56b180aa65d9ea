use thiserror::Error;

/// Errors produced by the estimators, solvers and harness.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular value decomposition did not converge")]
    ConvergenceFailure,
    #[error("matrix is not symmetric")]
    NotSymmetric,
    #[error("matrix is not positive definite")]
    NotPositiveDefinite,
    #[error("matrix does not have full column rank (sigma_min / sigma_max = {ratio:e})")]
    RankDeficient { ratio: f64 },
    #[error("total least squares is non-generic: sigma_(n+1) = {sigma_np1:e} is not below sigma_n = {sigma_n:e}")]
    NonGenericTls { sigma_np1: f64, sigma_n: f64 },
    #[error("discrepancy target {rho:e} is below the least-squares residual {floor:e}")]
    InfeasibleTarget { rho: f64, floor: f64 },
    #[error("discrepancy target {rho:e} not bracketed for lambda up to {lambda_cap:e}")]
    BracketExhausted { rho: f64, lambda_cap: f64 },
    #[error("observation signal has zero norm")]
    DegenerateSignal,
    #[error("sample has zero spread")]
    DegenerateSample,
    #[error("corner enumeration limited to m*n <= {limit}, got {got}")]
    SizeLimit { limit: usize, got: usize },
    #[error("invalid experiment config: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
