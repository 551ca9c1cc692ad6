use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("jet order {0} exceeds the supported maximum of 3")]
    OrderTooHigh(u8),
    #[error("point outside the chart domain")]
    Domain,
    #[error("singular point: {0}")]
    Singular(String),
    #[error("rank deficient system: rank {rank} of {cols}")]
    RankDeficient { rank: usize, cols: usize },
    #[error("{what}: residual {residual:e} above tolerance {tol:e}")]
    Residual { what: String, residual: f64, tol: f64 },
    #[error("unsupported tensor rank ({0},{1})")]
    UnsupportedRank(usize, usize),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("unknown manifold '{0}'")]
    UnknownManifold(String),
    #[error("invalid LiftData: {0}")]
    LiftData(String),
    #[error("invalid argument: {0}")]
    Argument(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
