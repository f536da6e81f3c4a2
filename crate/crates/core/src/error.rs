use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("margin mismatch: {0}")]
    MarginMismatch(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("invalid table: {0}")]
    InvalidTable(String),
    #[error("invalid permutation: {0}")]
    InvalidPermutation(String),
    #[error("state space too large: more than {limit} states (raise COSET_CHAINS_MAX_STATES to allow)")]
    StateSpaceTooLarge { limit: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("zero denominator: {0}")]
    ZeroDenominator(String),
    #[error("kernel is not reversible: detailed-balance residual {residual:e}")]
    NotReversible { residual: f64 },
    #[error("eigensolver did not converge after {sweeps} sweeps (off-diagonal norm {off:e})")]
    NoConvergence { sweeps: usize, off: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown dataset: {0}")]
    UnknownDataset(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
