use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid PVM: residual {residual:.3e}")]
    InvalidPvm { residual: f64 },
    #[error("invalid representation: residual {residual:.3e}")]
    InvalidRepresentation { residual: f64 },
    #[error("support of the measure does not generate the group")]
    NonGenerating,
    #[error("resource cap exceeded: {0}")]
    ResourceCap(String),
    #[error("generator matrix is rank deficient (rank {rank} < {rows})")]
    RankDeficient { rank: usize, rows: usize },
    #[error("unsupported field size q = {0}")]
    InvalidField(u64),
    #[error("sampling failed after {tries} tries (best found: {best})")]
    SamplingFailure { tries: usize, best: String },
    #[error("degenerate spectrum persisted after {0} attempts")]
    Degenerate(usize),
    #[error("precondition violated: {what} (residual {residual:.3e})")]
    Precondition { what: String, residual: f64 },
    #[error("parse error: {0}")]
    Parse(String),
    #[error("internal check failed: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
