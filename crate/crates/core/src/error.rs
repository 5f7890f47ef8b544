use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("seed too short: need {needed} bits, got {got}")]
    SeedTooShort { needed: usize, got: usize },
    #[error("input of {len} bits exceeds hash input cap {cap}")]
    InputTooLong { len: usize, cap: usize },
    #[error("rollback to {requested} past transcript length {len}")]
    RollbackPastEnd { requested: usize, len: usize },
    #[error("padding target {target} shorter than protocol length {len}")]
    PaddingTooShort { target: usize, len: usize },
    #[error("shared randomness exhausted: cursor {cursor} + {requested} > {len}")]
    RandomnessExhausted { cursor: u64, requested: u64, len: u64 },
    #[error("seed space of 2^{bits} too large to enumerate")]
    SeedSpaceTooLarge { bits: usize },
    #[error("adversary exceeded corruption budget of {total}")]
    BudgetExceeded { total: u64 },
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
