use thiserror::Error;

use crate::model::Mode;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("need at least two arms, got {0}")]
    TooFewArms(usize),
    #[error("mean of arm {index} is not finite")]
    NonFiniteMean { index: usize },
    #[error("multiplicative mode requires strictly positive means, arm {index} has {value}")]
    NonPositiveMean { index: usize, value: f64 },
    #[error("epsilon {epsilon} is out of range for {mode:?} mode")]
    InvalidEpsilon { epsilon: f64, mode: Mode },
    #[error("variance must be finite and positive, got {0}")]
    InvalidVariance(f64),
    #[error("expected {expected} entries, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("invalid simplex weights: {0}")]
    InvalidWeights(String),
    #[error("floor {eta} is infeasible for {arms} arms (must be in (0, 1/K])")]
    InfeasibleFloor { eta: f64, arms: usize },
    #[error("weight of arm {index} is zero; the oracle needs strictly positive weights")]
    ZeroWeight { index: usize },
    #[error("no alternative instance exists")]
    DegenerateAlternative,
    #[error("operation is only defined in additive mode")]
    UnsupportedMode,
    #[error("every arm is epsilon-good; the bound needs at least one bad arm")]
    NoBadArm,
    #[error("degenerate instance: game value {0} is numerically zero")]
    DegenerateInstance(f64),
    #[error("argument outside of its domain: {0}")]
    Domain(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io(_) => 3,
            Error::Csv(e) if matches!(e.kind(), csv::ErrorKind::Io(_)) => 3,
            _ => 2,
        }
    }
}
