use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("operator is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("frame is rank deficient: rank {rank} of {required}")]
    SingularFrame { rank: usize, required: usize },

    #[error("decomposition failed at frame element {alpha}: {reason}")]
    Decomposition { alpha: usize, reason: String },

    #[error("repreparation annihilates the reachable states (normalisation {norm:.3e})")]
    VanishingRepreparation { norm: f64 },

    #[error("no evolved data for frame element {0}")]
    MissingBranch(usize),

    #[error("{method} inapplicable: channel {channel} has rate {rate:.6e} at t = {time}")]
    MethodInapplicable {
        method: &'static str,
        channel: usize,
        rate: f64,
        time: f64,
    },

    #[error("reverse jump failure at t = {time}: {detail}")]
    ReverseJumpFailure { time: f64, detail: String },

    #[error("positive unraveling failure at t = {time}: rate operator eigenvalue {lambda_min:.6e}")]
    PositiveUnravelingFailure { time: f64, lambda_min: f64 },

    #[error("jump probability {probability:.3e} exceeds one at t = {time}; reduce dt")]
    StepTooLarge { time: f64, probability: f64 },

    #[error("invalid initial state: {0}")]
    InvalidState(String),

    #[error("total dimension {dim} exceeds the oracle cap {cap}")]
    OracleCap { dim: usize, cap: usize },

    #[error("ill-conditioned map at t = {time} (condition number {condition:.3e})")]
    IllConditioned { time: f64, condition: f64 },

    #[error("step size underflow at t = {time}")]
    StepUnderflow { time: f64 },

    #[error("quadrature did not converge (estimated error {error:.3e})")]
    Quadrature { error: f64 },

    #[error("trajectory {trajectory}: {source}")]
    Trajectory {
        trajectory: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Strips trajectory wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Trajectory { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
