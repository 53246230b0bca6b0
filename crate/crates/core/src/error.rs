use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid channel parameters (p01={p01}, p10={p10}): {reason}")]
    InvalidChannel { p01: f64, p10: f64, reason: &'static str },

    #[error("step count must be at least 1")]
    ZeroStep,

    #[error("belief {omega} for channel {channel} lies outside [{lo}, {hi}]")]
    BeliefOutOfRange { channel: usize, omega: f64, lo: f64, hi: f64 },

    #[error("activation vector must have at least one active channel")]
    EmptyActivation,

    #[error("activation vector {0:?} is not a valid bitstring")]
    BadBitstring(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("weights do not form a probability distribution: {0}")]
    InvalidWeights(String),

    #[error("belief floor violated on channel {channel}: omega={omega} < P01^({m})={floor}")]
    BeliefFloor { channel: usize, omega: f64, m: u32, floor: f64 },

    #[error("data packets in a visit ({delivered}) differ from dwell-1 ({dwell} - 1) on channel {channel}")]
    DwellAccounting { channel: usize, dwell: u64, delivered: u64 },

    #[error("belief {omega} on channel {channel} is not in the reachable set (expected {expected})")]
    UnreachableBelief { channel: usize, omega: f64, expected: f64 },

    #[error("operation requires symmetric channels")]
    NotSymmetric,

    #[error("too many channels for an exhaustive vertex set: {n} > {max}")]
    TooManyChannels { n: usize, max: usize },

    #[error("invalid direction vector: {0}")]
    InvalidDirection(String),

    #[error("dominance violated at step {step}: {detail}")]
    DominanceViolated { step: u64, detail: String },

    #[error("conditional probability {p} exceeds cap {cap}")]
    AboveCap { p: f64, cap: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("linear program failed: {0}")]
    Lp(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    TomlDe(#[from] toml::de::Error),
}

impl Error {
    /// True for errors caused by bad user input rather than a broken run.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidChannel { .. }
                | Error::ZeroStep
                | Error::BeliefOutOfRange { .. }
                | Error::EmptyActivation
                | Error::BadBitstring(_)
                | Error::DimensionMismatch { .. }
                | Error::InvalidWeights(_)
                | Error::NotSymmetric
                | Error::TooManyChannels { .. }
                | Error::InvalidDirection(_)
                | Error::Config(_)
                | Error::TomlDe(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
