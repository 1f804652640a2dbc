//! Crate-wide error type.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EifError {
    #[error("invalid dictionary parameters: {0}")]
    InvalidParams(String),

    #[error("atom index {index} out of range 1..={count}")]
    AtomIndexOutOfRange { index: u64, count: u64 },

    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    #[error("payload of {got} values exceeds null-space capacity {capacity}")]
    PayloadTooLong { got: usize, capacity: usize },

    #[error("could not find {needed} independent null-space directions after {draws} draws")]
    BasisGeneration { needed: usize, draws: usize },

    #[error("image of {width}x{height} is not divisible into {side}x{side} blocks")]
    BlockGridMismatch { width: u32, height: u32, side: u32 },

    #[error("image is not foldable at this fidelity: {0}")]
    NotFoldable(String),

    #[error("stop rule is inactive or malformed: {0}")]
    InvalidStopRule(String),

    #[error("sidecar does not match the dictionary: {0}")]
    SidecarMismatch(String),

    #[error("container payload lengths do not match host capacities: {0}")]
    PayloadLengthMismatch(String),

    #[error("malformed PGM: {0}")]
    PgmFormat(String),

    #[error("unsupported PGM variant: {0}")]
    PgmUnsupported(String),

    #[error("malformed container: {0}")]
    ContainerFormat(String),

    #[error("unsupported container version {0}")]
    ContainerVersion(u16),

    #[error("image dimensions or bit depth differ: {0}")]
    MetricMismatch(String),

    #[error("sparsity ratio undefined: no coefficients")]
    NoCoefficients,

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, EifError>;
