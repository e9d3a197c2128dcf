use thiserror::Error;

/// Library-wide error type. Variants carry enough context to act on the
/// failure (witness intervals, offending values) rather than just a message.
#[derive(Debug, Error)]
pub enum Error {
    #[error("path needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("sample times must start at 0 and be strictly increasing (violated at index {index})")]
    BadSampleTimes { index: usize },

    #[error("non-finite value encountered in {context}")]
    NonFinite { context: &'static str },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("horizon mismatch: {left} vs {right}")]
    HorizonMismatch { left: f64, right: f64 },

    #[error("path has {len} samples, exceeding the supported cap of {cap}")]
    PathTooLong { len: usize, cap: usize },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("time change decreases on [{t0}, {t1}]")]
    NotNondecreasing { t0: f64, t1: f64 },

    #[error("interval [{s}, {t}] is not contained in the driver span [{lo}, {hi}]")]
    OutOfSpan { s: f64, t: f64, lo: f64, hi: f64 },

    #[error("meshes share no common times; cannot compare")]
    MeshMismatch,

    #[error("solution magnitude exceeded {guard:e} at t = {t} (divergence)")]
    Divergence { t: f64, guard: f64 },

    #[error("stability requires {required} sub-steps, above the cap of {cap}")]
    ResolutionExceeded { required: u64, cap: u64 },

    #[error(
        "stretched and direct solves disagree: gap {gap:e} exceeds tolerance {tol:e} at t = {t}"
    )]
    TwoRouteMismatch { gap: f64, tol: f64, t: f64 },

    #[error("convergence study needs an analytic oracle or a fine-split reference with n_ref > 4*max(n_list); got {given}")]
    NoReference { given: String },

    #[error("config line {line}: {reason}")]
    ConfigParse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
