use alloc::string::String;

/// Errors raised by the core library.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("value {value} outside domain [{lo}, {hi}]")]
    Domain { value: f64, lo: f64, hi: f64 },

    #[error("degenerate I/Q geometry: {0} centroid is at the origin")]
    DegenerateGeometry(&'static str),

    #[error("no tap rhythm detected")]
    NoRhythmDetected,

    #[error("phase recovery failed: {0}")]
    RecoveryFailed(&'static str),

    #[error("enrollment failed: {usable} usable samples, need at least {needed}")]
    EnrollmentFailed { usable: usize, needed: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
