use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {op}: {detail}")]
    DimensionMismatch { op: &'static str, detail: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("FFT length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("adaptive step size underflow at t = {t} (h = {h:e})")]
    StepSizeUnderflow { t: f64, h: f64 },

    #[error("input is not {parity}: parity defect {defect:e}")]
    ParityMismatch { parity: crate::Parity, defect: f64 },

    #[error("right-hand side violates parity: defect {defect:e} exceeds {tolerance:e}")]
    ParityViolation { defect: f64, tolerance: f64 },

    #[error("coefficient matrix is near-singular (condition number {cond:e})")]
    NearSingular { cond: f64 },

    #[error("substep solver {solver} cannot handle this right-hand side: {reason}")]
    SubstepUnsupported { solver: &'static str, reason: &'static str },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),
}

pub(crate) fn mismatch(op: &'static str, detail: impl Into<String>) -> Error {
    Error::DimensionMismatch { op, detail: detail.into() }
}
