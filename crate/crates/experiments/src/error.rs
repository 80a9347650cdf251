use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad configuration; the CLI maps this to its usage exit code.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numerical(dlra_core::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<dlra_core::Error> for Error {
    fn from(e: dlra_core::Error) -> Self {
        use dlra_core::Error as E;
        match e {
            E::InvalidArgument(msg) => Error::Config(msg),
            E::NotPowerOfTwo(k) => Error::Config(format!("grid size {k} is not a power of two")),
            E::DimensionMismatch { op, detail } => Error::Config(format!("{op}: {detail}")),
            other => Error::Numerical(other),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn config(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}
