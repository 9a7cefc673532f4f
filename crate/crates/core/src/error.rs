use thiserror::Error;

/// Errors raised by the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument fell outside the domain an operation accepts.
    #[error("domain error: {0}")]
    Domain(String),

    /// The (noisy) conductance matrix handed to a feedback topology is singular.
    #[error("singular matrix: pivot {pivot:e} below {threshold:e}")]
    SingularMatrix { pivot: f64, threshold: f64 },

    /// The EGV lambda does not sit close enough to the spectrum.
    #[error(
        "lambda is not an eigenvalue: smallest singular value {sigma_min:e} exceeds {limit:e}"
    )]
    NotAnEigenvalue { sigma_min: f64, limit: f64 },

    /// A register word or instruction could not be decoded.
    #[error("decode error: {0}")]
    Decode(String),

    /// The machine was asked to execute on a macro that has not been configured.
    #[error("configuration error: {0}")]
    Config(String),

    /// Malformed input file or text.
    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),

    /// An instruction failed; `pc` is its index in the program.
    #[error("at pc {pc}: {source}")]
    Exec { pc: usize, source: Box<Error> },
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// The underlying error with any program-counter wrapping removed.
    pub fn root(&self) -> &Error {
        match self {
            Error::Exec { source, .. } => source.root(),
            other => other,
        }
    }

    /// True for failures of the numerics (as opposed to bad input).
    pub fn is_numerical(&self) -> bool {
        match self {
            Error::SingularMatrix { .. } | Error::NotAnEigenvalue { .. } => true,
            Error::Exec { source, .. } => source.is_numerical(),
            _ => false,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
