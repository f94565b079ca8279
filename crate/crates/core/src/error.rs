use alloc::string::String;
use core::fmt;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A parameter is outside its admissible range.
    Parameter(String),
    /// Operand dimensions do not agree.
    Shape(String),
    /// Input data is unusable (non-finite entries and the like).
    Data(String),
    /// A pixel is covered by no patch and no fallback image was supplied.
    Coverage { row: usize, col: usize },
    /// The iterate became non-finite.
    Divergence { iteration: usize },
    /// An iterative numerical kernel failed to converge.
    NoConvergence(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Parameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::Shape(msg) => write!(f, "shape mismatch: {msg}"),
            Error::Data(msg) => write!(f, "invalid data: {msg}"),
            Error::Coverage { row, col } => {
                write!(f, "pixel ({row}, {col}) is not covered by any patch")
            }
            Error::Divergence { iteration } => {
                write!(f, "reconstruction diverged at iteration {iteration}")
            }
            Error::NoConvergence(what) => write!(f, "{what} did not converge"),
        }
    }
}

impl core::error::Error for Error {}
