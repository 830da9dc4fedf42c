use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A coordinate or input value was NaN or infinite.
    InvalidInput(String),
    /// A parameter was outside its admissible range (e.g. `eps <= 0`).
    InvalidParameter(String),
    /// Vector or matrix dimensions disagree.
    DimensionMismatch { expected: usize, found: usize },
    /// A density evaluated to a non-positive value.
    ModelInvalid(String),
    /// Rejection sampling would accept fewer than one in a thousand proposals.
    Efficiency { acceptance: f64 },
    /// Kernel rows with zero mass, so the weights are undefined.
    DegenerateRows(Vec<usize>),
    /// A non-positive or non-finite intermediate appeared in an iteration.
    NumericalFailure(String),
    /// The normalized operator is not row-stochastic within tolerance.
    Assembly { max_deviation: f64 },
    /// Hypotheses of a theorem-backed bound are not satisfied.
    Domain(String),
    /// An eigensolver failed to converge.
    NoConvergence(String),
    /// Extension through an eigenvalue that is too small to divide by.
    IllConditioned { mu: f64 },
    /// Fourier coefficients do not decay within the requested resolution.
    Resolution { tail: f64, tolerance: f64 },
    /// Operation not available for this model kind.
    Unsupported(String),
    /// A set of vectors is numerically rank deficient.
    RankDeficient { rank: usize, expected: usize },
}

pub type Result<T> = core::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::InvalidParameter(msg) => write!(f, "invalid parameter: {msg}"),
            Error::DimensionMismatch { expected, found } => {
                write!(f, "dimension mismatch: expected {expected}, found {found}")
            }
            Error::ModelInvalid(msg) => write!(f, "invalid density model: {msg}"),
            Error::Efficiency { acceptance } => {
                write!(f, "rejection sampling acceptance rate {acceptance:.3e} is below 1e-3")
            }
            Error::DegenerateRows(rows) => {
                write!(f, "kernel rows with zero mass: {rows:?}")
            }
            Error::NumericalFailure(msg) => write!(f, "numerical failure: {msg}"),
            Error::Assembly { max_deviation } => write!(
                f,
                "normalized operator rows deviate from 1 by {max_deviation:.3e}; weights do not match the kernel"
            ),
            Error::Domain(msg) => write!(f, "outside the bound's domain: {msg}"),
            Error::NoConvergence(msg) => write!(f, "no convergence: {msg}"),
            Error::IllConditioned { mu } => {
                write!(f, "eigenvalue {mu:.3e} is too small for a stable extension")
            }
            Error::Resolution { tail, tolerance } => write!(
                f,
                "Fourier coefficient tail {tail:.3e} exceeds tolerance {tolerance:.3e}; increase the number of modes"
            ),
            Error::Unsupported(msg) => write!(f, "unsupported: {msg}"),
            Error::RankDeficient { rank, expected } => {
                write!(f, "rank deficient: numerical rank {rank} < {expected}")
            }
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}
