//! Error type shared by every module of the crate.

use core::fmt;

/// Everything that can go wrong in a computation.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// The adjacency matrix has no strictly positive power.
    NotPrimitive,
    /// Adjacency data is not a square 0-1 matrix over at least two symbols.
    BadShape(&'static str),
    /// A word uses a forbidden transition or an unknown symbol.
    Inadmissible,
    /// Two objects disagree on size.
    ShapeMismatch { expected: usize, found: usize },
    /// An iterative solver ran out of iterations.
    NoConvergence { iterations: usize, residual: f64 },
    /// A potential that should be normalized has a value above zero.
    NonNegativeValue { value: f64 },
    /// Requested matrix dimension is not supported.
    BadDimension(usize),
    /// The cylinder has fewer than two children.
    SingleChild,
    /// An index is outside its admissible range.
    IndexOutOfRange { index: usize, len: usize },
    /// Requested depth is beyond the supported bound.
    TooDeep { depth: usize, max: usize },
    /// A search visited more nodes than allowed.
    BudgetExceeded { nodes: usize },
    /// Input is degenerate, such as two equal states.
    Degenerate(&'static str),
    /// A threshold parameter is outside its domain.
    ThresholdOutOfRange,
    /// The optimizer found no direction with positive ratio.
    NoAscent,
    /// Constants need a potential with strictly negative values.
    NotNormalized { sup: f64 },
    /// Objects live on different cylinder levels.
    LevelMismatch { expected: usize, found: usize },
    /// A numeric input is not finite or out of domain.
    InvalidValue(&'static str),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NotPrimitive => write!(f, "adjacency matrix is not primitive"),
            Error::BadShape(why) => write!(f, "bad adjacency matrix: {why}"),
            Error::Inadmissible => write!(f, "word is not admissible"),
            Error::ShapeMismatch { expected, found } => {
                write!(f, "shape mismatch: expected {expected}, found {found}")
            }
            Error::NoConvergence { iterations, residual } => write!(
                f,
                "no convergence after {iterations} iterations (residual {residual:e})"
            ),
            Error::NonNegativeValue { value } => {
                write!(f, "normalized potential takes the positive value {value:e}")
            }
            Error::BadDimension(k) => write!(f, "unsupported dimension {k}"),
            Error::SingleChild => write!(f, "cylinder has a single child"),
            Error::IndexOutOfRange { index, len } => {
                write!(f, "index {index} out of range 1..={len}")
            }
            Error::TooDeep { depth, max } => write!(f, "depth {depth} exceeds maximum {max}"),
            Error::BudgetExceeded { nodes } => write!(f, "node budget of {nodes} exceeded"),
            Error::Degenerate(why) => write!(f, "degenerate input: {why}"),
            Error::ThresholdOutOfRange => write!(f, "threshold out of range"),
            Error::NoAscent => write!(f, "no feasible direction found"),
            Error::NotNormalized { sup } => write!(
                f,
                "normalized potential is not strictly negative (sup = {sup:e})"
            ),
            Error::LevelMismatch { expected, found } => {
                write!(f, "level mismatch: expected {expected}, found {found}")
            }
            Error::InvalidValue(why) => write!(f, "invalid value: {why}"),
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
