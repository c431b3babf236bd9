use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParseErrorKind {
    Syntax,
    NonRationalCoefficient,
    DimensionMismatch,
}

/// Parse failure with a 1-based position inside the offending text.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("{kind:?} at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub kind: ParseErrorKind,
    pub line: usize,
    pub column: usize,
    pub message: String,
}

impl ParseError {
    pub fn syntax(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            kind: ParseErrorKind::Syntax,
            line,
            column,
            message: message.into(),
        }
    }

    pub fn non_rational(line: usize, column: usize, message: impl Into<String>) -> Self {
        ParseError {
            kind: ParseErrorKind::NonRationalCoefficient,
            line,
            column,
            message: message.into(),
        }
    }

    pub fn dimension(message: impl Into<String>) -> Self {
        ParseError {
            kind: ParseErrorKind::DimensionMismatch,
            line: 1,
            column: 1,
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("pole: denominator `{denominator}` vanishes at {at}")]
    Pole { denominator: String, at: String },
    #[error("unknown family `{0}`")]
    UnknownFamily(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("leg {leg} out of range for {legs} legs")]
    LegOutOfRange { leg: usize, legs: usize },
    #[error("legs must be distinct (got {0} twice)")]
    SameLeg(usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("rapidity {0} is not on the grid")]
    OffGrid(String),
    #[error("singular matrix: {0}")]
    Singular(String),
    #[error("rank deficient system: rank {rank} < {unknowns} unknowns")]
    RankDeficient { rank: usize, unknowns: usize },
    #[error("inconsistent linear system: {0}")]
    Inconsistent(String),
    #[error("auxiliary leg conflict: {0}")]
    LegConflict(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("configuration error: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
