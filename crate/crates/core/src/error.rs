use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("variable count mismatch: {left} vs {right}")]
    VariableCount { left: usize, right: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("polynomial has an odd exponent; an even polynomial is required")]
    NotEven,

    #[error("scaling factor at index {0} is not positive")]
    NonPositive(usize),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("invalid SDP problem: {0}")]
    InvalidProblem(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("target monomial {0} cannot be produced by the Gram basis")]
    Unrepresentable(String),

    #[error("square extraction failed: {0}")]
    Extraction(String),

    #[error("exact rounding failed: {0}")]
    Rounding(String),

    #[error("scaling condition violated at index {0}")]
    ConditionViolated(usize),

    #[error("solver did not reach a verdict: {0}")]
    Indeterminate(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn parse(line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            line,
            message: message.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
