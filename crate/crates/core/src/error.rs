use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("negative precision: numerator precision {num} is below denominator precision {den}")]
    NegativePrecision { num: f64, den: f64 },

    #[error("singular belief: moments requested from a precision matrix that is not invertible")]
    SingularBelief,

    #[error("degenerate prior: no probability mass on any alphabet point")]
    DegeneratePrior,

    #[error("all phase messages are vacuous at index {0}")]
    AllVacuous(usize),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("bit sequence of odd length {0} cannot be mapped to QPSK")]
    OddLength(usize),

    #[error("non-finite LLR at position {0}")]
    NonFiniteLlr(usize),

    #[error("frame layout: {0}")]
    Layout(String),

    #[error("config field `{field}`: {reason}")]
    Config { field: String, reason: String },

    #[error("mismatched grids: {0}")]
    MismatchedGrids(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("frame {frame}: {source}")]
    Frame {
        frame: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn config(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Config {
            field: field.into(),
            reason: reason.into(),
        }
    }

    pub fn in_frame(self, frame: u64) -> Self {
        Error::Frame {
            frame,
            source: Box::new(self),
        }
    }
}
