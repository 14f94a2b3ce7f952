use thiserror::Error;

/// Errors raised by the test statistics, generators and the gene-set pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {left} vs {right} variables")]
    DimensionMismatch { left: usize, right: usize },

    #[error("sample too small: {what} needs n >= {required}, got {actual}")]
    SampleTooSmall {
        what: &'static str,
        required: usize,
        actual: usize,
    },

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// The variance estimate of the statistic is not positive, so the
    /// statistic cannot be standardized.
    #[error("degenerate variance estimate ({method}): {value}")]
    DegenerateVariance { method: &'static str, value: f64 },

    #[error("Hotelling's T^2 is not defined: S_n singular ({0})")]
    Singular(String),

    #[error("parse error in {path} at line {line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },

    #[error("data error: {0}")]
    Data(String),

    #[error("cannot read {path}: {source}")]
    Read {
        path: String,
        source: std::io::Error,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

/// Reads a whole text file, naming it in the error.
pub(crate) fn read_text(path: &std::path::Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|source| Error::Read {
        path: path.display().to_string(),
        source,
    })
}

impl Error {
    pub fn is_degenerate(&self) -> bool {
        matches!(self, Error::DegenerateVariance { .. })
    }
}
