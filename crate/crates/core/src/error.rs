use thiserror::Error;

pub type Result<T, E = ClmError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum ClmError {
    #[error("parse error at row {row}, column {column}: {message}")]
    Parse {
        /// 1-based data row (the header is row 0).
        row: usize,
        column: String,
        message: String,
    },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
    #[error("degenerate input: {0}")]
    DegenerateInput(String),
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("degenerate normalization: {0}")]
    DegenerateNormalization(String),
    #[error("monte carlo estimate failed: {0}")]
    MonteCarloFailure(String),
    #[error("{variant}: {excluded} of {total} bases failed, above the 10% tolerance")]
    AblationFailure {
        variant: String,
        excluded: usize,
        total: usize,
    },
    #[error("class pair ({first}, {second}) failed: {source}")]
    PairFailure {
        first: usize,
        second: usize,
        #[source]
        source: Box<ClmError>,
    },
}

impl From<csv::Error> for ClmError {
    fn from(err: csv::Error) -> Self {
        let row = err
            .position()
            .map(|p| p.line().saturating_sub(1) as usize)
            .unwrap_or(0);
        ClmError::Parse {
            row,
            column: String::new(),
            message: err.to_string(),
        }
    }
}
