use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("degenerate vocabulary: size {0} admits no partition channel")]
    DegenerateVocabulary(usize),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("random stream exhausted at counter {0}")]
    StreamExhausted(u64),
    #[error("calibration error: {0}")]
    Calibration(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("ingestion error: {0}")]
    Ingestion(String),
    #[error("framing error: {0}")]
    Framing(String),
    #[error("insufficient samples: {0}")]
    InsufficientSamples(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
