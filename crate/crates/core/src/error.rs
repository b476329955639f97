use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParam(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("not a bijection: {0}")]
    NotABijection(String),

    #[error("amount must be positive, got {0}")]
    NonPositiveAmount(String),

    #[error("target height {target} exceeds tip {tip}")]
    HeightOutOfRange { target: u64, tip: u64 },

    #[error("exhaustive search over 2^{0} subsets is not supported (limit 2^20)")]
    SearchTooLarge(usize),

    #[error("{path}:{line}: {msg}")]
    Parse { path: String, line: usize, msg: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("config: {0}")]
    Config(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
