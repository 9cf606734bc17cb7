use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: cannot parse `{token}` as an item id")]
    Parse { line: usize, token: String },

    #[error("row {row}: expected {expected} attributes, found {found}")]
    Shape {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("invalid parameter: {0}")]
    Param(String),

    #[error("{0}")]
    Domain(String),

    #[error("enumeration guard: {0}")]
    Guard(String),

    #[error("unknown item id {0}")]
    UnknownItem(u64),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
