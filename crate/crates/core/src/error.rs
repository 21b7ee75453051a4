use thiserror::Error;

/// Errors raised anywhere in the library.
///
/// The variants line up with the CLI exit codes: configuration problems,
/// bad input data, the brute-force enumeration cap, and length under-fill
/// are kept distinct so callers can map them without string matching.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("cell {cell} outside domain of size {domain}")]
    Domain { cell: u32, domain: usize },

    #[error("point ({lat}, {lon}) outside the grid bounding box")]
    Range { lat: f64, lon: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("parse error at line {line}: {msg}")]
    Parse { line: u64, msg: String },

    #[error("enumeration cap exceeded at length {length}: {count} trajectories > cap {cap}")]
    Capacity {
        length: usize,
        count: u128,
        cap: u128,
    },

    #[error("under-filled length {length}: needed {needed}, at most {available} available")]
    UnderFill {
        length: usize,
        needed: usize,
        available: usize,
    },

    #[error("{stage} failed (seed {seed}): {source}")]
    Stage {
        stage: &'static str,
        seed: u64,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// The innermost error once stage wrappers are peeled off.
    pub fn root(&self) -> &Error {
        match self {
            Error::Stage { source, .. } => source.root(),
            other => other,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
