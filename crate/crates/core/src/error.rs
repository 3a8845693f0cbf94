use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, got {actual}")]
    Shape {
        op: &'static str,
        expected: String,
        actual: String,
    },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("empty dataset")]
    EmptyDataset,
    #[error("label {label} out of range for {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("layer {layer}: a layer must keep at least one filter")]
    EmptyKeepSet { layer: usize },
    #[error("layer index {index} out of range ({layers} layers)")]
    LayerIndex { index: usize, layers: usize },
    #[error("unknown strategy `{0}`; valid strategies: admm_joint, dais, bert_theseus, iterative_theseus, thinet, random_structured, recreation")]
    UnknownStrategy(String),
    #[error("unknown config key `{0}`")]
    UnknownConfigKey(String),
    #[error("bad value for config key `{key}`: {reason}")]
    BadConfigValue { key: String, reason: String },
    #[error("row {row}: {reason}")]
    Record { row: usize, reason: String },
    #[error("checkpoint: {0}")]
    Checkpoint(String),
    #[error("cell {strategy}@{percent} seed {seed}: {source}")]
    Cell {
        strategy: String,
        percent: f64,
        seed: u64,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn shape(op: &'static str, expected: impl ToString, actual: impl ToString) -> Self {
        Error::Shape {
            op,
            expected: expected.to_string(),
            actual: actual.to_string(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
