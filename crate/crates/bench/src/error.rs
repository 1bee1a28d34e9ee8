use std::path::PathBuf;

use nano_filter::FilterError;

pub type Result<T, E = BenchError> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("simulation failed for seed {seed}: {source}")]
    Simulation { seed: u64, source: FilterError },
    #[error("length mismatch: {truth} true states, {estimates} estimates")]
    LengthMismatch { truth: usize, estimates: usize },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("malformed report {path}: {reason}")]
    Report { path: PathBuf, reason: String },
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}
