//! MiniVox: labeled multi-speaker streams built from a pool of
//! single-speaker utterances, with sparsified feedback and the episodic
//! simulation loop.

mod export;
mod pool;
mod simulate;
mod stream;

use std::path::PathBuf;

use thiserror::Error;

use crate::engine::EngineError;
use crate::features::FeatureError;

pub use export::{read_stream_dir, write_stream_dir, NO_SPEAKER};
pub use pool::{FeatureKind, PoolEntry, PoolManifest, Utterance, UtterancePool};
pub use simulate::{simulate, simulate_agent, Trace, TraceRow};
pub use stream::{generate_stream, GeneratedStream, Segment, StreamSpec};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("invalid pool manifest {path}: {reason}")]
    Manifest { path: PathBuf, reason: String },
    #[error("pool has {available} speakers, {requested} requested")]
    NotEnoughSpeakers { requested: usize, available: usize },
    #[error("invalid stream spec: {0}")]
    InvalidSpec(String),
    #[error("invalid stream export {path}: {reason}")]
    StreamExport { path: PathBuf, reason: String },
    #[error("context dimension {found} does not match {expected}")]
    DimensionMismatch { expected: usize, found: usize },
}

impl BenchError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        BenchError::Csv {
            path: path.into(),
            source,
        }
    }
}
