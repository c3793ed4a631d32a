//! Scoring (frame-level DER, cumulative reward) and the experiment grid.

mod grid;
mod metrics;

use std::path::PathBuf;

use thiserror::Error;

pub use grid::{
    run_grid, Cell, CellFailure, GridConfig, GridReport, MetricRow, OracleChoice,
    DEFAULT_MFCC_FRAMES, DEFAULT_PRECOMPUTED_FRAMES,
};
pub use metrics::{cumulative_reward, der, trace_der, DerReport};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("hypothesis has {hyp} frames, reference has {reference}")]
    LengthMismatch { hyp: usize, reference: usize },
    #[error("nothing to score")]
    Empty,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
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
}

impl EvalError {
    fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        EvalError::Io {
            path: path.into(),
            source,
        }
    }

    fn csv(path: impl Into<PathBuf>, source: csv::Error) -> Self {
        EvalError::Csv {
            path: path.into(),
            source,
        }
    }
}
