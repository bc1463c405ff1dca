//! File-based orchestration. Every stage reads and writes documented files under
//! the output directory, so stages compose and third-party recommendation lists
//! can be dropped in before `audit`.

mod config;
mod layout;
mod stages;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

use crate::analysis::AnalysisError;
use crate::dataset::DatasetError;
use crate::metrics::MetricError;
use crate::recommenders::ModelError;

pub use config::{
    load_config, ConfigError, DatasetConfig, PipelineConfig, SplitConfig, DEFAULT_COHORTS,
    DEFAULT_FRACTION, DEFAULT_LIST_SIZE, DEFAULT_SEED,
};
pub use layout::Layout;
pub use stages::{
    run_pipeline, run_pipeline_with, run_stage, with_jobs, InputHash, RunManifest, StageTiming,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Stage {
    Split,
    Train,
    Recommend,
    Audit,
    Report,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Self::Split,
        Self::Train,
        Self::Recommend,
        Self::Audit,
        Self::Report,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::Split => "split",
            Self::Train => "train",
            Self::Recommend => "recommend",
            Self::Audit => "audit",
            Self::Report => "report",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Failure of a pipeline stage, tagged with the stage and the file involved.
#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config: {0}")]
    Config(#[from] ConfigError),
    #[error("{stage}: missing input {}", path.display())]
    MissingInput { stage: Stage, path: PathBuf },
    #[error("{stage}: {}: {source}", path.display())]
    Dataset {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: DatasetError,
    },
    #[error("{stage}: {}: {source}", path.display())]
    Model {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: ModelError,
    },
    #[error("{stage}: {}: {source}", path.display())]
    Metric {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: MetricError,
    },
    #[error("{stage}: {source}")]
    Analysis {
        stage: Stage,
        #[source]
        source: AnalysisError,
    },
    #[error("{stage}: {}: {source}", path.display())]
    Io {
        stage: Stage,
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot start worker pool: {0}")]
    Workers(String),
}

impl PipelineError {
    /// True for bad configuration or input files, as opposed to failures while
    /// computing or writing results.
    pub fn is_validation(&self) -> bool {
        match self {
            Self::Config(_) | Self::MissingInput { .. } => true,
            Self::Dataset { source, .. } => !matches!(source, DatasetError::Io(_)),
            Self::Model { source, .. } => matches!(
                source,
                ModelError::Schema { .. }
                    | ModelError::TrainingMismatch { .. }
                    | ModelError::UnknownUser(_)
                    | ModelError::Json(_)
                    | ModelError::Config(_)
                    | ModelError::EmptyTraining
            ),
            Self::Metric { source, .. } => matches!(
                source,
                MetricError::Schema { .. } | MetricError::UnknownItem(_)
            ),
            Self::Analysis { source, .. } => matches!(
                source,
                AnalysisError::InvalidCohortCount { .. }
                    | AnalysisError::MissingAudit { .. }
                    | AnalysisError::DuplicateUser(_)
                    | AnalysisError::UnknownItem(_)
            ),
            Self::Io { .. } | Self::Workers(_) => false,
        }
    }

    /// Process exit status: 1 for validation errors, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        if self.is_validation() {
            1
        } else {
            2
        }
    }
}
