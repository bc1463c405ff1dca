use std::path::{Path, PathBuf};

use crate::recommenders::Algorithm;

/// File locations under the output directory.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn train(&self) -> PathBuf {
        self.root.join("train.csv")
    }

    pub fn test(&self) -> PathBuf {
        self.root.join("test.csv")
    }

    pub fn split_manifest(&self) -> PathBuf {
        self.root.join("split_manifest.json")
    }

    pub fn model(&self, algorithm: Algorithm) -> PathBuf {
        self.root.join("models").join(format!("{algorithm}.json"))
    }

    pub fn model_manifest(&self, algorithm: Algorithm) -> PathBuf {
        self.root
            .join("models")
            .join(format!("{algorithm}.manifest.json"))
    }

    pub fn recommendations(&self, algorithm: Algorithm) -> PathBuf {
        self.root.join("recs").join(format!("{algorithm}.tsv"))
    }

    pub fn audit(&self, algorithm: Algorithm) -> PathBuf {
        self.root.join("audit").join(format!("{algorithm}.csv"))
    }

    pub fn cohort_report(&self) -> PathBuf {
        self.root.join("report").join("cohort_report.csv")
    }

    pub fn significance(&self) -> PathBuf {
        self.root.join("report").join("significance.csv")
    }

    pub fn genre_frequency(&self) -> PathBuf {
        self.root.join("report").join("genre_frequency.csv")
    }

    pub fn amplification(&self) -> PathBuf {
        self.root.join("report").join("amplification.csv")
    }

    pub fn run_manifest(&self) -> PathBuf {
        self.root.join("run_manifest.json")
    }

    /// Metric files every full run produces for the given algorithms; these are
    /// the outputs covered by the determinism contract.
    pub fn metric_files(&self, algorithms: &[Algorithm]) -> Vec<PathBuf> {
        let mut files: Vec<PathBuf> = algorithms.iter().map(|&a| self.audit(a)).collect();
        files.extend([
            self.cohort_report(),
            self.significance(),
            self.genre_frequency(),
            self.amplification(),
        ]);
        files
    }
}
