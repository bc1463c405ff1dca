//! Cohort formation, group-level aggregation, significance testing and genre
//! frequency profiles.

mod cohort;
mod genre;
mod report;
mod significance;

use thiserror::Error;

use crate::dataset::{ItemId, UserId};
use crate::metrics::MetricError;

pub use cohort::{
    cohort_report, common_profile_gaps, form_cohorts, Cohort, CohortReport, CohortRow,
    ComparedMetric, SignificanceRow,
};
pub use genre::{
    amplification_profile, genre_frequency, rating_genre_frequency, recommendation_genre_frequency,
    GenreFrequencyProfile, GenreLift,
};
pub use report::{
    write_amplification_csv, write_cohort_report_csv, write_genre_frequency_csv,
    write_significance_csv,
};
pub use significance::{significance_test, SignificanceResult};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("cannot form {k} cohorts from {users} users (need 2 <= k <= users)")]
    InvalidCohortCount { k: usize, users: usize },
    #[error("user {0} listed twice")]
    DuplicateUser(UserId),
    #[error("cohort {0} is empty")]
    EmptyCohort(String),
    #[error("no audit for user {user} under {algorithm}")]
    MissingAudit { algorithm: String, user: UserId },
    #[error("significance test needs at least 2 values per sample (got {a} and {b})")]
    SampleTooSmall { a: usize, b: usize },
    #[error("samples contain non-finite values")]
    NonFiniteSample,
    #[error("genre frequency of an empty source is undefined")]
    EmptySource,
    #[error("item {0} is not in the catalog")]
    UnknownItem(ItemId),
    #[error("profiles are over different category sets")]
    MismatchedCategories,
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error("i/o error: {0}")]
    Io(String),
}
