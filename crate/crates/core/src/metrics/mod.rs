//! Per-user and per-group audit quantities: category distributions, Hellinger
//! miscalibration, group average popularity, popularity lift and precision.

mod audit;
mod distribution;
mod popularity;
mod precision;

use thiserror::Error;

use crate::dataset::{ItemId, UserId};

pub use audit::{
    audit_users, read_audit_csv, write_audit_csv, AuditContext, AuditOutcome, AuditRecord,
    SkipReason, UserAudit,
};
pub use distribution::{category_distribution, hellinger, miscalibration, CategoryDistribution};
pub use popularity::{group_gap, mean_popularity, popularity_lift};
pub use precision::precision_at_n;

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("distribution of an empty item set is undefined")]
    EmptyItemSet,
    #[error("item {0} is not in the catalog")]
    UnknownItem(ItemId),
    #[error("distributions are over different category sets")]
    MismatchedCategories,
    #[error("category masses must be non-negative and sum to one")]
    InvalidMass,
    #[error("recommendation list is empty")]
    EmptyRecommendations,
    #[error("group average popularity of an empty group is undefined")]
    EmptyGroup,
    #[error("user {0} has no item list")]
    MissingList(UserId),
    #[error("popularity lift is undefined when the profile-side average popularity is 0")]
    UndefinedLift,
    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error("i/o error: {0}")]
    Io(String),
}

impl MetricError {
    fn from_csv(err: csv::Error) -> Self {
        Self::Io(err.to_string())
    }
}
