//! Rating and catalog ingestion, record-level train/test splitting and item
//! popularity.

mod catalog;
mod parse;
mod popularity;
mod split;
mod table;

use thiserror::Error;

pub use catalog::{ItemCatalog, UNKNOWN_CATEGORY};
pub use parse::{parse_catalog, parse_ratings, DataFormat};
pub use popularity::{popularity, PopularityIndex};
pub use split::{split_ratings, train_size, Split, SplitManifest};
pub use table::{ItemId, Rating, RatingScale, RatingsTable, UserId};

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate rating for user {user} and item {item}")]
    DuplicateRating {
        line: usize,
        user: UserId,
        item: ItemId,
    },
    #[error("line {line}: rating {value} outside the declared scale [{min}, {max}]")]
    OutOfScale {
        line: usize,
        value: f64,
        min: f64,
        max: f64,
    },
    #[error("line {line}: item {item} listed twice in the catalog")]
    DuplicateItem { line: usize, item: ItemId },
    #[error("split fraction must lie strictly between 0 and 1, got {0}")]
    InvalidFraction(f64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
