use serde::{Deserialize, Serialize};

use super::{DatasetError, RatingsTable};
use crate::rng::{SeededRng, GENERATOR};

/// A record-level train/test partition.
#[derive(Debug, Clone)]
pub struct Split {
    pub train: RatingsTable,
    pub test: RatingsTable,
    pub seed: u64,
    pub fraction: f64,
}

/// Audit record of how a split was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub generator: String,
    pub seed: u64,
    pub fraction: f64,
    pub input_hash: String,
    pub n_total: usize,
    pub n_train: usize,
    pub n_test: usize,
}

impl Split {
    pub fn manifest(&self, input_hash: impl Into<String>) -> SplitManifest {
        SplitManifest {
            generator: GENERATOR.to_owned(),
            seed: self.seed,
            fraction: self.fraction,
            input_hash: input_hash.into(),
            n_total: self.train.len() + self.test.len(),
            n_train: self.train.len(),
            n_test: self.test.len(),
        }
    }
}

/// Number of training records for `total` records at `fraction`, rounding half
/// away from zero.
pub fn train_size(total: usize, fraction: f64) -> usize {
    (fraction * total as f64).round() as usize
}

/// Uniform random partition over rating records. The record positions are
/// shuffled with the seeded generator; the first `round(fraction * n)` go to
/// train. Both halves keep the input's record order.
pub fn split_ratings(
    table: &RatingsTable,
    fraction: f64,
    seed: u64,
) -> Result<Split, DatasetError> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(DatasetError::InvalidFraction(fraction));
    }
    let total = table.len();
    let mut order: Vec<usize> = (0..total).collect();
    SeededRng::new(seed).shuffle(&mut order);

    let cut = train_size(total, fraction);
    let mut in_train = vec![false; total];
    for &pos in &order[..cut] {
        in_train[pos] = true;
    }
    let (train, test): (Vec<_>, Vec<_>) = table
        .ratings()
        .iter()
        .zip(&in_train)
        .partition(|(_, &keep)| keep);

    Ok(Split {
        train: RatingsTable::from_ratings(train.into_iter().map(|(r, _)| *r).collect())?,
        test: RatingsTable::from_ratings(test.into_iter().map(|(r, _)| *r).collect())?,
        seed,
        fraction,
    })
}
