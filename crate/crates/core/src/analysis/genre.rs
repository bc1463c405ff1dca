use std::sync::Arc;

use super::AnalysisError;
use crate::dataset::{ItemCatalog, ItemId, RatingsTable};
use crate::recommenders::RecommendationSet;

/// Share of interactions per genre for one source (rating data or an
/// algorithm's recommendations).
#[derive(Debug, Clone, PartialEq)]
pub struct GenreFrequencyProfile {
    pub source: String,
    categories: Arc<[String]>,
    proportion: Vec<f64>,
    count: Vec<u64>,
    interactions: usize,
}

impl GenreFrequencyProfile {
    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    /// Normalized frequency per category, summing to one.
    pub fn proportions(&self) -> &[f64] {
        &self.proportion
    }

    /// Number of interactions whose item carries each category.
    pub fn counts(&self) -> &[u64] {
        &self.count
    }

    pub fn interactions(&self) -> usize {
        self.interactions
    }

    pub fn proportion(&self, genre: &str) -> Option<f64> {
        self.categories
            .iter()
            .position(|c| c == genre)
            .map(|ix| self.proportion[ix])
    }

    /// Category with the largest proportion; the first listed wins ties.
    pub fn top_genre(&self) -> &str {
        let mut best = 0;
        for (ix, &p) in self.proportion.iter().enumerate() {
            if p > self.proportion[best] {
                best = ix;
            }
        }
        &self.categories[best]
    }
}

/// Each interaction contributes mass 1 split equally over its item's genres;
/// the total is then normalized.
pub fn genre_frequency<I>(
    source: impl Into<String>,
    items: I,
    catalog: &ItemCatalog,
) -> Result<GenreFrequencyProfile, AnalysisError>
where
    I: IntoIterator<Item = ItemId>,
{
    let mut mass = vec![0.0; catalog.n_categories()];
    let mut count = vec![0u64; catalog.n_categories()];
    let mut interactions = 0usize;
    for item in items {
        let cats = catalog
            .item_categories(item)
            .ok_or(AnalysisError::UnknownItem(item))?;
        let share = 1.0 / cats.len() as f64;
        for &c in cats {
            mass[c] += share;
            count[c] += 1;
        }
        interactions += 1;
    }
    if interactions == 0 {
        return Err(AnalysisError::EmptySource);
    }
    let total = interactions as f64;
    Ok(GenreFrequencyProfile {
        source: source.into(),
        categories: catalog.shared_categories(),
        proportion: mass.into_iter().map(|m| m / total).collect(),
        count,
        interactions,
    })
}

/// Genre profile of every rating in `table`, tagged `ratings`.
pub fn rating_genre_frequency(
    table: &RatingsTable,
    catalog: &ItemCatalog,
) -> Result<GenreFrequencyProfile, AnalysisError> {
    genre_frequency("ratings", table.ratings().iter().map(|r| r.item), catalog)
}

/// Genre profile of every recommended item, tagged with the algorithm name.
pub fn recommendation_genre_frequency(
    algorithm: &str,
    recs: &RecommendationSet,
    catalog: &ItemCatalog,
) -> Result<GenreFrequencyProfile, AnalysisError> {
    let items = recs
        .iter()
        .flat_map(|(_, list)| list.iter().map(|r| r.item));
    genre_frequency(algorithm, items, catalog)
}

/// Relative change of one genre's frequency from rating data to
/// recommendations. `lift` is `None` when the genre never occurs in the
/// rating data.
#[derive(Debug, Clone, PartialEq)]
pub struct GenreLift {
    pub genre: String,
    pub rating_freq: f64,
    pub rec_freq: f64,
    pub lift: Option<f64>,
}

pub fn amplification_profile(
    ratings: &GenreFrequencyProfile,
    recs: &GenreFrequencyProfile,
) -> Result<Vec<GenreLift>, AnalysisError> {
    if ratings.categories != recs.categories {
        return Err(AnalysisError::MismatchedCategories);
    }
    Ok(ratings
        .categories
        .iter()
        .zip(ratings.proportion.iter().zip(&recs.proportion))
        .map(|(genre, (&rating_freq, &rec_freq))| GenreLift {
            genre: genre.clone(),
            rating_freq,
            rec_freq,
            lift: (rating_freq > 0.0).then(|| (rec_freq - rating_freq) / rating_freq),
        })
        .collect())
}
