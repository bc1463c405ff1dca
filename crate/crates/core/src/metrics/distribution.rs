use std::sync::Arc;

use super::MetricError;
use crate::dataset::{ItemCatalog, ItemId};

const SUM_TOLERANCE: f64 = 1e-9;

/// Normalized category mass over a catalog's full category set.
#[derive(Debug, Clone, PartialEq)]
pub struct CategoryDistribution {
    categories: Arc<[String]>,
    mass: Vec<f64>,
}

impl CategoryDistribution {
    /// Checks that `mass` is non-negative, matches the category count and sums
    /// to one.
    pub fn new(categories: Arc<[String]>, mass: Vec<f64>) -> Result<Self, MetricError> {
        if mass.len() != categories.len() {
            return Err(MetricError::MismatchedCategories);
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(MetricError::InvalidMass);
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SUM_TOLERANCE {
            return Err(MetricError::InvalidMass);
        }
        Ok(Self { categories, mass })
    }

    /// Builds a distribution over ad-hoc labels.
    pub fn from_pairs(labels: &[&str], mass: &[f64]) -> Result<Self, MetricError> {
        let categories: Arc<[String]> = labels.iter().map(|s| s.to_string()).collect();
        Self::new(categories, mass.to_vec())
    }

    pub fn categories(&self) -> &[String] {
        &self.categories
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn get(&self, label: &str) -> Option<f64> {
        self.categories
            .iter()
            .position(|c| c == label)
            .map(|ix| self.mass[ix])
    }

    fn same_universe(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.categories, &other.categories) || self.categories == other.categories
    }
}

/// Category distribution of an item list. Each item contributes `1/|items|`,
/// split equally over its categories, so multi-genre items do not inflate the
/// total and the result always sums to one.
pub fn category_distribution(
    items: &[ItemId],
    catalog: &ItemCatalog,
) -> Result<CategoryDistribution, MetricError> {
    if items.is_empty() {
        return Err(MetricError::EmptyItemSet);
    }
    let mut mass = vec![0.0; catalog.n_categories()];
    let share = 1.0 / items.len() as f64;
    for &item in items {
        let cats = catalog
            .item_categories(item)
            .ok_or(MetricError::UnknownItem(item))?;
        let part = share / cats.len() as f64;
        for &c in cats {
            mass[c] += part;
        }
    }
    Ok(CategoryDistribution {
        categories: catalog.shared_categories(),
        mass,
    })
}

/// Hellinger distance `‖√p − √q‖₂ / √2`, in `[0, 1]`.
pub fn hellinger(p: &CategoryDistribution, q: &CategoryDistribution) -> Result<f64, MetricError> {
    if !p.same_universe(q) {
        return Err(MetricError::MismatchedCategories);
    }
    let sq: f64 = p
        .mass
        .iter()
        .zip(&q.mass)
        .map(|(a, b)| {
            let d = a.sqrt() - b.sqrt();
            d * d
        })
        .sum();
    Ok((sq.sqrt() / std::f64::consts::SQRT_2).min(1.0))
}

/// Miscalibration of a recommendation list against the user's profile: the
/// Hellinger distance between their category distributions.
pub fn miscalibration(
    profile: &[ItemId],
    recommendations: &[ItemId],
    catalog: &ItemCatalog,
) -> Result<f64, MetricError> {
    if recommendations.is_empty() {
        return Err(MetricError::EmptyRecommendations);
    }
    let p = category_distribution(profile, catalog)?;
    let q = category_distribution(recommendations, catalog)?;
    hellinger(&p, &q)
}
