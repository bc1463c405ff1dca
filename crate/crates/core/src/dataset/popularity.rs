use std::collections::HashMap;

use super::{ItemId, RatingsTable};

/// Item popularity θ: the share of a table's users who rated each item.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PopularityIndex {
    theta: HashMap<ItemId, f64>,
    n_users: usize,
}

impl PopularityIndex {
    /// θ over `table`. Meant for the training table so that test data never
    /// leaks into recommendation-time popularity.
    pub fn from_table(table: &RatingsTable) -> Self {
        let n_users = table.n_users();
        let theta = table
            .items()
            .iter()
            .enumerate()
            .map(|(ix, &item)| {
                (
                    item,
                    table.ratings_of_item(ix).len() as f64 / n_users as f64,
                )
            })
            .collect();
        Self { theta, n_users }
    }

    /// Builds an index from explicit values; used for audits of external data.
    pub fn from_values(values: impl IntoIterator<Item = (ItemId, f64)>, n_users: usize) -> Self {
        Self {
            theta: values.into_iter().collect(),
            n_users,
        }
    }

    /// θ(item), zero for items nobody rated.
    pub fn theta(&self, item: ItemId) -> f64 {
        self.theta.get(&item).copied().unwrap_or(0.0)
    }

    pub fn n_users(&self) -> usize {
        self.n_users
    }

    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    /// Items ordered by descending θ, ties by ascending identifier.
    pub fn ranked(&self) -> Vec<(ItemId, f64)> {
        let mut ranked: Vec<(ItemId, f64)> = self.theta.iter().map(|(&i, &t)| (i, t)).collect();
        ranked.sort_unstable_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
        ranked
    }

    /// Returns a copy with every θ multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            theta: self.theta.iter().map(|(&i, &t)| (i, t * factor)).collect(),
            n_users: self.n_users,
        }
    }
}

/// θ computed over `train`.
pub fn popularity(train: &RatingsTable) -> PopularityIndex {
    PopularityIndex::from_table(train)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Rating;

    fn table(pairs: &[(u32, u32)]) -> RatingsTable {
        RatingsTable::from_ratings(pairs.iter().map(|&(u, i)| Rating::new(u, i, 4.0)).collect())
            .unwrap()
    }

    #[test]
    fn half_of_four_users() {
        let t = table(&[(1, 100), (2, 100), (3, 101), (4, 101)]);
        let theta = popularity(&t);
        assert_eq!(theta.theta(ItemId(100)), 0.5);
    }

    #[test]
    fn rated_by_everyone() {
        let t = table(&[(1, 7), (2, 7), (3, 7)]);
        assert_eq!(popularity(&t).theta(ItemId(7)), 1.0);
    }

    #[test]
    fn three_users_brute_force() {
        // A=1 rated by all three, B=2 by one
        let pairs = [(1, 1), (2, 1), (3, 1), (2, 2)];
        let theta = popularity(&table(&pairs));
        for (item, expected) in [(1, 1.0), (2, 1.0 / 3.0)] {
            let raters = pairs.iter().filter(|p| p.1 == item).count() as f64;
            assert_eq!(raters / 3.0, expected);
            assert_eq!(theta.theta(ItemId(item)), expected);
        }
    }

    #[test]
    fn unrated_item_is_zero() {
        let theta = popularity(&table(&[(1, 1)]));
        assert_eq!(theta.theta(ItemId(42)), 0.0);
    }

    #[test]
    fn ranked_ties_by_id() {
        let theta = popularity(&table(&[(1, 5), (1, 3), (2, 9)]));
        let ids: Vec<u32> = theta.ranked().iter().map(|(i, _)| i.0).collect();
        assert_eq!(ids, vec![3, 5, 9]);
    }
}
