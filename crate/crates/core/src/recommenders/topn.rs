use std::cmp::Ordering;
use std::collections::BTreeMap;

use rayon::prelude::*;

use super::{FittedModel, ModelError};
use crate::dataset::{ItemId, UserId};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Recommendation {
    pub item: ItemId,
    pub score: f64,
    /// 1-based position in the list.
    pub rank: usize,
}

/// Ranked top-N lists keyed by user.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct RecommendationSet {
    n: usize,
    lists: BTreeMap<UserId, Vec<Recommendation>>,
}

impl RecommendationSet {
    /// Wraps already-ranked lists. Ranks are renumbered from 1 in list order.
    pub fn new(n: usize, lists: BTreeMap<UserId, Vec<Recommendation>>) -> Self {
        let lists = lists
            .into_iter()
            .map(|(u, mut list)| {
                for (pos, rec) in list.iter_mut().enumerate() {
                    rec.rank = pos + 1;
                }
                (u, list)
            })
            .collect();
        Self { n, lists }
    }

    /// Nominal list size N.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, user: UserId) -> Option<&[Recommendation]> {
        self.lists.get(&user).map(Vec::as_slice)
    }

    /// Recommended items of `user` in rank order; empty for unknown users.
    pub fn items(&self, user: UserId) -> Vec<ItemId> {
        self.get(user)
            .map(|l| l.iter().map(|r| r.item).collect())
            .unwrap_or_default()
    }

    pub fn iter(&self) -> impl Iterator<Item = (UserId, &[Recommendation])> + '_ {
        self.lists.iter().map(|(&u, l)| (u, l.as_slice()))
    }

    pub fn users(&self) -> impl Iterator<Item = UserId> + '_ {
        self.lists.keys().copied()
    }

    pub fn len(&self) -> usize {
        self.lists.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lists.is_empty()
    }

    /// True when the user's list holds fewer than N items.
    pub fn is_short(&self, user: UserId) -> bool {
        self.get(user).is_some_and(|l| l.len() < self.n)
    }

    pub fn short_users(&self) -> Vec<UserId> {
        self.iter()
            .filter(|(_, l)| l.len() < self.n)
            .map(|(u, _)| u)
            .collect()
    }
}

/// Descending score, then ascending item.
fn rank_order(a: &(f64, usize), b: &(f64, usize)) -> Ordering {
    b.0.total_cmp(&a.0).then(a.1.cmp(&b.1))
}

/// For every training user, ranks all training items outside the user's training
/// profile by descending score (ties by ascending item identifier) and keeps the
/// first `n`. Users with fewer than `n` candidates keep a shorter list, which
/// [`RecommendationSet::is_short`] reports.
pub fn recommend_top_n(model: &FittedModel, n: usize) -> Result<RecommendationSet, ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidListSize);
    }
    let train = model.train();
    let items = train.items();
    let lists: Vec<(UserId, Vec<Recommendation>)> = (0..train.n_users())
        .into_par_iter()
        .map(|u| {
            let scores = model.score_all(u);
            let mut seen = vec![false; items.len()];
            for r in train.ratings_of_user(u) {
                seen[train.item_index(r.item).expect("indexed item")] = true;
            }
            let mut candidates: Vec<(f64, usize)> = scores
                .into_iter()
                .enumerate()
                .filter(|&(i, _)| !seen[i])
                .map(|(i, s)| (s, i))
                .collect();
            if candidates.len() > n {
                candidates.select_nth_unstable_by(n - 1, rank_order);
                candidates.truncate(n);
            }
            candidates.sort_unstable_by(rank_order);
            let list = candidates
                .into_iter()
                .enumerate()
                .map(|(pos, (score, i))| Recommendation {
                    item: items[i],
                    score,
                    rank: pos + 1,
                })
                .collect();
            (train.users()[u], list)
        })
        .collect();
    Ok(RecommendationSet {
        n,
        lists: lists.into_iter().collect(),
    })
}
