use std::collections::BTreeMap;

use super::MetricError;
use crate::dataset::{ItemId, PopularityIndex, UserId};

/// Mean θ over one user's item list.
pub fn mean_popularity(items: &[ItemId], theta: &PopularityIndex) -> Result<f64, MetricError> {
    if items.is_empty() {
        return Err(MetricError::EmptyItemSet);
    }
    Ok(items.iter().map(|&i| theta.theta(i)).sum::<f64>() / items.len() as f64)
}

/// Group average popularity: the mean over `users` of each user's mean item
/// popularity. With training profiles as the lists this is the profile-side
/// GAP; with recommendation lists it is the recommendation-side GAP.
pub fn group_gap(
    users: &[UserId],
    lists: &BTreeMap<UserId, Vec<ItemId>>,
    theta: &PopularityIndex,
) -> Result<f64, MetricError> {
    if users.is_empty() {
        return Err(MetricError::EmptyGroup);
    }
    let mut total = 0.0;
    for user in users {
        let items = lists.get(user).ok_or(MetricError::MissingList(*user))?;
        total += mean_popularity(items, theta).map_err(|_| MetricError::MissingList(*user))?;
    }
    Ok(total / users.len() as f64)
}

/// Relative change `(gap_q − gap_p) / gap_p`. Positive values mean the
/// recommendations concentrate on more popular items than the profiles do.
pub fn popularity_lift(gap_q: f64, gap_p: f64) -> Result<f64, MetricError> {
    if gap_p.is_nan() || gap_p <= 0.0 {
        return Err(MetricError::UndefinedLift);
    }
    Ok((gap_q - gap_p) / gap_p)
}
