use std::collections::HashSet;

use crate::dataset::ItemId;

/// Share of the `n` recommendation slots filled with relevant items:
/// `|recommended ∩ relevant| / n`.
pub fn precision_at_n(recommended: &[ItemId], relevant: &HashSet<ItemId>, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let hits = recommended.iter().filter(|i| relevant.contains(i)).count();
    hits as f64 / n as f64
}
