use std::collections::HashMap;
use std::fmt;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::DatasetError;
use crate::hash::sha256_hex;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UserId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl fmt::Display for UserId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rating {
    pub user: UserId,
    pub item: ItemId,
    pub value: f64,
    /// Seconds since the epoch; carried through but never used in computation.
    pub timestamp: Option<i64>,
}

impl Rating {
    pub fn new(user: u32, item: u32, value: f64) -> Self {
        Self {
            user: UserId(user),
            item: ItemId(item),
            value,
            timestamp: None,
        }
    }
}

/// Inclusive bounds of the rating scale declared for a dataset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatingScale {
    pub min: f64,
    pub max: f64,
}

impl Default for RatingScale {
    fn default() -> Self {
        Self { min: 1.0, max: 5.0 }
    }
}

impl RatingScale {
    pub fn contains(&self, value: f64) -> bool {
        value >= self.min && value <= self.max
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

/// The interaction universe: rating records plus user and item indices over them.
///
/// Users and items are assigned dense indices in ascending identifier order. The
/// per-user and per-item record lists are sorted by item and user identifier
/// respectively, so iteration order never depends on input line order.
#[derive(Debug, Clone, Default)]
pub struct RatingsTable {
    ratings: Vec<Rating>,
    users: Vec<UserId>,
    items: Vec<ItemId>,
    user_lookup: HashMap<UserId, usize>,
    item_lookup: HashMap<ItemId, usize>,
    by_user: Vec<Vec<u32>>,
    by_item: Vec<Vec<u32>>,
}

impl PartialEq for RatingsTable {
    fn eq(&self, other: &Self) -> bool {
        self.ratings == other.ratings
    }
}

impl RatingsTable {
    /// Builds the indices over `ratings`, rejecting repeated (user, item) pairs.
    ///
    /// The `line` of a duplicate error is the 1-based position of the offending
    /// record in `ratings`.
    pub fn from_ratings(ratings: Vec<Rating>) -> Result<Self, DatasetError> {
        let mut users: Vec<UserId> = ratings.iter().map(|r| r.user).collect();
        users.sort_unstable();
        users.dedup();
        let mut items: Vec<ItemId> = ratings.iter().map(|r| r.item).collect();
        items.sort_unstable();
        items.dedup();

        let user_lookup: HashMap<UserId, usize> =
            users.iter().enumerate().map(|(ix, &u)| (u, ix)).collect();
        let item_lookup: HashMap<ItemId, usize> =
            items.iter().enumerate().map(|(ix, &i)| (i, ix)).collect();

        let mut by_user = vec![Vec::new(); users.len()];
        let mut by_item = vec![Vec::new(); items.len()];
        for (pos, rating) in ratings.iter().enumerate() {
            by_user[user_lookup[&rating.user]].push(pos as u32);
            by_item[item_lookup[&rating.item]].push(pos as u32);
        }
        for records in &mut by_user {
            records.sort_unstable_by_key(|&pos| (ratings[pos as usize].item, pos));
            if let Some(dup) = records
                .windows(2)
                .find(|w| ratings[w[0] as usize].item == ratings[w[1] as usize].item)
            {
                let later = dup[0].max(dup[1]) as usize;
                return Err(DatasetError::DuplicateRating {
                    line: later + 1,
                    user: ratings[later].user,
                    item: ratings[later].item,
                });
            }
        }
        for records in &mut by_item {
            records.sort_unstable_by_key(|&pos| ratings[pos as usize].user);
        }

        Ok(Self {
            ratings,
            users,
            items,
            user_lookup,
            item_lookup,
            by_user,
            by_item,
        })
    }

    pub fn ratings(&self) -> &[Rating] {
        &self.ratings
    }

    pub fn len(&self) -> usize {
        self.ratings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ratings.is_empty()
    }

    pub fn n_users(&self) -> usize {
        self.users.len()
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Users in ascending identifier order; position equals dense index.
    pub fn users(&self) -> &[UserId] {
        &self.users
    }

    /// Items in ascending identifier order; position equals dense index.
    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn user_index(&self, user: UserId) -> Option<usize> {
        self.user_lookup.get(&user).copied()
    }

    pub fn item_index(&self, item: ItemId) -> Option<usize> {
        self.item_lookup.get(&item).copied()
    }

    /// Ratings of the user at dense index `user`, ordered by item.
    pub fn ratings_of_user(&self, user: usize) -> impl ExactSizeIterator<Item = &Rating> + '_ {
        self.by_user[user]
            .iter()
            .map(|&pos| &self.ratings[pos as usize])
    }

    /// Ratings of the item at dense index `item`, ordered by user.
    pub fn ratings_of_item(&self, item: usize) -> impl ExactSizeIterator<Item = &Rating> + '_ {
        self.by_item[item]
            .iter()
            .map(|&pos| &self.ratings[pos as usize])
    }

    /// Items rated by `user`, ascending. Empty for unknown users.
    pub fn profile(&self, user: UserId) -> Vec<ItemId> {
        self.user_index(user)
            .map(|ix| self.ratings_of_user(ix).map(|r| r.item).collect())
            .unwrap_or_default()
    }

    /// Users who rated `item`, ascending. Empty for unknown items.
    pub fn raters(&self, item: ItemId) -> Vec<UserId> {
        self.item_index(item)
            .map(|ix| self.ratings_of_item(ix).map(|r| r.user).collect())
            .unwrap_or_default()
    }

    pub fn rating(&self, user: UserId, item: ItemId) -> Option<f64> {
        let ix = self.user_index(user)?;
        let records = &self.by_user[ix];
        records
            .binary_search_by_key(&item, |&pos| self.ratings[pos as usize].item)
            .ok()
            .map(|at| self.ratings[records[at] as usize].value)
    }

    pub fn mean_rating(&self) -> f64 {
        if self.ratings.is_empty() {
            return 0.0;
        }
        self.ratings.iter().map(|r| r.value).sum::<f64>() / self.ratings.len() as f64
    }

    /// Writes the canonical CSV form: `user_id,item_id,rating,timestamp`, records
    /// in stored order, ratings in shortest round-trip notation.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DatasetError> {
        let mut out = csv::Writer::from_writer(writer);
        out.write_record(["user_id", "item_id", "rating", "timestamp"])
            .map_err(csv_io)?;
        for r in &self.ratings {
            out.write_record([
                r.user.to_string(),
                r.item.to_string(),
                r.value.to_string(),
                r.timestamp.map(|t| t.to_string()).unwrap_or_default(),
            ])
            .map_err(csv_io)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn to_csv_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::with_capacity(self.ratings.len() * 24);
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        buf
    }

    /// SHA-256 of the canonical CSV form.
    pub fn content_hash(&self) -> String {
        sha256_hex(&self.to_csv_bytes())
    }
}

pub(super) fn csv_io(err: csv::Error) -> DatasetError {
    match err.into_kind() {
        csv::ErrorKind::Io(io) => DatasetError::Io(io),
        other => DatasetError::Parse {
            line: 0,
            message: format!("{other:?}"),
        },
    }
}
