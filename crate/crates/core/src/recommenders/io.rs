//! Tab-separated recommendation lists: `user_id  item_id  rank  score`, one row
//! per recommendation, sorted by user then rank. This file is the hand-off
//! between recommending and auditing, so lists from any recommender can be
//! audited.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Read, Write};

use super::{ModelError, Recommendation, RecommendationSet};
use crate::dataset::{ItemId, UserId};

const HEADER: &str = "user_id\titem_id\trank\tscore";

pub fn write_recommendations<W: Write>(
    set: &RecommendationSet,
    writer: W,
) -> Result<(), ModelError> {
    let mut out = std::io::BufWriter::new(writer);
    writeln!(out, "{HEADER}")?;
    for (user, list) in set.iter() {
        for rec in list {
            writeln!(out, "{}\t{}\t{}\t{}", user, rec.item, rec.rank, rec.score)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn schema(row: usize, message: impl Into<String>) -> ModelError {
    ModelError::Schema {
        row,
        message: message.into(),
    }
}

/// Reads and validates a recommendations file against list size `n`. Row numbers
/// in errors count the header as row 1.
pub fn read_recommendations<R: Read>(reader: R, n: usize) -> Result<RecommendationSet, ModelError> {
    if n == 0 {
        return Err(ModelError::InvalidListSize);
    }
    let mut lists: BTreeMap<UserId, Vec<Recommendation>> = BTreeMap::new();
    let mut last_user: Option<UserId> = None;
    let mut lines = BufReader::new(reader).lines();

    match lines.next().transpose()? {
        Some(h) if h.trim_end_matches('\r') == HEADER => {}
        Some(h) => {
            return Err(schema(
                1,
                format!("expected header `{HEADER}`, found `{h}`"),
            ))
        }
        None => return Err(schema(1, "missing header")),
    }
    for (ix, line) in lines.enumerate() {
        let row = ix + 2;
        let line = line?;
        let line = line.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 4 {
            return Err(schema(
                row,
                format!("expected 4 tab-separated fields, found {}", fields.len()),
            ));
        }
        let user = UserId(
            fields[0]
                .trim()
                .parse()
                .map_err(|_| schema(row, "invalid user_id"))?,
        );
        let item = ItemId(
            fields[1]
                .trim()
                .parse()
                .map_err(|_| schema(row, "invalid item_id"))?,
        );
        let rank: usize = fields[2]
            .trim()
            .parse()
            .map_err(|_| schema(row, "invalid rank"))?;
        let score: f64 = fields[3]
            .trim()
            .parse()
            .map_err(|_| schema(row, "invalid score"))?;
        if !score.is_finite() {
            return Err(schema(row, "score must be finite"));
        }

        if last_user != Some(user) {
            if lists.contains_key(&user) || last_user.is_some_and(|prev| prev > user) {
                return Err(schema(row, "rows must be sorted by user"));
            }
            last_user = Some(user);
        }
        let list = lists.entry(user).or_default();
        if rank != list.len() + 1 {
            return Err(schema(
                row,
                format!("expected rank {}, found {rank}", list.len() + 1),
            ));
        }
        if rank > n {
            return Err(schema(
                row,
                format!("list longer than the configured size {n}"),
            ));
        }
        if list.iter().any(|r| r.item == item) {
            return Err(schema(
                row,
                format!("item {item} listed twice for user {user}"),
            ));
        }
        list.push(Recommendation { item, score, rank });
    }
    Ok(RecommendationSet::new(n, lists))
}
