//! Per-user audit: profile and recommendation category distributions,
//! miscalibration, profile/recommendation popularity and precision.

use std::collections::HashSet;
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    category_distribution, hellinger, mean_popularity, precision_at_n, CategoryDistribution,
    MetricError,
};
use crate::dataset::{ItemCatalog, PopularityIndex, RatingsTable, UserId};
use crate::recommenders::RecommendationSet;

/// Everything the audit reads besides the recommendation lists. Profiles come
/// from `train` only; `test` is consulted for precision alone.
#[derive(Debug, Clone, Copy)]
pub struct AuditContext<'a> {
    pub train: &'a RatingsTable,
    pub test: &'a RatingsTable,
    pub catalog: &'a ItemCatalog,
    pub theta: &'a PopularityIndex,
    /// Minimum test rating for an item to count as relevant; `None` counts every
    /// test interaction.
    pub relevance_threshold: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UserAudit {
    pub user: UserId,
    pub p_u: CategoryDistribution,
    pub q_u: CategoryDistribution,
    pub mc: f64,
    pub profile_gap: f64,
    pub rec_gap: f64,
    /// `None` when the user has no relevant test items.
    pub precision: Option<f64>,
    pub n_profile: usize,
    pub n_recs: usize,
}

/// The exported columns of a [`UserAudit`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditRecord {
    pub user_id: UserId,
    pub profile_gap: f64,
    pub rec_gap: f64,
    pub mc: f64,
    pub precision: Option<f64>,
    pub n_profile: usize,
    pub n_recs: usize,
}

impl AuditRecord {
    /// Per-user popularity lift `(rec_gap − profile_gap) / profile_gap`.
    pub fn lift(&self) -> Result<f64, MetricError> {
        super::popularity_lift(self.rec_gap, self.profile_gap)
    }
}

impl From<&UserAudit> for AuditRecord {
    fn from(a: &UserAudit) -> Self {
        Self {
            user_id: a.user,
            profile_gap: a.profile_gap,
            rec_gap: a.rec_gap,
            mc: a.mc,
            precision: a.precision,
            n_profile: a.n_profile,
            n_recs: a.n_recs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SkipReason {
    /// The user's recommendation list is missing or empty.
    NoRecommendations,
    /// The recommendations name a user without training ratings.
    NoProfile,
}

#[derive(Debug, Clone, Default)]
pub struct AuditOutcome {
    pub audits: Vec<UserAudit>,
    pub skipped: Vec<(UserId, SkipReason)>,
}

impl AuditOutcome {
    pub fn records(&self) -> Vec<AuditRecord> {
        self.audits.iter().map(AuditRecord::from).collect()
    }
}

/// Audits every training user against `recs`, in ascending user order.
pub fn audit_users(
    ctx: &AuditContext<'_>,
    recs: &RecommendationSet,
) -> Result<AuditOutcome, MetricError> {
    let results: Vec<Result<Result<UserAudit, SkipReason>, MetricError>> = ctx
        .train
        .users()
        .par_iter()
        .map(|&user| audit_one(ctx, recs, user))
        .collect();

    let mut outcome = AuditOutcome::default();
    for (result, &user) in results.into_iter().zip(ctx.train.users()) {
        match result? {
            Ok(audit) => outcome.audits.push(audit),
            Err(reason) => outcome.skipped.push((user, reason)),
        }
    }
    for user in recs.users().filter(|&u| ctx.train.user_index(u).is_none()) {
        outcome.skipped.push((user, SkipReason::NoProfile));
    }
    Ok(outcome)
}

fn audit_one(
    ctx: &AuditContext<'_>,
    recs: &RecommendationSet,
    user: UserId,
) -> Result<Result<UserAudit, SkipReason>, MetricError> {
    let rec_items = recs.items(user);
    if rec_items.is_empty() {
        return Ok(Err(SkipReason::NoRecommendations));
    }
    let profile = ctx.train.profile(user);
    let p_u = category_distribution(&profile, ctx.catalog)?;
    let q_u = category_distribution(&rec_items, ctx.catalog)?;
    let mc = hellinger(&p_u, &q_u)?;

    let relevant: HashSet<_> = ctx
        .test
        .user_index(user)
        .map(|ix| {
            ctx.test
                .ratings_of_user(ix)
                .filter(|r| ctx.relevance_threshold.is_none_or(|t| r.value >= t))
                .map(|r| r.item)
                .collect()
        })
        .unwrap_or_default();
    let precision = (!relevant.is_empty()).then(|| precision_at_n(&rec_items, &relevant, recs.n()));

    Ok(Ok(UserAudit {
        user,
        mc,
        profile_gap: mean_popularity(&profile, ctx.theta)?,
        rec_gap: mean_popularity(&rec_items, ctx.theta)?,
        precision,
        n_profile: profile.len(),
        n_recs: rec_items.len(),
        p_u,
        q_u,
    }))
}

const HEADER: [&str; 7] = [
    "user_id",
    "profile_gap",
    "rec_gap",
    "mc",
    "precision",
    "n_profile",
    "n_recs",
];

/// Writes `user_id,profile_gap,rec_gap,mc,precision,n_profile,n_recs`, with an
/// empty precision field for users without relevant test items. Floats use
/// shortest round-trip notation.
pub fn write_audit_csv<W: Write>(records: &[AuditRecord], writer: W) -> Result<(), MetricError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(HEADER).map_err(MetricError::from_csv)?;
    for r in records {
        out.write_record([
            r.user_id.to_string(),
            r.profile_gap.to_string(),
            r.rec_gap.to_string(),
            r.mc.to_string(),
            r.precision.map(|p| p.to_string()).unwrap_or_default(),
            r.n_profile.to_string(),
            r.n_recs.to_string(),
        ])
        .map_err(MetricError::from_csv)?;
    }
    out.flush().map_err(|e| MetricError::Io(e.to_string()))?;
    Ok(())
}

pub fn read_audit_csv<R: Read>(reader: R) -> Result<Vec<AuditRecord>, MetricError> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers().map_err(MetricError::from_csv)?.clone();
    if headers.iter().ne(HEADER) {
        return Err(MetricError::Schema {
            row: 1,
            message: format!("expected header `{}`", HEADER.join(",")),
        });
    }
    let mut out = Vec::new();
    for (ix, row) in rdr.deserialize::<AuditRecord>().enumerate() {
        let record = row.map_err(|e| MetricError::Schema {
            row: ix + 2,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}
