use std::collections::{HashMap, HashSet};

use rayon::prelude::*;

use super::{significance_test, AnalysisError, SignificanceResult};
use crate::dataset::UserId;
use crate::metrics::{popularity_lift, AuditRecord};

/// A block of users with similar profile popularity. `G1` holds the users with
/// the least popular profiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub label: String,
    pub members: Vec<UserId>,
    pub mean_profile_gap: f64,
}

/// Sorts users by profile popularity (ties by user id) and cuts them into `k`
/// contiguous blocks whose sizes differ by at most one, larger blocks first.
pub fn form_cohorts(
    profile_gaps: &[(UserId, f64)],
    k: usize,
) -> Result<Vec<Cohort>, AnalysisError> {
    let n = profile_gaps.len();
    if k < 2 || k > n {
        return Err(AnalysisError::InvalidCohortCount { k, users: n });
    }
    let mut seen = HashSet::with_capacity(n);
    for &(user, gap) in profile_gaps {
        if !seen.insert(user) {
            return Err(AnalysisError::DuplicateUser(user));
        }
        if !gap.is_finite() {
            return Err(AnalysisError::NonFiniteSample);
        }
    }
    let mut sorted = profile_gaps.to_vec();
    sorted.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));

    let (base, extra) = (n / k, n % k);
    let mut cohorts = Vec::with_capacity(k);
    let mut start = 0;
    for g in 0..k {
        let size = base + usize::from(g < extra);
        let block = &sorted[start..start + size];
        start += size;
        cohorts.push(Cohort {
            label: format!("G{}", g + 1),
            members: block.iter().map(|&(u, _)| u).collect(),
            mean_profile_gap: block.iter().map(|&(_, gap)| gap).sum::<f64>() / size as f64,
        });
    }
    Ok(cohorts)
}

/// Profile popularity of the users audited under every algorithm, in ascending
/// user order. These are the users eligible for cohort formation.
pub fn common_profile_gaps(audits: &[(String, Vec<AuditRecord>)]) -> Vec<(UserId, f64)> {
    let Some((_, first)) = audits.first() else {
        return Vec::new();
    };
    let others: Vec<HashSet<UserId>> = audits[1..]
        .iter()
        .map(|(_, records)| records.iter().map(|r| r.user_id).collect())
        .collect();
    let mut gaps: Vec<(UserId, f64)> = first
        .iter()
        .filter(|r| others.iter().all(|s| s.contains(&r.user_id)))
        .map(|r| (r.user_id, r.profile_gap))
        .collect();
    gaps.sort_by_key(|&(u, _)| u);
    gaps
}

/// Aggregates for one cohort under one algorithm.
#[derive(Debug, Clone, PartialEq)]
pub struct CohortRow {
    pub algorithm: String,
    pub cohort: String,
    pub n: usize,
    pub gap_p: f64,
    pub gap_q: f64,
    pub pl: f64,
    pub mc_mean: f64,
    /// Mean over members with at least one relevant test item.
    pub precision_mean: Option<f64>,
}

/// Metric compared between the lowest and highest cohorts.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ComparedMetric {
    PopularityLift,
    Miscalibration,
}

impl ComparedMetric {
    pub fn name(self) -> &'static str {
        match self {
            Self::PopularityLift => "pl",
            Self::Miscalibration => "mc",
        }
    }
}

/// Outcome of comparing per-user values of the first and last cohort.
/// `result` is `None` when either cohort has fewer than two members.
#[derive(Debug, Clone, PartialEq)]
pub struct SignificanceRow {
    pub algorithm: String,
    pub metric: ComparedMetric,
    pub g_low: String,
    pub g_high: String,
    pub result: Option<SignificanceResult>,
}

impl SignificanceRow {
    pub fn significant(&self) -> bool {
        self.result.is_some_and(|r| r.significant_at(0.05))
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct CohortReport {
    /// Algorithm blocks in input order, cohorts in label order within a block.
    pub rows: Vec<CohortRow>,
    pub significance: Vec<SignificanceRow>,
}

impl CohortReport {
    pub fn row(&self, algorithm: &str, cohort: &str) -> Option<&CohortRow> {
        self.rows
            .iter()
            .find(|r| r.algorithm == algorithm && r.cohort == cohort)
    }

    pub fn algorithm_rows<'a>(
        &'a self,
        algorithm: &'a str,
    ) -> impl Iterator<Item = &'a CohortRow> + 'a {
        self.rows.iter().filter(move |r| r.algorithm == algorithm)
    }

    pub fn significance_for(
        &self,
        algorithm: &str,
        metric: ComparedMetric,
    ) -> Option<&SignificanceRow> {
        self.significance
            .iter()
            .find(|s| s.algorithm == algorithm && s.metric == metric)
    }
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Group-level GAP, lift, miscalibration and precision for each
/// (algorithm, cohort), plus first-vs-last cohort significance tests on the
/// per-user lift and miscalibration.
pub fn cohort_report(
    cohorts: &[Cohort],
    audits: &[(String, Vec<AuditRecord>)],
) -> Result<CohortReport, AnalysisError> {
    if let Some(c) = cohorts.iter().find(|c| c.members.is_empty()) {
        return Err(AnalysisError::EmptyCohort(c.label.clone()));
    }
    let blocks: Vec<(Vec<CohortRow>, Vec<SignificanceRow>)> = audits
        .par_iter()
        .map(|(algorithm, records)| algorithm_block(cohorts, algorithm, records))
        .collect::<Result<_, _>>()?;

    let mut report = CohortReport::default();
    for (rows, significance) in blocks {
        report.rows.extend(rows);
        report.significance.extend(significance);
    }
    Ok(report)
}

fn algorithm_block(
    cohorts: &[Cohort],
    algorithm: &str,
    records: &[AuditRecord],
) -> Result<(Vec<CohortRow>, Vec<SignificanceRow>), AnalysisError> {
    let by_user: HashMap<UserId, &AuditRecord> = records.iter().map(|r| (r.user_id, r)).collect();
    let members = cohorts
        .iter()
        .map(|cohort| {
            cohort
                .members
                .iter()
                .map(|u| {
                    by_user
                        .get(u)
                        .copied()
                        .ok_or_else(|| AnalysisError::MissingAudit {
                            algorithm: algorithm.to_string(),
                            user: *u,
                        })
                })
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut rows = Vec::with_capacity(cohorts.len());
    for (ix, cohort) in cohorts.iter().enumerate() {
        let group = &members[ix];
        let gap_p = mean(group.iter().map(|r| r.profile_gap)).expect("non-empty cohort");
        let gap_q = mean(group.iter().map(|r| r.rec_gap)).expect("non-empty cohort");
        rows.push(CohortRow {
            algorithm: algorithm.to_string(),
            cohort: cohort.label.clone(),
            n: group.len(),
            gap_p,
            gap_q,
            pl: popularity_lift(gap_q, gap_p)?,
            mc_mean: mean(group.iter().map(|r| r.mc)).expect("non-empty cohort"),
            precision_mean: mean(group.iter().filter_map(|r| r.precision)),
        });
    }

    let mut significance = Vec::new();
    if let (Some(low), Some(high)) = (cohorts.first(), cohorts.last()) {
        let (lo, hi) = (&members[0], &members[cohorts.len() - 1]);
        for metric in [
            ComparedMetric::PopularityLift,
            ComparedMetric::Miscalibration,
        ] {
            let values = |group: &[&AuditRecord]| -> Result<Vec<f64>, AnalysisError> {
                group
                    .iter()
                    .map(|r| match metric {
                        ComparedMetric::PopularityLift => r.lift().map_err(AnalysisError::from),
                        ComparedMetric::Miscalibration => Ok(r.mc),
                    })
                    .collect()
            };
            let result = match significance_test(&values(lo)?, &values(hi)?) {
                Ok(r) => Some(r),
                Err(AnalysisError::SampleTooSmall { .. }) => None,
                Err(e) => return Err(e),
            };
            significance.push(SignificanceRow {
                algorithm: algorithm.to_string(),
                metric,
                g_low: low.label.clone(),
                g_high: high.label.clone(),
                result,
            });
        }
    }
    Ok((rows, significance))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaps(values: &[(u32, f64)]) -> Vec<(UserId, f64)> {
        values.iter().map(|&(u, g)| (UserId(u), g)).collect()
    }

    fn record(
        user: u32,
        profile_gap: f64,
        rec_gap: f64,
        mc: f64,
        precision: Option<f64>,
    ) -> AuditRecord {
        AuditRecord {
            user_id: UserId(user),
            profile_gap,
            rec_gap,
            mc,
            precision,
            n_profile: 5,
            n_recs: 10,
        }
    }

    #[test]
    fn twenty_users_ten_cohorts() {
        let input: Vec<_> = (1..=20).map(|u| (UserId(u), u as f64)).collect();
        let cohorts = form_cohorts(&input, 10).unwrap();
        assert_eq!(cohorts.len(), 10);
        assert!(cohorts.iter().all(|c| c.members.len() == 2));
        assert_eq!(cohorts[0].label, "G1");
        assert_eq!(cohorts[0].members, vec![UserId(1), UserId(2)]);
        assert_eq!(cohorts[9].label, "G10");
    }

    #[test]
    fn remainder_goes_to_first_cohorts() {
        let input: Vec<_> = (1..=25)
            .rev()
            .map(|u| (UserId(u), u as f64 / 100.0))
            .collect();
        let sizes: Vec<usize> = form_cohorts(&input, 10)
            .unwrap()
            .iter()
            .map(|c| c.members.len())
            .collect();
        assert_eq!(sizes, vec![3, 3, 3, 3, 3, 2, 2, 2, 2, 2]);
    }

    #[test]
    fn ties_broken_by_user_id() {
        let input = gaps(&[(5, 0.1), (3, 0.1), (9, 0.1), (1, 0.1)]);
        let cohorts = form_cohorts(&input, 2).unwrap();
        assert_eq!(cohorts[0].members, vec![UserId(1), UserId(3)]);
        assert_eq!(cohorts[1].members, vec![UserId(5), UserId(9)]);
    }

    #[test]
    fn invalid_cohort_counts() {
        let input = gaps(&[(1, 0.1), (2, 0.2)]);
        assert!(matches!(
            form_cohorts(&input, 1),
            Err(AnalysisError::InvalidCohortCount { k: 1, users: 2 })
        ));
        assert!(matches!(
            form_cohorts(&input, 3),
            Err(AnalysisError::InvalidCohortCount { .. })
        ));
        let dup = gaps(&[(1, 0.1), (1, 0.2)]);
        assert!(matches!(
            form_cohorts(&dup, 2),
            Err(AnalysisError::DuplicateUser(UserId(1)))
        ));
    }

    #[test]
    fn identical_users_reproduce_single_user_values() {
        let recs: Vec<_> = (1..=4)
            .map(|u| record(u, 0.2, 0.5, 0.3, Some(0.1)))
            .collect();
        let cohorts = form_cohorts(&common_profile_gaps(&[("x".into(), recs.clone())]), 2).unwrap();
        let report = cohort_report(&cohorts, &[("x".into(), recs)]).unwrap();
        for row in &report.rows {
            assert_eq!(
                (row.n, row.gap_p, row.gap_q, row.mc_mean),
                (2, 0.2, 0.5, 0.3)
            );
            assert_eq!(row.precision_mean, Some(0.1));
            assert!((row.pl - 1.5).abs() < 1e-15);
        }
        let sig = report
            .significance_for("x", ComparedMetric::Miscalibration)
            .unwrap();
        assert_eq!(sig.result.unwrap().welch_p, 1.0);
        assert!(!sig.significant());
    }

    #[test]
    fn niche_users_lifted_most() {
        // niche users (low profile gap) receive the same popular items as everyone
        let recs = vec![
            record(1, 0.1, 0.8, 0.6, None),
            record(2, 0.15, 0.8, 0.7, Some(0.2)),
            record(3, 0.6, 0.8, 0.1, Some(0.1)),
            record(4, 0.7, 0.8, 0.2, None),
        ];
        let audits = vec![("most-popular".to_string(), recs)];
        let cohorts = form_cohorts(&common_profile_gaps(&audits), 2).unwrap();
        let report = cohort_report(&cohorts, &audits).unwrap();
        let (g1, g2) = (
            report.row("most-popular", "G1").unwrap(),
            report.row("most-popular", "G2").unwrap(),
        );
        assert!(g1.pl > g2.pl);
        // brute force: (0.8 - 0.125) / 0.125 and (0.8 - 0.65) / 0.65
        assert!((g1.pl - 5.4).abs() < 1e-12);
        assert!((g2.pl - 0.15 / 0.65).abs() < 1e-12);
        assert_eq!(g1.precision_mean, Some(0.2));
        assert_eq!(g2.precision_mean, Some(0.1));
        assert!((g1.mc_mean - 0.65).abs() < 1e-15);
    }

    #[test]
    fn common_users_and_missing_audits() {
        let a = vec![
            record(1, 0.1, 0.2, 0.0, None),
            record(2, 0.3, 0.2, 0.0, None),
            record(3, 0.5, 0.2, 0.0, None),
        ];
        let b = vec![
            record(3, 0.5, 0.2, 0.0, None),
            record(1, 0.1, 0.2, 0.0, None),
        ];
        let audits = vec![("a".to_string(), a.clone()), ("b".to_string(), b)];
        assert_eq!(common_profile_gaps(&audits), gaps(&[(1, 0.1), (3, 0.5)]));

        let everyone = form_cohorts(&common_profile_gaps(&[("a".into(), a)]), 2).unwrap();
        assert!(matches!(
            cohort_report(&everyone, &audits),
            Err(AnalysisError::MissingAudit {
                user: UserId(2),
                ..
            })
        ));
    }

    #[test]
    fn report_keeps_algorithm_order() {
        let recs: Vec<_> = (1..=6)
            .map(|u| record(u, u as f64 / 10.0, 0.9, 0.1 * u as f64, None))
            .collect();
        let audits = vec![("b".to_string(), recs.clone()), ("a".to_string(), recs)];
        let cohorts = form_cohorts(&common_profile_gaps(&audits), 3).unwrap();
        let report = cohort_report(&cohorts, &audits).unwrap();
        let order: Vec<_> = report
            .rows
            .iter()
            .map(|r| (r.algorithm.as_str(), r.cohort.as_str()))
            .collect();
        assert_eq!(
            order,
            vec![
                ("b", "G1"),
                ("b", "G2"),
                ("b", "G3"),
                ("a", "G1"),
                ("a", "G2"),
                ("a", "G3")
            ]
        );
        assert_eq!(report.significance.len(), 4);
        assert_eq!(report.algorithm_rows("a").map(|r| r.n).sum::<usize>(), 6);
    }
}
