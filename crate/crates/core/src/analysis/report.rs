//! Plot-ready CSV exports. Floats use shortest round-trip notation and
//! undefined values are written as empty fields.

use std::io::Write;

use super::{AnalysisError, CohortReport, GenreFrequencyProfile, GenreLift};

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

fn io(e: impl std::fmt::Display) -> AnalysisError {
    AnalysisError::Io(e.to_string())
}

/// `algorithm,cohort,n,gap_p,gap_q,pl,mc_mean,precision_mean`
pub fn write_cohort_report_csv<W: Write>(
    report: &CohortReport,
    writer: W,
) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "algorithm",
        "cohort",
        "n",
        "gap_p",
        "gap_q",
        "pl",
        "mc_mean",
        "precision_mean",
    ])
    .map_err(io)?;
    for r in &report.rows {
        out.write_record([
            r.algorithm.clone(),
            r.cohort.clone(),
            r.n.to_string(),
            r.gap_p.to_string(),
            r.gap_q.to_string(),
            r.pl.to_string(),
            r.mc_mean.to_string(),
            opt(r.precision_mean),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// `algorithm,metric,g_low,g_high,welch_p,mannwhitney_p,significant_at_0.05`
pub fn write_significance_csv<W: Write>(
    report: &CohortReport,
    writer: W,
) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record([
        "algorithm",
        "metric",
        "g_low",
        "g_high",
        "welch_p",
        "mannwhitney_p",
        "significant_at_0.05",
    ])
    .map_err(io)?;
    for s in &report.significance {
        out.write_record([
            s.algorithm.clone(),
            s.metric.name().to_string(),
            s.g_low.clone(),
            s.g_high.clone(),
            opt(s.result.map(|r| r.welch_p)),
            opt(s.result.map(|r| r.mann_whitney_p)),
            s.significant().to_string(),
        ])
        .map_err(io)?;
    }
    out.flush().map_err(io)
}

/// `source,genre,proportion,count`, one block per profile in the given order.
pub fn write_genre_frequency_csv<W: Write>(
    profiles: &[GenreFrequencyProfile],
    writer: W,
) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["source", "genre", "proportion", "count"])
        .map_err(io)?;
    for p in profiles {
        for ((genre, share), count) in p.categories().iter().zip(p.proportions()).zip(p.counts()) {
            out.write_record([
                p.source.as_str(),
                genre,
                &share.to_string(),
                &count.to_string(),
            ])
            .map_err(io)?;
        }
    }
    out.flush().map_err(io)
}

/// `source,genre,rating_freq,rec_freq,lift`, with an empty lift where the genre
/// never occurs in the rating data.
pub fn write_amplification_csv<W: Write>(
    profiles: &[(String, Vec<GenreLift>)],
    writer: W,
) -> Result<(), AnalysisError> {
    let mut out = csv::Writer::from_writer(writer);
    out.write_record(["source", "genre", "rating_freq", "rec_freq", "lift"])
        .map_err(io)?;
    for (source, lifts) in profiles {
        for g in lifts {
            out.write_record([
                source.clone(),
                g.genre.clone(),
                g.rating_freq.to_string(),
                g.rec_freq.to_string(),
                opt(g.lift),
            ])
            .map_err(io)?;
        }
    }
    out.flush().map_err(io)
}
