use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::Serialize;

use super::{Layout, PipelineConfig, PipelineError, Stage};
use crate::analysis::{
    amplification_profile, cohort_report, common_profile_gaps, form_cohorts, genre_frequency,
    recommendation_genre_frequency, write_amplification_csv, write_cohort_report_csv,
    write_genre_frequency_csv, write_significance_csv,
};
use crate::dataset::{
    parse_catalog, parse_ratings, split_ratings, DataFormat, ItemCatalog, PopularityIndex,
    RatingsTable,
};
use crate::hash::sha256_hex;
use crate::metrics::{audit_users, read_audit_csv, write_audit_csv, AuditContext, SkipReason};
use crate::recommenders::{
    fit, read_recommendations, recommend_top_n, write_recommendations, Algorithm, FittedModel,
    RecommendationSet,
};

fn io_err(stage: Stage, path: &Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        stage,
        path: path.to_path_buf(),
        source,
    }
}

fn read_bytes(stage: Stage, path: &Path) -> Result<Vec<u8>, PipelineError> {
    fs::read(path).map_err(|source| match source.kind() {
        std::io::ErrorKind::NotFound => PipelineError::MissingInput {
            stage,
            path: path.to_path_buf(),
        },
        _ => io_err(stage, path)(source),
    })
}

fn open(stage: Stage, path: &Path) -> Result<BufReader<File>, PipelineError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| match source.kind() {
            std::io::ErrorKind::NotFound => PipelineError::MissingInput {
                stage,
                path: path.to_path_buf(),
            },
            _ => io_err(stage, path)(source),
        })
}

/// Writes `path` through `body`, creating parent directories first.
fn write_file<F>(stage: Stage, path: &Path, body: F) -> Result<(), PipelineError>
where
    F: FnOnce(&mut BufWriter<File>) -> Result<(), PipelineError>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(io_err(stage, parent))?;
    }
    let mut out = BufWriter::new(File::create(path).map_err(io_err(stage, path))?);
    body(&mut out)?;
    out.flush().map_err(io_err(stage, path))
}

fn write_json<T: Serialize>(stage: Stage, path: &Path, value: &T) -> Result<(), PipelineError> {
    write_file(stage, path, |out| {
        serde_json::to_writer_pretty(&mut *out, value)
            .map_err(|e| io_err(stage, path)(e.into()))?;
        writeln!(out).map_err(io_err(stage, path))
    })
}

fn load_table(
    stage: Stage,
    path: &Path,
    format: DataFormat,
    config: &PipelineConfig,
) -> Result<RatingsTable, PipelineError> {
    parse_ratings(open(stage, path)?, format, &config.dataset.scale).map_err(|source| {
        PipelineError::Dataset {
            stage,
            path: path.to_path_buf(),
            source,
        }
    })
}

fn load_catalog(stage: Stage, config: &PipelineConfig) -> Result<ItemCatalog, PipelineError> {
    let path = &config.dataset.catalog;
    parse_catalog(open(stage, path)?, config.dataset.format).map_err(|source| {
        PipelineError::Dataset {
            stage,
            path: path.clone(),
            source,
        }
    })
}

fn load_recommendations(
    stage: Stage,
    layout: &Layout,
    algorithm: Algorithm,
    config: &PipelineConfig,
) -> Result<RecommendationSet, PipelineError> {
    let path = layout.recommendations(algorithm);
    read_recommendations(open(stage, &path)?, config.list_size).map_err(|source| {
        PipelineError::Model {
            stage,
            path,
            source,
        }
    })
}

/// Runs one stage against the files under `config.output`. Returns short
/// human-readable notes about the stage's outcome.
pub fn run_stage(stage: Stage, config: &PipelineConfig) -> Result<Vec<String>, PipelineError> {
    let layout = Layout::new(&config.output);
    match stage {
        Stage::Split => split(config, &layout),
        Stage::Train => train(config, &layout),
        Stage::Recommend => recommend(config, &layout),
        Stage::Audit => audit(config, &layout),
        Stage::Report => report(config, &layout),
    }
}

fn split(config: &PipelineConfig, layout: &Layout) -> Result<Vec<String>, PipelineError> {
    let stage = Stage::Split;
    let path = &config.dataset.ratings;
    let bytes = read_bytes(stage, path)?;
    let dataset_err = |source| PipelineError::Dataset {
        stage,
        path: path.clone(),
        source,
    };
    let table = parse_ratings(&bytes[..], config.dataset.format, &config.dataset.scale)
        .map_err(dataset_err)?;
    let split =
        split_ratings(&table, config.split.fraction, config.split.seed).map_err(dataset_err)?;

    for (path, part) in [(layout.train(), &split.train), (layout.test(), &split.test)] {
        write_file(stage, &path, |out| {
            part.write_csv(out)
                .map_err(|source| PipelineError::Dataset {
                    stage,
                    path: path.clone(),
                    source,
                })
        })?;
    }
    let manifest = split.manifest(sha256_hex(&bytes));
    write_json(stage, &layout.split_manifest(), &manifest)?;
    Ok(vec![format!(
        "{} ratings: {} train, {} test",
        manifest.n_total, manifest.n_train, manifest.n_test
    )])
}

fn train(config: &PipelineConfig, layout: &Layout) -> Result<Vec<String>, PipelineError> {
    let stage = Stage::Train;
    let train = Arc::new(load_table(stage, &layout.train(), DataFormat::Csv, config)?);
    let models: Vec<_> = config.selected_models().cloned().collect();
    models
        .par_iter()
        .map(|model_config| {
            let algorithm = model_config.algorithm;
            let path = layout.model(algorithm);
            let model =
                fit(Arc::clone(&train), model_config).map_err(|source| PipelineError::Model {
                    stage,
                    path: layout.train(),
                    source,
                })?;
            write_file(stage, &path, |out| {
                model.save(out).map_err(|source| PipelineError::Model {
                    stage,
                    path: path.clone(),
                    source,
                })
            })?;
            write_json(stage, &layout.model_manifest(algorithm), &model.manifest())?;
            Ok(match model.training_curve().and_then(<[f64]>::last) {
                Some(rmse) => format!("{algorithm}: trained, final regularized RMSE {rmse:.4}"),
                None => format!("{algorithm}: trained"),
            })
        })
        .collect()
}

fn recommend(config: &PipelineConfig, layout: &Layout) -> Result<Vec<String>, PipelineError> {
    let stage = Stage::Recommend;
    let train = Arc::new(load_table(stage, &layout.train(), DataFormat::Csv, config)?);
    let mut notes = Vec::new();
    for &algorithm in &config.algorithms {
        let model_path = layout.model(algorithm);
        let model_err = |path: &Path| {
            let path = path.to_path_buf();
            move |source| PipelineError::Model {
                stage,
                path,
                source,
            }
        };
        let model = FittedModel::load(open(stage, &model_path)?, Arc::clone(&train))
            .map_err(model_err(&model_path))?;
        if model.algorithm() != algorithm {
            return Err(PipelineError::Model {
                stage,
                path: model_path,
                source: crate::recommenders::ModelError::Config(format!(
                    "file holds a {} model, expected {algorithm}",
                    model.algorithm()
                )),
            });
        }
        let recs = recommend_top_n(&model, config.list_size).map_err(model_err(&model_path))?;
        let path = layout.recommendations(algorithm);
        write_file(stage, &path, |out| {
            write_recommendations(&recs, out).map_err(model_err(&path))
        })?;
        let short = recs.short_users().len();
        notes.push(if short > 0 {
            format!(
                "{algorithm}: {} lists, {short} shorter than {}",
                recs.len(),
                config.list_size
            )
        } else {
            format!("{algorithm}: {} lists", recs.len())
        });
    }
    Ok(notes)
}

fn audit(config: &PipelineConfig, layout: &Layout) -> Result<Vec<String>, PipelineError> {
    let stage = Stage::Audit;
    let train = load_table(stage, &layout.train(), DataFormat::Csv, config)?;
    let test = load_table(stage, &layout.test(), DataFormat::Csv, config)?;
    let catalog = load_catalog(stage, config)?;
    let theta = PopularityIndex::from_table(&train);
    let ctx = AuditContext {
        train: &train,
        test: &test,
        catalog: &catalog,
        theta: &theta,
        relevance_threshold: config.relevance_threshold,
    };
    let mut notes = Vec::new();
    for &algorithm in &config.algorithms {
        let recs = load_recommendations(stage, layout, algorithm, config)?;
        let path = layout.audit(algorithm);
        let metric_err = |source| PipelineError::Metric {
            stage,
            path: layout.recommendations(algorithm),
            source,
        };
        let outcome = audit_users(&ctx, &recs).map_err(metric_err)?;
        write_file(stage, &path, |out| {
            write_audit_csv(&outcome.records(), out).map_err(|source| PipelineError::Metric {
                stage,
                path: path.clone(),
                source,
            })
        })?;
        let empty = outcome
            .skipped
            .iter()
            .filter(|(_, r)| *r == SkipReason::NoRecommendations)
            .count();
        let foreign = outcome.skipped.len() - empty;
        let mut note = format!("{algorithm}: {} users audited", outcome.audits.len());
        if empty > 0 {
            note.push_str(&format!(", {empty} skipped with empty lists"));
        }
        if foreign > 0 {
            note.push_str(&format!(", {foreign} skipped without training ratings"));
        }
        notes.push(note);
    }
    Ok(notes)
}

fn report(config: &PipelineConfig, layout: &Layout) -> Result<Vec<String>, PipelineError> {
    let stage = Stage::Report;
    let analysis_err = |source| PipelineError::Analysis { stage, source };

    let mut audits = Vec::with_capacity(config.algorithms.len());
    for &algorithm in &config.algorithms {
        let path = layout.audit(algorithm);
        let records =
            read_audit_csv(open(stage, &path)?).map_err(|source| PipelineError::Metric {
                stage,
                path: path.clone(),
                source,
            })?;
        audits.push((algorithm.to_string(), records));
    }
    let gaps = common_profile_gaps(&audits);
    let cohorts = form_cohorts(&gaps, config.cohorts).map_err(analysis_err)?;
    let report = cohort_report(&cohorts, &audits).map_err(analysis_err)?;

    // train and test together are the full rating data
    let train = load_table(stage, &layout.train(), DataFormat::Csv, config)?;
    let test = load_table(stage, &layout.test(), DataFormat::Csv, config)?;
    let catalog = load_catalog(stage, config)?;
    let rated = train.ratings().iter().chain(test.ratings()).map(|r| r.item);
    let ratings_profile = genre_frequency("ratings", rated, &catalog).map_err(analysis_err)?;
    let mut profiles = vec![ratings_profile.clone()];
    let mut lifts = Vec::new();
    for &algorithm in &config.algorithms {
        let recs = load_recommendations(stage, layout, algorithm, config)?;
        let profile = recommendation_genre_frequency(algorithm.name(), &recs, &catalog)
            .map_err(analysis_err)?;
        lifts.push((
            algorithm.to_string(),
            amplification_profile(&ratings_profile, &profile).map_err(analysis_err)?,
        ));
        profiles.push(profile);
    }

    let csv = |path: PathBuf,
               body: &dyn Fn(
        &mut BufWriter<File>,
    ) -> Result<(), crate::analysis::AnalysisError>| {
        write_file(stage, &path, |out| body(out).map_err(analysis_err))
    };
    csv(layout.cohort_report(), &|out| {
        write_cohort_report_csv(&report, out)
    })?;
    csv(layout.significance(), &|out| {
        write_significance_csv(&report, out)
    })?;
    csv(layout.genre_frequency(), &|out| {
        write_genre_frequency_csv(&profiles, out)
    })?;
    csv(layout.amplification(), &|out| {
        write_amplification_csv(&lifts, out)
    })?;

    let significant: Vec<String> = report
        .significance
        .iter()
        .filter(|s| s.significant())
        .map(|s| format!("{}/{}", s.algorithm, s.metric.name()))
        .collect();
    Ok(vec![format!(
        "{} users in {} cohorts; significant G1 vs G{}: {}",
        gaps.len(),
        cohorts.len(),
        cohorts.len(),
        if significant.is_empty() {
            "none".to_string()
        } else {
            significant.join(", ")
        }
    )])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InputHash {
    pub role: String,
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
    pub notes: Vec<String>,
}

/// Provenance of a full run, written to `run_manifest.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    pub config: PipelineConfig,
    pub inputs: Vec<InputHash>,
    pub split_seed: u64,
    pub model_seeds: BTreeMap<String, u64>,
    pub started_at_unix: u64,
    pub stages: Vec<StageTiming>,
    pub total_seconds: f64,
}

/// Runs every stage in order and writes the run manifest.
pub fn run_pipeline(config: &PipelineConfig) -> Result<RunManifest, PipelineError> {
    run_pipeline_with(config, |_| {})
}

/// [`run_pipeline`] with a callback invoked as each stage finishes.
pub fn run_pipeline_with<F>(
    config: &PipelineConfig,
    mut on_stage: F,
) -> Result<RunManifest, PipelineError>
where
    F: FnMut(&StageTiming),
{
    let started = Instant::now();
    let started_at_unix = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or_default();
    let config_json = serde_json::to_vec(config).expect("config serializes");

    let mut inputs = Vec::new();
    for (role, path) in [
        ("ratings", &config.dataset.ratings),
        ("catalog", &config.dataset.catalog),
    ] {
        inputs.push(InputHash {
            role: role.to_string(),
            path: path.clone(),
            sha256: sha256_hex(&read_bytes(Stage::Split, path)?),
        });
    }

    let mut stages = Vec::with_capacity(Stage::ALL.len());
    for stage in Stage::ALL {
        let t = Instant::now();
        let notes = run_stage(stage, config)?;
        let timing = StageTiming {
            stage: stage.to_string(),
            seconds: t.elapsed().as_secs_f64(),
            notes,
        };
        on_stage(&timing);
        stages.push(timing);
    }

    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        config_hash: sha256_hex(&config_json),
        config: config.clone(),
        inputs,
        split_seed: config.split.seed,
        model_seeds: config
            .selected_models()
            .map(|m| (m.algorithm.to_string(), m.seed))
            .collect(),
        started_at_unix,
        stages,
        total_seconds: started.elapsed().as_secs_f64(),
    };
    write_json(
        Stage::Report,
        &Layout::new(&config.output).run_manifest(),
        &manifest,
    )?;
    Ok(manifest)
}

/// Runs `f` on a dedicated pool of `jobs` worker threads, or on the global pool
/// when `jobs` is `None`. Results do not depend on the thread count.
pub fn with_jobs<T, F>(jobs: Option<usize>, f: F) -> Result<T, PipelineError>
where
    T: Send,
    F: FnOnce() -> Result<T, PipelineError> + Send,
{
    match jobs {
        None => f(),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build()
            .map_err(|e| PipelineError::Workers(e.to_string()))?
            .install(f),
    }
}
