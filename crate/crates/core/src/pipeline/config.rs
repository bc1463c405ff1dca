//! TOML pipeline configuration. Relative paths resolve against the directory of
//! the config file.
//!
//! ```toml
//! output = "out"
//! algorithms = ["most-popular", "bmf"]
//!
//! [dataset]
//! ratings = "ratings.dat"
//! catalog = "movies.dat"
//! format = "movielens-dat"
//!
//! [split]
//! seed = 7
//!
//! [algorithm.bmf]
//! factors = 20
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{DataFormat, RatingScale};
use crate::recommenders::{Algorithm, ModelConfig, Similarity};

pub const DEFAULT_LIST_SIZE: usize = 10;
pub const DEFAULT_COHORTS: usize = 10;
pub const DEFAULT_FRACTION: f64 = 0.8;
pub const DEFAULT_SEED: u64 = 42;
const DEFAULT_OUTPUT: &str = "out";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed config: {0}")]
    Syntax(String),
    #[error("`{key}`: {message}")]
    Invalid { key: String, message: String },
}

fn invalid(key: impl Into<String>, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.into(),
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetConfig {
    pub ratings: PathBuf,
    pub catalog: PathBuf,
    pub format: DataFormat,
    pub scale: RatingScale,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SplitConfig {
    pub fraction: f64,
    pub seed: u64,
}

/// A validated pipeline configuration with defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PipelineConfig {
    pub dataset: DatasetConfig,
    pub split: SplitConfig,
    pub list_size: usize,
    pub cohorts: usize,
    /// Minimum test rating counted as relevant for precision; `None` counts
    /// every test interaction.
    pub relevance_threshold: Option<f64>,
    pub output: PathBuf,
    /// Algorithms to run, in report order.
    pub algorithms: Vec<Algorithm>,
    /// Settings for every algorithm, including those not selected.
    pub models: BTreeMap<Algorithm, ModelConfig>,
}

impl PipelineConfig {
    pub fn model(&self, algorithm: Algorithm) -> &ModelConfig {
        &self.models[&algorithm]
    }

    /// Settings of the selected algorithms, in order.
    pub fn selected_models(&self) -> impl Iterator<Item = &ModelConfig> + '_ {
        self.algorithms.iter().map(|a| self.model(*a))
    }

    /// Replaces the split seed and every model seed.
    pub fn override_seed(&mut self, seed: u64) {
        self.split.seed = seed;
        for m in self.models.values_mut() {
            m.seed = seed;
        }
    }

    pub fn override_algorithms(&mut self, algorithms: Vec<Algorithm>) -> Result<(), ConfigError> {
        check_algorithms(&algorithms)?;
        self.algorithms = algorithms;
        Ok(())
    }

    /// Parses config text; relative paths are resolved against `base_dir`.
    pub fn from_toml_str(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
        raw.resolve(base_dir)
    }
}

/// Reads and validates the config file at `path`.
pub fn load_config(path: &Path) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    let base = path.parent().unwrap_or(Path::new(""));
    PipelineConfig::from_toml_str(&text, base)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    output: Option<PathBuf>,
    algorithms: Option<Vec<String>>,
    dataset: Option<RawDataset>,
    #[serde(default)]
    split: RawSplit,
    #[serde(default)]
    evaluation: RawEvaluation,
    #[serde(default)]
    algorithm: BTreeMap<String, RawModel>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDataset {
    ratings: Option<PathBuf>,
    catalog: Option<PathBuf>,
    format: Option<String>,
    rating_min: Option<f64>,
    rating_max: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSplit {
    fraction: Option<f64>,
    seed: Option<i64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEvaluation {
    list_size: Option<i64>,
    cohorts: Option<i64>,
    relevance_threshold: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    neighborhood_size: Option<i64>,
    similarity: Option<String>,
    factors: Option<i64>,
    learning_rate: Option<f64>,
    regularization: Option<f64>,
    epochs: Option<i64>,
    seed: Option<i64>,
}

fn count(key: &str, value: Option<i64>, default: usize, min: usize) -> Result<usize, ConfigError> {
    match value {
        None => Ok(default),
        Some(v) if v >= min as i64 => Ok(v as usize),
        Some(v) => Err(invalid(key, format!("must be at least {min}, got {v}"))),
    }
}

fn seed(key: &str, value: Option<i64>) -> Result<u64, ConfigError> {
    match value {
        None => Ok(DEFAULT_SEED),
        Some(v) if v >= 0 => Ok(v as u64),
        Some(v) => Err(invalid(key, format!("must be non-negative, got {v}"))),
    }
}

fn parse_algorithm(key: &str, name: &str) -> Result<Algorithm, ConfigError> {
    name.parse().map_err(|e: String| invalid(key, e))
}

fn check_algorithms(list: &[Algorithm]) -> Result<(), ConfigError> {
    if list.is_empty() {
        return Err(invalid("algorithms", "at least one algorithm is required"));
    }
    for (ix, a) in list.iter().enumerate() {
        if list[..ix].contains(a) {
            return Err(invalid("algorithms", format!("`{a}` listed twice")));
        }
    }
    Ok(())
}

impl RawConfig {
    fn resolve(self, base: &Path) -> Result<PipelineConfig, ConfigError> {
        let resolve_path = |p: PathBuf| if p.is_absolute() { p } else { base.join(p) };

        let ds = self.dataset.unwrap_or_default();
        let ratings = ds
            .ratings
            .ok_or_else(|| invalid("dataset.ratings", "required"))?;
        let catalog = ds
            .catalog
            .ok_or_else(|| invalid("dataset.catalog", "required"))?;
        let format = match ds.format {
            None => DataFormat::Csv,
            Some(f) => f
                .parse()
                .map_err(|e: String| invalid("dataset.format", e))?,
        };
        let scale = RatingScale {
            min: ds.rating_min.unwrap_or(RatingScale::default().min),
            max: ds.rating_max.unwrap_or(RatingScale::default().max),
        };
        if !(scale.min.is_finite() && scale.max.is_finite() && scale.min < scale.max) {
            return Err(invalid(
                "dataset.rating_min",
                "rating scale needs finite rating_min < rating_max",
            ));
        }

        let fraction = self.split.fraction.unwrap_or(DEFAULT_FRACTION);
        if !(fraction > 0.0 && fraction < 1.0) {
            return Err(invalid(
                "split.fraction",
                format!("must lie strictly between 0 and 1, got {fraction}"),
            ));
        }
        let split = SplitConfig {
            fraction,
            seed: seed("split.seed", self.split.seed)?,
        };

        let eval = self.evaluation;
        let list_size = count("evaluation.list_size", eval.list_size, DEFAULT_LIST_SIZE, 1)?;
        let cohorts = count("evaluation.cohorts", eval.cohorts, DEFAULT_COHORTS, 2)?;
        if eval.relevance_threshold.is_some_and(|t| !t.is_finite()) {
            return Err(invalid(
                "evaluation.relevance_threshold",
                "must be a finite number",
            ));
        }

        let algorithms = match self.algorithms {
            None => Algorithm::ALL.to_vec(),
            Some(names) => names
                .iter()
                .map(|n| parse_algorithm("algorithms", n))
                .collect::<Result<Vec<_>, _>>()?,
        };
        check_algorithms(&algorithms)?;

        let mut models: BTreeMap<Algorithm, ModelConfig> = Algorithm::ALL
            .iter()
            .map(|&a| (a, ModelConfig::defaults(a)))
            .collect();
        for (name, raw) in self.algorithm {
            let section = format!("algorithm.{name}");
            let algorithm = parse_algorithm(&section, &name)?;
            let m = models.get_mut(&algorithm).expect("all algorithms present");
            raw.apply(&section, m)?;
        }

        Ok(PipelineConfig {
            dataset: DatasetConfig {
                ratings: resolve_path(ratings),
                catalog: resolve_path(catalog),
                format,
                scale,
            },
            split,
            list_size,
            cohorts,
            relevance_threshold: eval.relevance_threshold,
            output: resolve_path(self.output.unwrap_or_else(|| DEFAULT_OUTPUT.into())),
            algorithms,
            models,
        })
    }
}

impl RawModel {
    fn apply(self, section: &str, m: &mut ModelConfig) -> Result<(), ConfigError> {
        let key = |field: &str| format!("{section}.{field}");
        m.neighborhood_size = count(
            &key("neighborhood_size"),
            self.neighborhood_size,
            m.neighborhood_size,
            1,
        )?;
        if let Some(s) = self.similarity {
            m.similarity = s
                .parse::<Similarity>()
                .map_err(|e| invalid(key("similarity"), e))?;
        }
        m.factors = count(&key("factors"), self.factors, m.factors, 0)?;
        m.epochs = count(&key("epochs"), self.epochs, m.epochs, 0)?;
        if let Some(lr) = self.learning_rate {
            if !(lr.is_finite() && lr > 0.0) {
                return Err(invalid(
                    key("learning_rate"),
                    format!("must be positive, got {lr}"),
                ));
            }
            m.learning_rate = lr;
        }
        if let Some(reg) = self.regularization {
            if !(reg.is_finite() && reg >= 0.0) {
                return Err(invalid(
                    key("regularization"),
                    format!("must be non-negative, got {reg}"),
                ));
            }
            m.regularization = reg;
        }
        if self.seed.is_some() {
            m.seed = seed(&key("seed"), self.seed)?;
        }
        m.validate()
            .map_err(|e| invalid(section.to_string(), e.to_string()))
    }
}
