//! The five audited algorithms (user-based KNN, item-based KNN, most-popular,
//! biased MF and SVD++), fitted on a training table and queried for top-N lists.

mod factor;
mod io;
mod knn;
mod topn;

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::dataset::{ItemId, PopularityIndex, RatingsTable, UserId};

pub use factor::{bmf_pointwise_gradient, bmf_pointwise_loss, FactorState};
pub use io::{read_recommendations, write_recommendations};
pub use knn::{similarity_matrix, KnnState, Neighborhood};
pub use topn::{recommend_top_n, Recommendation, RecommendationSet};

use factor::{FactorScorer, SgdSettings};
use knn::KnnScorer;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model configuration: {0}")]
    Config(String),
    #[error("cannot fit a model on an empty training table")]
    EmptyTraining,
    #[error("user {0} does not appear in the training data")]
    UnknownUser(UserId),
    #[error("list size must be at least 1")]
    InvalidListSize,
    #[error("model was fitted on a different training table (expected {expected}, found {found})")]
    TrainingMismatch { expected: String, found: String },
    #[error("row {row}: {message}")]
    Schema { row: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "user-knn")]
    UserKnn,
    #[serde(rename = "item-knn")]
    ItemKnn,
    #[serde(rename = "most-popular")]
    MostPopular,
    #[serde(rename = "bmf")]
    Bmf,
    #[serde(rename = "svdpp")]
    SvdPlusPlus,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::UserKnn,
        Algorithm::ItemKnn,
        Algorithm::MostPopular,
        Algorithm::Bmf,
        Algorithm::SvdPlusPlus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Self::UserKnn => "user-knn",
            Self::ItemKnn => "item-knn",
            Self::MostPopular => "most-popular",
            Self::Bmf => "bmf",
            Self::SvdPlusPlus => "svdpp",
        }
    }

    pub fn valid_names() -> String {
        Self::ALL.map(Self::name).join(", ")
    }

    fn is_knn(self) -> bool {
        matches!(self, Self::UserKnn | Self::ItemKnn)
    }

    fn is_factor(self) -> bool {
        matches!(self, Self::Bmf | Self::SvdPlusPlus)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown algorithm `{s}` (valid: {})", Self::valid_names()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Similarity {
    Pearson,
    Cosine,
}

impl FromStr for Similarity {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pearson" => Ok(Self::Pearson),
            "cosine" => Ok(Self::Cosine),
            other => Err(format!(
                "unknown similarity `{other}` (valid: pearson, cosine)"
            )),
        }
    }
}

/// Hyperparameters for one algorithm. Fields that do not apply to the chosen
/// algorithm are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub algorithm: Algorithm,
    pub neighborhood_size: usize,
    pub similarity: Similarity,
    pub factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl ModelConfig {
    /// Default settings: user-knn {pearson, k=50}, item-knn {cosine, k=50},
    /// bmf {50 factors, lr 0.005, reg 0.02, 30 epochs},
    /// svdpp {30 factors, lr 0.005, reg 0.02, 20 epochs}.
    pub fn defaults(algorithm: Algorithm) -> Self {
        let (similarity, factors, epochs) = match algorithm {
            Algorithm::UserKnn => (Similarity::Pearson, 50, 30),
            Algorithm::SvdPlusPlus => (Similarity::Cosine, 30, 20),
            _ => (Similarity::Cosine, 50, 30),
        };
        Self {
            algorithm,
            neighborhood_size: 50,
            similarity,
            factors,
            learning_rate: 0.005,
            regularization: 0.02,
            epochs,
            seed: 42,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let bad = |msg: String| Err(ModelError::Config(msg));
        if self.algorithm.is_knn() && self.neighborhood_size == 0 {
            return bad(format!(
                "{}: neighborhood_size must be positive",
                self.algorithm
            ));
        }
        if self.algorithm.is_factor() {
            if self.factors == 0 && self.epochs > 0 {
                return bad(format!(
                    "{}: factors must be positive when training",
                    self.algorithm
                ));
            }
            if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
                return bad(format!(
                    "{}: learning_rate must be a positive number",
                    self.algorithm
                ));
            }
            if !(self.regularization.is_finite() && self.regularization >= 0.0) {
                return bad(format!(
                    "{}: regularization must be non-negative",
                    self.algorithm
                ));
            }
        }
        Ok(())
    }

    fn sgd(&self) -> SgdSettings {
        SgdSettings {
            factors: self.factors,
            learning_rate: self.learning_rate,
            regularization: self.regularization,
            epochs: self.epochs,
            seed: self.seed,
        }
    }
}

/// Serializable learned state of any algorithm.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ModelState {
    MostPopular { theta: Vec<f64> },
    Knn(KnnState),
    Factor(FactorState),
}

#[derive(Debug, Clone)]
enum Scorer {
    Popular(Vec<f64>),
    Knn(KnnScorer),
    Factor(FactorScorer),
}

/// A trained model bound to the table it was fitted on. Immutable; scoring is
/// safe from any number of threads.
#[derive(Debug, Clone)]
pub struct FittedModel {
    config: ModelConfig,
    train: Arc<RatingsTable>,
    scorer: Scorer,
}

#[derive(Serialize, Deserialize)]
struct PersistedModel {
    config: ModelConfig,
    train_hash: String,
    state: ModelState,
}

/// Summary written next to persisted models.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelManifest {
    pub algorithm: Algorithm,
    pub config: ModelConfig,
    pub train_hash: String,
    pub n_users: usize,
    pub n_items: usize,
    pub training_curve: Option<Vec<f64>>,
}

/// Fits `config.algorithm` on `train`. Deterministic for a fixed table and
/// config, including its seed.
pub fn fit(
    train: impl Into<Arc<RatingsTable>>,
    config: &ModelConfig,
) -> Result<FittedModel, ModelError> {
    let train = train.into();
    config.validate()?;
    if train.is_empty() {
        return Err(ModelError::EmptyTraining);
    }
    let state = match config.algorithm {
        Algorithm::MostPopular => {
            let theta = PopularityIndex::from_table(&train);
            ModelState::MostPopular {
                theta: train.items().iter().map(|&i| theta.theta(i)).collect(),
            }
        }
        Algorithm::UserKnn => ModelState::Knn(KnnState::fit(
            &train,
            Neighborhood::User,
            config.similarity,
            config.neighborhood_size,
        )),
        Algorithm::ItemKnn => ModelState::Knn(KnnState::fit(
            &train,
            Neighborhood::Item,
            config.similarity,
            config.neighborhood_size,
        )),
        Algorithm::Bmf => ModelState::Factor(FactorState::fit_bmf(&train, &config.sgd())),
        Algorithm::SvdPlusPlus => ModelState::Factor(FactorState::fit_svdpp(&train, &config.sgd())),
    };
    Ok(FittedModel::from_state(config.clone(), train, state))
}

impl FittedModel {
    /// Binds an explicit state to a training table. The state's dense indices
    /// must follow the table's user and item order.
    pub fn from_state(config: ModelConfig, train: Arc<RatingsTable>, state: ModelState) -> Self {
        let scorer = match state {
            ModelState::MostPopular { theta } => Scorer::Popular(theta),
            ModelState::Knn(state) => Scorer::Knn(KnnScorer::new(state, &train)),
            ModelState::Factor(state) => Scorer::Factor(FactorScorer::new(state, &train)),
        };
        Self {
            config,
            train,
            scorer,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn algorithm(&self) -> Algorithm {
        self.config.algorithm
    }

    pub fn train(&self) -> &RatingsTable {
        &self.train
    }

    pub fn state(&self) -> ModelState {
        match &self.scorer {
            Scorer::Popular(theta) => ModelState::MostPopular {
                theta: theta.clone(),
            },
            Scorer::Knn(s) => ModelState::Knn(s.state().clone()),
            Scorer::Factor(s) => ModelState::Factor(s.state().clone()),
        }
    }

    /// Regularized training RMSE per epoch for factor models.
    pub fn training_curve(&self) -> Option<&[f64]> {
        match &self.scorer {
            Scorer::Factor(s) => Some(&s.state().training_curve),
            _ => None,
        }
    }

    /// Score of `item` for `user`. Items absent from training get the fallback of
    /// the algorithm family: θ = 0 for most-popular, the user's mean for KNN and
    /// `μ + b_u` for factor models. Scores are never clamped.
    pub fn score(&self, user: UserId, item: ItemId) -> Result<f64, ModelError> {
        let u = self
            .train
            .user_index(user)
            .ok_or(ModelError::UnknownUser(user))?;
        Ok(self.score_dense(u, self.train.item_index(item)))
    }

    pub(crate) fn score_dense(&self, u: usize, i: Option<usize>) -> f64 {
        match &self.scorer {
            Scorer::Popular(theta) => i.map_or(0.0, |i| theta[i]),
            Scorer::Knn(s) => s.score(u, i),
            Scorer::Factor(s) => s.score(u, i),
        }
    }

    /// Scores of dense user `u` for every training item.
    pub(crate) fn score_all(&self, u: usize) -> Vec<f64> {
        let n_items = self.train.n_items();
        match &self.scorer {
            Scorer::Popular(theta) => theta.clone(),
            Scorer::Knn(s) => s.score_all(u, n_items),
            Scorer::Factor(s) => s.score_all(u, n_items),
        }
    }

    pub fn manifest(&self) -> ModelManifest {
        ModelManifest {
            algorithm: self.config.algorithm,
            config: self.config.clone(),
            train_hash: self.train.content_hash(),
            n_users: self.train.n_users(),
            n_items: self.train.n_items(),
            training_curve: self.training_curve().map(<[f64]>::to_vec),
        }
    }

    /// Writes config, training-table hash and learned state as JSON.
    pub fn save<W: Write>(&self, writer: W) -> Result<(), ModelError> {
        let persisted = PersistedModel {
            config: self.config.clone(),
            train_hash: self.train.content_hash(),
            state: self.state(),
        };
        serde_json::to_writer(writer, &persisted)?;
        Ok(())
    }

    /// Reads a model written by [`FittedModel::save`], checking that `train` is
    /// the table it was fitted on.
    pub fn load<R: Read>(
        reader: R,
        train: impl Into<Arc<RatingsTable>>,
    ) -> Result<Self, ModelError> {
        let train = train.into();
        let persisted: PersistedModel = serde_json::from_reader(reader)?;
        let found = train.content_hash();
        if persisted.train_hash != found {
            return Err(ModelError::TrainingMismatch {
                expected: persisted.train_hash,
                found,
            });
        }
        Ok(Self::from_state(persisted.config, train, persisted.state))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::Rating;

    fn toy() -> Arc<RatingsTable> {
        let mut rows = Vec::new();
        let mut x = 11u32;
        for u in 1..=15 {
            for i in 1..=10 {
                x = x.wrapping_mul(1_103_515_245).wrapping_add(12345);
                if !(x >> 16).is_multiple_of(3) {
                    rows.push(Rating::new(u, i, f64::from((x >> 8) % 5 + 1)));
                }
            }
        }
        Arc::new(RatingsTable::from_ratings(rows).unwrap())
    }

    #[test]
    fn degenerate_configs_rejected() {
        let mut c = ModelConfig::defaults(Algorithm::UserKnn);
        c.neighborhood_size = 0;
        assert!(matches!(fit(toy(), &c), Err(ModelError::Config(_))));
        let mut c = ModelConfig::defaults(Algorithm::Bmf);
        c.factors = 0;
        assert!(matches!(fit(toy(), &c), Err(ModelError::Config(_))));
        c.epochs = 0;
        assert!(fit(toy(), &c).is_ok());
        let mut c = ModelConfig::defaults(Algorithm::SvdPlusPlus);
        c.learning_rate = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn irrelevant_fields_ignored() {
        let mut c = ModelConfig::defaults(Algorithm::MostPopular);
        c.neighborhood_size = 0;
        c.factors = 0;
        assert!(fit(toy(), &c).is_ok());
    }

    #[test]
    fn empty_training_rejected() {
        let empty = Arc::new(RatingsTable::default());
        let c = ModelConfig::defaults(Algorithm::MostPopular);
        assert!(matches!(fit(empty, &c), Err(ModelError::EmptyTraining)));
    }

    #[test]
    fn most_popular_scores_theta() {
        let t = toy();
        let model = fit(
            Arc::clone(&t),
            &ModelConfig::defaults(Algorithm::MostPopular),
        )
        .unwrap();
        let theta = PopularityIndex::from_table(&t);
        for &u in t.users() {
            for &i in t.items() {
                assert_eq!(model.score(u, i).unwrap(), theta.theta(i));
            }
        }
        assert_eq!(model.score(UserId(1), ItemId(999)).unwrap(), 0.0);
    }

    #[test]
    fn unknown_user_is_error() {
        let model = fit(toy(), &ModelConfig::defaults(Algorithm::MostPopular)).unwrap();
        assert!(matches!(
            model.score(UserId(999), ItemId(1)),
            Err(ModelError::UnknownUser(_))
        ));
    }

    #[test]
    fn bmf_zero_parameters_score_global_mean() {
        let t = toy();
        let mut state = FactorState::fit_bmf(&t, &ModelConfig::defaults(Algorithm::Bmf).sgd());
        state.user_factors.iter_mut().for_each(|v| *v = 0.0);
        state.item_factors.iter_mut().for_each(|v| *v = 0.0);
        state.user_bias.iter_mut().for_each(|v| *v = 0.0);
        state.item_bias.iter_mut().for_each(|v| *v = 0.0);
        let model = FittedModel::from_state(
            ModelConfig::defaults(Algorithm::Bmf),
            Arc::clone(&t),
            ModelState::Factor(state),
        );
        assert_eq!(model.score(UserId(3), ItemId(4)).unwrap(), t.mean_rating());
    }

    #[test]
    fn fit_is_bit_reproducible() {
        let t = toy();
        for algorithm in Algorithm::ALL {
            let mut c = ModelConfig::defaults(algorithm);
            c.factors = 5;
            c.epochs = 3;
            let a = fit(Arc::clone(&t), &c).unwrap();
            let b = fit(Arc::clone(&t), &c).unwrap();
            for &u in t.users() {
                for &i in t.items() {
                    assert_eq!(
                        a.score(u, i).unwrap().to_bits(),
                        b.score(u, i).unwrap().to_bits(),
                        "{algorithm}"
                    );
                }
            }
        }
    }

    #[test]
    fn save_load_round_trip() {
        let t = toy();
        for algorithm in Algorithm::ALL {
            let mut c = ModelConfig::defaults(algorithm);
            c.factors = 3;
            c.epochs = 2;
            let model = fit(Arc::clone(&t), &c).unwrap();
            let mut buf = Vec::new();
            model.save(&mut buf).unwrap();
            let loaded = FittedModel::load(&buf[..], Arc::clone(&t)).unwrap();
            for &u in t.users() {
                for &i in t.items() {
                    assert_eq!(model.score(u, i).unwrap(), loaded.score(u, i).unwrap());
                }
            }
        }
    }

    #[test]
    fn load_rejects_other_table() {
        let model = fit(toy(), &ModelConfig::defaults(Algorithm::MostPopular)).unwrap();
        let mut buf = Vec::new();
        model.save(&mut buf).unwrap();
        let other = RatingsTable::from_ratings(vec![Rating::new(1, 1, 3.0)]).unwrap();
        assert!(matches!(
            FittedModel::load(&buf[..], other),
            Err(ModelError::TrainingMismatch { .. })
        ));
    }

    #[test]
    fn algorithm_names_round_trip() {
        for a in Algorithm::ALL {
            assert_eq!(a.name().parse::<Algorithm>().unwrap(), a);
        }
        let err = "slope-one".parse::<Algorithm>().unwrap_err();
        assert!(err.contains("user-knn") && err.contains("svdpp"));
    }
}
