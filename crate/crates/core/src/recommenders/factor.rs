//! Latent-factor models trained by stochastic gradient descent on regularized
//! squared error: biased matrix factorization and SVD++.
//!
//! Prediction rules, with μ the global training mean:
//!
//! - biased MF: `μ + b_u + b_i + p_u·q_i`
//! - SVD++: `μ + b_u + b_i + q_i·(p_u + |Γ_u|^(-1/2) Σ_{j∈Γ_u} y_j)`
//!
//! Biases start at zero and factor entries are drawn uniformly from
//! `[-0.01, 0.01]`. Each epoch visits the training records in a freshly shuffled
//! order.

use serde::{Deserialize, Serialize};

use crate::dataset::RatingsTable;
use crate::rng::SeededRng;

use super::knn::Csr;

const INIT_SCALE: f64 = 0.01;

/// Learned parameters. Factor matrices are row-major with `factors` columns.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorState {
    pub factors: usize,
    pub global_mean: f64,
    pub user_bias: Vec<f64>,
    pub item_bias: Vec<f64>,
    pub user_factors: Vec<f64>,
    pub item_factors: Vec<f64>,
    /// SVD++ implicit item factors `y_j`; `None` for biased MF.
    pub implicit_factors: Option<Vec<f64>>,
    /// Regularized RMSE on the training data at initialization and after every
    /// epoch.
    pub training_curve: Vec<f64>,
}

/// Pointwise loss for one rating under biased MF:
/// `½e² + ½λ(b_u² + b_i² + ‖p_u‖² + ‖q_i‖²)` with `e = r − (μ + b_u + b_i + p_u·q_i)`.
pub fn bmf_pointwise_loss(
    global_mean: f64,
    rating: f64,
    regularization: f64,
    user_bias: f64,
    item_bias: f64,
    user: &[f64],
    item: &[f64],
) -> f64 {
    let err = rating - (global_mean + user_bias + item_bias + dot(user, item));
    let norm = user_bias * user_bias + item_bias * item_bias + dot(user, user) + dot(item, item);
    0.5 * err * err + 0.5 * regularization * norm
}

/// Gradient of [`bmf_pointwise_loss`], returned as `(∂b_u, ∂b_i)` with the factor
/// gradients written to `grad_user` and `grad_item`. The SGD step moves every
/// parameter by `−learning_rate × gradient`.
#[allow(clippy::too_many_arguments)]
pub fn bmf_pointwise_gradient(
    global_mean: f64,
    rating: f64,
    regularization: f64,
    user_bias: f64,
    item_bias: f64,
    user: &[f64],
    item: &[f64],
    grad_user: &mut [f64],
    grad_item: &mut [f64],
) -> (f64, f64) {
    let err = rating - (global_mean + user_bias + item_bias + dot(user, item));
    for f in 0..user.len() {
        grad_user[f] = -err * item[f] + regularization * user[f];
        grad_item[f] = -err * user[f] + regularization * item[f];
    }
    (
        -err + regularization * user_bias,
        -err + regularization * item_bias,
    )
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// SGD hyperparameters shared by both trainers.
#[derive(Debug, Clone, Copy)]
pub(crate) struct SgdSettings {
    pub factors: usize,
    pub learning_rate: f64,
    pub regularization: f64,
    pub epochs: usize,
    pub seed: u64,
}

fn init_factors(rng: &mut SeededRng, len: usize) -> Vec<f64> {
    (0..len)
        .map(|_| rng.uniform(-INIT_SCALE, INIT_SCALE))
        .collect()
}

impl FactorState {
    fn initial(table: &RatingsTable, settings: &SgdSettings, implicit: bool) -> (Self, SeededRng) {
        let mut rng = SeededRng::new(settings.seed);
        let f = settings.factors;
        let user_factors = init_factors(&mut rng, table.n_users() * f);
        let item_factors = init_factors(&mut rng, table.n_items() * f);
        let implicit_factors = implicit.then(|| init_factors(&mut rng, table.n_items() * f));
        let state = Self {
            factors: f,
            global_mean: table.mean_rating(),
            user_bias: vec![0.0; table.n_users()],
            item_bias: vec![0.0; table.n_items()],
            user_factors,
            item_factors,
            implicit_factors,
            training_curve: Vec::new(),
        };
        (state, rng)
    }

    fn user_row(&self, u: usize) -> &[f64] {
        &self.user_factors[u * self.factors..(u + 1) * self.factors]
    }

    fn item_row(&self, i: usize) -> &[f64] {
        &self.item_factors[i * self.factors..(i + 1) * self.factors]
    }

    /// Trains biased MF. The record order is reshuffled every epoch.
    pub(crate) fn fit_bmf(table: &RatingsTable, settings: &SgdSettings) -> Self {
        let (mut state, mut rng) = Self::initial(table, settings, false);
        let users = Csr::by_user(table);
        let records: Vec<(u32, u32, f64)> = (0..users.n_rows())
            .flat_map(|u| {
                let (items, values) = users.row(u);
                items
                    .iter()
                    .zip(values)
                    .map(move |(&i, &r)| (u as u32, i, r))
            })
            .collect();
        let f = settings.factors;
        let (lr, reg) = (settings.learning_rate, settings.regularization);
        let mut order: Vec<usize> = (0..records.len()).collect();
        let mut grad_user = vec![0.0; f];
        let mut grad_item = vec![0.0; f];

        state
            .training_curve
            .push(state.regularized_rmse(&users, reg));
        for _ in 0..settings.epochs {
            rng.shuffle(&mut order);
            for &pos in &order {
                let (u, i, r) = records[pos];
                let (u, i) = (u as usize, i as usize);
                let (p, q) = (u * f..(u + 1) * f, i * f..(i + 1) * f);
                let (gbu, gbi) = bmf_pointwise_gradient(
                    state.global_mean,
                    r,
                    reg,
                    state.user_bias[u],
                    state.item_bias[i],
                    &state.user_factors[p.clone()],
                    &state.item_factors[q.clone()],
                    &mut grad_user,
                    &mut grad_item,
                );
                state.user_bias[u] -= lr * gbu;
                state.item_bias[i] -= lr * gbi;
                for (w, g) in state.user_factors[p].iter_mut().zip(&grad_user) {
                    *w -= lr * g;
                }
                for (w, g) in state.item_factors[q].iter_mut().zip(&grad_item) {
                    *w -= lr * g;
                }
            }
            state
                .training_curve
                .push(state.regularized_rmse(&users, reg));
        }
        state
    }

    /// Trains SVD++. Users are visited in a freshly shuffled order each epoch and
    /// each user's ratings in shuffled order. The implicit term of a user is held
    /// fixed while that user's ratings are processed and the accumulated `y_j`
    /// gradient is applied once at the end of the user, which keeps an epoch
    /// linear in the number of ratings.
    pub(crate) fn fit_svdpp(table: &RatingsTable, settings: &SgdSettings) -> Self {
        let (mut state, mut rng) = Self::initial(table, settings, true);
        let users = Csr::by_user(table);
        let f = settings.factors;
        let (lr, reg) = (settings.learning_rate, settings.regularization);
        let mut user_order: Vec<usize> = (0..users.n_rows()).collect();
        let mut implicit_sum = vec![0.0; f];
        let mut y_grad = vec![0.0; f];
        let mut combined = vec![0.0; f];
        let mut positions: Vec<usize> = Vec::new();

        state
            .training_curve
            .push(state.regularized_rmse(&users, reg));
        for _ in 0..settings.epochs {
            rng.shuffle(&mut user_order);
            for &u in &user_order {
                let (items, values) = users.row(u);
                if items.is_empty() {
                    continue;
                }
                let norm = (items.len() as f64).powf(-0.5);
                let y = state.implicit_factors.as_mut().expect("svd++ state");
                implicit_sum.iter_mut().for_each(|v| *v = 0.0);
                for &j in items {
                    for (acc, v) in implicit_sum
                        .iter_mut()
                        .zip(&y[j as usize * f..(j as usize + 1) * f])
                    {
                        *acc += v;
                    }
                }
                implicit_sum.iter_mut().for_each(|v| *v *= norm);
                y_grad.iter_mut().for_each(|v| *v = 0.0);

                positions.clear();
                positions.extend(0..items.len());
                rng.shuffle(&mut positions);
                for &pos in &positions {
                    let (i, r) = (items[pos] as usize, values[pos]);
                    let p = u * f..(u + 1) * f;
                    let q = i * f..(i + 1) * f;
                    for ((c, pu), z) in combined
                        .iter_mut()
                        .zip(&state.user_factors[p.clone()])
                        .zip(&implicit_sum)
                    {
                        *c = pu + z;
                    }
                    let pred = state.global_mean
                        + state.user_bias[u]
                        + state.item_bias[i]
                        + dot(&state.item_factors[q.clone()], &combined);
                    let err = r - pred;
                    state.user_bias[u] += lr * (err - reg * state.user_bias[u]);
                    state.item_bias[i] += lr * (err - reg * state.item_bias[i]);
                    for k in 0..f {
                        let pu = state.user_factors[p.start + k];
                        let qi = state.item_factors[q.start + k];
                        state.user_factors[p.start + k] += lr * (err * qi - reg * pu);
                        state.item_factors[q.start + k] += lr * (err * combined[k] - reg * qi);
                        y_grad[k] += err * norm * qi;
                    }
                }

                let y = state.implicit_factors.as_mut().expect("svd++ state");
                let decay = reg * items.len() as f64;
                for &j in items {
                    for (w, g) in y[j as usize * f..(j as usize + 1) * f]
                        .iter_mut()
                        .zip(&y_grad)
                    {
                        *w += lr * (g - decay * *w);
                    }
                }
            }
            state
                .training_curve
                .push(state.regularized_rmse(&users, reg));
        }
        state
    }

    /// Sum over users of `|Γ_u|^(-1/2) Σ_{j∈Γ_u} y_j`, or zeros for biased MF.
    pub(crate) fn implicit_terms(&self, users: &Csr) -> Vec<f64> {
        let f = self.factors;
        let mut out = vec![0.0; users.n_rows() * f];
        let Some(y) = &self.implicit_factors else {
            return out;
        };
        for u in 0..users.n_rows() {
            let (items, _) = users.row(u);
            if items.is_empty() {
                continue;
            }
            let norm = (items.len() as f64).powf(-0.5);
            let row = &mut out[u * f..(u + 1) * f];
            for &j in items {
                for (acc, v) in row.iter_mut().zip(&y[j as usize * f..(j as usize + 1) * f]) {
                    *acc += v;
                }
            }
            row.iter_mut().for_each(|v| *v *= norm);
        }
        out
    }

    /// `sqrt(Σ_(u,i) [e² + λ·(b_u² + b_i² + ‖p_u‖² + ‖q_i‖² (+ Σ_{j∈Γ_u}‖y_j‖²))] / n)`,
    /// the per-record objective that SGD descends.
    pub(crate) fn regularized_rmse(&self, users: &Csr, regularization: f64) -> f64 {
        let implicit = self.implicit_terms(users);
        let f = self.factors;
        let sq = |v: &[f64]| dot(v, v);
        let (mut total, mut n) = (0.0, 0usize);
        for u in 0..users.n_rows() {
            let (items, values) = users.row(u);
            let pu = self.user_row(u);
            let z = &implicit[u * f..(u + 1) * f];
            let y_norm: f64 = match &self.implicit_factors {
                Some(y) => items
                    .iter()
                    .map(|&j| sq(&y[j as usize * f..(j as usize + 1) * f]))
                    .sum(),
                None => 0.0,
            };
            for (&i, &r) in items.iter().zip(values) {
                let i = i as usize;
                let qi = self.item_row(i);
                let pred = self.global_mean
                    + self.user_bias[u]
                    + self.item_bias[i]
                    + qi.iter()
                        .zip(pu.iter().zip(z))
                        .map(|(q, (p, z))| q * (p + z))
                        .sum::<f64>();
                let err = r - pred;
                let penalty = self.user_bias[u].powi(2)
                    + self.item_bias[i].powi(2)
                    + sq(pu)
                    + sq(qi)
                    + y_norm;
                total += err * err + regularization * penalty;
                n += 1;
            }
        }
        if n == 0 {
            0.0
        } else {
            (total / n as f64).sqrt()
        }
    }
}

/// A factor model bound to its training data, with each user's combined vector
/// `p_u (+ implicit term)` precomputed.
#[derive(Debug, Clone)]
pub(crate) struct FactorScorer {
    state: FactorState,
    combined: Vec<f64>,
}

impl FactorScorer {
    pub(crate) fn new(state: FactorState, table: &RatingsTable) -> Self {
        let users = Csr::by_user(table);
        let mut combined = state.implicit_terms(&users);
        for (c, p) in combined.iter_mut().zip(&state.user_factors) {
            *c += p;
        }
        Self { state, combined }
    }

    pub(crate) fn state(&self) -> &FactorState {
        &self.state
    }

    /// Score for dense user `u`; an item absent from training contributes no bias
    /// and no factors, leaving `μ + b_u`.
    pub(crate) fn score(&self, u: usize, i: Option<usize>) -> f64 {
        let s = &self.state;
        let f = s.factors;
        let base = s.global_mean + s.user_bias[u];
        match i {
            Some(i) => {
                base + s.item_bias[i] + dot(s.item_row(i), &self.combined[u * f..(u + 1) * f])
            }
            None => base,
        }
    }

    pub(crate) fn score_all(&self, u: usize, n_items: usize) -> Vec<f64> {
        (0..n_items).map(|i| self.score(u, Some(i))).collect()
    }
}
