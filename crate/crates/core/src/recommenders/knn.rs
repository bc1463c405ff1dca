//! Neighborhood models: user-based and item-based k-nearest-neighbors over
//! explicit ratings.
//!
//! Similarities are computed between rows of a sparse rating matrix (users for
//! user-based, items for item-based) over their co-rated entries. Pairs with
//! fewer than two co-ratings get similarity 0 and no shrinkage is applied. Only
//! the `k` most similar rows with positive similarity are kept as neighbors.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Similarity;
use crate::dataset::RatingsTable;

/// Compressed sparse rows with column indices ascending within each row.
#[derive(Debug, Clone, Default)]
pub(crate) struct Csr {
    offsets: Vec<usize>,
    index: Vec<u32>,
    value: Vec<f64>,
}

impl Csr {
    pub(crate) fn n_rows(&self) -> usize {
        self.offsets.len().saturating_sub(1)
    }

    pub(crate) fn row(&self, r: usize) -> (&[u32], &[f64]) {
        let span = self.offsets[r]..self.offsets[r + 1];
        (&self.index[span.clone()], &self.value[span])
    }

    pub(crate) fn get(&self, r: usize, c: u32) -> Option<f64> {
        let (index, value) = self.row(r);
        index.binary_search(&c).ok().map(|at| value[at])
    }

    fn mean(&self, r: usize) -> Option<f64> {
        let (_, value) = self.row(r);
        (!value.is_empty()).then(|| value.iter().sum::<f64>() / value.len() as f64)
    }

    /// User rows: dense user → (dense item, rating).
    pub(crate) fn by_user(table: &RatingsTable) -> Self {
        let mut csr = Self::with_capacity(table.n_users(), table.len());
        for u in 0..table.n_users() {
            for r in table.ratings_of_user(u) {
                csr.index
                    .push(table.item_index(r.item).expect("indexed item") as u32);
                csr.value.push(r.value);
            }
            csr.offsets.push(csr.index.len());
        }
        csr
    }

    /// Item rows: dense item → (dense user, rating).
    pub(crate) fn by_item(table: &RatingsTable) -> Self {
        let mut csr = Self::with_capacity(table.n_items(), table.len());
        for i in 0..table.n_items() {
            for r in table.ratings_of_item(i) {
                csr.index
                    .push(table.user_index(r.user).expect("indexed user") as u32);
                csr.value.push(r.value);
            }
            csr.offsets.push(csr.index.len());
        }
        csr
    }

    fn with_capacity(rows: usize, nnz: usize) -> Self {
        let mut offsets = Vec::with_capacity(rows + 1);
        offsets.push(0);
        Self {
            offsets,
            index: Vec::with_capacity(nnz),
            value: Vec::with_capacity(nnz),
        }
    }
}

/// Which side of the rating matrix neighborhoods are formed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Neighborhood {
    User,
    Item,
}

/// Per-thread accumulators for one similarity row.
struct Scratch {
    count: Vec<u32>,
    sx: Vec<f64>,
    sy: Vec<f64>,
    sxx: Vec<f64>,
    syy: Vec<f64>,
    sxy: Vec<f64>,
    touched: Vec<u32>,
}

impl Scratch {
    fn new(n: usize) -> Self {
        Self {
            count: vec![0; n],
            sx: vec![0.0; n],
            sy: vec![0.0; n],
            sxx: vec![0.0; n],
            syy: vec![0.0; n],
            sxy: vec![0.0; n],
            touched: Vec::new(),
        }
    }
}

/// Similarity of row `a` to every other row sharing at least one column, as
/// `(row, similarity)` pairs with zero similarities dropped. `norms` holds the
/// full-vector L2 norm of each row and is only read for cosine.
fn similarity_row(
    a: usize,
    rows: &Csr,
    cols: &Csr,
    metric: Similarity,
    norms: &[f64],
    s: &mut Scratch,
) -> Vec<(u32, f64)> {
    let (a_cols, a_vals) = rows.row(a);
    for (&c, &x) in a_cols.iter().zip(a_vals) {
        let (b_rows, b_vals) = cols.row(c as usize);
        for (&b, &y) in b_rows.iter().zip(b_vals) {
            if b as usize == a {
                continue;
            }
            let b = b as usize;
            if s.count[b] == 0 {
                s.touched.push(b as u32);
            }
            s.count[b] += 1;
            s.sxy[b] += x * y;
            if metric == Similarity::Pearson {
                s.sx[b] += x;
                s.sy[b] += y;
                s.sxx[b] += x * x;
                s.syy[b] += y * y;
            }
        }
    }

    let mut out = Vec::with_capacity(s.touched.len());
    for &b in &s.touched {
        let b = b as usize;
        let n = f64::from(s.count[b]);
        let sim = if s.count[b] < 2 {
            0.0
        } else {
            match metric {
                Similarity::Cosine => {
                    let denom = norms[a] * norms[b];
                    if denom > 0.0 {
                        s.sxy[b] / denom
                    } else {
                        0.0
                    }
                }
                Similarity::Pearson => {
                    let cov = s.sxy[b] - s.sx[b] * s.sy[b] / n;
                    let vx = s.sxx[b] - s.sx[b] * s.sx[b] / n;
                    let vy = s.syy[b] - s.sy[b] * s.sy[b] / n;
                    if vx > 0.0 && vy > 0.0 {
                        (cov / (vx * vy).sqrt()).clamp(-1.0, 1.0)
                    } else {
                        0.0
                    }
                }
            }
        };
        if sim != 0.0 {
            out.push((b as u32, sim));
        }
        s.count[b] = 0;
        s.sx[b] = 0.0;
        s.sy[b] = 0.0;
        s.sxx[b] = 0.0;
        s.syy[b] = 0.0;
        s.sxy[b] = 0.0;
    }
    s.touched.clear();
    out
}

fn row_norms(rows: &Csr) -> Vec<f64> {
    (0..rows.n_rows())
        .map(|r| rows.row(r).1.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect()
}

fn oriented(table: &RatingsTable, side: Neighborhood) -> (Csr, Csr) {
    match side {
        Neighborhood::User => (Csr::by_user(table), Csr::by_item(table)),
        Neighborhood::Item => (Csr::by_item(table), Csr::by_user(table)),
    }
}

/// Dense pairwise similarity matrix with a zero diagonal. Quadratic in the number
/// of rows; meant for inspection of small tables.
pub fn similarity_matrix(
    table: &RatingsTable,
    side: Neighborhood,
    metric: Similarity,
) -> Vec<Vec<f64>> {
    let (rows, cols) = oriented(table, side);
    let norms = row_norms(&rows);
    let n = rows.n_rows();
    let mut scratch = Scratch::new(n);
    (0..n)
        .map(|a| {
            let mut dense = vec![0.0; n];
            for (b, sim) in similarity_row(a, &rows, &cols, metric, &norms, &mut scratch) {
                dense[b as usize] = sim;
            }
            dense
        })
        .collect()
}

/// Top-`k` positive neighbors of every row, by descending similarity with ties
/// broken by ascending row index. Rows are processed in parallel and collected
/// in index order, so the result does not depend on the thread count.
fn neighbor_lists(rows: &Csr, cols: &Csr, metric: Similarity, k: usize) -> Vec<Vec<(u32, f64)>> {
    let norms = row_norms(rows);
    let n = rows.n_rows();
    (0..n)
        .into_par_iter()
        .map_init(
            || Scratch::new(n),
            |scratch, a| {
                let mut sims = similarity_row(a, rows, cols, metric, &norms, scratch);
                sims.retain(|&(_, s)| s > 0.0);
                sims.sort_unstable_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
                sims.truncate(k);
                sims
            },
        )
        .collect()
}

/// Learned state of a neighborhood model.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KnnState {
    pub side: Neighborhood,
    pub similarity: Similarity,
    pub k: usize,
    /// Neighbors of each row (user or item, by `side`), dense indices.
    pub neighbors: Vec<Vec<(u32, f64)>>,
}

impl KnnState {
    pub fn fit(table: &RatingsTable, side: Neighborhood, similarity: Similarity, k: usize) -> Self {
        let (rows, cols) = oriented(table, side);
        Self {
            side,
            similarity,
            k,
            neighbors: neighbor_lists(&rows, &cols, similarity, k),
        }
    }
}

/// A fitted neighborhood model bound to its training data.
#[derive(Debug, Clone)]
pub(crate) struct KnnScorer {
    state: KnnState,
    users: Csr,
    user_means: Vec<f64>,
    item_means: Vec<f64>,
    /// Item-based only: for each item i, the items j that list i as a neighbor.
    reverse: Vec<Vec<(u32, f64)>>,
}

impl KnnScorer {
    pub(crate) fn new(state: KnnState, table: &RatingsTable) -> Self {
        let users = Csr::by_user(table);
        let items = Csr::by_item(table);
        let user_means = (0..users.n_rows())
            .map(|u| users.mean(u).unwrap_or(0.0))
            .collect();
        let item_means = (0..items.n_rows())
            .map(|i| items.mean(i).unwrap_or(0.0))
            .collect();
        let mut reverse = Vec::new();
        if state.side == Neighborhood::Item {
            reverse = vec![Vec::new(); items.n_rows()];
            for (j, list) in state.neighbors.iter().enumerate() {
                for &(i, sim) in list {
                    reverse[i as usize].push((j as u32, sim));
                }
            }
        }
        Self {
            state,
            users,
            user_means,
            item_means,
            reverse,
        }
    }

    pub(crate) fn state(&self) -> &KnnState {
        &self.state
    }

    /// Prediction for dense user `u` and dense item `i`; `None` for an item absent
    /// from training, which falls back to the user's mean.
    pub(crate) fn score(&self, u: usize, i: Option<usize>) -> f64 {
        let fallback = self.user_means[u];
        let Some(i) = i else { return fallback };
        let (mut num, mut den) = (0.0, 0.0);
        match self.state.side {
            Neighborhood::User => {
                for &(v, sim) in &self.state.neighbors[u] {
                    if let Some(r) = self.users.get(v as usize, i as u32) {
                        num += sim * (r - self.user_means[v as usize]);
                        den += sim.abs();
                    }
                }
                if den > 0.0 {
                    fallback + num / den
                } else {
                    fallback
                }
            }
            Neighborhood::Item => {
                for &(j, sim) in &self.state.neighbors[i] {
                    if let Some(r) = self.users.get(u, j) {
                        num += sim * (r - self.item_means[j as usize]);
                        den += sim.abs();
                    }
                }
                if den > 0.0 {
                    self.item_means[i] + num / den
                } else {
                    fallback
                }
            }
        }
    }

    /// Scores of dense user `u` for every training item, accumulated from the
    /// neighbor side so the cost is proportional to the touched ratings.
    pub(crate) fn score_all(&self, u: usize, n_items: usize) -> Vec<f64> {
        let mut num = vec![0.0; n_items];
        let mut den = vec![0.0; n_items];
        match self.state.side {
            Neighborhood::User => {
                for &(v, sim) in &self.state.neighbors[u] {
                    let mean_v = self.user_means[v as usize];
                    let (items, values) = self.users.row(v as usize);
                    for (&i, &r) in items.iter().zip(values) {
                        num[i as usize] += sim * (r - mean_v);
                        den[i as usize] += sim.abs();
                    }
                }
                let mean_u = self.user_means[u];
                num.iter()
                    .zip(&den)
                    .map(|(&n, &d)| if d > 0.0 { mean_u + n / d } else { mean_u })
                    .collect()
            }
            Neighborhood::Item => {
                let (items, values) = self.users.row(u);
                for (&i, &r) in items.iter().zip(values) {
                    let dev = r - self.item_means[i as usize];
                    for &(j, sim) in &self.reverse[i as usize] {
                        num[j as usize] += sim * dev;
                        den[j as usize] += sim.abs();
                    }
                }
                let mean_u = self.user_means[u];
                (0..n_items)
                    .map(|j| {
                        if den[j] > 0.0 {
                            self.item_means[j] + num[j] / den[j]
                        } else {
                            mean_u
                        }
                    })
                    .collect()
            }
        }
    }
}
