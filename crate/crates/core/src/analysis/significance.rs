use statrs::distribution::{ContinuousCDF, Normal, StudentsT};

use super::AnalysisError;

/// Two-sided p-values for a difference between two independent samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignificanceResult {
    /// Welch unequal-variance t-test.
    pub welch_p: f64,
    /// Mann-Whitney U, normal approximation with tie and continuity correction.
    pub mann_whitney_p: f64,
}

impl SignificanceResult {
    pub fn significant_at(&self, alpha: f64) -> bool {
        self.welch_p < alpha
    }
}

/// Compares `a` and `b` with both tests. Each sample needs at least two values.
/// When every value in both samples is the same, both p-values are 1.
pub fn significance_test(a: &[f64], b: &[f64]) -> Result<SignificanceResult, AnalysisError> {
    if a.len() < 2 || b.len() < 2 {
        return Err(AnalysisError::SampleTooSmall {
            a: a.len(),
            b: b.len(),
        });
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(AnalysisError::NonFiniteSample);
    }
    Ok(SignificanceResult {
        welch_p: welch_p(a, b),
        mann_whitney_p: mann_whitney_p(a, b),
    })
}

fn mean_var(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let ss: f64 = x.iter().map(|v| (v - mean) * (v - mean)).sum();
    (mean, ss / (n - 1.0))
}

fn welch_p(a: &[f64], b: &[f64]) -> f64 {
    let (ma, va) = mean_var(a);
    let (mb, vb) = mean_var(b);
    let (sa, sb) = (va / a.len() as f64, vb / b.len() as f64);
    let se2 = sa + sb;
    if se2 == 0.0 {
        return if ma == mb { 1.0 } else { 0.0 };
    }
    let t = (ma - mb).abs() / se2.sqrt();
    let df = se2 * se2 / (sa * sa / (a.len() - 1) as f64 + sb * sb / (b.len() - 1) as f64);
    let dist = StudentsT::new(0.0, 1.0, df).expect("positive degrees of freedom");
    (2.0 * dist.sf(t)).min(1.0)
}

/// Midranks of the pooled sample plus the tie term `Σ(t³ − t)`.
fn midranks(a: &[f64], b: &[f64]) -> (Vec<f64>, f64) {
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let mut order: Vec<usize> = (0..pooled.len()).collect();
    order.sort_by(|&i, &j| pooled[i].total_cmp(&pooled[j]));
    let mut ranks = vec![0.0; pooled.len()];
    let mut ties = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && pooled[order[end]] == pooled[order[start]] {
            end += 1;
        }
        let rank = (start + end + 1) as f64 / 2.0;
        for &ix in &order[start..end] {
            ranks[ix] = rank;
        }
        let t = (end - start) as f64;
        ties += t * t * t - t;
        start = end;
    }
    (ranks, ties)
}

fn mann_whitney_p(a: &[f64], b: &[f64]) -> f64 {
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let n = na + nb;
    let (ranks, ties) = midranks(a, b);
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();
    let u_a = rank_sum_a - na * (na + 1.0) / 2.0;
    let mu = na * nb / 2.0;
    let var = na * nb / 12.0 * ((n + 1.0) - ties / (n * (n - 1.0)));
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((u_a - mu).abs() - 0.5) / var.sqrt();
    (2.0 * Normal::standard().sf(z)).min(1.0)
}
