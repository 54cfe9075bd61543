//! Error metrics and the two-sample comparison used to rank algorithms.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("series lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} values, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("non-finite value at position {0}")]
    NonFinite(usize),
    #[error("correlation is undefined for a constant series")]
    ConstantSeries,
    #[error("relative error undefined: experimental value at position {0} is zero")]
    ZeroExperimental(usize),
}

/// Experimental values `y` and model outputs `y'`, index-aligned.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSeries {
    experimental: Vec<f64>,
    computed: Vec<f64>,
}

impl PairedSeries {
    pub fn new(experimental: Vec<f64>, computed: Vec<f64>) -> Result<Self, StatsError> {
        if experimental.len() != computed.len() {
            return Err(StatsError::LengthMismatch(
                experimental.len(),
                computed.len(),
            ));
        }
        if experimental.is_empty() {
            return Err(StatsError::TooShort { needed: 1, got: 0 });
        }
        for (i, (a, b)) in experimental.iter().zip(&computed).enumerate() {
            if !a.is_finite() || !b.is_finite() {
                return Err(StatsError::NonFinite(i));
            }
        }
        Ok(PairedSeries {
            experimental,
            computed,
        })
    }

    pub fn experimental(&self) -> &[f64] {
        &self.experimental
    }

    pub fn computed(&self) -> &[f64] {
        &self.computed
    }

    pub fn len(&self) -> usize {
        self.experimental.len()
    }

    pub fn is_empty(&self) -> bool {
        self.experimental.is_empty()
    }
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Pearson correlation between experimental and computed values, evaluated
/// in centred form.
pub fn pearson_r(s: &PairedSeries) -> Result<f64, StatsError> {
    if s.len() < 2 {
        return Err(StatsError::TooShort {
            needed: 2,
            got: s.len(),
        });
    }
    let my = mean(&s.experimental);
    let mc = mean(&s.computed);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (y, c) in s.experimental.iter().zip(&s.computed) {
        let dy = y - my;
        let dc = c - mc;
        sxy += dy * dc;
        sxx += dy * dy;
        syy += dc * dc;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::ConstantSeries);
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Root mean square error.
pub fn rmse(s: &PairedSeries) -> f64 {
    let sse: f64 = s
        .experimental
        .iter()
        .zip(&s.computed)
        .map(|(y, c)| (y - c) * (y - c))
        .sum();
    (sse / s.len() as f64).sqrt()
}

/// Element-wise `|y' - y| / |y|`.
pub fn relative_errors(s: &PairedSeries) -> Result<Vec<f64>, StatsError> {
    s.experimental
        .iter()
        .zip(&s.computed)
        .enumerate()
        .map(|(i, (y, c))| {
            if *y == 0.0 {
                Err(StatsError::ZeroExperimental(i))
            } else {
                Ok((c - y).abs() / y.abs())
            }
        })
        .collect()
}

/// Five-number summary plus interquartile range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoxSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub iqr: f64,
}

/// Quantile `q` of sorted data by linear interpolation at position
/// `(n - 1) * q`.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    if lo == hi {
        sorted[lo]
    } else {
        sorted[lo] + (sorted[hi] - sorted[lo]) * frac
    }
}

/// # Panics
/// If `xs` is empty or contains NaN.
pub fn box_summary(xs: &[f64]) -> BoxSummary {
    assert!(!xs.is_empty(), "box_summary of an empty sample");
    let mut sorted = xs.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("NaN in box_summary input"));
    let q1 = quantile_sorted(&sorted, 0.25);
    let q3 = quantile_sorted(&sorted, 0.75);
    BoxSummary {
        min: sorted[0],
        q1,
        median: quantile_sorted(&sorted, 0.5),
        q3,
        max: sorted[sorted.len() - 1],
        iqr: q3 - q1,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RankSumMethod {
    Exact,
    NormalApproximation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RankSumResult {
    /// Rank sum of the first sample.
    pub statistic: f64,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: RankSumMethod,
}

/// Combined sample size up to which tie-free data get an exact p-value.
pub const EXACT_LIMIT: usize = 12;

/// Midranks (1-based) of `values`, plus the tie-group sizes.
pub fn midranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end share the average of ranks start+1..=end
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        if end - start > 1 {
            ties.push(end - start);
        }
        start = end;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon rank-sum test of `a` against `b`. Exact when the
/// pooled sample has at most [`EXACT_LIMIT`] values and no ties; otherwise
/// the normal approximation with tie and continuity corrections.
///
/// # Panics
/// If either sample is empty.
pub fn wilcoxon_rank_sum(a: &[f64], b: &[f64]) -> RankSumResult {
    let pooled_has_ties = {
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        !midranks(&pooled).1.is_empty()
    };
    let method = if a.len() + b.len() <= EXACT_LIMIT && !pooled_has_ties {
        RankSumMethod::Exact
    } else {
        RankSumMethod::NormalApproximation
    };
    wilcoxon_rank_sum_with(a, b, method)
}

/// [`wilcoxon_rank_sum`] with the method forced. An exact request on tied
/// data falls back to the approximation.
pub fn wilcoxon_rank_sum_with(a: &[f64], b: &[f64], method: RankSumMethod) -> RankSumResult {
    assert!(
        !a.is_empty() && !b.is_empty(),
        "rank-sum test needs two non-empty samples"
    );
    let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let statistic: f64 = ranks[..a.len()].iter().sum();
    let (m, n) = (a.len(), b.len());

    if method == RankSumMethod::Exact && ties.is_empty() {
        let p_value = exact_p(statistic.round() as usize, m, n);
        return RankSumResult {
            statistic,
            p_value,
            method,
        };
    }

    let big_n = (m + n) as f64;
    let mean = m as f64 * (big_n + 1.0) / 2.0;
    let tie_term: f64 =
        ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / (big_n * (big_n - 1.0));
    let var = m as f64 * n as f64 / 12.0 * ((big_n + 1.0) - tie_term);
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let z = ((statistic - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.cdf(-z)).min(1.0)
    };
    RankSumResult {
        statistic,
        p_value,
        method: RankSumMethod::NormalApproximation,
    }
}

/// Exact two-sided p-value for rank sum `w` of a size-`m` sample among
/// `m + n` distinct ranks, from the full null distribution counted by
/// dynamic programming.
fn exact_p(w: usize, m: usize, n: usize) -> f64 {
    let big_n = m + n;
    let max_sum = big_n * (big_n + 1) / 2;
    // counts[k][s]: subsets of the ranks seen so far with k elements summing to s
    let mut counts = vec![vec![0f64; max_sum + 1]; m + 1];
    counts[0][0] = 1.0;
    for rank in 1..=big_n {
        for k in (1..=m.min(rank)).rev() {
            for s in (rank..=max_sum).rev() {
                counts[k][s] += counts[k - 1][s - rank];
            }
        }
    }
    let dist = &counts[m];
    let total: f64 = dist.iter().sum();
    let lower: f64 = dist[..=w.min(max_sum)].iter().sum();
    let upper: f64 = dist[w.min(max_sum)..].iter().sum();
    (2.0 * lower.min(upper) / total).min(1.0)
}
