//! Relative-error measures against best-known values and the Wilcoxon
//! signed-rank test used to compare strategies.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::problem::Direction;

/// Largest non-zero difference count handled by the exact null
/// distribution; larger samples use the normal approximation.
pub const WILCOXON_EXACT_MAX: usize = 50;

/// Below this many non-zero differences the result is flagged.
pub const WILCOXON_SMALL_SAMPLE: usize = 5;

pub const SIGNIFICANCE_LEVEL: f64 = 0.05;

fn relative_error(value: f64, bks: f64) -> f64 {
    (value - bks).abs() * 100.0 / bks
}

/// Arithmetic mean, accumulated as offsets from the first value so that a
/// constant sample returns that value exactly.
pub fn mean(values: &[f64]) -> f64 {
    let base = values[0];
    base + values.iter().map(|v| v - base).sum::<f64>() / values.len() as f64
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Sample standard deviation over the square root of the count; zero for a
/// single value.
pub fn standard_error(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return 0.0;
    }
    let m = mean(values);
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (n - 1) as f64;
    var.sqrt() / (n as f64).sqrt()
}

/// Average relative percentage error: `|mean(obj) - bks| * 100 / bks`.
pub fn compute_arpe(objectives: &[f64], bks: f64) -> f64 {
    assert!(!objectives.is_empty() && bks > 0.0);
    relative_error(mean(objectives), bks)
}

/// Median relative percentage error.
pub fn compute_mrpe(objectives: &[f64], bks: f64) -> f64 {
    assert!(!objectives.is_empty() && bks > 0.0);
    relative_error(median(objectives), bks)
}

/// Relative percentage error of the best seed.
pub fn compute_rpe(objectives: &[f64], bks: f64, direction: Direction) -> f64 {
    assert!(!objectives.is_empty() && bks > 0.0);
    let best = objectives[1..].iter().fold(objectives[0], |b, &o| direction.best(b, o));
    relative_error(best, bks)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub w_plus: f64,
    pub w_minus: f64,
    /// Pairs with a non-zero difference.
    pub n: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    /// Whether `p_value` comes from the exact null distribution.
    pub exact: bool,
    /// Fewer than [`WILCOXON_SMALL_SAMPLE`] non-zero differences.
    pub small_sample: bool,
}

impl WilcoxonResult {
    pub fn significant(&self) -> bool {
        self.p_value < SIGNIFICANCE_LEVEL
    }
}

/// Average ranks (1-based) of `values`, ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = avg;
        }
        i = j + 1;
    }
    ranks
}

/// Two-sided Wilcoxon signed-rank test on matched pairs `(x, y)` with
/// differences `x - y`.
///
/// Zero differences are dropped and tied magnitudes share average ranks.
/// Up to [`WILCOXON_EXACT_MAX`] non-zero differences the p-value is exact
/// (the null distribution of `W+` over all sign assignments of the actual
/// ranks, counted by dynamic programming); beyond that it uses the normal
/// approximation with tie and continuity corrections.
pub fn wilcoxon_signed_rank(pairs: &[(f64, f64)]) -> WilcoxonResult {
    let diffs: Vec<f64> = pairs.iter().map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return WilcoxonResult {
            statistic: 0.0,
            w_plus: 0.0,
            w_minus: 0.0,
            n: 0,
            p_value: 1.0,
            exact: true,
            small_sample: true,
        };
    }
    let ranks = average_ranks(&diffs.iter().map(|d| d.abs()).collect::<Vec<_>>());
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let w_minus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d < 0.0).map(|(_, r)| r).sum();
    let statistic = w_plus.min(w_minus);

    let (p_value, exact) = if n <= WILCOXON_EXACT_MAX {
        (exact_p_value(&ranks, statistic), true)
    } else {
        (normal_p_value(&ranks, statistic), false)
    };
    WilcoxonResult {
        statistic,
        w_plus,
        w_minus,
        n,
        p_value,
        exact,
        small_sample: n < WILCOXON_SMALL_SAMPLE,
    }
}

/// `P(min(W+, W-) <= w)` under the sign-flip null; equals
/// `2 * P(W+ <= w)` capped at 1 because the null is symmetric.
fn exact_p_value(ranks: &[f64], w: f64) -> f64 {
    // Average ranks are multiples of 1/2, so doubled ranks are integers.
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let total: usize = doubled.iter().sum();
    let mut counts = vec![0.0f64; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let limit = (w * 2.0).round() as usize;
    let below: f64 = counts[..=limit.min(total)].iter().sum();
    let all = 2f64.powi(ranks.len() as i32);
    (2.0 * below / all).min(1.0)
}

fn normal_p_value(ranks: &[f64], w: f64) -> f64 {
    let n = ranks.len() as f64;
    let mean = n * (n + 1.0) / 4.0;
    let mut tie_term = 0.0;
    let mut sorted = ranks.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        tie_term += t * t * t - t;
        i = j + 1;
    }
    let var = n * (n + 1.0) * (2.0 * n + 1.0) / 24.0 - tie_term / 48.0;
    if var <= 0.0 {
        return 1.0;
    }
    let z = ((w - mean + 0.5) / var.sqrt()).min(0.0);
    let normal = Normal::standard();
    (2.0 * normal.cdf(z)).min(1.0)
}
