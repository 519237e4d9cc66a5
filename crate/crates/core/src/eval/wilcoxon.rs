use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{Error, Result};

/// Largest number of non-zero differences handled by exact enumeration.
pub const EXACT_MAX_N: usize = 12;

/// Smallest number of non-zero differences accepted.
pub const MIN_N: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of signed ranks of `a - b`.
    pub w_statistic: f64,
    /// Two-sided p-value, `P(|W| >= |w|)`.
    pub p_value: f64,
    /// One-sided `P(W >= w)`.
    pub p_greater: f64,
    /// One-sided `P(W <= w)`.
    pub p_less: f64,
    pub n_effective: usize,
    pub method: WilcoxonMethod,
}

/// Paired Wilcoxon signed-rank test on `a - b`.
///
/// Zero differences are dropped, absolute differences get tie-averaged
/// ranks, and `W` is the sum of signed ranks. Up to [`EXACT_MAX_N`]
/// non-zero differences the null distribution is enumerated over all sign
/// assignments; beyond that a normal approximation with variance
/// `Σ rank²` (which carries the tie correction) is used.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::Dimension(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let diffs: Vec<f64> = a
        .iter()
        .zip(b)
        .map(|(x, y)| x - y)
        .filter(|d| *d != 0.0)
        .collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(Error::Metric("non-finite difference".into()));
    }
    if diffs.is_empty() {
        return Err(Error::AllDifferencesZero);
    }
    let n = diffs.len();
    if n < MIN_N {
        return Err(Error::Metric(format!(
            "need at least {MIN_N} non-zero differences, have {n}"
        )));
    }

    let ranks2 = doubled_ranks(&diffs);
    let w2: i64 = diffs
        .iter()
        .zip(&ranks2)
        .map(|(d, &r)| if *d > 0.0 { r } else { -r })
        .sum();
    let w_statistic = w2 as f64 / 2.0;

    if n <= EXACT_MAX_N {
        let (ge, le, abs_ge) = enumerate_tails(&ranks2, w2);
        let total = (1u64 << n) as f64;
        Ok(WilcoxonResult {
            w_statistic,
            p_value: (abs_ge as f64 / total).min(1.0),
            p_greater: ge as f64 / total,
            p_less: le as f64 / total,
            n_effective: n,
            method: WilcoxonMethod::Exact,
        })
    } else {
        let var: f64 = ranks2.iter().map(|&r| (r as f64 / 2.0).powi(2)).sum();
        let z = w_statistic / var.sqrt();
        let upper = |x: f64| 0.5 * erfc(x / std::f64::consts::SQRT_2);
        Ok(WilcoxonResult {
            w_statistic,
            p_value: erfc(z.abs() / std::f64::consts::SQRT_2).min(1.0),
            p_greater: upper(z),
            p_less: upper(-z),
            n_effective: n,
            method: WilcoxonMethod::Normal,
        })
    }
}

/// Tie-averaged ranks of `|d|`, times two so they are integers.
fn doubled_ranks(diffs: &[f64]) -> Vec<i64> {
    let n = diffs.len();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&i, &j| diffs[i].abs().total_cmp(&diffs[j].abs()));
    let mut ranks = vec![0i64; n];
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && diffs[idx[end]].abs() == diffs[idx[start]].abs() {
            end += 1;
        }
        // ranks start+1 ..= end, doubled average = start + end + 1
        let r2 = (start + end + 1) as i64;
        for &i in &idx[start..end] {
            ranks[i] = r2;
        }
        start = end;
    }
    ranks
}

/// Counts of sign assignments with `W >= w`, `W <= w` and `|W| >= |w|`.
fn enumerate_tails(ranks2: &[i64], w2: i64) -> (u64, u64, u64) {
    let n = ranks2.len();
    let (mut ge, mut le, mut abs_ge) = (0, 0, 0);
    for mask in 0u64..(1 << n) {
        let s: i64 = ranks2
            .iter()
            .enumerate()
            .map(|(i, &r)| if mask >> i & 1 == 1 { r } else { -r })
            .sum();
        ge += (s >= w2) as u64;
        le += (s <= w2) as u64;
        abs_ge += (s.abs() >= w2.abs()) as u64;
    }
    (ge, le, abs_ge)
}
