//! Wilcoxon signed-rank test for paired samples.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of non-zero differences for which the null distribution is
/// enumerated exactly.
pub const EXACT_MAX_N: usize = 15;

/// Absolute differences closer than this (relative to their magnitude) are
/// treated as tied, so that e.g. `0.5 - 0.4833` and `0.6 - 0.5833` share a
/// rank despite rounding.
const TIE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// `min(W+, W-)`.
    pub statistic: f64,
    pub p_value: f64,
    /// Number of non-zero differences.
    pub n: usize,
    pub exact: bool,
}

/// Average ranks of `values` (ascending), with near-equal values tied.
/// Returned ranks are doubled so that they stay integral.
fn doubled_ranks(values: &[f64]) -> (Vec<u64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        let v = values[order[i]];
        while j < order.len() && values[order[j]] - v <= TIE_TOLERANCE * v.abs().max(1.0) {
            j += 1;
        }
        // ranks i+1 ..= j averaged, doubled: (i + 1 + j)
        for &o in &order[i..j] {
            ranks[o] = (i + 1 + j) as u64;
        }
        ties.push(j - i);
        i = j;
    }
    (ranks, ties)
}

/// Two-sided Wilcoxon signed-rank test of `a - b`.
///
/// Zero differences are dropped and tied magnitudes share their average
/// rank. Up to [`EXACT_MAX_N`] non-zero differences the null distribution is
/// computed exactly; above that a normal approximation with tie and
/// continuity corrections is used. If every difference is zero the result is
/// `p = 1`, statistic 0.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64]) -> Result<WilcoxonResult> {
    if a.len() != b.len() {
        return Err(Error::Validation(format!(
            "paired samples differ in length: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    if a.len() < 2 {
        return Err(Error::Validation("need at least two pairs".into()));
    }
    if a.iter().chain(b).any(|v| !v.is_finite()) {
        return Err(Error::Validation("samples must be finite".into()));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(WilcoxonResult {
            statistic: 0.0,
            p_value: 1.0,
            n: 0,
            exact: true,
        });
    }
    let magnitudes: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = doubled_ranks(&magnitudes);
    let total: u64 = ranks.iter().sum();
    let w_plus: u64 = ranks.iter().zip(&diffs).filter(|(_, d)| **d > 0.0).map(|(r, _)| r).sum();
    let statistic = w_plus.min(total - w_plus) as f64 / 2.0;

    if n <= EXACT_MAX_N {
        let counts = null_counts(&ranks);
        let all = 2f64.powi(n as i32);
        let lower: f64 = counts[..=w_plus as usize].iter().sum::<f64>() / all;
        let upper: f64 = counts[w_plus as usize..].iter().sum::<f64>() / all;
        return Ok(WilcoxonResult {
            statistic,
            p_value: (2.0 * lower.min(upper)).min(1.0),
            n,
            exact: true,
        });
    }

    let nf = n as f64;
    let mean = nf * (nf + 1.0) / 4.0;
    let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term;
    let p_value = if var <= 0.0 {
        1.0
    } else {
        let w = w_plus as f64 / 2.0;
        let z = ((w - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let normal = Normal::new(0.0, 1.0).expect("standard normal");
        (2.0 * normal.sf(z)).min(1.0)
    };
    Ok(WilcoxonResult {
        statistic,
        p_value,
        n,
        exact: false,
    })
}

/// Number of sign assignments giving each value of the (doubled) positive
/// rank sum.
fn null_counts(ranks: &[u64]) -> Vec<f64> {
    let total: u64 = ranks.iter().sum();
    let mut counts = vec![0.0; total as usize + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in ranks {
        let r = r as usize;
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    counts
}
