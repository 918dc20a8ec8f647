//! Goodness-of-fit statistics for comparing counts against reference
//! distributions.
//!
//! The chi-square test merges adjacent cells until every expected count is
//! at least 5 (Cochran's rule), so sparse histogram tails do not inflate the
//! statistic. An observed count in a zero-probability cell is not a bad fit
//! but an impossibility, and is reported as p = 0 directly.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Pearson chi-square test of `observed` counts against cell probabilities
/// `probs` (normalized internally). Cells are merged left to right until the
/// expected count reaches 5; a trailing underfull group is merged into its
/// left neighbor. With fewer than two merged cells the test is vacuous and
/// reports statistic 0, p 1.
pub fn chi_square_gof(observed: &[u64], probs: &[f64]) -> Result<ChiSquareResult> {
    if observed.len() != probs.len() {
        return Err(Error::BinningMismatch(format!(
            "observed has {} cells, probabilities {}",
            observed.len(),
            probs.len()
        )));
    }
    if observed.is_empty() {
        return Err(Error::InsufficientData("no cells to compare".into()));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::BadParams("cell probabilities must be finite and nonnegative".into()));
    }
    let prob_sum: f64 = probs.iter().sum();
    if prob_sum <= 0.0 {
        return Err(Error::BadParams("cell probabilities sum to zero".into()));
    }
    let total: u64 = observed.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData("no observations".into()));
    }

    // impossible outcomes short-circuit; empty zero-probability cells vanish
    let mut cells: Vec<(u64, f64)> = Vec::with_capacity(observed.len());
    for (&obs, &p) in observed.iter().zip(probs) {
        if p == 0.0 {
            if obs > 0 {
                return Ok(ChiSquareResult { statistic: f64::INFINITY, dof: 0, p_value: 0.0 });
            }
            continue;
        }
        cells.push((obs, p / prob_sum));
    }

    let n = total as f64;
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc_obs = 0.0;
    let mut acc_exp = 0.0;
    for (obs, p) in cells {
        acc_obs += obs as f64;
        acc_exp += p * n;
        if acc_exp >= 5.0 {
            merged.push((acc_obs, acc_exp));
            acc_obs = 0.0;
            acc_exp = 0.0;
        }
    }
    if acc_exp > 0.0 || acc_obs > 0.0 {
        if let Some(last) = merged.last_mut() {
            last.0 += acc_obs;
            last.1 += acc_exp;
        } else {
            merged.push((acc_obs, acc_exp));
        }
    }
    if merged.len() < 2 {
        return Ok(ChiSquareResult { statistic: 0.0, dof: 0, p_value: 1.0 });
    }

    let statistic: f64 =
        merged.iter().map(|(obs, exp)| (obs - exp) * (obs - exp) / exp).sum();
    let dof = (merged.len() - 1) as u64;
    let dist = ChiSquared::new(dof as f64)
        .map_err(|e| Error::BadParams(format!("chi-square dof: {e}")))?;
    let p_value = 1.0 - dist.cdf(statistic);
    Ok(ChiSquareResult { statistic, dof, p_value })
}

/// Total variation distance between two distributions given as weights
/// (each normalized internally): half the L1 distance, in [0, 1].
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::BinningMismatch(format!(
            "distributions have {} and {} cells",
            p.len(),
            q.len()
        )));
    }
    let sp: f64 = p.iter().sum();
    let sq: f64 = q.iter().sum();
    if sp.is_nan() || sq.is_nan() || sp <= 0.0 || sq <= 0.0 {
        return Err(Error::BadParams("distributions must have positive mass".into()));
    }
    if p.iter().chain(q.iter()).any(|x| !x.is_finite() || *x < 0.0) {
        return Err(Error::BadParams("weights must be finite and nonnegative".into()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(a, b)| (a / sp - b / sq).abs()).sum::<f64>())
}

/// Normalizes counts into an empirical distribution.
pub fn counts_to_probs(counts: &[u64]) -> Result<Vec<f64>> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::InsufficientData("no observations".into()));
    }
    Ok(counts.iter().map(|&c| c as f64 / total as f64).collect())
}

/// Half-width of the three-sigma band for a binomial proportion.
pub fn three_sigma(n: u64, p: f64) -> f64 {
    3.0 * (p * (1.0 - p) / n as f64).sqrt()
}

/// Whether an observed success fraction lies within three sigma of `p`.
pub fn within_three_sigma(successes: u64, n: u64, p: f64) -> bool {
    if n == 0 {
        return false;
    }
    (successes as f64 / n as f64 - p).abs() <= three_sigma(n, p)
}
