//! Closed-form reference predictions and comparison reports.
//!
//! Every simulated experiment has an analytic counterpart here, derived
//! independently of the propagation engine, so runs can be scored without
//! trusting the code under test. Phases follow the engine's convention:
//! detector 1 carries the `sin^2(phase/2)` fringe of the two-splitter
//! interferometer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::{EraserBasis, MzSetup, SlitParams};
use crate::state::Pol;
use crate::stats::{chi_square_gof, counts_to_probs, tv_distance};

/// Reference click probabilities for the two interferometer detectors.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DetectorProbs {
    pub det1: f64,
    pub det2: f64,
}

/// One splitter: the paths never recombine, each detector sees 1/2 at any
/// phase. Two splitters: det1 = sin^2(phase/2), det2 = cos^2(phase/2).
pub fn oracle_mz(setup: MzSetup, phase: f64) -> DetectorProbs {
    match setup {
        MzSetup::One => DetectorProbs { det1: 0.5, det2: 0.5 },
        MzSetup::Two => DetectorProbs {
            det1: (phase / 2.0).sin().powi(2),
            det2: (phase / 2.0).cos().powi(2),
        },
    }
}

/// Conditional detector probabilities given the environment outcome.
///
/// Measuring the environment in the linear basis reveals the path, so both
/// outcomes give flat 1/2 regardless of phase. Measuring circularly erases
/// the path: outcome L shows the sin^2(phase/2) fringe on det1, outcome R
/// the complementary cos^2(phase/2) pattern. Outcomes from the wrong basis
/// are rejected.
pub fn oracle_eraser(basis: EraserBasis, outcome: Pol, phase: f64) -> Result<DetectorProbs> {
    match (basis, outcome) {
        (EraserBasis::Linear, Pol::H) | (EraserBasis::Linear, Pol::V) => {
            Ok(DetectorProbs { det1: 0.5, det2: 0.5 })
        }
        (EraserBasis::Circular, Pol::L) => Ok(DetectorProbs {
            det1: (phase / 2.0).sin().powi(2),
            det2: (phase / 2.0).cos().powi(2),
        }),
        (EraserBasis::Circular, Pol::R) => Ok(DetectorProbs {
            det1: (phase / 2.0).cos().powi(2),
            det2: (phase / 2.0).sin().powi(2),
        }),
        (basis, outcome) => Err(Error::Basis(format!(
            "outcome {outcome} does not belong to the {} basis",
            basis.as_str()
        ))),
    }
}

/// Far-field multi-slit pattern: a shared single-slit envelope times the
/// interference of the open slit centers,
/// `I(x) = sinc^2(pi w x / (lambda L)) * |sum_j exp(-i 2 pi c_j x / (lambda L))|^2`.
#[derive(Clone, Debug)]
pub struct FraunhoferPattern {
    params: SlitParams,
}

impl FraunhoferPattern {
    pub fn new(params: SlitParams) -> Result<Self> {
        if !params.open.iter().any(|&o| o) {
            return Err(Error::AllClosed);
        }
        Ok(FraunhoferPattern { params })
    }

    /// Unnormalized intensity at screen position `x`.
    pub fn intensity(&self, x: f64) -> f64 {
        let p = &self.params;
        let u = x / (p.wavelength * p.distance);
        let envelope = sinc(std::f64::consts::PI * p.slit_width * u);
        let (mut re, mut im) = (0.0, 0.0);
        for (center, open) in p.slit_centers.iter().zip(&p.open) {
            if *open {
                let arg = -2.0 * std::f64::consts::PI * center * u;
                re += arg.cos();
                im += arg.sin();
            }
        }
        envelope * envelope * (re * re + im * im)
    }

    /// Cell probabilities on a grid of positions, normalized to sum 1.
    pub fn cell_probs(&self, grid: &[f64]) -> Result<Vec<f64>> {
        if grid.len() < 2 {
            return Err(Error::InsufficientData("grid needs at least two cells".into()));
        }
        let raw: Vec<f64> = grid.iter().map(|&x| self.intensity(x)).collect();
        let total: f64 = raw.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroField);
        }
        Ok(raw.into_iter().map(|v| v / total).collect())
    }

    /// Spacing of interference fringes, `lambda L / d` for the smallest
    /// center separation `d` among open slits; `None` with fewer than two
    /// open slits (envelope only, no fringes).
    pub fn fringe_spacing(&self) -> Option<f64> {
        let p = &self.params;
        let mut centers: Vec<f64> = p
            .slit_centers
            .iter()
            .zip(&p.open)
            .filter(|(_, &o)| o)
            .map(|(c, _)| *c)
            .collect();
        if centers.len() < 2 {
            return None;
        }
        centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let d = centers
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min);
        Some(p.wavelength * p.distance / d)
    }

    /// First zero of the single-slit envelope, `lambda L / w`.
    pub fn envelope_first_zero(&self) -> f64 {
        self.params.wavelength * self.params.distance / self.params.slit_width
    }
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-8 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}

/// How a set of observed counts compares to reference probabilities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub chi_square: f64,
    pub dof: u64,
    pub p_value: f64,
    pub tv_distance: f64,
}

/// Scores observed counts against reference cell probabilities.
pub fn compare(observed: &[u64], probs: &[f64]) -> Result<ComparisonReport> {
    let chi = chi_square_gof(observed, probs)?;
    let empirical = counts_to_probs(observed)?;
    let tv = tv_distance(&empirical, probs)?;
    Ok(ComparisonReport {
        chi_square: chi.statistic,
        dof: chi.dof,
        p_value: chi.p_value,
        tv_distance: tv,
    })
}

/// Scores two-detector counts against a [`DetectorProbs`] reference.
pub fn compare_detectors(det1: u64, det2: u64, probs: DetectorProbs) -> Result<ComparisonReport> {
    compare(&[det1, det2], &[probs.det1, probs.det2])
}

/// Pools per-phase comparisons into one report: statistics and degrees of
/// freedom add, the pooled p-value is recomputed from the sums, and the
/// worst per-phase total-variation distance is kept.
pub fn pool_comparisons(reports: &[ComparisonReport]) -> Result<ComparisonReport> {
    if reports.is_empty() {
        return Err(Error::InsufficientData("no comparisons to pool".into()));
    }
    let chi_square: f64 = reports.iter().map(|r| r.chi_square).sum();
    let dof: u64 = reports.iter().map(|r| r.dof).sum();
    let tv = reports.iter().map(|r| r.tv_distance).fold(0.0, f64::max);
    let p_value = if chi_square.is_infinite() {
        0.0
    } else if dof == 0 {
        1.0
    } else {
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let dist = ChiSquared::new(dof as f64)
            .map_err(|e| Error::BadParams(format!("chi-square dof: {e}")))?;
        1.0 - dist.cdf(chi_square)
    };
    Ok(ComparisonReport { chi_square, dof, p_value, tv_distance: tv })
}
