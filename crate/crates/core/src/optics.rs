//! Free-space scalar diffraction onto a one-dimensional screen.
//!
//! The screen field behind an aperture is a paraxial Fresnel integral,
//! `U(x) = e^{-i pi/4} / sqrt(lambda L) * integral e^{i k (x - x')^2 / 2L} dx'`
//! over the open slits, evaluated by midpoint quadrature with a sample count
//! adaptive in the phase span (the constant overall phase of propagation is
//! dropped). Detection positions are drawn from the cell probabilities
//! `|U(x_i)|^2`, so cells where the field vanishes are never drawn.

use num_complex::Complex64;
use serde::Serialize;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scenario::SlitParams;

/// Evenly spaced cell midpoints spanning `[-halfwidth, halfwidth]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ScreenGrid {
    halfwidth: f64,
    dx: f64,
    xs: Vec<f64>,
}

impl ScreenGrid {
    pub fn new(halfwidth: f64, cells: usize) -> Result<Self> {
        if !halfwidth.is_finite() || halfwidth <= 0.0 {
            return Err(Error::BadParams("screen halfwidth must be positive".into()));
        }
        if cells < 2 {
            return Err(Error::BadParams("screen needs at least two cells".into()));
        }
        let dx = 2.0 * halfwidth / cells as f64;
        let xs = (0..cells).map(|i| -halfwidth + (i as f64 + 0.5) * dx).collect();
        Ok(ScreenGrid { halfwidth, dx, xs })
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn halfwidth(&self) -> f64 {
        self.halfwidth
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub fn cell_left(&self, i: usize) -> f64 {
        self.xs[i] - 0.5 * self.dx
    }
}

/// Complex screen amplitudes on a grid.
#[derive(Clone, Debug, Serialize)]
pub struct ScreenField {
    grid: ScreenGrid,
    amps: Vec<Complex64>,
}

impl ScreenField {
    pub fn grid(&self) -> &ScreenGrid {
        &self.grid
    }

    pub fn amps(&self) -> &[Complex64] {
        &self.amps
    }

    /// Power captured by the window, `sum |U|^2 dx`. The propagator is
    /// unitary, so with a wide enough window this returns the total open
    /// aperture width.
    pub fn total_power(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.dx
    }
}

/// Midpoint samples per slit: eight per cycle of the fastest fringe the
/// slit-to-screen geometry can produce, clamped to [64, 40000].
fn slit_samples(params: &SlitParams, center: f64) -> usize {
    let reach = params.screen_halfwidth + center.abs() + params.slit_width;
    let cycles = reach * params.slit_width / (params.wavelength * params.distance);
    (8.0 * cycles).ceil().clamp(64.0, 40_000.0) as usize
}

/// The finest transverse scale of the pattern: the fringe spacing
/// `lambda L / d` for the smallest open-center separation, or the envelope
/// scale `lambda L / w` with a single open slit.
fn finest_scale(params: &SlitParams) -> f64 {
    let mut centers: Vec<f64> = params
        .slit_centers
        .iter()
        .zip(&params.open)
        .filter(|(_, &open)| open)
        .map(|(c, _)| *c)
        .collect();
    centers.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = params.wavelength * params.distance;
    if centers.len() < 2 {
        return scale / params.slit_width;
    }
    let d = centers.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
    scale / d
}

/// Propagates unit illumination of the open slits to the screen.
///
/// Fails with [`Error::AllClosed`] when no slit is open and with
/// [`Error::GridTooCoarse`] when the grid cannot resolve the finest fringe
/// (at least eight cells per fringe are required).
pub fn shape_mode(params: &SlitParams) -> Result<ScreenField> {
    let open_slits: Vec<f64> = params
        .slit_centers
        .iter()
        .zip(&params.open)
        .filter(|(_, &open)| open)
        .map(|(c, _)| *c)
        .collect();
    if open_slits.is_empty() {
        return Err(Error::AllClosed);
    }
    let grid = ScreenGrid::new(params.screen_halfwidth, params.grid_points)?;
    let required = finest_scale(params) / 8.0;
    if grid.dx() > required {
        return Err(Error::GridTooCoarse { spacing: grid.dx(), required });
    }

    let k = 2.0 * std::f64::consts::PI / params.wavelength;
    let scale = params.wavelength * params.distance;
    let prefactor = Complex64::from_polar(1.0 / scale.sqrt(), -std::f64::consts::FRAC_PI_4);
    let slits: Vec<(f64, usize)> =
        open_slits.iter().map(|&c| (c, slit_samples(params, c))).collect();

    let amps: Vec<Complex64> = grid
        .xs()
        .par_iter()
        .map(|&x| {
            let mut acc = Complex64::new(0.0, 0.0);
            for &(center, m) in &slits {
                let h = params.slit_width / m as f64;
                let left = center - 0.5 * params.slit_width;
                for j in 0..m {
                    let xp = left + (j as f64 + 0.5) * h;
                    let d = x - xp;
                    acc += Complex64::from_polar(h, k * d * d / (2.0 * params.distance));
                }
            }
            prefactor * acc
        })
        .collect();

    Ok(ScreenField { grid, amps })
}

/// Normalized cell probabilities with a cumulative table for sampling.
#[derive(Clone, Debug)]
pub struct ScreenPdf {
    grid: ScreenGrid,
    probs: Vec<f64>,
    cumulative: Vec<f64>,
}

impl ScreenPdf {
    pub fn from_field(field: &ScreenField) -> Result<Self> {
        let weights: Vec<f64> = field.amps.iter().map(|a| a.norm_sqr()).collect();
        Self::from_weights(field.grid.clone(), &weights)
    }

    pub fn from_weights(grid: ScreenGrid, weights: &[f64]) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::BinningMismatch(format!(
                "{} weights on a {}-cell grid",
                weights.len(),
                grid.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::NonFinite("screen weights".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroField);
        }
        let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
        let mut cumulative = Vec::with_capacity(probs.len());
        let mut run = 0.0;
        for p in &probs {
            run += p;
            cumulative.push(run);
        }
        *cumulative.last_mut().unwrap() = 1.0;
        Ok(ScreenPdf { grid, probs, cumulative })
    }

    pub fn grid(&self) -> &ScreenGrid {
        &self.grid
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Maps one uniform draw in [0, 1) to a continuous screen position.
    /// The draw selects a cell by cumulative probability (cells with zero
    /// probability cannot be selected) and places the hit uniformly inside.
    pub fn position_from_uniform(&self, u: f64) -> f64 {
        let u = u.clamp(0.0, 1.0 - f64::EPSILON);
        let i = self.cumulative.partition_point(|&c| c <= u);
        let i = i.min(self.probs.len() - 1);
        let prev = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        let offset = ((u - prev) / self.probs[i]).clamp(0.0, 1.0 - f64::EPSILON);
        self.grid.cell_left(i) + offset * self.grid.dx()
    }
}

/// Fringe spacing measured as the mean distance between adjacent dark
/// minima (cells below a quarter of the peak). Dark minima sit exactly at
/// the interference zeros, which the slit envelope does not displace, so
/// this is accurate to the cell width. Returns `None` when the pattern has
/// fewer than two dark wells in the window.
pub fn measured_fringe_spacing(pdf: &ScreenPdf) -> Option<f64> {
    let peak = pdf.probs.iter().cloned().fold(0.0, f64::max);
    let threshold = 0.25 * peak;
    let mut dark_centers: Vec<f64> = Vec::new();
    let mut run_min: Option<(f64, f64)> = None;
    for (i, &p) in pdf.probs.iter().enumerate() {
        if p < threshold {
            let x = pdf.grid.xs()[i];
            run_min = match run_min {
                Some((best, bx)) if best <= p => Some((best, bx)),
                _ => Some((p, x)),
            };
        } else if let Some((_, bx)) = run_min.take() {
            dark_centers.push(bx);
        }
    }
    if let Some((_, bx)) = run_min {
        dark_centers.push(bx);
    }
    if dark_centers.len() < 2 {
        return None;
    }
    let gaps: Vec<f64> = dark_centers.windows(2).map(|w| w[1] - w[0]).collect();
    Some(gaps.iter().sum::<f64>() / gaps.len() as f64)
}

/// Interference of two mutually coherent plane waves crossing at a small
/// angle: intensity `1 + cos(delta_k x + phase)` with
/// `delta_k = 2 pi angle / wavelength`, fringe period `wavelength / angle`.
/// The observation window is fixed at three fringe periods on 1024 cells.
#[derive(Clone, Debug)]
pub struct TwoBeamPattern {
    delta_k: f64,
    phase: f64,
    period: f64,
}

pub const TWO_BEAM_CELLS: usize = 1024;
pub const TWO_BEAM_PERIODS: f64 = 3.0;

impl TwoBeamPattern {
    pub fn new(angle: f64, wavelength: f64, phase: f64) -> Result<Self> {
        if !angle.is_finite() || angle <= 0.0 || !wavelength.is_finite() || wavelength <= 0.0 {
            return Err(Error::BadParams("angle and wavelength must be positive".into()));
        }
        if !phase.is_finite() {
            return Err(Error::NonFinite("beam phase".into()));
        }
        let delta_k = 2.0 * std::f64::consts::PI * angle / wavelength;
        Ok(TwoBeamPattern { delta_k, phase, period: wavelength / angle })
    }

    pub fn delta_k(&self) -> f64 {
        self.delta_k
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn window_halfwidth(&self) -> f64 {
        0.5 * TWO_BEAM_PERIODS * self.period
    }

    pub fn pdf(&self) -> Result<ScreenPdf> {
        let grid = ScreenGrid::new(self.window_halfwidth(), TWO_BEAM_CELLS)?;
        let weights: Vec<f64> =
            grid.xs().iter().map(|&x| 1.0 + (self.delta_k * x + self.phase).cos()).collect();
        ScreenPdf::from_weights(grid, &weights)
    }
}

/// Recovers fringe visibility and phase from hit positions: the first
/// circular moment `m = mean(exp(-i delta_k x))` of an ideal pattern with
/// visibility V and phase phi over whole periods is `V/2 * exp(i phi)`, so
/// the estimators are `2 |m|` and `arg m`.
pub fn fit_fringe(positions: &[f64], delta_k: f64) -> Result<(f64, f64)> {
    if positions.is_empty() {
        return Err(Error::InsufficientData("no positions to fit".into()));
    }
    if !delta_k.is_finite() || delta_k <= 0.0 {
        return Err(Error::BadParams("delta_k must be positive".into()));
    }
    let mut re = 0.0;
    let mut im = 0.0;
    for &x in positions {
        let a = delta_k * x;
        re += a.cos();
        im -= a.sin();
    }
    let n = positions.len() as f64;
    re /= n;
    im /= n;
    Ok((2.0 * re.hypot(im), im.atan2(re)))
}

/// Counts of hits in equal bins over `[-halfwidth, halfwidth]`; positions
/// outside the window are counted separately, not binned.
#[derive(Clone, Debug)]
pub struct ScreenHistogram {
    halfwidth: f64,
    width: f64,
    counts: Vec<u64>,
    dropped: u64,
}

impl ScreenHistogram {
    pub fn new(halfwidth: f64, bins: usize) -> Result<Self> {
        if !halfwidth.is_finite() || halfwidth <= 0.0 {
            return Err(Error::BadParams("histogram halfwidth must be positive".into()));
        }
        if bins == 0 {
            return Err(Error::BadParams("histogram needs at least one bin".into()));
        }
        Ok(ScreenHistogram {
            halfwidth,
            width: 2.0 * halfwidth / bins as f64,
            counts: vec![0; bins],
            dropped: 0,
        })
    }

    pub fn from_positions(halfwidth: f64, bins: usize, positions: &[f64]) -> Result<Self> {
        let mut h = Self::new(halfwidth, bins)?;
        for &x in positions {
            h.record(x);
        }
        Ok(h)
    }

    pub fn record(&mut self, x: f64) {
        if x < -self.halfwidth || x >= self.halfwidth {
            self.dropped += 1;
            return;
        }
        let i = ((x + self.halfwidth) / self.width) as usize;
        let i = i.min(self.counts.len() - 1);
        self.counts[i] += 1;
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn dropped(&self) -> u64 {
        self.dropped
    }

    pub fn bin_left(&self, i: usize) -> f64 {
        -self.halfwidth + i as f64 * self.width
    }

    pub fn bin_right(&self, i: usize) -> f64 {
        self.bin_left(i) + self.width
    }

    /// Empirical density per bin, `count / (total * bin_width)`.
    pub fn pdf_values(&self) -> Vec<f64> {
        let total: u64 = self.counts.iter().sum();
        if total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let norm = 1.0 / (total as f64 * self.width);
        self.counts.iter().map(|&c| c as f64 * norm).collect()
    }
}
