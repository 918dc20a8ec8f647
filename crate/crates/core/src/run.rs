//! End-to-end scenario execution and result serialization.
//!
//! [`run_scenario`] runs the trials, aggregates counts, and scores them
//! against the closed-form references. The resulting [`RunResult`] depends
//! only on the configuration and seed (plus the tool version); the timestamp
//! is informational and excluded from any determinism comparison. Canonical
//! JSON output serializes every float with 17 significant digits, enough to
//! round-trip f64 exactly.

use std::collections::BTreeMap;
use std::io;

use serde::{Deserialize, Serialize};

use crate::circuit::Detector;
use crate::error::{Error, Result};
use crate::optics::{
    fit_fringe, measured_fringe_spacing, shape_mode, ScreenHistogram, ScreenPdf, TwoBeamPattern,
};
use crate::oracle::{
    compare, compare_detectors, oracle_eraser, oracle_mz, pool_comparisons, ComparisonReport,
    DetectorProbs, FraunhoferPattern,
};
use crate::sampler::{run_trials, visibility, TrialRecord};
use crate::scenario::{ScenarioConfig, ScenarioKind};
use crate::state::Pol;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhaseRow {
    pub phase: f64,
    pub det1: u64,
    pub det2: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VisibilitySummary {
    /// Visibility of the unconditioned per-phase counts (or of the pooled
    /// screen pattern for the two-source experiment).
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pooled: Option<f64>,
    /// Visibility per environment outcome.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conditional: Option<BTreeMap<String, f64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistogramSummary {
    pub halfwidth: f64,
    pub bins: usize,
    pub bin_edges: Vec<f64>,
    pub counts: Vec<u64>,
    pub pdf_values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fringe_spacing_predicted: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub fringe_spacing_measured: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroupRow {
    pub group: u64,
    pub trial_phase: f64,
    pub photons: u64,
    pub fitted_visibility: f64,
    pub fitted_phase: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub tool: String,
    pub version: String,
    /// Wall-clock time of the run; the only field allowed to differ between
    /// identical runs.
    pub timestamp: String,
    pub seed: u64,
    pub trials: u64,
    pub scenario: ScenarioConfig,
    pub detector_counts: BTreeMap<String, u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub phase_table: Option<Vec<PhaseRow>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub conditional_tables: Option<BTreeMap<String, Vec<PhaseRow>>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub visibility: Option<VisibilitySummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub histogram: Option<HistogramSummary>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub groups: Option<Vec<GroupRow>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub oracle: Option<BTreeMap<String, ComparisonReport>>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub records: Option<Vec<TrialRecord>>,
}

fn detector_count(records: &[TrialRecord], detector: Detector) -> u64 {
    records.iter().filter(|r| r.detector == detector).count() as u64
}

fn histogram_summary(
    halfwidth: f64,
    bins: usize,
    positions: &[f64],
    predicted: Option<f64>,
    measured: Option<f64>,
) -> Result<(ScreenHistogram, HistogramSummary)> {
    let histogram = ScreenHistogram::from_positions(halfwidth, bins, positions)?;
    let bin_edges: Vec<f64> =
        (0..bins).map(|i| histogram.bin_left(i)).chain([halfwidth]).collect();
    let summary = HistogramSummary {
        halfwidth,
        bins,
        bin_edges,
        counts: histogram.counts().to_vec(),
        pdf_values: histogram.pdf_values(),
        fringe_spacing_predicted: predicted,
        fringe_spacing_measured: measured,
    };
    Ok((histogram, summary))
}

/// Runs a scenario end to end. With `keep_records` the full per-trial
/// records are embedded in the result, so every aggregate is recomputable.
pub fn run_scenario(config: &ScenarioConfig, keep_records: bool) -> Result<RunResult> {
    let records = run_trials(config)?;
    let mut result = RunResult {
        tool: "waveparticle".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        timestamp: chrono::Utc::now().to_rfc3339(),
        seed: config.seed,
        trials: config.trials,
        scenario: config.clone(),
        detector_counts: BTreeMap::new(),
        phase_table: None,
        conditional_tables: None,
        visibility: None,
        histogram: None,
        groups: None,
        oracle: None,
        records: None,
    };

    match &config.kind {
        ScenarioKind::MachZehnder(params) => {
            let det1 = detector_count(&records, Detector::Det1);
            let det2 = detector_count(&records, Detector::Det2);
            result.detector_counts.insert("det1".into(), det1);
            result.detector_counts.insert("det2".into(), det2);
            result.phase_table =
                Some(vec![PhaseRow { phase: params.arm_phase, det1, det2 }]);
            // a choice event leaves the complementary configuration in place
            let final_setup = match params.choice_step {
                None => params.setup,
                Some(_) => params.setup.toggled(),
            };
            let probs = oracle_mz(final_setup, params.arm_phase);
            let mut oracle = BTreeMap::new();
            oracle.insert("detectors".into(), compare_detectors(det1, det2, probs)?);
            result.oracle = Some(oracle);
        }
        ScenarioKind::QuantumEraser(params) => {
            let phases = params.phases();
            let outcomes: Vec<Pol> = match params.basis {
                crate::scenario::EraserBasis::Linear => vec![Pol::H, Pol::V],
                crate::scenario::EraserBasis::Circular => vec![Pol::L, Pol::R],
            };
            let det1 = detector_count(&records, Detector::Det1);
            let det2 = detector_count(&records, Detector::Det2);
            result.detector_counts.insert("det1".into(), det1);
            result.detector_counts.insert("det2".into(), det2);

            // counts[phase][outcome] = (det1, det2)
            let mut counts =
                vec![vec![(0u64, 0u64); outcomes.len()]; phases.len()];
            for r in &records {
                let pi = (r.trial_id % phases.len() as u64) as usize;
                let oi = outcomes
                    .iter()
                    .position(|o| Some(*o) == r.env_outcome)
                    .ok_or_else(|| Error::Config("record with foreign outcome".into()))?;
                match r.detector {
                    Detector::Det1 => counts[pi][oi].0 += 1,
                    Detector::Det2 => counts[pi][oi].1 += 1,
                    Detector::Screen => {
                        return Err(Error::Config("screen click in an eraser run".into()))
                    }
                }
            }

            let pooled_rows: Vec<PhaseRow> = phases
                .iter()
                .enumerate()
                .map(|(pi, &phase)| PhaseRow {
                    phase,
                    det1: counts[pi].iter().map(|c| c.0).sum(),
                    det2: counts[pi].iter().map(|c| c.1).sum(),
                })
                .collect();
            let mut conditional_tables: BTreeMap<String, Vec<PhaseRow>> = BTreeMap::new();
            for (oi, outcome) in outcomes.iter().enumerate() {
                let rows: Vec<PhaseRow> = phases
                    .iter()
                    .enumerate()
                    .map(|(pi, &phase)| PhaseRow {
                        phase,
                        det1: counts[pi][oi].0,
                        det2: counts[pi][oi].1,
                    })
                    .collect();
                conditional_tables.insert(outcome.to_string(), rows);
            }

            if phases.len() >= 2 {
                let as_rows = |rows: &[PhaseRow]| -> Vec<(f64, (u64, u64))> {
                    rows.iter().map(|r| (r.phase, (r.det1, r.det2))).collect()
                };
                let pooled = visibility(&as_rows(&pooled_rows))?;
                let mut conditional = BTreeMap::new();
                for (outcome, rows) in &conditional_tables {
                    conditional.insert(outcome.clone(), visibility(&as_rows(rows))?);
                }
                result.visibility = Some(VisibilitySummary {
                    pooled: Some(pooled),
                    conditional: Some(conditional),
                });
            }

            let mut oracle = BTreeMap::new();
            for (oi, outcome) in outcomes.iter().enumerate() {
                let reports: Vec<ComparisonReport> = phases
                    .iter()
                    .enumerate()
                    .map(|(pi, &phase)| {
                        let probs = oracle_eraser(params.basis, *outcome, phase)?;
                        compare_detectors(counts[pi][oi].0, counts[pi][oi].1, probs)
                    })
                    .collect::<Result<_>>()?;
                oracle.insert(format!("conditional_{outcome}"), pool_comparisons(&reports)?);
            }
            let pooled_reports: Vec<ComparisonReport> = pooled_rows
                .iter()
                .map(|row| {
                    compare_detectors(row.det1, row.det2, DetectorProbs { det1: 0.5, det2: 0.5 })
                })
                .collect::<Result<_>>()?;
            oracle.insert("pooled".into(), pool_comparisons(&pooled_reports)?);

            result.phase_table = Some(pooled_rows);
            result.conditional_tables = Some(conditional_tables);
            result.oracle = Some(oracle);
        }
        ScenarioKind::IndependentBeams(params) => {
            result
                .detector_counts
                .insert("screen".into(), detector_count(&records, Detector::Screen));
            let pattern = TwoBeamPattern::new(params.angle, params.wavelength, 0.0)?;
            let delta_k = pattern.delta_k();
            let mut groups = Vec::with_capacity(params.n_trial_groups as usize);
            for g in 0..params.n_trial_groups {
                let slice: Vec<&TrialRecord> = records
                    .iter()
                    .filter(|r| r.trial_id / params.photons_per_trial == g)
                    .collect();
                let positions: Vec<f64> =
                    slice.iter().map(|r| r.screen_position.unwrap()).collect();
                let (fitted_visibility, fitted_phase) = fit_fringe(&positions, delta_k)?;
                groups.push(GroupRow {
                    group: g,
                    trial_phase: slice[0].trial_phase.unwrap(),
                    photons: positions.len() as u64,
                    fitted_visibility,
                    fitted_phase,
                });
            }
            let all: Vec<f64> = records.iter().map(|r| r.screen_position.unwrap()).collect();
            let (pooled_visibility, _) = fit_fringe(&all, delta_k)?;
            let (_, summary) = histogram_summary(
                pattern.window_halfwidth(),
                crate::optics::TWO_BEAM_CELLS,
                &all,
                Some(pattern.period()),
                None,
            )?;
            result.histogram = Some(summary);
            result.groups = Some(groups);
            result.visibility =
                Some(VisibilitySummary { pooled: Some(pooled_visibility), conditional: None });
        }
        ScenarioKind::DoubleSlit(params) => {
            result
                .detector_counts
                .insert("screen".into(), detector_count(&records, Detector::Screen));
            let field = shape_mode(params)?;
            let pdf = ScreenPdf::from_field(&field)?;
            let positions: Vec<f64> =
                records.iter().map(|r| r.screen_position.unwrap()).collect();
            let fraunhofer = FraunhoferPattern::new(params.clone())?;
            let (histogram, summary) = histogram_summary(
                params.screen_halfwidth,
                params.grid_points,
                &positions,
                fraunhofer.fringe_spacing(),
                measured_fringe_spacing(&pdf),
            )?;
            let mut oracle = BTreeMap::new();
            oracle.insert(
                "screen_numerical".into(),
                compare(histogram.counts(), pdf.probs())?,
            );
            oracle.insert(
                "screen_fraunhofer".into(),
                compare(histogram.counts(), &fraunhofer.cell_probs(pdf.grid().xs())?)?,
            );
            result.histogram = Some(summary);
            result.oracle = Some(oracle);
        }
    }

    if keep_records {
        result.records = Some(records);
    }
    Ok(result)
}

struct SignificantDigits;

impl serde_json::ser::Formatter for SignificantDigits {
    fn write_f64<W: ?Sized + io::Write>(&mut self, writer: &mut W, value: f64) -> io::Result<()> {
        if !value.is_finite() {
            return Err(io::Error::new(io::ErrorKind::InvalidData, "non-finite float"));
        }
        // 17 significant digits round-trip any f64 exactly
        write!(writer, "{:.16e}", value)
    }
}

/// Serializes a result as JSON with floats at 17 significant digits.
pub fn to_canonical_json(result: &RunResult) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, SignificantDigits);
    result
        .serialize(&mut ser)
        .map_err(|e| Error::Config(format!("result serialization: {e}")))?;
    String::from_utf8(out).map_err(|e| Error::Config(format!("result encoding: {e}")))
}

pub fn from_json(text: &str) -> Result<RunResult> {
    serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
}

/// CSV report: histogram runs export
/// `bin_left_m,bin_right_m,count,pdf_value`, detector runs export
/// `phase_rad,det1_count,det2_count,visibility` (the visibility column
/// holds the pooled value, empty when a single phase defines none).
pub fn report_csv(result: &RunResult) -> Result<String> {
    if let Some(h) = &result.histogram {
        let mut out = String::from("bin_left_m,bin_right_m,count,pdf_value\n");
        for i in 0..h.bins {
            out.push_str(&format!(
                "{},{},{},{}\n",
                h.bin_edges[i],
                h.bin_edges[i + 1],
                h.counts[i],
                h.pdf_values[i]
            ));
        }
        return Ok(out);
    }
    if let Some(rows) = &result.phase_table {
        let pooled = result
            .visibility
            .as_ref()
            .and_then(|v| v.pooled)
            .map(|v| v.to_string())
            .unwrap_or_default();
        let mut out = String::from("phase_rad,det1_count,det2_count,visibility\n");
        for row in rows {
            out.push_str(&format!("{},{},{},{}\n", row.phase, row.det1, row.det2, pooled));
        }
        return Ok(out);
    }
    Err(Error::Config("result holds neither a histogram nor a phase table".into()))
}

/// Human-readable summary table.
pub fn report_table(result: &RunResult) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{} {} run: {} trials, seed {}\n",
        result.tool,
        result.version,
        result.trials,
        result.seed
    ));
    out.push_str(&format!("scenario: {}\n", result.scenario.kind.name()));
    out.push_str("detector counts:\n");
    for (name, count) in &result.detector_counts {
        out.push_str(&format!("  {name:<8} {count}\n"));
    }
    if let Some(rows) = &result.phase_table {
        out.push_str("per-phase counts:\n");
        out.push_str(&format!("  {:>12} {:>10} {:>10}\n", "phase_rad", "det1", "det2"));
        for row in rows {
            out.push_str(&format!(
                "  {:>12.6} {:>10} {:>10}\n",
                row.phase, row.det1, row.det2
            ));
        }
    }
    if let Some(tables) = &result.conditional_tables {
        for (outcome, rows) in tables {
            out.push_str(&format!("conditioned on {outcome}:\n"));
            for row in rows {
                out.push_str(&format!(
                    "  {:>12.6} {:>10} {:>10}\n",
                    row.phase, row.det1, row.det2
                ));
            }
        }
    }
    if let Some(v) = &result.visibility {
        if let Some(p) = v.pooled {
            out.push_str(&format!("pooled visibility: {p:.4}\n"));
        }
        if let Some(map) = &v.conditional {
            for (outcome, value) in map {
                out.push_str(&format!("visibility | {outcome}: {value:.4}\n"));
            }
        }
    }
    if let Some(groups) = &result.groups {
        out.push_str(&format!("trial groups: {}\n", groups.len()));
        let sharp = groups.iter().filter(|g| g.fitted_visibility >= 0.9).count();
        out.push_str(&format!("  groups with fitted visibility >= 0.9: {sharp}\n"));
    }
    if let Some(h) = &result.histogram {
        out.push_str(&format!(
            "histogram: {} bins over [{:+.6e}, {:+.6e}] m\n",
            h.bins, -h.halfwidth, h.halfwidth
        ));
        if let Some(p) = h.fringe_spacing_predicted {
            out.push_str(&format!("  fringe spacing predicted: {p:.6e} m\n"));
        }
        if let Some(m) = h.fringe_spacing_measured {
            out.push_str(&format!("  fringe spacing measured:  {m:.6e} m\n"));
        }
    }
    if let Some(oracle) = &result.oracle {
        out.push_str("reference comparison:\n");
        for (name, report) in oracle {
            out.push_str(&format!(
                "  {name}: chi2 = {:.4} (dof {}), p = {:.4}, tv = {:.4}\n",
                report.chi_square, report.dof, report.p_value, report.tv_distance
            ));
        }
    }
    out
}
