//! Particle sampling on top of field propagation.
//!
//! Each trial carries one particle. The field fixes the odds: a detector's
//! click probability is the field intensity reaching it, and a detector
//! whose amplitude is exactly zero is excluded from the draw outright, so a
//! packet carrying no amplitude can never fire it. Where the field leaves
//! the path undetermined (both arms live behind a recombining splitter) the
//! assigned history is a weighted draw and is flagged as such.
//!
//! Randomness is one stream per trial: `ChaCha8Rng` seeded by the run seed
//! with the trial id as stream, plus a separate stream family for per-group
//! draws. Serial and parallel execution therefore produce identical records.
//! Within a trial the draw order is: environment outcome (if any), detector,
//! then any hidden path or sign draw.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuit::{
    detector_weights, propagate_elements, propagate_trace, ChoiceAction, ChoiceEvent,
    CircuitGraph, Detector, PropagationTrace,
};
use crate::error::{Error, Result};
use crate::optics::{shape_mode, ScreenPdf, TwoBeamPattern};
use crate::scenario::{EraserBasis, MzSetup, ScenarioConfig, ScenarioKind};
use crate::state::{FieldState, ModeLabel, Pol, Port, TwoPhotonState};

/// Sign of the superposition the two packets form, the counterpart of the
/// path degree of freedom: `+` for the (a + i b)-type combination that the
/// L environment outcome selects, `-` for the R-type combination.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sign {
    Plus,
    Minus,
}

/// Everything recorded about one trial.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial_id: u64,
    pub detector: Detector,
    /// Ports the particle visited, entry first, when the circuit defines
    /// discrete paths.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub path_history: Option<Vec<Port>>,
    /// True when the field left only one live route to the detector; a
    /// sampled (hidden) assignment sets this false.
    pub path_known: bool,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub env_outcome: Option<Pol>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub screen_position: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub trial_phase: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub wave_sign: Option<Sign>,
    /// Which source emitted the particle in the two-source experiment.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub source: Option<u8>,
}

/// Per-trial random stream.
pub fn trial_rng(seed: u64, trial_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_id);
    rng
}

/// Per-group random stream, disjoint from every trial stream.
pub fn group_rng(seed: u64, group_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((1u64 << 63) | group_id);
    rng
}

/// Draws a detector with probability proportional to its field weight.
/// Detectors with exactly zero weight are removed from the draw, never
/// merely improbable.
pub fn sample_detector<R: Rng>(weights: &[(Detector, f64)], rng: &mut R) -> Result<Detector> {
    for (detector, w) in weights {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::NonFinite(format!("weight of {detector}")));
        }
    }
    let live: Vec<(Detector, f64)> =
        weights.iter().filter(|(_, w)| *w > 0.0).copied().collect();
    let total: f64 = live.iter().map(|(_, w)| w).sum();
    if live.is_empty() || total <= 0.0 {
        return Err(Error::ZeroProbability("no detector receives any field".into()));
    }
    let draw = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (detector, w) in &live {
        acc += w;
        if draw < acc {
            return Ok(*detector);
        }
    }
    Ok(live.last().unwrap().0)
}

fn port_intensity(field: &FieldState, port: Port) -> f64 {
    field.amps().filter(|(l, _)| l.port == port).map(|(_, a)| a.norm_sqr()).sum()
}

/// Walks a propagation trace backwards from a detector port and assigns the
/// particle a port history. At each element the candidate inputs are those
/// coupled to the current port that carried field; a single candidate keeps
/// the path known, several force a weighted hidden draw.
pub fn assign_path_history<R: Rng>(
    trace: &PropagationTrace,
    start_port: Port,
    rng: &mut R,
) -> Result<(Vec<Port>, bool)> {
    let mut current = start_port;
    let mut known = true;
    let mut reversed = vec![current];
    for step in trace.steps.iter().rev() {
        if !step.element.output_ports().contains(&current) {
            continue;
        }
        let mut candidates: Vec<(Port, f64)> = Vec::new();
        for (input, output) in step.element.couplings() {
            if output != current || candidates.iter().any(|(p, _)| *p == input) {
                continue;
            }
            let intensity = port_intensity(&step.before, input);
            if intensity > 0.0 {
                candidates.push((input, intensity));
            }
        }
        let chosen = match candidates.len() {
            0 => {
                return Err(Error::Topology(format!(
                    "no live input feeds port {current} at step {}",
                    step.step
                )))
            }
            1 => candidates[0].0,
            _ => {
                known = false;
                let total: f64 = candidates.iter().map(|(_, w)| w).sum();
                let draw = rng.gen::<f64>() * total;
                let mut acc = 0.0;
                let mut pick = candidates.last().unwrap().0;
                for (port, w) in &candidates {
                    acc += w;
                    if draw < acc {
                        pick = *port;
                        break;
                    }
                }
                pick
            }
        };
        if chosen != current {
            reversed.push(chosen);
            current = chosen;
        }
    }
    reversed.reverse();
    Ok((reversed, known))
}

/// Fringe visibility from per-phase detector counts: with `p = det1 / total`
/// per phase, `(max p - min p) / (max p + min p)`. Needs at least two phases
/// with counts.
pub fn visibility(rows: &[(f64, (u64, u64))]) -> Result<f64> {
    if rows.len() < 2 {
        return Err(Error::InsufficientData("visibility needs at least two phases".into()));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for (phase, (det1, det2)) in rows {
        let total = det1 + det2;
        if total == 0 {
            return Err(Error::InsufficientData(format!("no counts at phase {phase}")));
        }
        let p = *det1 as f64 / total as f64;
        lo = lo.min(p);
        hi = hi.max(p);
    }
    if hi + lo == 0.0 {
        return Ok(0.0);
    }
    Ok((hi - lo) / (hi + lo))
}

struct EraserCell {
    outcome: Pol,
    prob: f64,
    trace: PropagationTrace,
    weights: Vec<(Detector, f64)>,
}

enum Prepared {
    Mz {
        circuit: CircuitGraph,
        trace: PropagationTrace,
        weights: Vec<(Detector, f64)>,
        phase: f64,
    },
    Eraser {
        circuit: CircuitGraph,
        basis: EraserBasis,
        phases: Vec<f64>,
        cells: Vec<[EraserCell; 2]>,
    },
    Beams {
        groups: Vec<(f64, ScreenPdf)>,
        photons_per_trial: u64,
    },
    Slit {
        pdf: ScreenPdf,
        path_known: bool,
    },
}

fn prepare(config: &ScenarioConfig) -> Result<Prepared> {
    match &config.kind {
        ScenarioKind::MachZehnder(params) => {
            let circuit = CircuitGraph::mach_zehnder(params.setup, params.arm_phase)?;
            let choices: Vec<ChoiceEvent> = match params.choice_step {
                None => Vec::new(),
                Some(step) => {
                    let action = match params.setup {
                        MzSetup::One => ChoiceAction::InsertSecondBs,
                        MzSetup::Two => ChoiceAction::RemoveSecondBs,
                    };
                    vec![ChoiceEvent::new(step, action)]
                }
            };
            let entry = circuit.entry().expect("interferometer has an entry");
            let input = FieldState::pure(ModeLabel::path(entry));
            let trace = propagate_trace(&circuit, &input, &choices)?;
            let weights = detector_weights(&circuit, &trace.terminal);
            Ok(Prepared::Mz { circuit, trace, weights, phase: params.arm_phase })
        }
        ScenarioKind::QuantumEraser(params) => {
            let phases = params.phases();
            let mut cells = Vec::with_capacity(phases.len());
            let mut circuit = CircuitGraph::quantum_eraser(params.arm_phase)?;
            for &phase in &phases {
                circuit = CircuitGraph::quantum_eraser(phase)?;
                let split = circuit
                    .conditioning_step()
                    .expect("eraser circuit defines a conditioning step");
                let elements = circuit.elements();
                let (prefix, suffix): (Vec<_>, Vec<_>) =
                    elements.into_iter().partition(|(step, _)| *step < split);
                let mut pair = TwoPhotonState::entangled_hv_pair();
                for (_, element) in &prefix {
                    pair = crate::elements::apply_system(element, &pair)?;
                }
                let pair = match params.basis {
                    EraserBasis::Linear => pair,
                    EraserBasis::Circular => pair.linear_to_circular()?,
                };
                let outcomes = match params.basis {
                    EraserBasis::Linear => [Pol::H, Pol::V],
                    EraserBasis::Circular => [Pol::L, Pol::R],
                };
                let mut built: Vec<EraserCell> = Vec::with_capacity(2);
                for outcome in outcomes {
                    let label = ModeLabel::with_pol(Port::Env, outcome);
                    let (prob, field) = pair.condition_on_environment(label)?;
                    let trace = propagate_elements(&suffix, &field)?;
                    let weights = detector_weights(&circuit, &trace.terminal);
                    built.push(EraserCell { outcome, prob, trace, weights });
                }
                let [first, second] = <[EraserCell; 2]>::try_from(built)
                    .map_err(|_| Error::Config("eraser basis must have two outcomes".into()))?;
                cells.push([first, second]);
            }
            Ok(Prepared::Eraser { circuit, basis: params.basis, phases, cells })
        }
        ScenarioKind::IndependentBeams(params) => {
            if params.photons_per_trial * params.n_trial_groups != config.trials {
                return Err(Error::Config(
                    "trials must equal photons_per_trial * n_trial_groups".into(),
                ));
            }
            let mut groups = Vec::with_capacity(params.n_trial_groups as usize);
            for g in 0..params.n_trial_groups {
                let mut rng = group_rng(config.seed, g);
                let phase = rng.gen::<f64>() * 2.0 * std::f64::consts::PI;
                let pattern = TwoBeamPattern::new(params.angle, params.wavelength, phase)?;
                groups.push((phase, pattern.pdf()?));
            }
            Ok(Prepared::Beams { groups, photons_per_trial: params.photons_per_trial })
        }
        ScenarioKind::DoubleSlit(params) => {
            let field = shape_mode(params)?;
            let pdf = ScreenPdf::from_field(&field)?;
            let open_count = params.open.iter().filter(|&&o| o).count();
            Ok(Prepared::Slit { pdf, path_known: open_count == 1 })
        }
    }
}

fn run_one(prepared: &Prepared, seed: u64, trial_id: u64) -> Result<TrialRecord> {
    let mut rng = trial_rng(seed, trial_id);
    match prepared {
        Prepared::Mz { circuit, trace, weights, phase } => {
            let detector = sample_detector(weights, &mut rng)?;
            let port = circuit.detectors()[&detector];
            let (path, known) = assign_path_history(trace, port, &mut rng)?;
            Ok(TrialRecord {
                trial_id,
                detector,
                path_history: Some(path),
                path_known: known,
                env_outcome: None,
                screen_position: None,
                trial_phase: Some(*phase),
                wave_sign: None,
                source: None,
            })
        }
        Prepared::Eraser { circuit, basis, phases, cells } => {
            let idx = (trial_id % phases.len() as u64) as usize;
            let pair = &cells[idx];
            let u = rng.gen::<f64>();
            let cell = if u < pair[0].prob { &pair[0] } else { &pair[1] };
            let detector = sample_detector(&cell.weights, &mut rng)?;
            let port = circuit.detectors()[&detector];
            let (mut path, known) = assign_path_history(&cell.trace, port, &mut rng)?;
            if path.first() != Some(&Port::In) {
                path.insert(0, Port::In);
            }
            let wave_sign = match basis {
                // circular outcome fixes the sign, the path stays hidden
                EraserBasis::Circular => match cell.outcome {
                    Pol::L => Sign::Plus,
                    _ => Sign::Minus,
                },
                // linear outcome fixes the path, the sign stays hidden
                EraserBasis::Linear => {
                    if rng.gen_bool(0.5) {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                }
            };
            Ok(TrialRecord {
                trial_id,
                detector,
                path_history: Some(path),
                path_known: known,
                env_outcome: Some(cell.outcome),
                screen_position: None,
                trial_phase: Some(phases[idx]),
                wave_sign: Some(wave_sign),
                source: None,
            })
        }
        Prepared::Beams { groups, photons_per_trial } => {
            let group = (trial_id / photons_per_trial) as usize;
            let (phase, pdf) = &groups[group];
            let position = pdf.position_from_uniform(rng.gen::<f64>());
            let source = if rng.gen_bool(0.5) { 1 } else { 2 };
            Ok(TrialRecord {
                trial_id,
                detector: Detector::Screen,
                path_history: None,
                path_known: false,
                env_outcome: None,
                screen_position: Some(position),
                trial_phase: Some(*phase),
                wave_sign: None,
                source: Some(source),
            })
        }
        Prepared::Slit { pdf, path_known } => {
            let position = pdf.position_from_uniform(rng.gen::<f64>());
            Ok(TrialRecord {
                trial_id,
                detector: Detector::Screen,
                path_history: None,
                path_known: *path_known,
                env_outcome: None,
                screen_position: Some(position),
                trial_phase: None,
                wave_sign: None,
                source: None,
            })
        }
    }
}

/// Runs every trial of a scenario in parallel. Trial records are keyed by
/// per-trial random streams, so the output is identical to
/// [`run_trials_serial`].
pub fn run_trials(config: &ScenarioConfig) -> Result<Vec<TrialRecord>> {
    let prepared = prepare(config)?;
    (0..config.trials)
        .into_par_iter()
        .map(|t| run_one(&prepared, config.seed, t))
        .collect()
}

/// Single-threaded counterpart of [`run_trials`].
pub fn run_trials_serial(config: &ScenarioConfig) -> Result<Vec<TrialRecord>> {
    let prepared = prepare(config)?;
    (0..config.trials).map(|t| run_one(&prepared, config.seed, t)).collect()
}
