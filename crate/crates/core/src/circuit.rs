//! Circuit assembly and field propagation.
//!
//! A [`CircuitGraph`] is a feed-forward arrangement of elements on integer
//! time steps. The interferometer's output layer is modeled as a *crossing*:
//! a step that holds either two mirrors (paths pass through, second splitter
//! absent) or a recombining splitter. Choice events toggle between the two
//! mid-flight, strictly after the first splitter and no later than the
//! crossing itself, so an identical element list is produced whether the
//! final configuration was chosen upfront or at the last moment.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::elements::{apply, ElementSpec};
use crate::error::{Error, Result};
use crate::scenario::MzSetup;
use crate::state::{FieldState, Port};

/// Detector identity in results and records.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Det1,
    Det2,
    Screen,
}

impl std::fmt::Display for Detector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Detector::Det1 => write!(f, "det1"),
            Detector::Det2 => write!(f, "det2"),
            Detector::Screen => write!(f, "screen"),
        }
    }
}

/// Whether a choice event inserts or removes the second splitter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChoiceAction {
    InsertSecondBs,
    RemoveSecondBs,
}

/// A mid-flight reconfiguration of the crossing layer.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChoiceEvent {
    /// Step at which the swap happens. Must satisfy
    /// `first_splitter_step < time_step <= crossing_step`.
    pub time_step: u32,
    pub action: ChoiceAction,
    /// True when the swap completed before the packets reached the crossing.
    /// Late swaps are rejected rather than silently ignored.
    pub applied_before_crossing: bool,
}

impl ChoiceEvent {
    pub fn new(time_step: u32, action: ChoiceAction) -> Self {
        ChoiceEvent { time_step, action, applied_before_crossing: true }
    }
}

/// The reconfigurable output layer of an interferometer.
#[derive(Clone, Debug)]
struct CrossingLayer {
    step: u32,
    /// Elements when the second splitter is absent (paths cross on mirrors).
    open: Vec<ElementSpec>,
    /// Elements when the second splitter is present.
    closed: Vec<ElementSpec>,
    initially_closed: bool,
}

#[derive(Clone, Debug)]
pub struct CircuitGraph {
    ports: BTreeSet<Port>,
    entry: Option<Port>,
    fixed_elements: Vec<(u32, ElementSpec)>,
    crossing: Option<CrossingLayer>,
    detectors: BTreeMap<Detector, Port>,
    first_splitter_step: Option<u32>,
    /// Step before which the environment photon must be measured when the
    /// run conditions on its outcome (the eraser). Elements at steps >= this
    /// value are only applied to the conditional field.
    conditioning_step: Option<u32>,
}

impl CircuitGraph {
    /// Interferometer: splitter at step 0, phase on path b at step 1, and a
    /// crossing at step 2 holding mirrors (setup 1) or a second splitter
    /// (setup 2).
    pub fn mach_zehnder(setup: MzSetup, arm_phase: f64) -> Result<CircuitGraph> {
        let bs1 = ElementSpec::beam_splitter([Port::In, Port::Dark], [Port::A, Port::B]);
        let phase = ElementSpec::phase_shifter(Port::B, arm_phase);
        let open = vec![
            ElementSpec::mirror(Port::A, Port::Out1),
            ElementSpec::mirror(Port::B, Port::Out2),
        ];
        let closed =
            vec![ElementSpec::beam_splitter([Port::A, Port::B], [Port::Out1, Port::Out2])];
        let graph = CircuitGraph {
            ports: [Port::In, Port::Dark, Port::A, Port::B, Port::Out1, Port::Out2]
                .into_iter()
                .collect(),
            entry: Some(Port::In),
            fixed_elements: vec![(0, bs1), (1, phase)],
            crossing: Some(CrossingLayer {
                step: 2,
                open,
                closed,
                initially_closed: setup == MzSetup::Two,
            }),
            detectors: [(Detector::Det1, Port::Out1), (Detector::Det2, Port::Out2)]
                .into_iter()
                .collect(),
            first_splitter_step: Some(0),
            conditioning_step: None,
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Eraser arm for the system photon: a polarizing splitter routes H to
    /// path b and V to path a, controllers erase the tags, then phase and a
    /// recombining splitter. Conditioning on the environment outcome happens
    /// at step 2, before the phase shifter.
    pub fn quantum_eraser(arm_phase: f64) -> Result<CircuitGraph> {
        let pbs = ElementSpec::polarizing_bs(Port::In, Port::B, Port::A);
        let ctrl_a = ElementSpec::polarization_controller(Port::A);
        let ctrl_b = ElementSpec::polarization_controller(Port::B);
        let phase = ElementSpec::phase_shifter(Port::B, arm_phase);
        let bs = ElementSpec::beam_splitter([Port::A, Port::B], [Port::Out1, Port::Out2]);
        let graph = CircuitGraph {
            ports: [Port::In, Port::A, Port::B, Port::Out1, Port::Out2].into_iter().collect(),
            entry: Some(Port::In),
            fixed_elements: vec![(0, pbs), (1, ctrl_a), (1, ctrl_b), (2, phase), (3, bs)],
            crossing: None,
            detectors: [(Detector::Det1, Port::Out1), (Detector::Det2, Port::Out2)]
                .into_iter()
                .collect(),
            first_splitter_step: Some(0),
            conditioning_step: Some(2),
        };
        graph.validate()?;
        Ok(graph)
    }

    /// Two independent sources aimed at a common screen; no elements.
    pub fn independent_beams() -> Result<CircuitGraph> {
        let graph = CircuitGraph {
            ports: [Port::Src1, Port::Src2, Port::Screen].into_iter().collect(),
            entry: None,
            fixed_elements: Vec::new(),
            crossing: None,
            detectors: [(Detector::Screen, Port::Screen)].into_iter().collect(),
            first_splitter_step: None,
            conditioning_step: None,
        };
        graph.validate()?;
        Ok(graph)
    }

    pub fn entry(&self) -> Option<Port> {
        self.entry
    }

    pub fn ports(&self) -> &BTreeSet<Port> {
        &self.ports
    }

    pub fn detectors(&self) -> &BTreeMap<Detector, Port> {
        &self.detectors
    }

    pub fn conditioning_step(&self) -> Option<u32> {
        self.conditioning_step
    }

    /// The window `(min, max]` of steps at which a choice event is accepted.
    pub fn choice_window(&self) -> Option<(u32, u32)> {
        match (self.first_splitter_step, &self.crossing) {
            (Some(first), Some(crossing)) => Some((first, crossing.step)),
            _ => None,
        }
    }

    /// Element list without any choice events, sorted by step.
    pub fn elements(&self) -> Vec<(u32, ElementSpec)> {
        self.effective_elements(&[]).expect("no events cannot fail")
    }

    /// Element list after applying choice events. Each event must fall in
    /// the choice window and toggle the splitter's actual presence; inserting
    /// a splitter that is already there (or removing an absent one) is a
    /// configuration error.
    pub fn effective_elements(&self, choices: &[ChoiceEvent]) -> Result<Vec<(u32, ElementSpec)>> {
        let mut second_bs_present = self.crossing.as_ref().map(|c| c.initially_closed);
        if !choices.is_empty() {
            let (min, max) = self.choice_window().ok_or_else(|| {
                Error::Config("this circuit has no reconfigurable crossing".into())
            })?;
            let mut ordered: Vec<&ChoiceEvent> = choices.iter().collect();
            ordered.sort_by_key(|e| e.time_step);
            for event in ordered {
                if event.time_step <= min || event.time_step > max || !event.applied_before_crossing
                {
                    return Err(Error::ChoiceTiming { step: event.time_step, min, max });
                }
                let present = second_bs_present.as_mut().expect("window implies crossing");
                match event.action {
                    ChoiceAction::InsertSecondBs => {
                        if *present {
                            return Err(Error::Config(
                                "choice event inserts a second splitter that is already present"
                                    .into(),
                            ));
                        }
                        *present = true;
                    }
                    ChoiceAction::RemoveSecondBs => {
                        if !*present {
                            return Err(Error::Config(
                                "choice event removes a second splitter that is absent".into(),
                            ));
                        }
                        *present = false;
                    }
                }
            }
        }
        let mut elements = self.fixed_elements.clone();
        if let Some(crossing) = &self.crossing {
            let layer =
                if second_bs_present.unwrap() { &crossing.closed } else { &crossing.open };
            for element in layer {
                elements.push((crossing.step, element.clone()));
            }
        }
        elements.sort_by_key(|(step, _)| *step);
        Ok(elements)
    }

    /// Structural checks: ports declared, detectors on terminal ports, no
    /// element feeding on a port produced only later, same-step elements on
    /// disjoint ports. Both crossing variants are checked.
    pub fn validate(&self) -> Result<()> {
        let mut variants: Vec<Vec<(u32, ElementSpec)>> = vec![self.fixed_elements.clone()];
        if let Some(crossing) = &self.crossing {
            let mut with_open = self.fixed_elements.clone();
            let mut with_closed = self.fixed_elements.clone();
            for element in &crossing.open {
                with_open.push((crossing.step, element.clone()));
            }
            for element in &crossing.closed {
                with_closed.push((crossing.step, element.clone()));
            }
            variants = vec![with_open, with_closed];
        }
        for mut elements in variants {
            elements.sort_by_key(|(step, _)| *step);
            for (_, element) in &elements {
                for port in element.input_ports().iter().chain(element.output_ports().iter()) {
                    if !self.ports.contains(port) {
                        return Err(Error::Topology(format!("undeclared port {port}")));
                    }
                }
            }
            // no element may read a port that only a later step produces
            for (i, (step, element)) in elements.iter().enumerate() {
                for input in element.input_ports() {
                    let produced_later = elements
                        .iter()
                        .skip(i + 1)
                        .any(|(s, e)| s > step && e.output_ports().contains(&input));
                    let produced_earlier = elements
                        .iter()
                        .take(i)
                        .any(|(s, e)| s < step && e.output_ports().contains(&input));
                    if produced_later && !produced_earlier {
                        return Err(Error::Topology(format!(
                            "port {input} is consumed at step {step} but produced later"
                        )));
                    }
                }
            }
            // same-step elements must act on disjoint ports
            for (i, (step_a, a)) in elements.iter().enumerate() {
                for (step_b, b) in elements.iter().skip(i + 1) {
                    if step_a != step_b {
                        continue;
                    }
                    let ports_a: BTreeSet<Port> =
                        a.input_ports().iter().chain(a.output_ports().iter()).copied().collect();
                    let overlap = b
                        .input_ports()
                        .iter()
                        .chain(b.output_ports().iter())
                        .any(|p| ports_a.contains(p));
                    if overlap {
                        return Err(Error::Topology(format!(
                            "elements at step {step_a} share a port"
                        )));
                    }
                }
            }
            // detectors must sit on ports no element consumes
            for (detector, port) in &self.detectors {
                if !self.ports.contains(port) {
                    return Err(Error::Topology(format!("{detector} on undeclared port {port}")));
                }
                if elements.iter().any(|(_, e)| e.input_ports().contains(port)) {
                    return Err(Error::Topology(format!(
                        "{detector} sits on port {port}, which an element consumes"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One element application in a propagation, with the field just before it.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub step: u32,
    pub element: ElementSpec,
    pub before: FieldState,
}

/// Full history of a propagation, for back-tracing particle paths.
#[derive(Clone, Debug)]
pub struct PropagationTrace {
    pub steps: Vec<TraceStep>,
    pub terminal: FieldState,
}

/// Applies an element list in order, recording the field before each step.
pub fn propagate_elements(
    elements: &[(u32, ElementSpec)],
    input: &FieldState,
) -> Result<PropagationTrace> {
    let mut field = input.clone();
    let mut steps = Vec::with_capacity(elements.len());
    for (step, element) in elements {
        steps.push(TraceStep { step: *step, element: element.clone(), before: field.clone() });
        field = apply(element, &field)?;
    }
    Ok(PropagationTrace { steps, terminal: field })
}

pub fn propagate_trace(
    circuit: &CircuitGraph,
    input: &FieldState,
    choices: &[ChoiceEvent],
) -> Result<PropagationTrace> {
    let elements = circuit.effective_elements(choices)?;
    propagate_elements(&elements, input)
}

pub fn propagate(
    circuit: &CircuitGraph,
    input: &FieldState,
    choices: &[ChoiceEvent],
) -> Result<FieldState> {
    propagate_trace(circuit, input, choices).map(|trace| trace.terminal)
}

/// Field intensity reaching each detector, summed over polarization.
pub fn detector_weights(circuit: &CircuitGraph, terminal: &FieldState) -> Vec<(Detector, f64)> {
    circuit
        .detectors
        .iter()
        .map(|(detector, port)| {
            let weight: f64 = terminal
                .amps()
                .filter(|(label, _)| label.port == *port)
                .map(|(_, amp)| amp.norm_sqr())
                .sum();
            (*detector, weight)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::ModeLabel;
    use num_complex::Complex64;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_photon_in() -> FieldState {
        FieldState::pure(ModeLabel::path(Port::In))
    }

    #[test]
    fn setup_one_splits_evenly_regardless_of_phase() {
        for phase in [0.0, 0.37, std::f64::consts::PI] {
            let circuit = CircuitGraph::mach_zehnder(MzSetup::One, phase).unwrap();
            let terminal = propagate(&circuit, &single_photon_in(), &[]).unwrap();
            let weights = detector_weights(&circuit, &terminal);
            for (_, w) in weights {
                assert!((w - 0.5).abs() < 1e-12, "phase {phase} weight {w}");
            }
        }
    }

    #[test]
    fn setup_two_at_zero_phase_sends_everything_to_det2() {
        let circuit = CircuitGraph::mach_zehnder(MzSetup::Two, 0.0).unwrap();
        let terminal = propagate(&circuit, &single_photon_in(), &[]).unwrap();
        // ((1 + i*i)/2, i) = (0, i): det1 amplitude is exactly zero
        assert_eq!(terminal.amp(ModeLabel::path(Port::Out1)), c(0.0, 0.0));
        let weights = detector_weights(&circuit, &terminal);
        let det2 = weights.iter().find(|(d, _)| *d == Detector::Det2).unwrap().1;
        assert!((det2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn setup_two_follows_the_fringe_law() {
        for phase in [0.3, 1.1, 2.9] {
            let circuit = CircuitGraph::mach_zehnder(MzSetup::Two, phase).unwrap();
            let terminal = propagate(&circuit, &single_photon_in(), &[]).unwrap();
            let weights: BTreeMap<Detector, f64> =
                detector_weights(&circuit, &terminal).into_iter().collect();
            assert!((weights[&Detector::Det1] - (phase / 2.0).sin().powi(2)).abs() < 1e-12);
            assert!((weights[&Detector::Det2] - (phase / 2.0).cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn late_insertion_is_bitwise_identical_to_static_setup_two() {
        let phase = 0.7;
        let static_two = CircuitGraph::mach_zehnder(MzSetup::Two, phase).unwrap();
        let delayed = CircuitGraph::mach_zehnder(MzSetup::One, phase).unwrap();
        let event = ChoiceEvent::new(2, ChoiceAction::InsertSecondBs);
        let terminal_static = propagate(&static_two, &single_photon_in(), &[]).unwrap();
        let terminal_delayed = propagate(&delayed, &single_photon_in(), &[event]).unwrap();
        for (label, amp) in terminal_static.amps() {
            assert_eq!(terminal_delayed.amp(label), amp, "mismatch at {label}");
        }
        assert_eq!(
            terminal_static.amps().count(),
            terminal_delayed.amps().count(),
            "different support"
        );
    }

    #[test]
    fn late_removal_matches_static_setup_one() {
        let delayed = CircuitGraph::mach_zehnder(MzSetup::Two, 0.4).unwrap();
        let static_one = CircuitGraph::mach_zehnder(MzSetup::One, 0.4).unwrap();
        let event = ChoiceEvent::new(2, ChoiceAction::RemoveSecondBs);
        let a = propagate(&delayed, &single_photon_in(), &[event]).unwrap();
        let b = propagate(&static_one, &single_photon_in(), &[]).unwrap();
        for (label, amp) in b.amps() {
            assert_eq!(a.amp(label), amp);
        }
    }

    #[test]
    fn choice_before_first_splitter_is_rejected() {
        let circuit = CircuitGraph::mach_zehnder(MzSetup::One, 0.0).unwrap();
        let event = ChoiceEvent::new(0, ChoiceAction::InsertSecondBs);
        let err = circuit.effective_elements(&[event]).unwrap_err();
        match err {
            Error::ChoiceTiming { step, min, max } => {
                assert_eq!((step, min, max), (0, 0, 2));
            }
            other => panic!("wrong error {other:?}"),
        }
    }

    #[test]
    fn choice_after_crossing_is_rejected() {
        let circuit = CircuitGraph::mach_zehnder(MzSetup::One, 0.0).unwrap();
        let event = ChoiceEvent::new(3, ChoiceAction::InsertSecondBs);
        assert!(matches!(
            circuit.effective_elements(&[event]),
            Err(Error::ChoiceTiming { .. })
        ));
    }

    #[test]
    fn late_flag_is_rejected() {
        let circuit = CircuitGraph::mach_zehnder(MzSetup::One, 0.0).unwrap();
        let event = ChoiceEvent {
            time_step: 2,
            action: ChoiceAction::InsertSecondBs,
            applied_before_crossing: false,
        };
        assert!(matches!(
            circuit.effective_elements(&[event]),
            Err(Error::ChoiceTiming { .. })
        ));
    }

    #[test]
    fn redundant_insert_is_a_config_error() {
        let circuit = CircuitGraph::mach_zehnder(MzSetup::Two, 0.0).unwrap();
        let event = ChoiceEvent::new(2, ChoiceAction::InsertSecondBs);
        assert!(matches!(circuit.effective_elements(&[event]), Err(Error::Config(_))));
    }

    #[test]
    fn paired_events_cancel() {
        let circuit = CircuitGraph::mach_zehnder(MzSetup::One, 0.9).unwrap();
        let events = [
            ChoiceEvent::new(1, ChoiceAction::InsertSecondBs),
            ChoiceEvent::new(2, ChoiceAction::RemoveSecondBs),
        ];
        let toggled = propagate(&circuit, &single_photon_in(), &events).unwrap();
        let plain = propagate(&circuit, &single_photon_in(), &[]).unwrap();
        for (label, amp) in plain.amps() {
            assert_eq!(toggled.amp(label), amp);
        }
    }

    #[test]
    fn eraser_circuit_has_no_reconfigurable_crossing() {
        let circuit = CircuitGraph::quantum_eraser(0.0).unwrap();
        let event = ChoiceEvent::new(1, ChoiceAction::InsertSecondBs);
        assert!(matches!(circuit.effective_elements(&[event]), Err(Error::Config(_))));
        assert_eq!(circuit.conditioning_step(), Some(2));
    }

    #[test]
    fn beams_circuit_is_element_free() {
        let circuit = CircuitGraph::independent_beams().unwrap();
        assert!(circuit.elements().is_empty());
        assert_eq!(circuit.detectors()[&Detector::Screen], Port::Screen);
    }

    #[test]
    fn trace_records_the_field_before_each_step() {
        let circuit = CircuitGraph::mach_zehnder(MzSetup::Two, 0.0).unwrap();
        let trace = propagate_trace(&circuit, &single_photon_in(), &[]).unwrap();
        assert_eq!(trace.steps.len(), 3);
        // before the first element the field is the bare input
        assert_eq!(trace.steps[0].before.amp(ModeLabel::path(Port::In)), c(1.0, 0.0));
        // before the crossing both arms carry weight 1/2
        let before_crossing = &trace.steps[2].before;
        assert!((before_crossing.amp(ModeLabel::path(Port::A)).norm_sqr() - 0.5).abs() < 1e-12);
        assert!((before_crossing.amp(ModeLabel::path(Port::B)).norm_sqr() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn validation_rejects_detectors_on_consumed_ports() {
        let mut circuit = CircuitGraph::mach_zehnder(MzSetup::Two, 0.0).unwrap();
        circuit.detectors.insert(Detector::Det1, Port::A);
        assert!(matches!(circuit.validate(), Err(Error::Topology(_))));
    }
}
