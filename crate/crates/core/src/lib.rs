//! A particle-plus-field simulator for single-photon optics.
//!
//! The model keeps two ingredients per photon: a field that propagates
//! through every element of a circuit like a classical wave, and a point
//! particle that rides the field and is found at exactly one detector per
//! trial. Detection probabilities come from field intensity, so ensembles
//! reproduce standard interference statistics while each individual trial
//! has a definite outcome. Packets that carry no amplitude never fire a
//! detector.
//!
//! Crates are organized bottom-up: mode/state algebra ([`state`]), unitary
//! elements ([`elements`]), circuit assembly and propagation ([`circuit`]),
//! particle sampling ([`sampler`]), free-space diffraction ([`optics`]),
//! closed-form references and comparison statistics ([`oracle`], [`stats`]),
//! and scenario configuration plus end-to-end runs ([`scenario`], [`run`]).

pub mod circuit;
pub mod elements;
pub mod error;
pub mod exact;
pub mod optics;
pub mod oracle;
pub mod run;
pub mod sampler;
pub mod scenario;
pub mod state;
pub mod stats;

pub use circuit::{
    detector_weights, propagate, propagate_elements, propagate_trace, ChoiceAction, ChoiceEvent,
    CircuitGraph, Detector, PropagationTrace, TraceStep,
};
pub use elements::{apply, apply_system, make_element, ElementKind, ElementSpec};
pub use error::{Error, Result};
pub use optics::{
    fit_fringe, measured_fringe_spacing, shape_mode, ScreenField, ScreenGrid, ScreenHistogram,
    ScreenPdf, TwoBeamPattern,
};
pub use oracle::{
    compare, compare_detectors, oracle_eraser, oracle_mz, pool_comparisons, ComparisonReport,
    DetectorProbs, FraunhoferPattern,
};
pub use run::{
    from_json, report_csv, report_table, run_scenario, to_canonical_json, RunResult,
};
pub use sampler::{run_trials, run_trials_serial, visibility, Sign, TrialRecord};
pub use scenario::{
    parse_scenario, BeamsParams, EraserBasis, EraserParams, MzParams, MzSetup, ScenarioConfig,
    ScenarioKind, SlitParams,
};
pub use state::{
    expand_to_circular, expand_to_linear, Amplitude, FieldState, ModeLabel, Pol, Port,
    TwoPhotonState,
};
pub use stats::{chi_square_gof, tv_distance, ChiSquareResult};
