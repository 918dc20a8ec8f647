//! Scenario configuration: JSON schema, validation, and defaults.
//!
//! A scenario file is a single JSON object with a `kind` discriminator plus
//! `trials` and `seed`. Unknown keys are rejected. The only defaulted key is
//! `arm_phase` (0.0). Lengths are meters, angles and phases radians.
//!
//! ```json
//! {"kind": "mach_zehnder", "setup": 2, "arm_phase": 0.0, "trials": 10000, "seed": 42}
//! ```

use serde::de::Error as _;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

/// One or two beam splitters in the interferometer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MzSetup {
    One,
    Two,
}

impl MzSetup {
    pub fn as_int(self) -> u64 {
        match self {
            MzSetup::One => 1,
            MzSetup::Two => 2,
        }
    }

    /// The configuration left standing after a mid-flight choice event.
    pub fn toggled(self) -> Self {
        match self {
            MzSetup::One => MzSetup::Two,
            MzSetup::Two => MzSetup::One,
        }
    }
}

/// Which basis the environment photon is measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EraserBasis {
    Linear,
    Circular,
}

impl EraserBasis {
    pub fn as_str(self) -> &'static str {
        match self {
            EraserBasis::Linear => "linear",
            EraserBasis::Circular => "circular",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct MzParams {
    pub setup: MzSetup,
    pub arm_phase: f64,
    /// When set, a mid-flight choice event toggles the second splitter at
    /// this step: inserted for setup 1, removed for setup 2.
    pub choice_step: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EraserParams {
    pub basis: EraserBasis,
    pub arm_phase: f64,
    /// Optional list of arm phases; trials are assigned round-robin.
    /// Mutually exclusive with an explicit `arm_phase`.
    pub phase_sweep: Option<Vec<f64>>,
}

impl EraserParams {
    pub fn phases(&self) -> Vec<f64> {
        match &self.phase_sweep {
            Some(sweep) => sweep.clone(),
            None => vec![self.arm_phase],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct BeamsParams {
    /// Small crossing angle between the two beams, radians (paraxial).
    pub angle: f64,
    pub wavelength: f64,
    pub photons_per_trial: u64,
    pub n_trial_groups: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SlitParams {
    /// Slit center positions in the aperture plane, meters.
    pub slit_centers: Vec<f64>,
    pub slit_width: f64,
    /// Open/closed flag per slit, same length as `slit_centers`.
    pub open: Vec<bool>,
    pub wavelength: f64,
    /// Aperture-to-screen distance.
    pub distance: f64,
    /// Screen window is [-screen_halfwidth, screen_halfwidth].
    pub screen_halfwidth: f64,
    pub grid_points: usize,
}

impl SlitParams {
    /// The frozen reference geometry: 633 nm light, 10 um slits separated by
    /// 100 um, screen 1 m away, +/-25 mm window on a 4096-point grid.
    pub fn reference() -> Self {
        SlitParams {
            slit_centers: vec![-5e-5, 5e-5],
            slit_width: 1e-5,
            open: vec![true, true],
            wavelength: 6.33e-7,
            distance: 1.0,
            screen_halfwidth: 0.025,
            grid_points: 4096,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ScenarioKind {
    MachZehnder(MzParams),
    QuantumEraser(EraserParams),
    IndependentBeams(BeamsParams),
    DoubleSlit(SlitParams),
}

impl ScenarioKind {
    pub fn name(&self) -> &'static str {
        match self {
            ScenarioKind::MachZehnder(_) => "mach_zehnder",
            ScenarioKind::QuantumEraser(_) => "quantum_eraser",
            ScenarioKind::IndependentBeams(_) => "independent_beams",
            ScenarioKind::DoubleSlit(_) => "double_slit",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub trials: u64,
    pub seed: u64,
}

/// Parses and validates scenario JSON text.
pub fn parse_scenario(text: &str) -> Result<ScenarioConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    ScenarioConfig::from_value(&value)
}

impl ScenarioConfig {
    pub fn from_value(value: &Value) -> Result<Self> {
        let obj = value
            .as_object()
            .ok_or_else(|| Error::schema("$", "scenario must be a JSON object"))?;
        let kind = obj
            .get("kind")
            .ok_or_else(|| Error::schema("kind", "missing required key"))?
            .as_str()
            .ok_or_else(|| Error::schema("kind", "must be a string"))?;

        let (allowed, required): (&[&str], &[&str]) = match kind {
            "mach_zehnder" => (&["setup", "arm_phase", "choice_step"], &["setup"]),
            "quantum_eraser" => (&["basis", "arm_phase", "phase_sweep"], &["basis"]),
            "independent_beams" => (
                &["angle", "wavelength", "photons_per_trial", "n_trial_groups"],
                &["angle", "wavelength", "photons_per_trial", "n_trial_groups"],
            ),
            "double_slit" => (
                &[
                    "slit_centers",
                    "slit_width",
                    "open",
                    "wavelength",
                    "distance",
                    "screen_halfwidth",
                    "grid_points",
                ],
                &[
                    "slit_centers",
                    "slit_width",
                    "open",
                    "wavelength",
                    "distance",
                    "screen_halfwidth",
                    "grid_points",
                ],
            ),
            other => return Err(Error::Config(format!("unknown scenario kind \"{other}\""))),
        };

        for key in obj.keys() {
            if key != "kind" && key != "trials" && key != "seed" && !allowed.contains(&key.as_str())
            {
                return Err(Error::schema(key, "unknown key"));
            }
        }
        for key in required.iter().chain(["trials", "seed"].iter()) {
            if !obj.contains_key(*key) {
                return Err(Error::schema(*key, "missing required key"));
            }
        }

        let trials = uint_field(obj, "trials")?;
        let seed = uint_field(obj, "seed")?;

        let kind = match kind {
            "mach_zehnder" => {
                let setup = match uint_field(obj, "setup")? {
                    1 => MzSetup::One,
                    2 => MzSetup::Two,
                    _ => return Err(Error::schema("setup", "must be 1 or 2")),
                };
                let arm_phase = opt_float_field(obj, "arm_phase")?.unwrap_or(0.0);
                let choice_step = match obj.get("choice_step") {
                    None => None,
                    Some(_) => {
                        let v = uint_field(obj, "choice_step")?;
                        Some(u32::try_from(v).map_err(|_| {
                            Error::schema("choice_step", "out of range")
                        })?)
                    }
                };
                ScenarioKind::MachZehnder(MzParams { setup, arm_phase, choice_step })
            }
            "quantum_eraser" => {
                let basis = match obj.get("basis").and_then(Value::as_str) {
                    Some("linear") => EraserBasis::Linear,
                    Some("circular") => EraserBasis::Circular,
                    _ => return Err(Error::schema("basis", "must be \"linear\" or \"circular\"")),
                };
                if obj.contains_key("arm_phase") && obj.contains_key("phase_sweep") {
                    return Err(Error::schema("arm_phase", "mutually exclusive with phase_sweep"));
                }
                let arm_phase = opt_float_field(obj, "arm_phase")?.unwrap_or(0.0);
                let phase_sweep = match obj.get("phase_sweep") {
                    None => None,
                    Some(v) => {
                        let arr = v
                            .as_array()
                            .ok_or_else(|| Error::schema("phase_sweep", "must be an array"))?;
                        if arr.is_empty() {
                            return Err(Error::schema("phase_sweep", "must not be empty"));
                        }
                        let mut phases = Vec::with_capacity(arr.len());
                        for (i, x) in arr.iter().enumerate() {
                            let f = x.as_f64().filter(|f| f.is_finite()).ok_or_else(|| {
                                Error::schema(
                                    format!("phase_sweep[{i}]"),
                                    "must be a finite number",
                                )
                            })?;
                            phases.push(f);
                        }
                        Some(phases)
                    }
                };
                ScenarioKind::QuantumEraser(EraserParams { basis, arm_phase, phase_sweep })
            }
            "independent_beams" => {
                let angle = float_field(obj, "angle")?;
                if !(0.0..0.5).contains(&angle) || angle == 0.0 {
                    return Err(Error::schema("angle", "must lie in (0, 0.5) radians"));
                }
                let wavelength = positive_field(obj, "wavelength")?;
                let photons_per_trial = uint_field(obj, "photons_per_trial")?;
                let n_trial_groups = uint_field(obj, "n_trial_groups")?;
                if photons_per_trial == 0 || n_trial_groups == 0 {
                    return Err(Error::schema(
                        "photons_per_trial",
                        "photons_per_trial and n_trial_groups must be positive",
                    ));
                }
                match photons_per_trial.checked_mul(n_trial_groups) {
                    Some(product) if product == trials => {}
                    _ => {
                        return Err(Error::schema(
                            "trials",
                            "must equal photons_per_trial * n_trial_groups",
                        ))
                    }
                }
                ScenarioKind::IndependentBeams(BeamsParams {
                    angle,
                    wavelength,
                    photons_per_trial,
                    n_trial_groups,
                })
            }
            "double_slit" => {
                let arr = obj
                    .get("slit_centers")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::schema("slit_centers", "must be an array"))?;
                if arr.is_empty() {
                    return Err(Error::schema("slit_centers", "must not be empty"));
                }
                let mut slit_centers = Vec::with_capacity(arr.len());
                for (i, x) in arr.iter().enumerate() {
                    let f = x.as_f64().filter(|f| f.is_finite()).ok_or_else(|| {
                        Error::schema(format!("slit_centers[{i}]"), "must be a finite number")
                    })?;
                    slit_centers.push(f);
                }
                let slit_width = positive_field(obj, "slit_width")?;
                let mut sorted = slit_centers.clone();
                sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for pair in sorted.windows(2) {
                    if pair[1] - pair[0] < slit_width {
                        return Err(Error::schema("slit_centers", "slits overlap"));
                    }
                }
                let open_arr = obj
                    .get("open")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::schema("open", "must be an array of booleans"))?;
                if open_arr.len() != slit_centers.len() {
                    return Err(Error::schema("open", "length must match slit_centers"));
                }
                let mut open = Vec::with_capacity(open_arr.len());
                for (i, x) in open_arr.iter().enumerate() {
                    open.push(
                        x.as_bool()
                            .ok_or_else(|| Error::schema(format!("open[{i}]"), "must be a boolean"))?,
                    );
                }
                let wavelength = positive_field(obj, "wavelength")?;
                let distance = positive_field(obj, "distance")?;
                let screen_halfwidth = positive_field(obj, "screen_halfwidth")?;
                let grid_points = uint_field(obj, "grid_points")?;
                if !(2..=(1 << 22)).contains(&grid_points) {
                    return Err(Error::schema("grid_points", "must lie in [2, 4194304]"));
                }
                ScenarioKind::DoubleSlit(SlitParams {
                    slit_centers,
                    slit_width,
                    open,
                    wavelength,
                    distance,
                    screen_halfwidth,
                    grid_points: grid_points as usize,
                })
            }
            _ => unreachable!("kind validated above"),
        };

        Ok(ScenarioConfig { kind, trials, seed })
    }

    pub fn to_value(&self) -> Value {
        let mut obj = Map::new();
        obj.insert("kind".into(), Value::from(self.kind.name()));
        obj.insert("trials".into(), Value::from(self.trials));
        obj.insert("seed".into(), Value::from(self.seed));
        match &self.kind {
            ScenarioKind::MachZehnder(p) => {
                obj.insert("setup".into(), Value::from(p.setup.as_int()));
                obj.insert("arm_phase".into(), Value::from(p.arm_phase));
                if let Some(step) = p.choice_step {
                    obj.insert("choice_step".into(), Value::from(step));
                }
            }
            ScenarioKind::QuantumEraser(p) => {
                obj.insert("basis".into(), Value::from(p.basis.as_str()));
                match &p.phase_sweep {
                    Some(sweep) => {
                        obj.insert("phase_sweep".into(), Value::from(sweep.clone()));
                    }
                    None => {
                        obj.insert("arm_phase".into(), Value::from(p.arm_phase));
                    }
                }
            }
            ScenarioKind::IndependentBeams(p) => {
                obj.insert("angle".into(), Value::from(p.angle));
                obj.insert("wavelength".into(), Value::from(p.wavelength));
                obj.insert("photons_per_trial".into(), Value::from(p.photons_per_trial));
                obj.insert("n_trial_groups".into(), Value::from(p.n_trial_groups));
            }
            ScenarioKind::DoubleSlit(p) => {
                obj.insert("slit_centers".into(), Value::from(p.slit_centers.clone()));
                obj.insert("slit_width".into(), Value::from(p.slit_width));
                obj.insert("open".into(), Value::from(p.open.clone()));
                obj.insert("wavelength".into(), Value::from(p.wavelength));
                obj.insert("distance".into(), Value::from(p.distance));
                obj.insert("screen_halfwidth".into(), Value::from(p.screen_halfwidth));
                obj.insert("grid_points".into(), Value::from(p.grid_points as u64));
            }
        }
        Value::Object(obj)
    }
}

impl Serialize for ScenarioConfig {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_value().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for ScenarioConfig {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let value = Value::deserialize(deserializer)?;
        ScenarioConfig::from_value(&value).map_err(D::Error::custom)
    }
}

fn uint_field(obj: &Map<String, Value>, key: &str) -> Result<u64> {
    obj.get(key)
        .and_then(Value::as_u64)
        .ok_or_else(|| Error::schema(key, "must be a nonnegative integer"))
}

fn float_field(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    obj.get(key)
        .and_then(Value::as_f64)
        .filter(|f| f.is_finite())
        .ok_or_else(|| Error::schema(key, "must be a finite number"))
}

fn opt_float_field(obj: &Map<String, Value>, key: &str) -> Result<Option<f64>> {
    match obj.get(key) {
        None => Ok(None),
        Some(_) => float_field(obj, key).map(Some),
    }
}

fn positive_field(obj: &Map<String, Value>, key: &str) -> Result<f64> {
    let v = float_field(obj, key)?;
    if v <= 0.0 {
        return Err(Error::schema(key, "must be positive"));
    }
    Ok(v)
}
