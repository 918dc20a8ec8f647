//! Linear optical elements and their action on fields.
//!
//! Every element is a small unitary between an ordered input mode basis and
//! an ordered output mode basis. The 50:50 splitter convention is frozen as
//!
//! ```text
//! out1 = (in1 + i*in2)/sqrt(2)
//! out2 = (i*in1 + in2)/sqrt(2)
//! ```
//!
//! i.e. transmission keeps the phase, reflection picks up i. Applying an
//! element rewrites the amplitudes on its ports and leaves everything else
//! untouched, so propagation never renormalizes and empty modes stay exactly
//! empty.

use std::collections::BTreeSet;
use std::f64::consts::FRAC_1_SQRT_2;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{Amplitude, FieldState, ModeLabel, Pol, Port, TwoPhotonState};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ElementKind {
    BeamSplitter5050,
    PhaseShifter,
    PolarizingBs,
    Mirror,
    PolarizationController,
}

/// A constructed element: mode bases plus the unitary between them.
#[derive(Clone, Debug, PartialEq)]
pub struct ElementSpec {
    pub kind: ElementKind,
    basis_in: Vec<ModeLabel>,
    basis_out: Vec<ModeLabel>,
    matrix: Vec<Vec<Complex64>>,
    phase: Option<f64>,
}

/// Generic constructor dispatching on kind.
///
/// Port conventions: `beam_splitter_5050` takes `[p, q]` (in place) or
/// `[in1, in2, out1, out2]`; `phase_shifter` takes `[p]` plus the phase
/// parameter; `mirror` takes `[from, to]`; `polarizing_bs` takes `[in]`
/// (routing H to port b and V to port a) or `[in, h_out, v_out]`;
/// `polarization_controller` takes `[p]`.
pub fn make_element(kind: ElementKind, ports: &[Port], param: Option<f64>) -> Result<ElementSpec> {
    let distinct: BTreeSet<Port> = ports.iter().copied().collect();
    if distinct.len() != ports.len() {
        return Err(Error::BadParams("element ports must be distinct".into()));
    }
    match (kind, ports) {
        (ElementKind::BeamSplitter5050, [p, q]) => Ok(ElementSpec::beam_splitter([*p, *q], [*p, *q])),
        (ElementKind::BeamSplitter5050, [i1, i2, o1, o2]) => {
            Ok(ElementSpec::beam_splitter([*i1, *i2], [*o1, *o2]))
        }
        (ElementKind::PhaseShifter, [p]) => match param {
            Some(phase) if phase.is_finite() => Ok(ElementSpec::phase_shifter(*p, phase)),
            Some(_) => Err(Error::BadParams("phase must be finite".into())),
            None => Err(Error::BadParams("phase_shifter requires a phase parameter".into())),
        },
        (ElementKind::Mirror, [from, to]) => Ok(ElementSpec::mirror(*from, *to)),
        (ElementKind::PolarizingBs, [input]) => {
            Ok(ElementSpec::polarizing_bs(*input, Port::B, Port::A))
        }
        (ElementKind::PolarizingBs, [input, h_out, v_out]) => {
            Ok(ElementSpec::polarizing_bs(*input, *h_out, *v_out))
        }
        (ElementKind::PolarizationController, [p]) => Ok(ElementSpec::polarization_controller(*p)),
        _ => Err(Error::BadParams(format!(
            "wrong port count {} for {kind:?}",
            ports.len()
        ))),
    }
}

impl ElementSpec {
    /// 50:50 splitter between two polarization-free port modes.
    pub fn beam_splitter(inputs: [Port; 2], outputs: [Port; 2]) -> Self {
        let s = Complex64::new(FRAC_1_SQRT_2, 0.0);
        let is = Complex64::new(0.0, FRAC_1_SQRT_2);
        ElementSpec {
            kind: ElementKind::BeamSplitter5050,
            basis_in: inputs.iter().map(|p| ModeLabel::path(*p)).collect(),
            basis_out: outputs.iter().map(|p| ModeLabel::path(*p)).collect(),
            matrix: vec![vec![s, is], vec![is, s]],
            phase: None,
        }
    }

    /// Multiplies the amplitude on one polarization-free port by e^{i phase}.
    pub fn phase_shifter(port: Port, phase: f64) -> Self {
        ElementSpec {
            kind: ElementKind::PhaseShifter,
            basis_in: vec![ModeLabel::path(port)],
            basis_out: vec![ModeLabel::path(port)],
            matrix: vec![vec![Complex64::cis(phase)]],
            phase: Some(phase),
        }
    }

    /// Identity relabeling of one port.
    pub fn mirror(from: Port, to: Port) -> Self {
        ElementSpec {
            kind: ElementKind::Mirror,
            basis_in: vec![ModeLabel::path(from)],
            basis_out: vec![ModeLabel::path(to)],
            matrix: vec![vec![Complex64::new(1.0, 0.0)]],
            phase: None,
        }
    }

    /// Routes the horizontal component of `input` to `h_out` and the vertical
    /// component to `v_out`, amplitudes unchanged.
    pub fn polarizing_bs(input: Port, h_out: Port, v_out: Port) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        ElementSpec {
            kind: ElementKind::PolarizingBs,
            basis_in: vec![
                ModeLabel::with_pol(input, Pol::H),
                ModeLabel::with_pol(input, Pol::V),
            ],
            basis_out: vec![
                ModeLabel::with_pol(h_out, Pol::H),
                ModeLabel::with_pol(v_out, Pol::V),
            ],
            matrix: vec![vec![one, zero], vec![zero, one]],
            phase: None,
        }
    }

    /// Erases the polarization tag on one port: (p, pol) -> (p, none).
    /// Acts on whichever single polarization component is present.
    pub fn polarization_controller(port: Port) -> Self {
        ElementSpec {
            kind: ElementKind::PolarizationController,
            basis_in: vec![ModeLabel::path(port)],
            basis_out: vec![ModeLabel::path(port)],
            matrix: vec![vec![Complex64::new(1.0, 0.0)]],
            phase: None,
        }
    }

    pub fn basis_in(&self) -> &[ModeLabel] {
        &self.basis_in
    }

    pub fn basis_out(&self) -> &[ModeLabel] {
        &self.basis_out
    }

    pub fn matrix(&self) -> &[Vec<Complex64>] {
        &self.matrix
    }

    pub fn phase(&self) -> Option<f64> {
        self.phase
    }

    pub fn input_ports(&self) -> BTreeSet<Port> {
        self.basis_in.iter().map(|l| l.port).collect()
    }

    pub fn output_ports(&self) -> BTreeSet<Port> {
        self.basis_out.iter().map(|l| l.port).collect()
    }

    /// (input port, output port) pairs coupled by a nonzero matrix entry.
    pub fn couplings(&self) -> Vec<(Port, Port)> {
        let mut pairs = Vec::new();
        for (r, out) in self.basis_out.iter().enumerate() {
            for (c, inp) in self.basis_in.iter().enumerate() {
                if self.matrix[r][c].norm_sqr() > 0.0 && !pairs.contains(&(inp.port, out.port)) {
                    pairs.push((inp.port, out.port));
                }
            }
        }
        pairs
    }

    /// Max-norm defect of U†U - I. Zero for an exactly unitary matrix.
    pub fn unitarity_defect(&self) -> f64 {
        let n = self.matrix.len();
        let mut worst: f64 = 0.0;
        for j in 0..n {
            for k in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for r in 0..n {
                    acc += self.matrix[r][j].conj() * self.matrix[r][k];
                }
                let target = if j == k { 1.0 } else { 0.0 };
                worst = worst.max((acc - Complex64::new(target, 0.0)).norm());
            }
        }
        worst
    }
}

/// Applies an element to a single-photon field. Amplitudes on the element's
/// mode basis transform by its matrix; all other amplitudes are unchanged.
/// Missing input modes count as zero (vacuum). Amplitude sitting on an input
/// port in a polarization the element cannot act on is an error rather than
/// a silent pass-through.
pub fn apply(element: &ElementSpec, field: &FieldState) -> Result<FieldState> {
    let mut out = field.clone();
    let pairs: Vec<(ModeLabel, Complex64)> = field.amps().collect();
    apply_in_place(element, &mut out, &pairs)?;
    Ok(out)
}

/// Applies an element to the system side of a two-photon state, environment
/// labels untouched. Performed slice by slice over environment labels.
pub fn apply_system(
    element: &ElementSpec,
    state: &TwoPhotonState<Complex64>,
) -> Result<TwoPhotonState<Complex64>> {
    let mut terms: Vec<((ModeLabel, ModeLabel), Complex64)> = Vec::new();
    for env in state.env_labels() {
        let slice: Vec<(ModeLabel, Complex64)> = state
            .terms()
            .filter(|((_, e), _)| *e == env)
            .map(|((s, _), a)| (s, a))
            .collect();
        let mut field = FieldState::from_amps(slice.iter().copied())?;
        apply_in_place(element, &mut field, &slice)?;
        for (label, amp) in field.amps() {
            terms.push(((label, env), amp));
        }
    }
    TwoPhotonState::new(terms)
}

fn apply_in_place(
    element: &ElementSpec,
    out: &mut FieldState,
    stored: &[(ModeLabel, Complex64)],
) -> Result<()> {
    let in_ports = element.input_ports();
    if element.kind == ElementKind::PolarizationController {
        let port = element.basis_in[0].port;
        let present: Vec<ModeLabel> = stored
            .iter()
            .filter(|(l, a)| l.port == port && !Amplitude::is_zero(a))
            .map(|(l, _)| *l)
            .collect();
        if present.len() > 1 {
            return Err(Error::LabelMismatch(format!(
                "polarization controller on {port} cannot merge {} components",
                present.len()
            )));
        }
        if let Some(label) = present.first() {
            let amp = out.remove_amp(label);
            out.insert_amp(ModeLabel::path(port), amp);
        }
        return Ok(());
    }

    let covered: BTreeSet<ModeLabel> = element.basis_in.iter().copied().collect();
    for (label, amp) in stored {
        if in_ports.contains(&label.port) && !covered.contains(label) && !Amplitude::is_zero(amp) {
            return Err(Error::LabelMismatch(format!(
                "element {:?} cannot act on mode {label}",
                element.kind
            )));
        }
    }

    let v: Vec<Complex64> = element.basis_in.iter().map(|l| out.amp(*l)).collect();
    for label in &element.basis_in {
        out.remove_amp(label);
    }
    out.widen_space(element.basis_in.iter().copied());
    for (r, out_label) in element.basis_out.iter().enumerate() {
        let mut acc = Complex64::new(0.0, 0.0);
        for (c, x) in v.iter().enumerate() {
            acc += element.matrix[r][c] * x;
        }
        out.insert_amp(*out_label, acc);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const TOL: f64 = 1e-12;
    const UNITARY_TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn splitter_halves_a_single_beam() {
        let bs = make_element(ElementKind::BeamSplitter5050, &[Port::A, Port::B], None).unwrap();
        let field = FieldState::pure(ModeLabel::path(Port::A));
        let out = apply(&bs, &field).unwrap();
        let w = FRAC_1_SQRT_2;
        assert_eq!(out.amp(ModeLabel::path(Port::A)), c(w, 0.0));
        assert_eq!(out.amp(ModeLabel::path(Port::B)), c(0.0, w));
        assert_relative_eq!(out.norm_sqr(), 1.0, epsilon = TOL);
    }

    // Two consecutive splitters square the matrix: column (1, 0) maps to
    // (0, i). The vanishing output is an exact float zero by symmetry.
    #[test]
    fn splitter_squared_is_a_swap_with_phase() {
        let bs = ElementSpec::beam_splitter([Port::A, Port::B], [Port::A, Port::B]);
        let field = FieldState::pure(ModeLabel::path(Port::A));
        let out = apply(&bs, &apply(&bs, &field).unwrap()).unwrap();
        assert_eq!(out.amp(ModeLabel::path(Port::A)), c(0.0, 0.0));
        let b = out.amp(ModeLabel::path(Port::B));
        assert_relative_eq!(b.im, 1.0, max_relative = TOL);
        assert_relative_eq!(b.re, 0.0, epsilon = TOL);
    }

    #[test]
    fn splitter_can_relabel_ports() {
        let bs = ElementSpec::beam_splitter([Port::In, Port::Dark], [Port::A, Port::B]);
        let out = apply(&bs, &FieldState::pure(ModeLabel::path(Port::In))).unwrap();
        assert_eq!(out.amp(ModeLabel::path(Port::In)), c(0.0, 0.0));
        assert_eq!(out.amp(ModeLabel::path(Port::A)), c(FRAC_1_SQRT_2, 0.0));
        assert_eq!(out.amp(ModeLabel::path(Port::B)), c(0.0, FRAC_1_SQRT_2));
    }

    #[test]
    fn all_elements_are_unitary() {
        let specs = [
            ElementSpec::beam_splitter([Port::A, Port::B], [Port::Out1, Port::Out2]),
            ElementSpec::phase_shifter(Port::B, 0.7),
            ElementSpec::mirror(Port::A, Port::Out1),
            ElementSpec::polarizing_bs(Port::In, Port::B, Port::A),
            ElementSpec::polarization_controller(Port::A),
        ];
        for spec in &specs {
            assert!(
                spec.unitarity_defect() < UNITARY_TOL,
                "{:?} defect {}",
                spec.kind,
                spec.unitarity_defect()
            );
        }
    }

    #[test]
    fn phase_shifter_rotates_one_arm() {
        let phi = 1.234;
        let el = make_element(ElementKind::PhaseShifter, &[Port::B], Some(phi)).unwrap();
        let field = FieldState::from_amps([
            (ModeLabel::path(Port::A), c(0.5, 0.0)),
            (ModeLabel::path(Port::B), c(0.5, 0.0)),
        ])
        .unwrap();
        let out = apply(&el, &field).unwrap();
        assert_eq!(out.amp(ModeLabel::path(Port::A)), c(0.5, 0.0));
        let b = out.amp(ModeLabel::path(Port::B));
        assert_relative_eq!(b.re, 0.5 * phi.cos(), max_relative = TOL);
        assert_relative_eq!(b.im, 0.5 * phi.sin(), max_relative = TOL);
        assert_relative_eq!(out.norm_sqr(), field.norm_sqr(), max_relative = TOL);
    }

    #[test]
    fn phase_shifter_requires_a_phase() {
        let r = make_element(ElementKind::PhaseShifter, &[Port::B], None);
        assert!(matches!(r, Err(Error::BadParams(_))));
    }

    #[test]
    fn duplicate_ports_are_rejected() {
        let r = make_element(ElementKind::BeamSplitter5050, &[Port::A, Port::A], None);
        assert!(matches!(r, Err(Error::BadParams(_))));
    }

    #[test]
    fn polarizing_splitter_routes_by_polarization() {
        let pbs = make_element(ElementKind::PolarizingBs, &[Port::In], None).unwrap();
        let field = FieldState::from_amps([
            (ModeLabel::with_pol(Port::In, Pol::H), c(0.6, 0.0)),
            (ModeLabel::with_pol(Port::In, Pol::V), c(0.0, 0.8)),
        ])
        .unwrap();
        let out = apply(&pbs, &field).unwrap();
        assert_eq!(out.amp(ModeLabel::with_pol(Port::B, Pol::H)), c(0.6, 0.0));
        assert_eq!(out.amp(ModeLabel::with_pol(Port::A, Pol::V)), c(0.0, 0.8));
        assert_relative_eq!(out.norm_sqr(), 1.0, epsilon = TOL);
    }

    #[test]
    fn polarizing_splitter_rejects_circular_light() {
        let pbs = ElementSpec::polarizing_bs(Port::In, Port::B, Port::A);
        let field = FieldState::pure(ModeLabel::with_pol(Port::In, Pol::L));
        assert!(matches!(apply(&pbs, &field), Err(Error::LabelMismatch(_))));
    }

    #[test]
    fn plain_splitter_rejects_polarized_light() {
        let bs = ElementSpec::beam_splitter([Port::A, Port::B], [Port::Out1, Port::Out2]);
        let field = FieldState::pure(ModeLabel::with_pol(Port::A, Pol::H));
        assert!(matches!(apply(&bs, &field), Err(Error::LabelMismatch(_))));
    }

    #[test]
    fn mirror_relabels_exactly() {
        let m = make_element(ElementKind::Mirror, &[Port::A, Port::Out1], None).unwrap();
        let z = c(0.3, -0.4);
        let field = FieldState::from_amps([(ModeLabel::path(Port::A), z)]).unwrap();
        let out = apply(&m, &field).unwrap();
        assert_eq!(out.amp(ModeLabel::path(Port::Out1)), z);
        assert_eq!(out.amp(ModeLabel::path(Port::A)), c(0.0, 0.0));
    }

    #[test]
    fn controller_erases_the_polarization_tag() {
        let ctrl = make_element(ElementKind::PolarizationController, &[Port::B], None).unwrap();
        let z = c(0.0, FRAC_1_SQRT_2);
        let field = FieldState::from_amps([(ModeLabel::with_pol(Port::B, Pol::H), z)]).unwrap();
        let out = apply(&ctrl, &field).unwrap();
        assert_eq!(out.amp(ModeLabel::path(Port::B)), z);
        assert_eq!(out.amp(ModeLabel::with_pol(Port::B, Pol::H)), c(0.0, 0.0));
    }

    #[test]
    fn controller_refuses_to_merge_components() {
        let ctrl = ElementSpec::polarization_controller(Port::B);
        let field = FieldState::from_amps([
            (ModeLabel::with_pol(Port::B, Pol::H), c(0.5, 0.0)),
            (ModeLabel::with_pol(Port::B, Pol::V), c(0.5, 0.0)),
        ])
        .unwrap();
        assert!(matches!(apply(&ctrl, &field), Err(Error::LabelMismatch(_))));
    }

    // Routing the entangled pair through the polarizing splitter plus
    // controllers reproduces the algebraic path substitution.
    #[test]
    fn circuit_route_matches_algebraic_route() {
        let pair: TwoPhotonState = TwoPhotonState::entangled_hv_pair();
        let algebra = pair.polarization_to_path().unwrap();

        let pbs = ElementSpec::polarizing_bs(Port::In, Port::B, Port::A);
        let ctrl_a = ElementSpec::polarization_controller(Port::A);
        let ctrl_b = ElementSpec::polarization_controller(Port::B);
        let mut routed = apply_system(&pbs, &pair).unwrap();
        routed = apply_system(&ctrl_a, &routed).unwrap();
        routed = apply_system(&ctrl_b, &routed).unwrap();

        assert_eq!(routed, algebra);
    }
}
