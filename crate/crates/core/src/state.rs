//! Mode-labeled field states and the polarization/path algebra.
//!
//! A field mode is labeled by a circuit port plus an optional polarization.
//! Single-photon fields are sparse maps from mode labels to complex
//! amplitudes; the entangled pair used by the eraser scenario is a sparse map
//! over (system, environment) label pairs. Basis rewrites follow the ket
//! substitution rules
//!
//! ```text
//! |H> = (|R> + |L>)/sqrt(2)      |L> = (|H> - i|V>)/sqrt(2)
//! |V> = i(|L> - |R>)/sqrt(2)     |R> = (|H> + i|V>)/sqrt(2)
//! ```
//!
//! and the path substitution |H>_s -> |b>_s, |V>_s -> |a>_s performed by the
//! polarizing splitter plus controllers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::ops::{Add, Mul, Neg};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Circuit port names. Which ports exist is decided by the enclosing circuit;
/// this enum is the union over the built-in scenarios.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Port {
    /// Source entry port.
    In,
    /// Unused second input of an entry beam splitter. Never carries amplitude.
    Dark,
    /// Interferometer arm a.
    A,
    /// Interferometer arm b.
    B,
    /// Output beam toward detector 1.
    Out1,
    /// Output beam toward detector 2.
    Out2,
    /// Environment photon of the entangled pair (not routed by the circuit).
    Env,
    /// First independent source.
    Src1,
    /// Second independent source.
    Src2,
    /// Continuous screen region.
    Screen,
}

impl fmt::Display for Port {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Port::In => "in",
            Port::Dark => "dark",
            Port::A => "a",
            Port::B => "b",
            Port::Out1 => "out1",
            Port::Out2 => "out2",
            Port::Env => "env",
            Port::Src1 => "src1",
            Port::Src2 => "src2",
            Port::Screen => "screen",
        };
        f.write_str(s)
    }
}

/// Polarization label. `Pol::None` marks modes where polarization has been
/// erased or never mattered (plain interferometer arms).
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Pol {
    H,
    V,
    L,
    R,
    #[serde(rename = "none")]
    None,
}

impl Pol {
    pub fn is_linear(self) -> bool {
        matches!(self, Pol::H | Pol::V)
    }
    pub fn is_circular(self) -> bool {
        matches!(self, Pol::L | Pol::R)
    }
}

impl fmt::Display for Pol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Pol::H => "H",
            Pol::V => "V",
            Pol::L => "L",
            Pol::R => "R",
            Pol::None => "none",
        };
        f.write_str(s)
    }
}

/// A field mode: a port plus a polarization tag.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ModeLabel {
    pub port: Port,
    pub pol: Pol,
}

impl ModeLabel {
    /// Label for a polarization-free path mode.
    pub const fn path(port: Port) -> Self {
        ModeLabel { port, pol: Pol::None }
    }
    pub const fn with_pol(port: Port, pol: Pol) -> Self {
        ModeLabel { port, pol }
    }
}

impl fmt::Display for ModeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.pol {
            Pol::None => write!(f, "{}", self.port),
            pol => write!(f, "{}:{}", self.port, pol),
        }
    }
}

/// Scalar ring the state algebra is generic over. `Complex64` is the working
/// backend; [`crate::exact::ExactAmp`] reruns the same rewrites without
/// rounding so published coefficients can be matched with zero error.
pub trait Amplitude:
    Clone + PartialEq + fmt::Debug + Add<Output = Self> + Mul<Output = Self> + Neg<Output = Self>
{
    fn zero() -> Self;
    fn one() -> Self;
    /// The imaginary unit.
    fn i() -> Self;
    /// 1/sqrt(2).
    fn sqrt_half() -> Self;
    fn is_zero(&self) -> bool;
    fn is_finite(&self) -> bool;
}

impl Amplitude for Complex64 {
    fn zero() -> Self {
        Complex64::new(0.0, 0.0)
    }
    fn one() -> Self {
        Complex64::new(1.0, 0.0)
    }
    fn i() -> Self {
        Complex64::new(0.0, 1.0)
    }
    fn sqrt_half() -> Self {
        Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.im == 0.0
    }
    fn is_finite(&self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

/// Single-photon field: amplitudes over a declared mode label space.
/// Labels absent from the map carry amplitude zero.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldState {
    space: BTreeSet<ModeLabel>,
    amps: BTreeMap<ModeLabel, Complex64>,
}

impl FieldState {
    /// Builds a state whose label space is exactly the set of given labels.
    /// Duplicate labels accumulate.
    pub fn from_amps<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ModeLabel, Complex64)>,
    {
        let mut amps: BTreeMap<ModeLabel, Complex64> = BTreeMap::new();
        for (label, amp) in pairs {
            if !Amplitude::is_finite(&amp) {
                return Err(Error::NonFinite(label.to_string()));
            }
            *amps.entry(label).or_insert_with(|| Complex64::new(0.0, 0.0)) += amp;
        }
        let space = amps.keys().copied().collect();
        Ok(FieldState { space, amps })
    }

    /// Builds a state over an explicit label space; amplitude keys must lie
    /// inside it.
    pub fn with_space<S, I>(space: S, pairs: I) -> Result<Self>
    where
        S: IntoIterator<Item = ModeLabel>,
        I: IntoIterator<Item = (ModeLabel, Complex64)>,
    {
        let space: BTreeSet<ModeLabel> = space.into_iter().collect();
        let mut amps: BTreeMap<ModeLabel, Complex64> = BTreeMap::new();
        for (label, amp) in pairs {
            if !space.contains(&label) {
                return Err(Error::LabelMismatch(format!("label {label} outside declared space")));
            }
            if !Amplitude::is_finite(&amp) {
                return Err(Error::NonFinite(label.to_string()));
            }
            *amps.entry(label).or_insert_with(|| Complex64::new(0.0, 0.0)) += amp;
        }
        Ok(FieldState { space, amps })
    }

    /// Unit amplitude on a single mode.
    pub fn pure(label: ModeLabel) -> Self {
        let mut amps = BTreeMap::new();
        amps.insert(label, Complex64::new(1.0, 0.0));
        FieldState { space: [label].into_iter().collect(), amps }
    }

    pub fn space(&self) -> &BTreeSet<ModeLabel> {
        &self.space
    }

    /// Amplitude on a label; zero when absent.
    pub fn amp(&self, label: ModeLabel) -> Complex64 {
        self.amps.get(&label).copied().unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    /// Iterates stored (label, amplitude) entries in label order.
    pub fn amps(&self) -> impl Iterator<Item = (ModeLabel, Complex64)> + '_ {
        self.amps.iter().map(|(l, a)| (*l, *a))
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    /// Scales to unit norm. A zero field cannot be normalized.
    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::ZeroState);
        }
        let scale = 1.0 / n2.sqrt();
        let amps = self.amps.iter().map(|(l, a)| (*l, a * scale)).collect();
        Ok(FieldState { space: self.space.clone(), amps })
    }

    /// Hermitian inner product, conjugate-linear in `self`. Both states must
    /// share one declared label space.
    pub fn inner_product(&self, other: &FieldState) -> Result<Complex64> {
        if self.space != other.space {
            return Err(Error::LabelMismatch("inner product over differing label spaces".into()));
        }
        let mut acc = Complex64::new(0.0, 0.0);
        for (label, a) in &self.amps {
            acc += a.conj() * other.amp(*label);
        }
        Ok(acc)
    }

    /// True when both normalized states agree up to a global phase:
    /// |<x|y>| >= 1 - tol.
    pub fn ray_eq(&self, other: &FieldState, tol: f64) -> Result<bool> {
        let x = self.normalize()?;
        let y = other.normalize()?;
        Ok(x.inner_product(&y)?.norm() >= 1.0 - tol)
    }

    pub(crate) fn insert_amp(&mut self, label: ModeLabel, amp: Complex64) {
        self.space.insert(label);
        self.amps.insert(label, amp);
    }

    pub(crate) fn remove_amp(&mut self, label: &ModeLabel) -> Complex64 {
        self.amps.remove(label).unwrap_or_else(|| Complex64::new(0.0, 0.0))
    }

    pub(crate) fn widen_space<I: IntoIterator<Item = ModeLabel>>(&mut self, labels: I) {
        self.space.extend(labels);
    }
}

/// Entangled two-photon state: amplitudes over (system, environment) label
/// pairs. System and environment must live on disjoint port sets.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoPhotonState<A: Amplitude = Complex64> {
    amps: BTreeMap<(ModeLabel, ModeLabel), A>,
}

impl<A: Amplitude> TwoPhotonState<A> {
    pub fn new<I>(terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = ((ModeLabel, ModeLabel), A)>,
    {
        let mut amps: BTreeMap<(ModeLabel, ModeLabel), A> = BTreeMap::new();
        for (key, amp) in terms {
            if !amp.is_finite() {
                return Err(Error::NonFinite(format!("{}|{}", key.0, key.1)));
            }
            let entry = amps.entry(key).or_insert_with(A::zero);
            *entry = entry.clone() + amp;
        }
        amps.retain(|_, a| !a.is_zero());
        let state = TwoPhotonState { amps };
        state.check_disjoint()?;
        Ok(state)
    }

    /// The polarization-entangled pair (|H>_s|V>_e + |V>_s|H>_e)/sqrt(2) with
    /// the system photon on the entry port.
    pub fn entangled_hv_pair() -> Self {
        let s_h = ModeLabel::with_pol(Port::In, Pol::H);
        let s_v = ModeLabel::with_pol(Port::In, Pol::V);
        let e_h = ModeLabel::with_pol(Port::Env, Pol::H);
        let e_v = ModeLabel::with_pol(Port::Env, Pol::V);
        let mut amps = BTreeMap::new();
        amps.insert((s_h, e_v), A::sqrt_half());
        amps.insert((s_v, e_h), A::sqrt_half());
        TwoPhotonState { amps }
    }

    fn check_disjoint(&self) -> Result<()> {
        let sys: BTreeSet<Port> = self.amps.keys().map(|(s, _)| s.port).collect();
        let env: BTreeSet<Port> = self.amps.keys().map(|(_, e)| e.port).collect();
        if sys.intersection(&env).next().is_some() {
            return Err(Error::LabelMismatch(
                "system and environment label spaces overlap".into(),
            ));
        }
        Ok(())
    }

    pub fn amp(&self, system: ModeLabel, env: ModeLabel) -> A {
        self.amps.get(&(system, env)).cloned().unwrap_or_else(A::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = ((ModeLabel, ModeLabel), A)> + '_ {
        self.amps.iter().map(|(k, a)| (*k, a.clone()))
    }

    pub fn system_labels(&self) -> BTreeSet<ModeLabel> {
        self.amps.keys().map(|(s, _)| *s).collect()
    }

    pub fn env_labels(&self) -> BTreeSet<ModeLabel> {
        self.amps.keys().map(|(_, e)| *e).collect()
    }

    fn map_factors<FS, FE>(&self, fs: FS, fe: FE) -> Result<Self>
    where
        FS: Fn(ModeLabel) -> Result<Vec<(ModeLabel, A)>>,
        FE: Fn(ModeLabel) -> Result<Vec<(ModeLabel, A)>>,
    {
        let mut amps: BTreeMap<(ModeLabel, ModeLabel), A> = BTreeMap::new();
        for ((s, e), amp) in &self.amps {
            for (s2, cs) in fs(*s)? {
                for (e2, ce) in fe(*e)? {
                    let term = amp.clone() * cs.clone() * ce;
                    let entry = amps.entry((s2, e2)).or_insert_with(A::zero);
                    *entry = entry.clone() + term;
                }
            }
        }
        amps.retain(|_, a| !a.is_zero());
        Ok(TwoPhotonState { amps })
    }

    /// Rewrites every linearly polarized factor into the circular basis.
    /// Path-only factors pass through; circular factors are rejected.
    pub fn linear_to_circular(&self) -> Result<Self> {
        self.map_factors(expand_to_circular, expand_to_circular)
    }

    /// Rewrites every circularly polarized factor into the linear basis.
    pub fn circular_to_linear(&self) -> Result<Self> {
        self.map_factors(expand_to_linear, expand_to_linear)
    }

    /// Replaces system polarization labels by path labels: |H>_s -> |b>_s,
    /// |V>_s -> |a>_s. Circular system labels are first rewritten into the
    /// linear basis. Environment labels are untouched.
    pub fn polarization_to_path(&self) -> Result<Self> {
        let sys = self.system_labels();
        if sys.iter().all(|l| l.pol == Pol::None) {
            return Err(Error::Basis("system labels are already path labels".into()));
        }
        if sys.iter().any(|l| l.pol == Pol::None) {
            return Err(Error::Basis("system mixes path and polarization labels".into()));
        }
        let any_circular = sys.iter().any(|l| l.pol.is_circular());
        let any_linear = sys.iter().any(|l| l.pol.is_linear());
        if any_circular && any_linear {
            return Err(Error::Basis("system mixes linear and circular labels".into()));
        }
        let state = if any_circular {
            self.map_factors(expand_to_linear, |e| Ok(vec![(e, A::one())]))?
        } else {
            self.clone()
        };
        state.map_factors(
            |s| match s.pol {
                Pol::H => Ok(vec![(ModeLabel::path(Port::B), A::one())]),
                Pol::V => Ok(vec![(ModeLabel::path(Port::A), A::one())]),
                other => Err(Error::Basis(format!("unexpected system polarization {other}"))),
            },
            |e| Ok(vec![(e, A::one())]),
        )
    }
}

pub fn expand_to_circular<A: Amplitude>(label: ModeLabel) -> Result<Vec<(ModeLabel, A)>> {
    match label.pol {
        Pol::None => Ok(vec![(label, A::one())]),
        Pol::H => Ok(vec![
            (ModeLabel::with_pol(label.port, Pol::R), A::sqrt_half()),
            (ModeLabel::with_pol(label.port, Pol::L), A::sqrt_half()),
        ]),
        Pol::V => Ok(vec![
            (ModeLabel::with_pol(label.port, Pol::L), A::i() * A::sqrt_half()),
            (ModeLabel::with_pol(label.port, Pol::R), -(A::i() * A::sqrt_half())),
        ]),
        Pol::L | Pol::R => Err(Error::Basis(format!("label {label} is already circular"))),
    }
}

pub fn expand_to_linear<A: Amplitude>(label: ModeLabel) -> Result<Vec<(ModeLabel, A)>> {
    match label.pol {
        Pol::None => Ok(vec![(label, A::one())]),
        Pol::L => Ok(vec![
            (ModeLabel::with_pol(label.port, Pol::H), A::sqrt_half()),
            (ModeLabel::with_pol(label.port, Pol::V), -(A::i() * A::sqrt_half())),
        ]),
        Pol::R => Ok(vec![
            (ModeLabel::with_pol(label.port, Pol::H), A::sqrt_half()),
            (ModeLabel::with_pol(label.port, Pol::V), A::i() * A::sqrt_half()),
        ]),
        Pol::H | Pol::V => Err(Error::Basis(format!("label {label} is already linear"))),
    }
}

impl TwoPhotonState<Complex64> {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_sqr();
        if n2 == 0.0 {
            return Err(Error::ZeroState);
        }
        let scale = 1.0 / n2.sqrt();
        let amps = self.amps.iter().map(|(k, a)| (*k, a * scale)).collect();
        Ok(TwoPhotonState { amps })
    }

    /// Probability of an environment outcome and the renormalized system
    /// field left behind. The system field's label space is the full system
    /// label set, so zero-amplitude arms stay addressable downstream.
    pub fn condition_on_environment(&self, outcome: ModeLabel) -> Result<(f64, FieldState)> {
        if !self.env_labels().contains(&outcome) {
            return Err(Error::LabelMismatch(format!(
                "outcome {outcome} is not an environment label of this state"
            )));
        }
        let mut slice: Vec<(ModeLabel, Complex64)> = Vec::new();
        for ((s, e), amp) in &self.amps {
            if *e == outcome {
                slice.push((*s, *amp));
            }
        }
        let prob: f64 = slice.iter().map(|(_, a)| a.norm_sqr()).sum();
        if prob == 0.0 {
            return Err(Error::ZeroProbability(outcome.to_string()));
        }
        let scale = 1.0 / prob.sqrt();
        let field = FieldState::with_space(
            self.system_labels(),
            slice.into_iter().map(|(l, a)| (l, a * scale)),
        )?;
        Ok((prob, field))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ExactAmp;
    use approx::assert_relative_eq;

    const TOL: f64 = 1e-12;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn lbl(port: Port, pol: Pol) -> ModeLabel {
        ModeLabel::with_pol(port, pol)
    }

    #[test]
    fn normalize_splits_equal_weights() {
        let s = FieldState::from_amps([
            (ModeLabel::path(Port::A), c(1.0, 0.0)),
            (ModeLabel::path(Port::B), c(1.0, 0.0)),
        ])
        .unwrap();
        let n = s.normalize().unwrap();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(n.amp(ModeLabel::path(Port::A)).re, w, max_relative = TOL);
        assert_relative_eq!(n.amp(ModeLabel::path(Port::B)).re, w, max_relative = TOL);
        assert_relative_eq!(n.norm_sqr(), 1.0, epsilon = TOL);
    }

    #[test]
    fn normalize_keeps_unit_states() {
        let s = FieldState::from_amps([
            (ModeLabel::path(Port::A), c(0.6, 0.0)),
            (ModeLabel::path(Port::B), c(0.0, 0.8)),
        ])
        .unwrap();
        let n = s.normalize().unwrap();
        assert_eq!(n.amp(ModeLabel::path(Port::A)), c(0.6, 0.0));
        assert_eq!(n.amp(ModeLabel::path(Port::B)), c(0.0, 0.8));
    }

    #[test]
    fn normalize_rejects_zero_state() {
        let s = FieldState::from_amps([(ModeLabel::path(Port::A), c(0.0, 0.0))]).unwrap();
        assert!(matches!(s.normalize(), Err(Error::ZeroState)));
    }

    #[test]
    fn rejects_non_finite_amplitudes() {
        let r = FieldState::from_amps([(ModeLabel::path(Port::A), c(f64::NAN, 0.0))]);
        assert!(matches!(r, Err(Error::NonFinite(_))));
    }

    #[test]
    fn inner_product_distinct_modes_is_zero() {
        let space = [ModeLabel::path(Port::A), ModeLabel::path(Port::B)];
        let a = FieldState::with_space(space, [(ModeLabel::path(Port::A), c(1.0, 0.0))]).unwrap();
        let b = FieldState::with_space(space, [(ModeLabel::path(Port::B), c(1.0, 0.0))]).unwrap();
        assert_eq!(a.inner_product(&b).unwrap(), c(0.0, 0.0));
    }

    #[test]
    fn inner_product_conjugates_first_argument() {
        let l = ModeLabel::path(Port::A);
        let x = FieldState::from_amps([(l, c(0.0, 1.0))]).unwrap();
        let y = FieldState::from_amps([(l, c(1.0, 0.0))]).unwrap();
        // <i a | a> = conj(i) = -i
        assert_eq!(x.inner_product(&y).unwrap(), c(0.0, -1.0));
    }

    #[test]
    fn inner_product_rejects_differing_spaces() {
        let a = FieldState::pure(ModeLabel::path(Port::A));
        let b = FieldState::pure(ModeLabel::path(Port::B));
        assert!(matches!(a.inner_product(&b), Err(Error::LabelMismatch(_))));
    }

    #[test]
    fn entangled_pair_is_normalized() {
        let s: TwoPhotonState = TwoPhotonState::entangled_hv_pair();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        assert_relative_eq!(s.norm_sqr(), 1.0, epsilon = TOL);
        assert_relative_eq!(
            s.amp(lbl(Port::In, Pol::H), lbl(Port::Env, Pol::V)).re,
            w,
            max_relative = TOL
        );
        assert_relative_eq!(
            s.amp(lbl(Port::In, Pol::V), lbl(Port::Env, Pol::H)).re,
            w,
            max_relative = TOL
        );
    }

    #[test]
    fn system_and_environment_ports_must_differ() {
        let r: Result<TwoPhotonState> = TwoPhotonState::new([(
            (lbl(Port::In, Pol::H), lbl(Port::In, Pol::V)),
            Complex64::new(1.0, 0.0),
        )]);
        assert!(matches!(r, Err(Error::LabelMismatch(_))));
    }

    // Circular rewrite of the entangled pair:
    // (i/sqrt2)(|L>_s|L>_e - |R>_s|R>_e), cross terms cancel exactly.
    #[test]
    fn entangled_pair_in_circular_basis() {
        let s: TwoPhotonState = TwoPhotonState::entangled_hv_pair();
        let circ = s.linear_to_circular().unwrap();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let ll = circ.amp(lbl(Port::In, Pol::L), lbl(Port::Env, Pol::L));
        let rr = circ.amp(lbl(Port::In, Pol::R), lbl(Port::Env, Pol::R));
        assert_eq!(ll.re, 0.0);
        assert_eq!(rr.re, 0.0);
        assert_relative_eq!(ll.im, w, max_relative = TOL);
        assert_relative_eq!(rr.im, -w, max_relative = TOL);
        // the cross terms cancel bitwise, not just approximately
        assert_eq!(circ.amp(lbl(Port::In, Pol::L), lbl(Port::Env, Pol::R)), c(0.0, 0.0));
        assert_eq!(circ.amp(lbl(Port::In, Pol::R), lbl(Port::Env, Pol::L)), c(0.0, 0.0));
        assert_eq!(circ.terms().count(), 2);
        assert_relative_eq!(circ.norm_sqr(), 1.0, epsilon = TOL);
    }

    // Single-factor substitution |H> -> (|R> + |L>)/sqrt(2) checked on a
    // product state: |H>|H> gains four equal-weight terms of 1/2.
    #[test]
    fn circular_rewrite_of_product_state() {
        let s: TwoPhotonState = TwoPhotonState::new([(
            (lbl(Port::In, Pol::H), lbl(Port::Env, Pol::H)),
            c(1.0, 0.0),
        )])
        .unwrap();
        let circ = s.linear_to_circular().unwrap();
        for sp in [Pol::L, Pol::R] {
            for ep in [Pol::L, Pol::R] {
                let a = circ.amp(lbl(Port::In, sp), lbl(Port::Env, ep));
                assert_relative_eq!(a.re, 0.5, max_relative = TOL);
                assert_relative_eq!(a.im, 0.0, epsilon = TOL);
            }
        }
    }

    #[test]
    fn circular_rewrite_rejects_circular_input() {
        let s: TwoPhotonState = TwoPhotonState::new([(
            (lbl(Port::In, Pol::L), lbl(Port::Env, Pol::H)),
            c(1.0, 0.0),
        )])
        .unwrap();
        assert!(matches!(s.linear_to_circular(), Err(Error::Basis(_))));
    }

    #[test]
    fn basis_rewrites_are_mutually_inverse() {
        let s: TwoPhotonState = TwoPhotonState::entangled_hv_pair();
        let back = s.linear_to_circular().unwrap().circular_to_linear().unwrap();
        for (key, amp) in s.terms() {
            let b = back.amp(key.0, key.1);
            assert_relative_eq!(b.re, amp.re, epsilon = TOL);
            assert_relative_eq!(b.im, amp.im, epsilon = TOL);
        }
        assert_relative_eq!(back.norm_sqr(), 1.0, epsilon = TOL);
    }

    // Path substitution on the linear-basis pair:
    // (1/sqrt2)(|b>_s|V>_e + |a>_s|H>_e).
    #[test]
    fn path_rewrite_of_linear_pair() {
        let s: TwoPhotonState = TwoPhotonState::entangled_hv_pair();
        let routed = s.polarization_to_path().unwrap();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(routed.amp(ModeLabel::path(Port::B), lbl(Port::Env, Pol::V)), c(w, 0.0));
        assert_eq!(routed.amp(ModeLabel::path(Port::A), lbl(Port::Env, Pol::H)), c(w, 0.0));
        assert_eq!(routed.terms().count(), 2);
    }

    // Path substitution on the circular-basis pair:
    // (1/2)[(|a>_s + i|b>_s)|L>_e + (|a>_s - i|b>_s)|R>_e].
    #[test]
    fn path_rewrite_of_circular_pair() {
        let s: TwoPhotonState = TwoPhotonState::entangled_hv_pair();
        let routed = s.linear_to_circular().unwrap().polarization_to_path().unwrap();
        let a = ModeLabel::path(Port::A);
        let b = ModeLabel::path(Port::B);
        let el = lbl(Port::Env, Pol::L);
        let er = lbl(Port::Env, Pol::R);
        assert_relative_eq!(routed.amp(a, el).re, 0.5, max_relative = TOL);
        assert_relative_eq!(routed.amp(a, el).im, 0.0, epsilon = TOL);
        assert_relative_eq!(routed.amp(b, el).im, 0.5, max_relative = TOL);
        assert_relative_eq!(routed.amp(b, el).re, 0.0, epsilon = TOL);
        assert_relative_eq!(routed.amp(a, er).re, 0.5, max_relative = TOL);
        assert_relative_eq!(routed.amp(b, er).im, -0.5, max_relative = TOL);
        assert_relative_eq!(routed.norm_sqr(), 1.0, epsilon = TOL);
    }

    #[test]
    fn path_rewrite_rejects_path_labels() {
        let s: TwoPhotonState = TwoPhotonState::new([(
            (ModeLabel::path(Port::A), lbl(Port::Env, Pol::H)),
            c(1.0, 0.0),
        )])
        .unwrap();
        assert!(matches!(s.polarization_to_path(), Err(Error::Basis(_))));
    }

    #[test]
    fn conditioning_on_linear_outcomes() {
        let s: TwoPhotonState =
            TwoPhotonState::entangled_hv_pair().polarization_to_path().unwrap();
        let (p_h, f_h) = s.condition_on_environment(lbl(Port::Env, Pol::H)).unwrap();
        assert_relative_eq!(p_h, 0.5, max_relative = TOL);
        assert_relative_eq!(f_h.amp(ModeLabel::path(Port::A)).re, 1.0, max_relative = TOL);
        assert_eq!(f_h.amp(ModeLabel::path(Port::B)), c(0.0, 0.0));
        // Label space keeps the empty arm addressable.
        assert!(f_h.space().contains(&ModeLabel::path(Port::B)));

        let (p_v, f_v) = s.condition_on_environment(lbl(Port::Env, Pol::V)).unwrap();
        assert_relative_eq!(p_v, 0.5, max_relative = TOL);
        assert_relative_eq!(f_v.amp(ModeLabel::path(Port::B)).re, 1.0, max_relative = TOL);
        assert_relative_eq!(p_h + p_v, 1.0, epsilon = TOL);
    }

    #[test]
    fn conditioning_on_circular_outcomes() {
        let s: TwoPhotonState = TwoPhotonState::entangled_hv_pair()
            .linear_to_circular()
            .unwrap()
            .polarization_to_path()
            .unwrap();
        let w = std::f64::consts::FRAC_1_SQRT_2;
        let (p_l, f_l) = s.condition_on_environment(lbl(Port::Env, Pol::L)).unwrap();
        assert_relative_eq!(p_l, 0.5, max_relative = TOL);
        assert_relative_eq!(f_l.amp(ModeLabel::path(Port::A)).re, w, max_relative = TOL);
        assert_relative_eq!(f_l.amp(ModeLabel::path(Port::B)).im, w, max_relative = TOL);

        let (p_r, f_r) = s.condition_on_environment(lbl(Port::Env, Pol::R)).unwrap();
        assert_relative_eq!(p_r, 0.5, max_relative = TOL);
        assert_relative_eq!(f_r.amp(ModeLabel::path(Port::B)).im, -w, max_relative = TOL);
        assert_relative_eq!(p_l + p_r, 1.0, epsilon = TOL);
    }

    #[test]
    fn conditioning_rejects_zero_probability_outcomes() {
        let s: TwoPhotonState = TwoPhotonState::new([
            ((ModeLabel::path(Port::B), lbl(Port::Env, Pol::V)), c(1.0, 0.0)),
            ((ModeLabel::path(Port::A), lbl(Port::Env, Pol::H)), c(0.0, 0.0)),
        ])
        .unwrap();
        // Zero entries are pruned, so H is no longer an environment label.
        assert!(s.condition_on_environment(lbl(Port::Env, Pol::H)).is_err());
    }

    #[test]
    fn conditioning_rejects_foreign_outcomes() {
        let s: TwoPhotonState =
            TwoPhotonState::entangled_hv_pair().polarization_to_path().unwrap();
        let r = s.condition_on_environment(lbl(Port::Env, Pol::L));
        assert!(matches!(r, Err(Error::LabelMismatch(_))));
    }

    // The same rewrites in exact arithmetic reproduce the published
    // coefficients with zero error.
    #[test]
    fn exact_rewrites_match_published_coefficients() {
        let s: TwoPhotonState<ExactAmp> = TwoPhotonState::entangled_hv_pair();

        let circ = s.linear_to_circular().unwrap();
        let i_over_sqrt2 = ExactAmp::i() * ExactAmp::sqrt_half();
        assert_eq!(circ.amp(lbl(Port::In, Pol::L), lbl(Port::Env, Pol::L)), i_over_sqrt2);
        assert_eq!(circ.amp(lbl(Port::In, Pol::R), lbl(Port::Env, Pol::R)), -i_over_sqrt2);
        assert_eq!(circ.terms().count(), 2);

        let linear_routed = s.polarization_to_path().unwrap();
        assert_eq!(
            linear_routed.amp(ModeLabel::path(Port::B), lbl(Port::Env, Pol::V)),
            ExactAmp::sqrt_half()
        );
        assert_eq!(
            linear_routed.amp(ModeLabel::path(Port::A), lbl(Port::Env, Pol::H)),
            ExactAmp::sqrt_half()
        );

        let half = ExactAmp::half();
        let i_half = ExactAmp::i() * ExactAmp::half();
        let circ_routed = circ.polarization_to_path().unwrap();
        assert_eq!(circ_routed.amp(ModeLabel::path(Port::A), lbl(Port::Env, Pol::L)), half);
        assert_eq!(circ_routed.amp(ModeLabel::path(Port::B), lbl(Port::Env, Pol::L)), i_half);
        assert_eq!(circ_routed.amp(ModeLabel::path(Port::A), lbl(Port::Env, Pol::R)), half);
        assert_eq!(circ_routed.amp(ModeLabel::path(Port::B), lbl(Port::Env, Pol::R)), -i_half);

        let back = circ.circular_to_linear().unwrap();
        assert_eq!(back, s);
    }

    // Float and exact paths agree within 1e-12 on every coefficient.
    #[test]
    fn float_path_tracks_exact_path() {
        let sf: TwoPhotonState = TwoPhotonState::entangled_hv_pair();
        let se: TwoPhotonState<ExactAmp> = TwoPhotonState::entangled_hv_pair();
        let f = sf.linear_to_circular().unwrap().polarization_to_path().unwrap();
        let e = se.linear_to_circular().unwrap().polarization_to_path().unwrap();
        for (key, amp) in f.terms() {
            let exact = e.amp(key.0, key.1).to_complex();
            assert!((amp - exact).norm() < TOL, "coefficient drift at {}|{}", key.0, key.1);
        }
        assert_eq!(f.terms().count(), e.terms().count());
    }
}
