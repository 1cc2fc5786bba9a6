//! Labeled sparse state vectors over electrons and apparatus registers.
//!
//! A state is a map from basis terms to complex amplitudes. Each electron
//! register carries the analyzer axis its components are expressed along;
//! [`rebase`] moves an electron to a different axis without changing the
//! physical state. Apparatus registers are three-level: ready, or a record of
//! up/down along the setting that was used.

use std::collections::BTreeMap;
use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt::{self, Write as _};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type ComplexAmplitude = Complex64;

/// Terms whose squared modulus falls below this are dropped after every operation.
pub const PRUNE_THRESHOLD: f64 = 1e-14;

/// Tolerance for physical identities (norms, overlaps, weights).
pub const PHYSICAL_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubsystemKind {
    Electron,
    Apparatus,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct SubsystemLabel {
    pub kind: SubsystemKind,
    pub index: u8,
}

impl SubsystemLabel {
    pub const fn electron(index: u8) -> Self {
        Self {
            kind: SubsystemKind::Electron,
            index,
        }
    }

    pub const fn apparatus(index: u8) -> Self {
        Self {
            kind: SubsystemKind::Apparatus,
            index,
        }
    }

    pub fn is_electron(&self) -> bool {
        self.kind == SubsystemKind::Electron
    }
}

impl fmt::Display for SubsystemLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            SubsystemKind::Electron => write!(f, "e{}", self.index),
            SubsystemKind::Apparatus => write!(f, "m{}", self.index),
        }
    }
}

/// Spin component along some analyzer axis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Spin {
    Up,
    Down,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Up, Spin::Down];

    /// +1 for up, −1 for down.
    pub fn sign(self) -> f64 {
        match self {
            Spin::Up => 1.0,
            Spin::Down => -1.0,
        }
    }

    pub fn flipped(self) -> Spin {
        match self {
            Spin::Up => Spin::Down,
            Spin::Down => Spin::Up,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Spin::Up => "up",
            Spin::Down => "down",
        }
    }
}

impl fmt::Display for Spin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ApparatusStatus {
    Ready,
    Recorded(Spin),
}

/// One register's label inside a basis term.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Component {
    Electron(Spin),
    Apparatus(ApparatusStatus),
}

impl Component {
    fn token(self) -> &'static str {
        match self {
            Component::Electron(Spin::Up) => "up",
            Component::Electron(Spin::Down) => "down",
            Component::Apparatus(ApparatusStatus::Ready) => "ready",
            Component::Apparatus(ApparatusStatus::Recorded(Spin::Up)) => "rec-up",
            Component::Apparatus(ApparatusStatus::Recorded(Spin::Down)) => "rec-down",
        }
    }

    fn kind(self) -> SubsystemKind {
        match self {
            Component::Electron(_) => SubsystemKind::Electron,
            Component::Apparatus(_) => SubsystemKind::Apparatus,
        }
    }
}

/// A product basis term: one component per register, in register order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BasisState(Vec<Component>);

impl BasisState {
    pub fn new(components: Vec<Component>) -> Self {
        Self(components)
    }

    pub fn components(&self) -> &[Component] {
        &self.0
    }

    pub fn get(&self, position: usize) -> Component {
        self.0[position]
    }

    fn with(&self, position: usize, component: Component) -> Self {
        let mut next = self.0.clone();
        next[position] = component;
        Self(next)
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tokens: Vec<_> = self.0.iter().map(|c| c.token()).collect();
        write!(f, "|{}⟩", tokens.join(","))
    }
}

/// Analyzer direction in the x–z plane, measured from +z, in radians within [0, π).
#[derive(Clone, Copy, Debug, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct MeasurementSetting(f64);

impl MeasurementSetting {
    pub const VERTICAL: Self = Self(0.0);
    pub const HORIZONTAL: Self = Self(PI / 2.0);

    pub fn new(angle: f64) -> Result<Self> {
        if angle.is_finite() && (0.0..PI).contains(&angle) {
            Ok(Self(angle))
        } else {
            Err(Error::InvalidAngle(angle))
        }
    }

    pub fn from_degrees(degrees: f64) -> Result<Self> {
        Self::new(degrees.to_radians())
    }

    pub fn angle(self) -> f64 {
        self.0
    }
}

impl TryFrom<f64> for MeasurementSetting {
    type Error = Error;

    fn try_from(angle: f64) -> Result<Self> {
        Self::new(angle)
    }
}

impl From<MeasurementSetting> for f64 {
    fn from(setting: MeasurementSetting) -> f64 {
        setting.0
    }
}

/// Which electron an apparatus measured, and along which axis.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RecordFrame {
    pub target: SubsystemLabel,
    pub setting: MeasurementSetting,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Register {
    /// An electron whose components are expressed along `axis`.
    Electron {
        label: SubsystemLabel,
        axis: MeasurementSetting,
    },
    /// An apparatus; `frame` is set once a measurement interaction has run.
    Apparatus {
        label: SubsystemLabel,
        frame: Option<RecordFrame>,
    },
}

impl Register {
    pub fn label(&self) -> SubsystemLabel {
        match *self {
            Register::Electron { label, .. } | Register::Apparatus { label, .. } => label,
        }
    }

    fn describe(&self) -> String {
        match self {
            Register::Electron { label, axis } => format!("{label}:axis={}", fixed17(axis.0)),
            Register::Apparatus { label, frame: None } => label.to_string(),
            Register::Apparatus {
                label,
                frame: Some(frame),
            } => format!("{label}:{}@{}", frame.target, fixed17(frame.setting.0)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    registers: Vec<Register>,
    amplitudes: BTreeMap<BasisState, ComplexAmplitude>,
}

impl StateVector {
    /// Builds a state from explicit terms. Repeated terms are summed and
    /// negligible amplitudes pruned; normalization is not enforced so that
    /// linear combinations can be formed.
    pub fn from_terms<I>(registers: Vec<Register>, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BasisState, ComplexAmplitude)>,
    {
        for (i, reg) in registers.iter().enumerate() {
            let expected = match reg {
                Register::Electron { .. } => SubsystemKind::Electron,
                Register::Apparatus { .. } => SubsystemKind::Apparatus,
            };
            if reg.label().kind != expected {
                return Err(Error::WrongKind {
                    label: reg.label(),
                    expected: kind_name(expected),
                });
            }
            if registers[..i].iter().any(|r| r.label() == reg.label()) {
                return Err(Error::DuplicateSubsystem(reg.label()));
            }
        }

        let mut amplitudes = BTreeMap::new();
        for (basis, amp) in terms {
            if basis.0.len() != registers.len() {
                return Err(Error::MalformedTerm(format!(
                    "{basis} has {} components for {} registers",
                    basis.0.len(),
                    registers.len()
                )));
            }
            for (component, reg) in basis.0.iter().zip(&registers) {
                if component.kind() != reg.label().kind {
                    return Err(Error::MalformedTerm(format!(
                        "{basis} puts a {} label on {}",
                        kind_name(component.kind()),
                        reg.label()
                    )));
                }
            }
            if !amp.re.is_finite() || !amp.im.is_finite() {
                return Err(Error::NonFiniteAmplitude(basis.to_string()));
            }
            *amplitudes.entry(basis).or_insert(Complex64::new(0.0, 0.0)) += amp;
        }
        let mut state = Self {
            registers,
            amplitudes,
        };
        state.prune();
        Ok(state)
    }

    /// A single electron with the given spin along the z axis.
    pub fn electron(index: u8, spin: Spin) -> Self {
        Self::electron_along(index, MeasurementSetting::VERTICAL, spin)
    }

    /// A single electron in an eigenstate along `setting`.
    pub fn electron_along(index: u8, setting: MeasurementSetting, spin: Spin) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(
            BasisState(vec![Component::Electron(spin)]),
            Complex64::new(1.0, 0.0),
        );
        Self {
            registers: vec![Register::Electron {
                label: SubsystemLabel::electron(index),
                axis: setting,
            }],
            amplitudes,
        }
    }

    /// A single apparatus in the ready state.
    pub fn ready_apparatus(index: u8) -> Self {
        let mut amplitudes = BTreeMap::new();
        amplitudes.insert(
            BasisState(vec![Component::Apparatus(ApparatusStatus::Ready)]),
            Complex64::new(1.0, 0.0),
        );
        Self {
            registers: vec![Register::Apparatus {
                label: SubsystemLabel::apparatus(index),
                frame: None,
            }],
            amplitudes,
        }
    }

    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn register(&self, label: SubsystemLabel) -> Option<&Register> {
        self.registers.iter().find(|r| r.label() == label)
    }

    pub fn position(&self, label: SubsystemLabel) -> Option<usize> {
        self.registers.iter().position(|r| r.label() == label)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&BasisState, &ComplexAmplitude)> {
        self.amplitudes.iter()
    }

    pub fn amplitude(&self, basis: &BasisState) -> ComplexAmplitude {
        self.amplitudes
            .get(basis)
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    /// Number of stored (nonzero) terms.
    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.norm_sqr().sqrt() - 1.0).abs() <= PHYSICAL_TOLERANCE
    }

    pub fn scaled(&self, factor: ComplexAmplitude) -> Self {
        let mut next = self.clone();
        for amp in next.amplitudes.values_mut() {
            *amp *= factor;
        }
        next.prune();
        next
    }

    /// Σ αᵢ·stateᵢ. All states must live on the same registers; electrons are
    /// brought to the z axis first when their axes differ.
    pub fn linear_combination(terms: &[(ComplexAmplitude, &StateVector)]) -> Result<Self> {
        let Some((_, first)) = terms.first() else {
            return Err(Error::RegisterMismatch);
        };
        let same_frames = terms.iter().all(|(_, s)| s.registers == first.registers);
        let states: Vec<StateVector> = terms
            .iter()
            .map(|(_, s)| {
                if same_frames {
                    (*s).clone()
                } else {
                    s.in_z_basis()
                }
            })
            .collect();
        let registers = states[0].registers.clone();
        if states.iter().any(|s| s.registers != registers) {
            return Err(Error::RegisterMismatch);
        }
        let summed = terms.iter().zip(&states).flat_map(|((alpha, _), s)| {
            s.amplitudes
                .iter()
                .map(move |(b, a)| (b.clone(), a * alpha))
        });
        Self::from_terms(registers, summed)
    }

    /// The same physical state with every electron expressed along z.
    pub fn in_z_basis(&self) -> Self {
        let mut state = self.clone();
        for reg in &self.registers {
            if let Register::Electron { label, .. } = reg {
                state = rebase(&state, *label, MeasurementSetting::VERTICAL)
                    .expect("register is an electron of this state");
            }
        }
        state
    }

    /// ⟨self|other⟩, computed in the z basis.
    pub fn inner(&self, other: &StateVector) -> Result<ComplexAmplitude> {
        let (a, b) = if self.registers == other.registers {
            (self.clone(), other.clone())
        } else {
            (self.in_z_basis(), other.in_z_basis())
        };
        if a.registers != b.registers {
            return Err(Error::RegisterMismatch);
        }
        Ok(a.amplitudes
            .iter()
            .map(|(basis, amp)| amp.conj() * b.amplitude(basis))
            .sum())
    }

    /// Multiplies by the global phase that makes the first stored amplitude
    /// real and positive.
    pub fn canonical_phase(&self) -> Self {
        match self.amplitudes.values().next() {
            Some(first) if first.norm() > 0.0 => self.scaled(first.conj() / first.norm()),
            _ => self.clone(),
        }
    }

    /// Componentwise equality within `tol` after fixing the global phase of
    /// both sides. Electrons on different axes are compared in the z basis.
    pub fn approx_eq_up_to_phase(&self, other: &StateVector, tol: f64) -> Result<bool> {
        let (a, b) = if self.registers == other.registers {
            (self.clone(), other.clone())
        } else {
            (self.in_z_basis(), other.in_z_basis())
        };
        if a.registers != b.registers {
            return Err(Error::RegisterMismatch);
        }
        let (a, b) = (a.canonical_phase(), b.canonical_phase());
        let keys: std::collections::BTreeSet<&BasisState> =
            a.amplitudes.keys().chain(b.amplitudes.keys()).collect();
        let equal = keys
            .into_iter()
            .all(|k| (a.amplitude(k) - b.amplitude(k)).norm() <= tol);
        Ok(equal)
    }

    /// Partial trace onto `keep` (in the order given), electrons in the z basis.
    pub fn reduced_density_matrix(&self, keep: &[SubsystemLabel]) -> Result<DensityMatrix> {
        let z = self.in_z_basis();
        let mut positions = Vec::with_capacity(keep.len());
        for label in keep {
            let pos = z.position(*label).ok_or(Error::MissingSubsystem(*label))?;
            if positions.contains(&pos) {
                return Err(Error::DuplicateSubsystem(*label));
            }
            positions.push(pos);
        }
        let traced: Vec<usize> = (0..z.registers.len())
            .filter(|p| !positions.contains(p))
            .collect();

        let mut blocks: BTreeMap<BasisState, Vec<(BasisState, ComplexAmplitude)>> = BTreeMap::new();
        for (basis, amp) in &z.amplitudes {
            let kept = BasisState(positions.iter().map(|&p| basis.0[p]).collect());
            let env = BasisState(traced.iter().map(|&p| basis.0[p]).collect());
            blocks.entry(env).or_default().push((kept, *amp));
        }
        let mut entries = BTreeMap::new();
        for group in blocks.values() {
            for (row, a) in group {
                for (col, b) in group {
                    *entries
                        .entry((row.clone(), col.clone()))
                        .or_insert(Complex64::new(0.0, 0.0)) += a * b.conj();
                }
            }
        }
        entries.retain(|_, v: &mut Complex64| v.norm_sqr() >= PRUNE_THRESHOLD);
        Ok(DensityMatrix {
            registers: positions.iter().map(|&p| z.registers[p]).collect(),
            entries,
        })
    }

    /// Line-oriented text form used by golden files: a register line, then one
    /// line per term with its labels and the real and imaginary parts to 17
    /// significant digits.
    pub fn to_canonical_text(&self) -> String {
        let mut out = String::from("registers");
        for reg in &self.registers {
            out.push(' ');
            out.push_str(&reg.describe());
        }
        out.push('\n');
        for (basis, amp) in &self.amplitudes {
            for c in &basis.0 {
                out.push_str(c.token());
                out.push(' ');
            }
            let _ = writeln!(out, "{} {}", fixed17(amp.re), fixed17(amp.im));
        }
        out
    }

    pub(crate) fn from_parts(
        registers: Vec<Register>,
        amplitudes: BTreeMap<BasisState, ComplexAmplitude>,
    ) -> Self {
        let mut state = Self {
            registers,
            amplitudes,
        };
        state.prune();
        state
    }

    pub(crate) fn set_register(&mut self, position: usize, register: Register) {
        self.registers[position] = register;
    }

    fn prune(&mut self) {
        self.amplitudes
            .retain(|_, a| a.norm_sqr() >= PRUNE_THRESHOLD);
    }
}

/// Reduced density matrix over a subset of registers, stored sparsely.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    registers: Vec<Register>,
    entries: BTreeMap<(BasisState, BasisState), ComplexAmplitude>,
}

impl DensityMatrix {
    pub fn registers(&self) -> &[Register] {
        &self.registers
    }

    pub fn get(&self, row: &BasisState, col: &BasisState) -> ComplexAmplitude {
        self.entries
            .get(&(row.clone(), col.clone()))
            .copied()
            .unwrap_or(Complex64::new(0.0, 0.0))
    }

    pub fn trace(&self) -> f64 {
        self.entries
            .iter()
            .filter(|((r, c), _)| r == c)
            .map(|(_, v)| v.re)
            .sum()
    }

    /// Largest entrywise difference against `other`, or `None` when the two
    /// cover different registers.
    pub fn max_abs_diff(&self, other: &DensityMatrix) -> Option<f64> {
        let labels = |d: &DensityMatrix| d.registers.iter().map(|r| r.label()).collect::<Vec<_>>();
        if labels(self) != labels(other) {
            return None;
        }
        let keys: std::collections::BTreeSet<_> =
            self.entries.keys().chain(other.entries.keys()).collect();
        Some(
            keys.into_iter()
                .map(|(r, c)| (self.get(r, c) - other.get(r, c)).norm())
                .fold(0.0, f64::max),
        )
    }
}

fn kind_name(kind: SubsystemKind) -> &'static str {
    match kind {
        SubsystemKind::Electron => "electron",
        SubsystemKind::Apparatus => "apparatus",
    }
}

fn fixed17(x: f64) -> String {
    // adding +0.0 folds −0 into +0
    format!("{:+.16e}", x + 0.0)
}

/// (|↑⟩₁|↓⟩₂ − |↓⟩₁|↑⟩₂)/√2 on electrons 1 and 2, both expressed along z.
pub fn make_singlet() -> StateVector {
    let h = Complex64::new(FRAC_1_SQRT_2, 0.0);
    let registers = vec![
        Register::Electron {
            label: SubsystemLabel::electron(1),
            axis: MeasurementSetting::VERTICAL,
        },
        Register::Electron {
            label: SubsystemLabel::electron(2),
            axis: MeasurementSetting::VERTICAL,
        },
    ];
    let mut amplitudes = BTreeMap::new();
    amplitudes.insert(
        BasisState(vec![
            Component::Electron(Spin::Up),
            Component::Electron(Spin::Down),
        ]),
        h,
    );
    amplitudes.insert(
        BasisState(vec![
            Component::Electron(Spin::Down),
            Component::Electron(Spin::Up),
        ]),
        -h,
    );
    StateVector {
        registers,
        amplitudes,
    }
}

/// Spin-½ eigenvector along `setting`, as (z-up, z-down) components.
/// Up is (cos θ/2, sin θ/2); down is (−sin θ/2, cos θ/2).
pub fn eigenstate(setting: MeasurementSetting, outcome: Spin) -> [ComplexAmplitude; 2] {
    let (s, c) = (setting.0 / 2.0).sin_cos();
    match outcome {
        Spin::Up => [Complex64::new(c, 0.0), Complex64::new(s, 0.0)],
        Spin::Down => [Complex64::new(-s, 0.0), Complex64::new(c, 0.0)],
    }
}

pub fn tensor(a: &StateVector, b: &StateVector) -> Result<StateVector> {
    if let Some(clash) = a
        .registers
        .iter()
        .find(|ra| b.registers.iter().any(|rb| rb.label() == ra.label()))
    {
        return Err(Error::DuplicateSubsystem(clash.label()));
    }
    let registers: Vec<Register> = a.registers.iter().chain(&b.registers).copied().collect();
    let mut amplitudes = BTreeMap::new();
    for (ba, aa) in &a.amplitudes {
        for (bb, ab) in &b.amplitudes {
            let mut components = ba.0.clone();
            components.extend_from_slice(&bb.0);
            amplitudes.insert(BasisState(components), aa * ab);
        }
    }
    Ok(StateVector::from_parts(registers, amplitudes))
}

/// Re-expresses `subsystem` (an electron) along `setting`. The physical state
/// is unchanged.
pub fn rebase(
    state: &StateVector,
    subsystem: SubsystemLabel,
    setting: MeasurementSetting,
) -> Result<StateVector> {
    let position = state
        .position(subsystem)
        .ok_or(Error::MissingSubsystem(subsystem))?;
    let Register::Electron { label, axis } = state.registers[position] else {
        return Err(Error::WrongKind {
            label: subsystem,
            expected: "electron",
        });
    };
    if axis == setting {
        return Ok(state.clone());
    }

    // overlap[t][s] = ⟨t along setting | s along axis⟩
    let mut overlap = [[Complex64::new(0.0, 0.0); 2]; 2];
    for (ti, t) in Spin::BOTH.iter().enumerate() {
        let new = eigenstate(setting, *t);
        for (si, s) in Spin::BOTH.iter().enumerate() {
            let old = eigenstate(axis, *s);
            overlap[ti][si] = new[0].conj() * old[0] + new[1].conj() * old[1];
        }
    }

    let mut amplitudes: BTreeMap<BasisState, ComplexAmplitude> = BTreeMap::new();
    for (basis, amp) in &state.amplitudes {
        let Component::Electron(s) = basis.0[position] else {
            unreachable!("electron register holds an electron component");
        };
        let si = s as usize;
        for (ti, t) in Spin::BOTH.iter().enumerate() {
            *amplitudes
                .entry(basis.with(position, Component::Electron(*t)))
                .or_insert(Complex64::new(0.0, 0.0)) += amp * overlap[ti][si];
        }
    }
    let mut registers = state.registers.clone();
    registers[position] = Register::Electron {
        label,
        axis: setting,
    };
    Ok(StateVector::from_parts(registers, amplitudes))
}
