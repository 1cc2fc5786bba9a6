//! The measurement interaction as a local unitary.
//!
//! Measuring electron `i` along a setting expands that electron in the
//! setting's eigenbasis and copies each component into apparatus `i`:
//! `ready → recorded(s)` for eigen-component `s`. On the full three-level
//! apparatus space the map is the permutation
//!
//! ```text
//! (s, ready)        → (s, recorded(s))
//! (s, recorded(s))  → (s, ready)
//! (s, recorded(¬s)) → (s, recorded(¬s))
//! ```
//!
//! which is unitary. Only the first line is reached from a ready apparatus.

use std::collections::BTreeMap;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::state::{
    rebase, ApparatusStatus, BasisState, ComplexAmplitude, Component, MeasurementSetting,
    RecordFrame, Register, Spin, StateVector, SubsystemLabel,
};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeasurementOp {
    pub target: SubsystemLabel,
    pub apparatus: SubsystemLabel,
    pub setting: MeasurementSetting,
}

impl MeasurementOp {
    pub fn new(
        target: SubsystemLabel,
        apparatus: SubsystemLabel,
        setting: MeasurementSetting,
    ) -> Result<Self> {
        if !target.is_electron() {
            return Err(Error::WrongKind {
                label: target,
                expected: "electron",
            });
        }
        if apparatus.is_electron() {
            return Err(Error::WrongKind {
                label: apparatus,
                expected: "apparatus",
            });
        }
        Ok(Self {
            target,
            apparatus,
            setting,
        })
    }

    /// Lab `i` measures electron `i` with apparatus `i`.
    pub fn lab(index: u8, setting: MeasurementSetting) -> Self {
        Self {
            target: SubsystemLabel::electron(index),
            apparatus: SubsystemLabel::apparatus(index),
            setting,
        }
    }
}

/// Apparatus transition for an electron component `spin` along the setting axis.
pub fn copy_rule(spin: Spin, status: ApparatusStatus) -> ApparatusStatus {
    match status {
        ApparatusStatus::Ready => ApparatusStatus::Recorded(spin),
        ApparatusStatus::Recorded(r) if r == spin => ApparatusStatus::Ready,
        other => other,
    }
}

/// Runs the measurement interaction on a state whose apparatus is ready.
pub fn apply_measurement(state: &StateVector, op: &MeasurementOp) -> Result<StateVector> {
    let (_, apparatus_pos) = locate(state, op)?;
    if let Some(Register::Apparatus { frame: Some(_), .. }) = state.register(op.apparatus) {
        return Err(Error::ApparatusNotReady(op.apparatus));
    }
    let all_ready = state
        .terms()
        .all(|(basis, _)| basis.get(apparatus_pos) == Component::Apparatus(ApparatusStatus::Ready));
    if !all_ready {
        return Err(Error::ApparatusNotReady(op.apparatus));
    }
    apply_interaction(state, op)
}

/// The full unitary interaction, defined on every apparatus status. Unlike
/// [`apply_measurement`] this does not require a ready apparatus.
pub fn apply_interaction(state: &StateVector, op: &MeasurementOp) -> Result<StateVector> {
    locate(state, op)?;
    let rotated = rebase(state, op.target, op.setting)?;
    let target_pos = rotated.position(op.target).expect("located above");
    let apparatus_pos = rotated.position(op.apparatus).expect("located above");

    let mut amplitudes: BTreeMap<BasisState, ComplexAmplitude> = BTreeMap::new();
    for (basis, amp) in rotated.terms() {
        let (Component::Electron(spin), Component::Apparatus(status)) =
            (basis.get(target_pos), basis.get(apparatus_pos))
        else {
            unreachable!("register kinds are validated on construction");
        };
        let mut components = basis.components().to_vec();
        components[apparatus_pos] = Component::Apparatus(copy_rule(spin, status));
        *amplitudes
            .entry(BasisState::new(components))
            .or_insert(Complex64::new(0.0, 0.0)) += amp;
    }
    let mut out = StateVector::from_parts(rotated.registers().to_vec(), amplitudes);
    out.set_register(
        apparatus_pos,
        Register::Apparatus {
            label: op.apparatus,
            frame: Some(RecordFrame {
                target: op.target,
                setting: op.setting,
            }),
        },
    );
    Ok(out)
}

/// Both labs measure, `op1` first. The two interactions act on disjoint
/// registers, so the order does not matter.
pub fn apply_both_labs(
    state: &StateVector,
    op1: &MeasurementOp,
    op2: &MeasurementOp,
) -> Result<StateVector> {
    if op1.target == op2.target || op1.apparatus == op2.apparatus {
        return Err(Error::OverlappingOperations);
    }
    let first = apply_measurement(state, op1)?;
    apply_measurement(&first, op2)
}

fn locate(state: &StateVector, op: &MeasurementOp) -> Result<(usize, usize)> {
    let target = state
        .position(op.target)
        .ok_or(Error::MissingSubsystem(op.target))?;
    let apparatus = state
        .position(op.apparatus)
        .ok_or(Error::MissingSubsystem(op.apparatus))?;
    if !matches!(state.registers()[target], Register::Electron { .. }) {
        return Err(Error::WrongKind {
            label: op.target,
            expected: "electron",
        });
    }
    if !matches!(state.registers()[apparatus], Register::Apparatus { .. }) {
        return Err(Error::WrongKind {
            label: op.apparatus,
            expected: "apparatus",
        });
    }
    Ok((target, apparatus))
}
