//! Proptest generators for random labeled states.

use std::f64::consts::PI;

use manyworlds::{
    ApparatusStatus, BasisState, ComplexAmplitude, Component, MeasurementSetting, Register, Spin,
    StateVector, SubsystemLabel,
};
use num_complex::Complex64 as C64;
use proptest::prelude::*;

pub fn setting() -> impl Strategy<Value = MeasurementSetting> {
    (0.0..PI).prop_map(|x| MeasurementSetting::new(x).unwrap())
}

pub fn complex() -> impl Strategy<Value = C64> {
    (-1.0..1.0f64, -1.0..1.0f64).prop_map(|(re, im)| C64::new(re, im))
}

fn normalized(amps: Vec<C64>) -> Vec<C64> {
    let n: f64 = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if n < 1e-3 {
        let mut v = vec![C64::new(0.0, 0.0); amps.len()];
        v[0] = C64::new(1.0, 0.0);
        v
    } else {
        amps.into_iter().map(|a| a / n).collect()
    }
}

pub fn electron_register(index: u8, axis: MeasurementSetting) -> Register {
    Register::Electron {
        label: SubsystemLabel::electron(index),
        axis,
    }
}

pub fn ready_register(index: u8) -> Register {
    Register::Apparatus {
        label: SubsystemLabel::apparatus(index),
        frame: None,
    }
}

pub const STATUSES: [ApparatusStatus; 3] = [
    ApparatusStatus::Ready,
    ApparatusStatus::Recorded(Spin::Up),
    ApparatusStatus::Recorded(Spin::Down),
];

/// Random normalized state of electrons 1, 2 (each along a random axis) and
/// ready apparatus 1 and 2.
pub fn two_electron_ready_state() -> impl Strategy<Value = StateVector> {
    (setting(), setting(), prop::collection::vec(complex(), 4))
        .prop_map(|(a1, a2, amps)| build_two_electron(a1, a2, &normalized(amps)))
}

pub fn build_two_electron(
    a1: MeasurementSetting,
    a2: MeasurementSetting,
    amps: &[ComplexAmplitude],
) -> StateVector {
    let registers = vec![
        electron_register(1, a1),
        electron_register(2, a2),
        ready_register(1),
        ready_register(2),
    ];
    let ready = Component::Apparatus(ApparatusStatus::Ready);
    let mut terms = Vec::new();
    for (i, s1) in Spin::BOTH.iter().enumerate() {
        for (j, s2) in Spin::BOTH.iter().enumerate() {
            terms.push((
                BasisState::new(vec![
                    Component::Electron(*s1),
                    Component::Electron(*s2),
                    ready,
                    ready,
                ]),
                amps[2 * i + j],
            ));
        }
    }
    StateVector::from_terms(registers, terms).unwrap()
}

/// The six product basis states of electron 1 (along `axis`) ⊗ apparatus 1.
pub fn electron_apparatus_basis(axis: MeasurementSetting) -> Vec<StateVector> {
    let mut out = Vec::new();
    for s in Spin::BOTH {
        for status in STATUSES {
            out.push(
                StateVector::from_terms(
                    vec![electron_register(1, axis), ready_register(1)],
                    [(
                        BasisState::new(vec![Component::Electron(s), Component::Apparatus(status)]),
                        C64::new(1.0, 0.0),
                    )],
                )
                .unwrap(),
            );
        }
    }
    out
}

/// ‖a − b‖ computed in the z basis.
pub fn distance(a: &StateVector, b: &StateVector) -> f64 {
    let d = StateVector::linear_combination(&[(C64::new(1.0, 0.0), a), (C64::new(-1.0, 0.0), b)])
        .unwrap();
    d.norm_sqr().sqrt()
}
