use thiserror::Error;

use crate::locality::CausalityVerdict;
use crate::state::SubsystemLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("analyzer angle {0} is outside [0, π)")]
    InvalidAngle(f64),

    #[error("amplitude for term {0} is not finite")]
    NonFiniteAmplitude(String),

    #[error("subsystem {0} appears more than once")]
    DuplicateSubsystem(SubsystemLabel),

    #[error("subsystem {0} is not part of the state")]
    MissingSubsystem(SubsystemLabel),

    #[error("subsystem {label} has the wrong kind for this operation (expected {expected})")]
    WrongKind {
        label: SubsystemLabel,
        expected: &'static str,
    },

    #[error("basis term does not match the register list: {0}")]
    MalformedTerm(String),

    #[error("states are defined over different registers")]
    RegisterMismatch,

    #[error("apparatus {0} is not in the ready state")]
    ApparatusNotReady(SubsystemLabel),

    #[error("measurement operations must use distinct electrons and distinct apparatus")]
    OverlappingOperations,

    #[error("premature branching: apparatus {0} has not recorded an outcome")]
    PrematureBranching(SubsystemLabel),

    #[error("shot count must be at least 1")]
    InvalidShots,

    #[error("at least two remote settings are required, got {0}")]
    TooFewSettings(usize),

    #[error("invalid site geometry: {0}")]
    InvalidGeometry(String),

    #[error("malformed event log: {0}")]
    MalformedLog(String),

    #[error("run rejected: {} causality violation(s)", .0.violations.len())]
    CausalityRejected(CausalityVerdict),
}
