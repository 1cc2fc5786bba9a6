//! Exact simulation of EPR spin experiments in which measurement is a local
//! unitary interaction and outcomes are branches of one global state.
//!
//! - [`state`]: labeled sparse state vectors, spin eigenstates, the singlet.
//! - [`measurement`]: the apparatus interaction and its two-lab application.
//! - [`ledger`]: branch decomposition, weights, correlations, CHSH, sampling.
//! - [`locality`]: event logs, light-cone audit, no-signaling checks.

pub mod error;
pub mod ledger;
pub mod locality;
pub mod measurement;
pub mod state;

pub use error::{Error, Result};
pub use ledger::{
    chsh, chsh_report, correlation, correlation_sweep, decompose, everett_weight,
    figure_one_enumeration, local_strategies, max_local_chsh, sample_worlds, two_lab_ledger,
    two_lab_state, Branch, BranchLedger, ChshReport, CorrelationReport, JointDistribution,
    LocalStrategy, Record, WorldCount, WorldFrequencies,
};
pub use locality::{
    lab1_marginal, locality_trace, no_signaling_check, record_run, sampled_lab1_marginal,
    total_variation, CausalityVerdict, Event, EventId, EventKind, EventLog, Schedule, Site,
    SiteGeometry, Violation, ViolationKind,
};
pub use measurement::{apply_both_labs, apply_interaction, apply_measurement, MeasurementOp};
pub use state::{
    eigenstate, make_singlet, rebase, tensor, ApparatusStatus, BasisState, ComplexAmplitude,
    Component, MeasurementSetting, Register, Spin, StateVector, SubsystemKind, SubsystemLabel,
};
