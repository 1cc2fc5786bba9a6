//! Branch decomposition, Everett weights and two-lab correlation statistics.
//!
//! A world is identified by the combination of apparatus records it holds.
//! After every apparatus has recorded, the global state is grouped by those
//! records; each group is one [`Branch`] and its squared norm is its weight.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measurement::{apply_both_labs, MeasurementOp};
use crate::state::{
    make_singlet, rebase, tensor, ApparatusStatus, BasisState, ComplexAmplitude, Component,
    MeasurementSetting, Register, Spin, StateVector, SubsystemLabel, PRUNE_THRESHOLD,
};

/// One apparatus's local record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Record {
    pub target: SubsystemLabel,
    pub setting: MeasurementSetting,
    pub outcome: Spin,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(into = "BranchView")]
pub struct Branch {
    outcomes: BTreeMap<SubsystemLabel, Record>,
    amplitude: ComplexAmplitude,
    weight: f64,
}

impl Branch {
    /// Records keyed by apparatus label.
    pub fn outcomes(&self) -> &BTreeMap<SubsystemLabel, Record> {
        &self.outcomes
    }

    /// Outcome recorded by apparatus `index`, if it is part of this branch.
    pub fn outcome(&self, index: u8) -> Option<Spin> {
        self.outcomes
            .get(&SubsystemLabel::apparatus(index))
            .map(|r| r.outcome)
    }

    pub fn amplitude(&self) -> ComplexAmplitude {
        self.amplitude
    }

    pub fn weight(&self) -> f64 {
        self.weight
    }

    fn outcome_key(&self) -> Vec<Spin> {
        self.outcomes.values().map(|r| r.outcome).collect()
    }
}

/// Squared modulus of the branch amplitude.
pub fn everett_weight(branch: &Branch) -> f64 {
    branch.amplitude.norm_sqr()
}

#[derive(Serialize)]
struct BranchView {
    outcomes: Vec<OutcomeView>,
    amplitude: AmplitudeView,
    weight: f64,
}

#[derive(Serialize)]
struct OutcomeView {
    apparatus: String,
    electron: String,
    setting: f64,
    outcome: Spin,
}

#[derive(Serialize)]
struct AmplitudeView {
    re: f64,
    im: f64,
}

impl From<Branch> for BranchView {
    fn from(b: Branch) -> Self {
        BranchView {
            outcomes: b
                .outcomes
                .iter()
                .map(|(label, r)| OutcomeView {
                    apparatus: label.to_string(),
                    electron: r.target.to_string(),
                    setting: r.setting.angle(),
                    outcome: r.outcome,
                })
                .collect(),
            amplitude: AmplitudeView {
                re: b.amplitude.re,
                im: b.amplitude.im,
            },
            weight: b.weight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BranchLedger {
    scenario: String,
    branches: Vec<Branch>,
}

impl BranchLedger {
    pub fn scenario(&self) -> &str {
        &self.scenario
    }

    /// Branches in lexicographic order of their outcome tuples (up before down).
    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    pub fn world_count(&self) -> usize {
        self.branches.len()
    }

    pub fn total_weight(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }
}

/// Splits a fully measured state into worlds keyed by apparatus records.
///
/// When a world's relative state has a single term its amplitude is that
/// term's amplitude. Otherwise (an unmeasured electron expressed along a
/// different axis) the amplitude is the norm of the relative state carrying
/// the phase of its first term.
pub fn decompose(state: &StateVector, scenario: impl Into<String>) -> Result<BranchLedger> {
    let mut frames = Vec::new();
    for (pos, reg) in state.registers().iter().enumerate() {
        if let Register::Apparatus { label, frame } = reg {
            let frame = frame.ok_or(Error::PrematureBranching(*label))?;
            frames.push((pos, *label, frame));
        }
    }

    let mut aligned = state.clone();
    for (_, _, frame) in &frames {
        aligned = rebase(&aligned, frame.target, frame.setting)?;
    }

    let mut groups: BTreeMap<Vec<Spin>, Vec<(BasisState, ComplexAmplitude)>> = BTreeMap::new();
    for (basis, amp) in aligned.terms() {
        let mut key = Vec::with_capacity(frames.len());
        for (pos, label, _) in &frames {
            match basis.get(*pos) {
                Component::Apparatus(ApparatusStatus::Recorded(s)) => key.push(s),
                _ => return Err(Error::PrematureBranching(*label)),
            }
        }
        groups.entry(key).or_default().push((basis.clone(), *amp));
    }

    let mut branches = Vec::with_capacity(groups.len());
    for (key, terms) in groups {
        let weight: f64 = terms.iter().map(|(_, a)| a.norm_sqr()).sum();
        if weight < PRUNE_THRESHOLD {
            continue;
        }
        let amplitude = match terms.as_slice() {
            [(_, a)] => *a,
            [(_, first), ..] => Complex64::from_polar(weight.sqrt(), first.arg()),
            [] => unreachable!("groups are created non-empty"),
        };
        let outcomes = frames
            .iter()
            .zip(&key)
            .map(|((_, label, frame), outcome)| {
                (
                    *label,
                    Record {
                        target: frame.target,
                        setting: frame.setting,
                        outcome: *outcome,
                    },
                )
            })
            .collect();
        branches.push(Branch {
            outcomes,
            amplitude,
            weight: amplitude.norm_sqr(),
        });
    }
    branches.sort_by_key(|b| b.outcome_key());

    Ok(BranchLedger {
        scenario: scenario.into(),
        branches,
    })
}

/// Singlet ⊗ ready ⊗ ready after lab 1 measures along `a` and lab 2 along `b`.
pub fn two_lab_state(a: MeasurementSetting, b: MeasurementSetting) -> StateVector {
    let prepared = tensor(
        &tensor(&make_singlet(), &StateVector::ready_apparatus(1)).expect("disjoint registers"),
        &StateVector::ready_apparatus(2),
    )
    .expect("disjoint registers");
    apply_both_labs(
        &prepared,
        &MeasurementOp::lab(1, a),
        &MeasurementOp::lab(2, b),
    )
    .expect("both apparatus are ready")
}

pub fn two_lab_ledger(a: MeasurementSetting, b: MeasurementSetting) -> BranchLedger {
    decompose(&two_lab_state(a, b), scenario_tag(a, b)).expect("both apparatus have recorded")
}

fn scenario_tag(a: MeasurementSetting, b: MeasurementSetting) -> String {
    format!("settings ({:.17}, {:.17})", a.angle(), b.angle())
}

/// One ledger per classical choice of setting pair.
pub fn figure_one_enumeration(
    choices: &[(MeasurementSetting, MeasurementSetting)],
) -> Vec<BranchLedger> {
    choices.iter().map(|&(a, b)| two_lab_ledger(a, b)).collect()
}

/// Joint outcome weights for the two labs.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct JointDistribution {
    pub up_up: f64,
    pub up_down: f64,
    pub down_up: f64,
    pub down_down: f64,
}

impl JointDistribution {
    pub fn get(&self, lab1: Spin, lab2: Spin) -> f64 {
        match (lab1, lab2) {
            (Spin::Up, Spin::Up) => self.up_up,
            (Spin::Up, Spin::Down) => self.up_down,
            (Spin::Down, Spin::Up) => self.down_up,
            (Spin::Down, Spin::Down) => self.down_down,
        }
    }

    fn slot(&mut self, lab1: Spin, lab2: Spin) -> &mut f64 {
        match (lab1, lab2) {
            (Spin::Up, Spin::Up) => &mut self.up_up,
            (Spin::Up, Spin::Down) => &mut self.up_down,
            (Spin::Down, Spin::Up) => &mut self.down_up,
            (Spin::Down, Spin::Down) => &mut self.down_down,
        }
    }

    pub fn total(&self) -> f64 {
        self.up_up + self.up_down + self.down_up + self.down_down
    }

    /// Lab 1 marginal as (P(up), P(down)).
    pub fn lab1_marginal(&self) -> [f64; 2] {
        [self.up_up + self.up_down, self.down_up + self.down_down]
    }

    /// Lab 2 marginal as (P(up), P(down)).
    pub fn lab2_marginal(&self) -> [f64; 2] {
        [self.up_up + self.down_up, self.up_down + self.down_down]
    }

    /// E[s₁s₂] with s = ±1.
    pub fn expectation(&self) -> f64 {
        self.up_up - self.up_down - self.down_up + self.down_down
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub settings: (MeasurementSetting, MeasurementSetting),
    pub joint: JointDistribution,
    pub expectation: f64,
}

impl CorrelationReport {
    /// Aggregates a two-lab ledger (apparatus 1 and 2) into joint weights.
    pub fn from_ledger(
        settings: (MeasurementSetting, MeasurementSetting),
        ledger: &BranchLedger,
    ) -> Self {
        let mut joint = JointDistribution::default();
        for branch in ledger.branches() {
            if let (Some(s1), Some(s2)) = (branch.outcome(1), branch.outcome(2)) {
                *joint.slot(s1, s2) += branch.weight();
            }
        }
        let expectation = Spin::BOTH
            .iter()
            .flat_map(|s1| Spin::BOTH.iter().map(move |s2| (*s1, *s2)))
            .map(|(s1, s2)| s1.sign() * s2.sign() * joint.get(s1, s2))
            .sum();
        Self {
            settings,
            joint,
            expectation,
        }
    }
}

pub fn correlation(settings: (MeasurementSetting, MeasurementSetting)) -> CorrelationReport {
    let ledger = two_lab_ledger(settings.0, settings.1);
    CorrelationReport::from_ledger(settings, &ledger)
}

/// Correlations for lab 1 fixed at vertical and lab 2 at each Δ.
pub fn correlation_sweep(deltas: &[MeasurementSetting]) -> Vec<CorrelationReport> {
    deltas
        .par_iter()
        .map(|&d| correlation((MeasurementSetting::VERTICAL, d)))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ChshReport {
    pub a: MeasurementSetting,
    pub a_prime: MeasurementSetting,
    pub b: MeasurementSetting,
    pub b_prime: MeasurementSetting,
    pub e_ab: f64,
    pub e_ab_prime: f64,
    pub e_a_prime_b: f64,
    pub e_a_prime_b_prime: f64,
    pub s: f64,
}

pub fn chsh_report(
    a: MeasurementSetting,
    a_prime: MeasurementSetting,
    b: MeasurementSetting,
    b_prime: MeasurementSetting,
) -> ChshReport {
    let e = |x, y| correlation((x, y)).expectation;
    let (e_ab, e_ab_prime, e_a_prime_b, e_a_prime_b_prime) =
        (e(a, b), e(a, b_prime), e(a_prime, b), e(a_prime, b_prime));
    ChshReport {
        a,
        a_prime,
        b,
        b_prime,
        e_ab,
        e_ab_prime,
        e_a_prime_b,
        e_a_prime_b_prime,
        s: e_ab - e_ab_prime + e_a_prime_b + e_a_prime_b_prime,
    }
}

/// S = E(a,b) − E(a,b′) + E(a′,b) + E(a′,b′).
pub fn chsh(
    a: MeasurementSetting,
    a_prime: MeasurementSetting,
    b: MeasurementSetting,
    b_prime: MeasurementSetting,
) -> f64 {
    chsh_report(a, a_prime, b, b_prime).s
}

/// A deterministic local assignment of ±1 outcomes to each lab's two settings.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct LocalStrategy {
    pub a: i8,
    pub a_prime: i8,
    pub b: i8,
    pub b_prime: i8,
}

impl LocalStrategy {
    pub fn chsh(&self) -> i32 {
        let (a, a2, b, b2) = (
            self.a as i32,
            self.a_prime as i32,
            self.b as i32,
            self.b_prime as i32,
        );
        a * b - a * b2 + a2 * b + a2 * b2
    }
}

/// All 16 deterministic local strategies.
pub fn local_strategies() -> Vec<LocalStrategy> {
    let pm = [1i8, -1];
    let mut out = Vec::with_capacity(16);
    for a in pm {
        for a_prime in pm {
            for b in pm {
                for b_prime in pm {
                    out.push(LocalStrategy {
                        a,
                        a_prime,
                        b,
                        b_prime,
                    });
                }
            }
        }
    }
    out
}

pub fn max_local_chsh() -> i32 {
    local_strategies()
        .iter()
        .map(|s| s.chsh().abs())
        .max()
        .expect("strategy list is non-empty")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorldCount {
    pub outcomes: Vec<Spin>,
    pub weight: f64,
    pub count: u64,
    pub frequency: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct WorldFrequencies {
    pub shots: u64,
    pub seed: u64,
    pub worlds: Vec<WorldCount>,
}

/// Draws `shots` worlds with probability equal to their weight, using a
/// ChaCha8 generator seeded from `seed`. Entries follow the ledger order.
pub fn sample_worlds(ledger: &BranchLedger, shots: u64, seed: u64) -> Result<WorldFrequencies> {
    if shots == 0 {
        return Err(Error::InvalidShots);
    }
    let weights: Vec<f64> = ledger.branches.iter().map(|b| b.weight).collect();
    let index = WeightedIndex::new(&weights).map_err(|_| Error::InvalidShots)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; weights.len()];
    for _ in 0..shots {
        counts[index.sample(&mut rng)] += 1;
    }
    let worlds = ledger
        .branches
        .iter()
        .zip(counts)
        .map(|(b, count)| WorldCount {
            outcomes: b.outcome_key(),
            weight: b.weight,
            count,
            frequency: count as f64 / shots as f64,
        })
        .collect();
    Ok(WorldFrequencies {
        shots,
        seed,
        worlds,
    })
}
