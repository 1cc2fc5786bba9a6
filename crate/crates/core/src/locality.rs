//! Spacetime event logs for the two-lab experiment and their causal audit.
//!
//! Sites sit on a line with coordinates in light-seconds and the signal speed
//! is 1. Every event lists the earlier events whose data it read; an edge is
//! admissible only if the delay along it is at least the light travel time
//! between the two sites. Measurements read the pair preparation and nothing
//! from the other lab.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ledger::{correlation, sample_worlds, two_lab_ledger};
use crate::state::{MeasurementSetting, Spin};

pub const SIGNAL_SPEED: f64 = 1.0;

/// Slack for floating-point comparisons of delays.
const DELAY_TOLERANCE: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Site {
    Lab1,
    Lab2,
    Source,
    Referee,
}

impl Site {
    pub const ALL: [Site; 4] = [Site::Lab1, Site::Lab2, Site::Source, Site::Referee];

    fn lab(index: usize) -> Site {
        if index == 0 {
            Site::Lab1
        } else {
            Site::Lab2
        }
    }
}

/// 1D site positions in light-seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "BTreeMap<Site, f64>", into = "BTreeMap<Site, f64>")]
pub struct SiteGeometry {
    positions: BTreeMap<Site, f64>,
}

impl SiteGeometry {
    pub fn new(positions: BTreeMap<Site, f64>) -> Result<Self> {
        for site in Site::ALL {
            match positions.get(&site) {
                Some(x) if x.is_finite() => {}
                Some(x) => {
                    return Err(Error::InvalidGeometry(format!(
                        "position of {site:?} is {x}"
                    )))
                }
                None => return Err(Error::InvalidGeometry(format!("{site:?} has no position"))),
            }
        }
        Ok(Self { positions })
    }

    /// Labs `separation` light-seconds apart with the source and the referee midway.
    pub fn earth_andromeda(separation: f64) -> Result<Self> {
        if !separation.is_finite() || separation < 0.0 {
            return Err(Error::InvalidGeometry(format!("separation {separation}")));
        }
        let mid = separation / 2.0;
        Self::new(BTreeMap::from([
            (Site::Lab1, 0.0),
            (Site::Lab2, separation),
            (Site::Source, mid),
            (Site::Referee, mid),
        ]))
    }

    pub fn with_referee(mut self, position: f64) -> Result<Self> {
        self.positions.insert(Site::Referee, position);
        Self::new(self.positions)
    }

    pub fn position(&self, site: Site) -> f64 {
        self.positions[&site]
    }

    pub fn distance(&self, a: Site, b: Site) -> f64 {
        (self.position(a) - self.position(b)).abs()
    }

    pub fn light_delay(&self, a: Site, b: Site) -> f64 {
        self.distance(a, b) / SIGNAL_SPEED
    }
}

impl TryFrom<BTreeMap<Site, f64>> for SiteGeometry {
    type Error = Error;

    fn try_from(positions: BTreeMap<Site, f64>) -> Result<Self> {
        Self::new(positions)
    }
}

impl From<SiteGeometry> for BTreeMap<Site, f64> {
    fn from(g: SiteGeometry) -> Self {
        g.positions
    }
}

pub type EventId = u64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "payload", rename_all = "kebab-case")]
pub enum EventKind {
    Prepare {
        pair: u32,
    },
    Measure {
        pair: u32,
        setting: MeasurementSetting,
        outcome: Spin,
    },
    ClassicalMessageSend {
        message: u32,
        to: Site,
        setting: MeasurementSetting,
        outcome: Spin,
    },
    ClassicalMessageReceive {
        message: u32,
    },
    Compare {
        settings: (MeasurementSetting, MeasurementSetting),
        outcomes: (Spin, Spin),
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Event {
    pub id: EventId,
    pub site: Site,
    pub time: f64,
    #[serde(flatten)]
    pub kind: EventKind,
    /// Earlier events whose data this event's computation read.
    pub reads: Vec<EventId>,
}

/// Append-only event record for one run.
#[derive(Clone, Debug, PartialEq)]
pub struct EventLog {
    geometry: SiteGeometry,
    events: Vec<Event>,
}

impl EventLog {
    pub fn new(geometry: SiteGeometry) -> Self {
        Self {
            geometry,
            events: Vec::new(),
        }
    }

    /// Appends an event and returns its id. `reads` must name events already in the log.
    pub fn append(
        &mut self,
        site: Site,
        time: f64,
        kind: EventKind,
        reads: Vec<EventId>,
    ) -> Result<EventId> {
        let id = self.events.last().map_or(0, |e| e.id + 1);
        self.push(Event {
            id,
            site,
            time,
            kind,
            reads,
        })?;
        Ok(id)
    }

    fn push(&mut self, event: Event) -> Result<()> {
        if !event.time.is_finite() || event.time < 0.0 {
            return Err(Error::MalformedLog(format!(
                "event {} has time {}",
                event.id, event.time
            )));
        }
        if let Some(last) = self.events.last() {
            if event.id <= last.id {
                return Err(Error::MalformedLog(format!(
                    "event id {} does not follow {}",
                    event.id, last.id
                )));
            }
        }
        for r in &event.reads {
            if !self.events.iter().any(|e| e.id == *r) {
                return Err(Error::MalformedLog(format!(
                    "event {} reads unknown or later event {r}",
                    event.id
                )));
            }
        }
        self.events.push(event);
        Ok(())
    }

    /// Rebuilds a log from events, applying the same checks as [`append`](Self::append).
    pub fn from_events(geometry: SiteGeometry, events: Vec<Event>) -> Result<Self> {
        let mut log = Self::new(geometry);
        for e in events {
            log.push(e)?;
        }
        Ok(log)
    }

    pub fn geometry(&self) -> &SiteGeometry {
        &self.geometry
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    /// One JSON record per line.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for e in &self.events {
            let _ = writeln!(
                out,
                "{}",
                serde_json::to_string(e).expect("event serializes")
            );
        }
        out
    }

    pub fn from_ndjson(geometry: SiteGeometry, text: &str) -> Result<Self> {
        let events = text
            .lines()
            .filter(|l| !l.trim().is_empty())
            .enumerate()
            .map(|(n, line)| {
                serde_json::from_str(line)
                    .map_err(|e| Error::MalformedLog(format!("line {}: {e}", n + 1)))
            })
            .collect::<Result<Vec<Event>>>()?;
        Self::from_events(geometry, events)
    }
}

/// Times for each event of a two-lab run; index 0 is lab 1.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    pub prepare: f64,
    pub measure: [f64; 2],
    pub send: [f64; 2],
    pub receive: [f64; 2],
    pub compare: f64,
}

impl Schedule {
    /// Measurements as soon as each electron can arrive, records sent at
    /// measurement time, messages travelling at the signal speed, comparison
    /// on arrival of the later message.
    pub fn earliest(geometry: &SiteGeometry, prepare: f64) -> Self {
        let measure = [
            prepare + geometry.light_delay(Site::Source, Site::Lab1),
            prepare + geometry.light_delay(Site::Source, Site::Lab2),
        ];
        Self::with_measurements(geometry, prepare, measure)
    }

    pub fn with_measurements(geometry: &SiteGeometry, prepare: f64, measure: [f64; 2]) -> Self {
        let receive = [
            measure[0] + geometry.light_delay(Site::Lab1, Site::Referee),
            measure[1] + geometry.light_delay(Site::Lab2, Site::Referee),
        ];
        Self {
            prepare,
            measure,
            send: measure,
            receive,
            compare: receive[0].max(receive[1]),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ViolationKind {
    /// Delay along an edge is shorter than the light travel time.
    LightCone,
    /// A measurement read the other lab's measurement.
    RemoteMeasureDependency,
    /// A comparison was scheduled before a record it needs arrived.
    CompareBeforeReceipt,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub from: EventId,
    pub to: EventId,
    pub kind: ViolationKind,
    pub required_delay: f64,
    pub actual_delay: f64,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct CausalityVerdict {
    pub ok: bool,
    pub violations: Vec<Violation>,
}

impl CausalityVerdict {
    fn from_violations(violations: Vec<Violation>) -> Self {
        Self {
            ok: violations.is_empty(),
            violations,
        }
    }
}

/// Records a two-lab run: preparation at the source, a measurement in each
/// lab, each lab's record sent to the referee, and a comparison there.
pub fn record_run(
    settings: (MeasurementSetting, MeasurementSetting),
    outcomes: (Spin, Spin),
    geometry: &SiteGeometry,
    schedule: &Schedule,
) -> Result<EventLog> {
    const PAIR: u32 = 0;
    let late: Vec<Violation> = (0..2)
        .filter(|&i| schedule.compare < schedule.receive[i])
        .map(|i| Violation {
            from: 5 + i as EventId,
            to: 7,
            kind: ViolationKind::CompareBeforeReceipt,
            required_delay: 0.0,
            actual_delay: schedule.compare - schedule.receive[i],
        })
        .collect();
    if !late.is_empty() {
        return Err(Error::CausalityRejected(CausalityVerdict::from_violations(
            late,
        )));
    }

    let lab_settings = [settings.0, settings.1];
    let lab_outcomes = [outcomes.0, outcomes.1];
    let mut log = EventLog::new(geometry.clone());
    let prepare = log.append(
        Site::Source,
        schedule.prepare,
        EventKind::Prepare { pair: PAIR },
        vec![],
    )?;
    let mut measures = [0; 2];
    for i in 0..2 {
        measures[i] = log.append(
            Site::lab(i),
            schedule.measure[i],
            EventKind::Measure {
                pair: PAIR,
                setting: lab_settings[i],
                outcome: lab_outcomes[i],
            },
            vec![prepare],
        )?;
    }
    let mut sends = [0; 2];
    for i in 0..2 {
        sends[i] = log.append(
            Site::lab(i),
            schedule.send[i],
            EventKind::ClassicalMessageSend {
                message: i as u32 + 1,
                to: Site::Referee,
                setting: lab_settings[i],
                outcome: lab_outcomes[i],
            },
            vec![measures[i]],
        )?;
    }
    let mut receives = [0; 2];
    for i in 0..2 {
        receives[i] = log.append(
            Site::Referee,
            schedule.receive[i],
            EventKind::ClassicalMessageReceive {
                message: i as u32 + 1,
            },
            vec![sends[i]],
        )?;
    }
    log.append(
        Site::Referee,
        schedule.compare,
        EventKind::Compare { settings, outcomes },
        receives.to_vec(),
    )?;
    Ok(log)
}

/// Checks every dependency edge of a complete log against the light cone and
/// rejects any measurement that read the other lab's measurement.
pub fn locality_trace(log: &EventLog) -> Result<CausalityVerdict> {
    let by_id: HashMap<EventId, &Event> = log.events.iter().map(|e| (e.id, e)).collect();
    let geometry = &log.geometry;
    let mut violations = Vec::new();

    for event in &log.events {
        let parents: Vec<&Event> = event.reads.iter().map(|r| by_id[r]).collect();
        check_structure(event, &parents)?;

        for parent in &parents {
            let required = geometry.light_delay(parent.site, event.site);
            let actual = event.time - parent.time;
            let remote_measure = matches!(parent.kind, EventKind::Measure { .. })
                && matches!(event.kind, EventKind::Measure { .. })
                && parent.site != event.site;
            if remote_measure {
                violations.push(Violation {
                    from: parent.id,
                    to: event.id,
                    kind: ViolationKind::RemoteMeasureDependency,
                    required_delay: required,
                    actual_delay: actual,
                });
            }
            if actual + DELAY_TOLERANCE < required {
                violations.push(Violation {
                    from: parent.id,
                    to: event.id,
                    kind: ViolationKind::LightCone,
                    required_delay: required,
                    actual_delay: actual,
                });
            }
        }
    }
    Ok(CausalityVerdict::from_violations(violations))
}

fn check_structure(event: &Event, parents: &[&Event]) -> Result<()> {
    let malformed = |msg: &str| Err(Error::MalformedLog(format!("event {}: {msg}", event.id)));
    match &event.kind {
        EventKind::Prepare { .. } => {
            if event.site != Site::Source {
                return malformed("preparation outside the source");
            }
        }
        EventKind::Measure { pair, .. } => {
            if !matches!(event.site, Site::Lab1 | Site::Lab2) {
                return malformed("measurement outside a lab");
            }
            let prepared = parents
                .iter()
                .any(|p| matches!(p.kind, EventKind::Prepare { pair: q } if q == *pair));
            if !prepared {
                return malformed("measurement of a pair that was never prepared");
            }
        }
        EventKind::ClassicalMessageSend { .. } => {
            let local_measure = parents
                .iter()
                .any(|p| matches!(p.kind, EventKind::Measure { .. }) && p.site == event.site);
            if !local_measure {
                return malformed("message does not carry a local measurement record");
            }
        }
        EventKind::ClassicalMessageReceive { message } => {
            let sent = parents.iter().any(|p| {
                matches!(p.kind, EventKind::ClassicalMessageSend { message: m, to, .. }
                    if m == *message && to == event.site)
            });
            if !sent {
                return malformed("receipt of a message that was never sent here");
            }
        }
        EventKind::Compare { .. } => {
            let receipts = parents
                .iter()
                .filter(|p| matches!(p.kind, EventKind::ClassicalMessageReceive { .. }))
                .count();
            if receipts < 2 {
                return malformed("comparison without both records");
            }
        }
    }
    Ok(())
}

/// Lab 1's outcome distribution (P(up), P(down)) from exact ledger weights.
pub fn lab1_marginal(setting1: MeasurementSetting, setting2: MeasurementSetting) -> [f64; 2] {
    correlation((setting1, setting2)).joint.lab1_marginal()
}

pub fn total_variation(p: [f64; 2], q: [f64; 2]) -> f64 {
    0.5 * ((p[0] - q[0]).abs() + (p[1] - q[1]).abs())
}

/// Maximum pairwise total-variation distance between lab 1's marginals as the
/// remote setting ranges over `settings2`.
pub fn no_signaling_check(
    setting1: MeasurementSetting,
    settings2: &[MeasurementSetting],
) -> Result<f64> {
    if settings2.len() < 2 {
        return Err(Error::TooFewSettings(settings2.len()));
    }
    let marginals: Vec<[f64; 2]> = settings2
        .iter()
        .map(|&s2| lab1_marginal(setting1, s2))
        .collect();
    let mut worst: f64 = 0.0;
    for (i, p) in marginals.iter().enumerate() {
        for q in &marginals[i + 1..] {
            worst = worst.max(total_variation(*p, *q));
        }
    }
    Ok(worst)
}

/// Lab 1's outcome frequencies from `shots` sampled worlds.
pub fn sampled_lab1_marginal(
    setting1: MeasurementSetting,
    setting2: MeasurementSetting,
    shots: u64,
    seed: u64,
) -> Result<[f64; 2]> {
    let freqs = sample_worlds(&two_lab_ledger(setting1, setting2), shots, seed)?;
    let mut up = 0.0;
    let mut down = 0.0;
    for w in &freqs.worlds {
        match w.outcomes.first() {
            Some(Spin::Up) => up += w.frequency,
            Some(Spin::Down) => down += w.frequency,
            None => {}
        }
    }
    Ok([up, down])
}
