use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_4, PI, SQRT_2};
use std::fmt::Write as _;

use anyhow::{bail, Context, Result};
use manyworlds::{
    chsh_report, correlation, correlation_sweep, figure_one_enumeration, lab1_marginal,
    locality_trace, max_local_chsh, no_signaling_check, record_run, sample_worlds,
    sampled_lab1_marginal, two_lab_ledger, EventKind, MeasurementSetting, Schedule, SiteGeometry,
    Spin,
};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::{Format, Scenario, ScenarioConfig};

/// Roughly 2.5 million light-years, in light-seconds.
pub const EARTH_ANDROMEDA_SECONDS: f64 = 8.0e13;

const EXACT_TOLERANCE: f64 = 1e-12;
const SWEEP_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Serialize)]
pub struct Audit {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Audit {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_owned(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub scenario: &'static str,
    pub inputs: Value,
    pub results: Value,
    pub audits: Vec<Audit>,
    pub ok: bool,
    #[serde(skip)]
    csv: String,
}

impl Report {
    pub fn render(&self, format: Format) -> Result<String> {
        match format {
            Format::Json => {
                let mut text = serde_json::to_string_pretty(self)?;
                text.push('\n');
                Ok(text)
            }
            Format::Csv => Ok(self.csv.clone()),
        }
    }
}

pub fn run(config: &ScenarioConfig) -> Result<Report> {
    let angles = |defaults: &[f64]| -> Vec<MeasurementSetting> {
        if config.angles.is_empty() {
            defaults.iter().map(|&x| setting(x)).collect()
        } else {
            config.angles.clone()
        }
    };
    let out = match config.scenario {
        Scenario::EqualSettings => equal_settings(&angles(&[0.0, FRAC_PI_2]), config)?,
        Scenario::FigureOne => figure_one(&angles(&[0.0, FRAC_PI_2]))?,
        Scenario::AngleSweep => angle_sweep(&sweep_angles(config)),
        Scenario::Chsh => chsh(&angles(&[0.0, FRAC_PI_2, FRAC_PI_4, 3.0 * FRAC_PI_4]))?,
        Scenario::NoSignaling => no_signaling(
            &angles(&[FRAC_PI_3, 0.0, FRAC_PI_4, FRAC_PI_2, 2.0 * FRAC_PI_3]),
            config,
        )?,
        Scenario::LocalityTrace => locality(&angles(&[0.0, FRAC_PI_2]), config)?,
    };
    let inputs = json!({
        "angles_radians": out.angles.iter().map(|s| s.angle()).collect::<Vec<_>>(),
        "unit": config.unit,
        "shots": config.shots,
        "seed": config.seed,
        "format": config.format,
        "points": (config.scenario == Scenario::AngleSweep && config.angles.is_empty())
            .then_some(config.points),
        "geometry": out.geometry,
    });
    let ok = out.audits.iter().all(|a| a.passed);
    Ok(Report {
        scenario: config.scenario.tag(),
        inputs,
        results: out.results,
        audits: out.audits,
        ok,
        csv: out.csv,
    })
}

struct Outcome {
    angles: Vec<MeasurementSetting>,
    geometry: Option<SiteGeometry>,
    results: Value,
    audits: Vec<Audit>,
    csv: String,
}

fn setting(x: f64) -> MeasurementSetting {
    MeasurementSetting::new(x).expect("built-in angle lies in [0, π)")
}

fn sweep_angles(config: &ScenarioConfig) -> Vec<MeasurementSetting> {
    if !config.angles.is_empty() {
        return config.angles.clone();
    }
    let n = config.points;
    (0..n).map(|k| setting(k as f64 * PI / n as f64)).collect()
}

fn joint_row(delta: f64, report: &manyworlds::CorrelationReport) -> String {
    let j = &report.joint;
    format!(
        "{},{},{},{},{},{}\n",
        delta, report.expectation, j.up_up, j.up_down, j.down_up, j.down_down
    )
}

const JOINT_HEADER: &str =
    "delta_radians,E,joint_up_up,joint_up_down,joint_down_up,joint_down_down\n";

fn equal_settings(angles: &[MeasurementSetting], config: &ScenarioConfig) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut csv = JOINT_HEADER.to_owned();
    let mut worst: f64 = 0.0;
    let mut paired = true;
    let mut sampled_same = 0u64;
    for &theta in angles {
        let ledger = two_lab_ledger(theta, theta);
        let report = correlation((theta, theta));
        worst = worst.max((report.expectation + 1.0).abs());
        paired &= ledger.world_count() == 2
            && ledger
                .branches()
                .iter()
                .all(|b| b.outcome(1).zip(b.outcome(2)).is_some_and(|(x, y)| x != y));
        let sampled = match config.shots {
            Some(shots) => {
                let freqs = sample_worlds(&ledger, shots, config.seed)?;
                sampled_same += freqs
                    .worlds
                    .iter()
                    .filter(|w| w.outcomes.first() == w.outcomes.get(1))
                    .map(|w| w.count)
                    .sum::<u64>();
                Some(freqs)
            }
            None => None,
        };
        csv.push_str(&joint_row(0.0, &report));
        rows.push(json!({
            "theta": theta.angle(),
            "correlation": report,
            "ledger": ledger,
            "sampled": sampled,
        }));
    }
    let mut audits = vec![
        Audit::new(
            "perfect-anticorrelation",
            worst <= EXACT_TOLERANCE,
            format!("max |E + 1| = {worst:e} over {} settings", angles.len()),
        ),
        Audit::new(
            "branch-pairing",
            paired,
            "every ledger has two worlds with opposite records".to_owned(),
        ),
    ];
    if config.shots.is_some() {
        audits.push(Audit::new(
            "sampled-anticorrelation",
            sampled_same == 0,
            format!("{sampled_same} sampled worlds with equal records"),
        ));
    }
    Ok(Outcome {
        angles: angles.to_vec(),
        geometry: None,
        results: Value::Array(rows),
        audits,
        csv,
    })
}

fn figure_one(angles: &[MeasurementSetting]) -> Result<Outcome> {
    let choices: Vec<_> = angles.iter().map(|&t| (t, t)).collect();
    let ledgers = figure_one_enumeration(&choices);
    let worlds: usize = ledgers.iter().map(|l| l.world_count()).sum();
    let mut csv = String::from("ledger,setting1,setting2,outcome1,outcome2,weight\n");
    let mut worst: f64 = 0.0;
    let mut two_each = true;
    for (i, (ledger, &(a, b))) in ledgers.iter().zip(&choices).enumerate() {
        two_each &= ledger.world_count() == 2;
        for branch in ledger.branches() {
            worst = worst.max((branch.weight() - 0.5).abs());
            let spin = |k| branch.outcome(k).map_or("", Spin::as_str);
            writeln!(
                csv,
                "{i},{},{},{},{},{}",
                a.angle(),
                b.angle(),
                spin(1),
                spin(2),
                branch.weight()
            )?;
        }
    }
    let audits = vec![
        Audit::new(
            "world-count",
            worlds == 2 * ledgers.len(),
            format!("{worlds} worlds across {} ledgers", ledgers.len()),
        ),
        Audit::new(
            "two-worlds-per-ledger",
            two_each,
            "each setting choice splits into two worlds".to_owned(),
        ),
        Audit::new(
            "equal-weights",
            worst <= EXACT_TOLERANCE,
            format!("max |w - 0.5| = {worst:e}"),
        ),
    ];
    Ok(Outcome {
        angles: angles.to_vec(),
        geometry: None,
        results: json!({ "worlds": worlds, "ledgers": ledgers }),
        audits,
        csv,
    })
}

fn angle_sweep(deltas: &[MeasurementSetting]) -> Outcome {
    let reports = correlation_sweep(deltas);
    let mut csv = JOINT_HEADER.to_owned();
    let mut worst: f64 = 0.0;
    for (d, report) in deltas.iter().zip(&reports) {
        worst = worst.max((report.expectation + d.angle().cos()).abs());
        csv.push_str(&joint_row(d.angle(), report));
    }
    let audits = vec![Audit::new(
        "cosine-law",
        worst <= SWEEP_TOLERANCE,
        format!("max |E + cos Δ| = {worst:e} over {} points", deltas.len()),
    )];
    Outcome {
        angles: deltas.to_vec(),
        geometry: None,
        results: json!({ "sweep": reports }),
        audits,
        csv,
    }
}

fn chsh(angles: &[MeasurementSetting]) -> Result<Outcome> {
    let &[a, a_prime, b, b_prime] = angles else {
        bail!(
            "chsh needs exactly 4 angles (a, a', b, b'), got {}",
            angles.len()
        );
    };
    let report = chsh_report(a, a_prime, b, b_prime);
    let tsirelson = 2.0 * SQRT_2;
    let local = max_local_chsh();
    let mut csv = String::from("term,setting1,setting2,E\n");
    for (name, x, y, e) in [
        ("ab", a, b, report.e_ab),
        ("ab'", a, b_prime, report.e_ab_prime),
        ("a'b", a_prime, b, report.e_a_prime_b),
        ("a'b'", a_prime, b_prime, report.e_a_prime_b_prime),
    ] {
        writeln!(csv, "{name},{},{},{e}", x.angle(), y.angle())?;
    }
    writeln!(csv, "S,,,{}", report.s)?;
    let audits = vec![Audit::new(
        "tsirelson-bound",
        report.s.abs() <= tsirelson + SWEEP_TOLERANCE,
        format!("|S| = {:.12}, bound {:.12}", report.s.abs(), tsirelson),
    )];
    Ok(Outcome {
        angles: angles.to_vec(),
        geometry: None,
        results: json!({
            "chsh": report,
            "local_bound": local,
            "tsirelson_bound": tsirelson,
        }),
        audits,
        csv,
    })
}

fn no_signaling(angles: &[MeasurementSetting], config: &ScenarioConfig) -> Result<Outcome> {
    let Some((&theta1, remote)) = angles.split_first() else {
        bail!("no-signaling needs a local angle followed by remote angles");
    };
    let tv = no_signaling_check(theta1, remote)
        .context("no-signaling needs at least two remote angles")?;
    let mut csv = String::from("setting1,setting2,p_up,p_down,sampled_p_up,sampled_p_down\n");
    let mut rows = Vec::new();
    let mut worst_z: f64 = 0.0;
    for &theta2 in remote {
        let exact = lab1_marginal(theta1, theta2);
        let sampled = match config.shots {
            Some(shots) => {
                let m = sampled_lab1_marginal(theta1, theta2, shots, config.seed)?;
                let se = (exact[0] * exact[1] / shots as f64).sqrt();
                let z = if se > 0.0 {
                    (m[0] - exact[0]).abs() / se
                } else {
                    0.0
                };
                worst_z = worst_z.max(z);
                Some(m)
            }
            None => None,
        };
        let (su, sd) = sampled.map_or((String::new(), String::new()), |m| {
            (m[0].to_string(), m[1].to_string())
        });
        writeln!(
            csv,
            "{},{},{},{},{su},{sd}",
            theta1.angle(),
            theta2.angle(),
            exact[0],
            exact[1]
        )?;
        rows.push(json!({
            "setting2": theta2.angle(),
            "marginal": exact,
            "sampled_marginal": sampled,
        }));
    }
    let mut audits = vec![Audit::new(
        "exact-no-signaling",
        tv <= EXACT_TOLERANCE,
        format!("max total variation = {tv:e}"),
    )];
    if config.shots.is_some() {
        audits.push(Audit::new(
            "sampled-no-signaling",
            worst_z <= 3.0,
            format!("max deviation = {worst_z:.3} standard errors"),
        ));
    }
    Ok(Outcome {
        angles: angles.to_vec(),
        geometry: None,
        results: json!({
            "setting1": theta1.angle(),
            "max_total_variation": tv,
            "marginals": rows,
        }),
        audits,
        csv,
    })
}

fn locality(angles: &[MeasurementSetting], config: &ScenarioConfig) -> Result<Outcome> {
    let &[a, b] = angles else {
        bail!(
            "locality-trace needs exactly 2 angles, got {}",
            angles.len()
        );
    };
    let geometry = match &config.geometry {
        Some(g) => g.clone(),
        None => SiteGeometry::earth_andromeda(EARTH_ANDROMEDA_SECONDS)?,
    };
    let world = sample_worlds(&two_lab_ledger(a, b), 1, config.seed)?
        .worlds
        .into_iter()
        .find(|w| w.count == 1)
        .context("sampling returned no world")?;
    let outcomes = (world.outcomes[0], world.outcomes[1]);
    let schedule = Schedule::earliest(&geometry, 0.0);
    let log = record_run((a, b), outcomes, &geometry, &schedule)?;
    let verdict = locality_trace(&log)?;
    let mut csv = String::from("id,site,time,kind,reads\n");
    for event in log.events() {
        let site = serde_json::to_value(event.site)?;
        let kind = match event.kind {
            EventKind::Prepare { .. } => "prepare",
            EventKind::Measure { .. } => "measure",
            EventKind::ClassicalMessageSend { .. } => "classical-message-send",
            EventKind::ClassicalMessageReceive { .. } => "classical-message-receive",
            EventKind::Compare { .. } => "compare",
        };
        let reads: Vec<String> = event.reads.iter().map(u64::to_string).collect();
        writeln!(
            csv,
            "{},{},{},{kind},{}",
            event.id,
            site.as_str().unwrap_or_default(),
            event.time,
            reads.join(";")
        )?;
    }
    let audits = vec![Audit::new(
        "locality-trace",
        verdict.ok,
        format!("{} violations", verdict.violations.len()),
    )];
    Ok(Outcome {
        angles: angles.to_vec(),
        geometry: Some(geometry),
        results: json!({
            "outcomes": [outcomes.0, outcomes.1],
            "schedule": schedule,
            "events": log.events(),
            "verdict": verdict,
        }),
        audits,
        csv,
    })
}
