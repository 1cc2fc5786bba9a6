use std::f64::consts::PI;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Parser, ValueEnum};
use manyworlds::{MeasurementSetting, SiteGeometry};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    EqualSettings,
    FigureOne,
    AngleSweep,
    Chsh,
    NoSignaling,
    LocalityTrace,
}

impl Scenario {
    pub fn tag(self) -> &'static str {
        match self {
            Scenario::EqualSettings => "equal-settings",
            Scenario::FigureOne => "figure-one",
            Scenario::AngleSweep => "angle-sweep",
            Scenario::Chsh => "chsh",
            Scenario::NoSignaling => "no-signaling",
            Scenario::LocalityTrace => "locality-trace",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Unit {
    Deg,
    Rad,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

/// Runs EPR spin scenarios on the branching-worlds simulator.
#[derive(Debug, Parser)]
#[command(name = "manyworlds", version)]
pub struct Args {
    #[arg(long, value_enum)]
    pub scenario: Scenario,

    /// Comma-separated analyzer angles. Radian values may use `pi`, e.g. `0,pi/2,3pi/4`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub angles: Vec<String>,

    #[arg(long, value_enum, default_value = "rad")]
    pub unit: Unit,

    /// Number of sampled worlds; enables frequency checks where the scenario has them.
    #[arg(long)]
    pub shots: Option<u64>,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,

    /// JSON object of site positions in light-seconds (lab1, lab2, source, referee).
    #[arg(long)]
    pub geometry: Option<PathBuf>,

    /// Grid size for angle-sweep when no angles are given.
    #[arg(long, default_value_t = 32)]
    pub points: usize,
}

#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    pub angles: Vec<MeasurementSetting>,
    pub unit: Unit,
    pub shots: Option<u64>,
    pub seed: u64,
    pub format: Format,
    pub geometry: Option<SiteGeometry>,
    pub points: usize,
}

impl ScenarioConfig {
    pub fn from_args(args: Args) -> Result<Self> {
        if args.shots == Some(0) {
            bail!("--shots must be at least 1");
        }
        if args.points == 0 {
            bail!("--points must be at least 1");
        }
        let angles = args
            .angles
            .iter()
            .map(|raw| parse_angle(raw, args.unit))
            .collect::<Result<Vec<_>>>()?;
        let geometry = match &args.geometry {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .with_context(|| format!("reading geometry {}", path.display()))?;
                let g: SiteGeometry = serde_json::from_str(&text)
                    .with_context(|| format!("parsing geometry {}", path.display()))?;
                Some(g)
            }
            None => None,
        };
        Ok(Self {
            scenario: args.scenario,
            angles,
            unit: args.unit,
            shots: args.shots,
            seed: args.seed,
            format: args.format,
            geometry,
            points: args.points,
        })
    }
}

/// Parses one angle in the given unit and converts it to a setting in radians.
pub fn parse_angle(raw: &str, unit: Unit) -> Result<MeasurementSetting> {
    let text = raw.trim();
    let value = match unit {
        Unit::Deg => text
            .parse::<f64>()
            .with_context(|| format!("invalid angle {text:?}"))?
            .to_radians(),
        Unit::Rad => parse_radians(text)?,
    };
    MeasurementSetting::new(value).with_context(|| format!("invalid angle {text:?}"))
}

fn parse_radians(text: &str) -> Result<f64> {
    let lower = text.to_ascii_lowercase();
    let Some(at) = lower.find("pi") else {
        return text
            .parse::<f64>()
            .with_context(|| format!("invalid angle {text:?}"));
    };
    let (head, tail) = (&lower[..at], &lower[at + 2..]);
    let head = head.trim_end_matches('*');
    let numerator = if head.is_empty() {
        1.0
    } else {
        head.parse::<f64>()
            .with_context(|| format!("invalid multiple of pi in {text:?}"))?
    };
    let denominator = match tail.strip_prefix('/') {
        Some(d) => d
            .parse::<f64>()
            .with_context(|| format!("invalid divisor in {text:?}"))?,
        None if tail.is_empty() => 1.0,
        None => bail!("invalid angle {text:?}"),
    };
    Ok(numerator * PI / denominator)
}
