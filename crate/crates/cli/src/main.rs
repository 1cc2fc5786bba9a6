mod config;
mod scenario;

use std::io::Write;
use std::process::ExitCode;

use clap::Parser;

use config::{Args, Format, ScenarioConfig};

fn main() -> ExitCode {
    let args = Args::parse();
    let config = match ScenarioConfig::from_args(args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let report = match scenario::run(&config).and_then(|r| Ok((r.render(config.format)?, r))) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e:#}");
            return ExitCode::from(2);
        }
    };
    let (text, report) = report;
    if std::io::stdout().lock().write_all(text.as_bytes()).is_err() {
        return ExitCode::from(2);
    }
    if config.format == Format::Csv {
        for audit in &report.audits {
            let status = if audit.passed { "PASS" } else { "FAIL" };
            eprintln!("{status} {}: {}", audit.name, audit.detail);
        }
    }
    if report.ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
