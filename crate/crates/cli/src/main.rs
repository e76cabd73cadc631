//! `igroup` — run verification scenarios for interaction groups, their
//! Hilbert-module representations, crossed products, semigroup extensions,
//! and the antisymmetric-Fock obstruction, all at matrix scale.
//!
//! Exit codes: 0 all checks passed, 1 some check failed, 2 the config could
//! not be parsed or validated (the message names the offending field).

mod config;
mod output;
mod scenario;

use clap::{Parser, ValueEnum};
use config::{ConfigError, RunConfig};
use output::ReportDoc;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
    Both,
}

/// Verify interaction-group structures described by a JSON config.
#[derive(Debug, Parser)]
#[command(name = "igroup", version, about)]
struct Args {
    /// Path to the scenario config (JSON).
    #[arg(long)]
    config: PathBuf,

    /// Directory for report files (created if missing).
    #[arg(long, default_value = ".")]
    out: PathBuf,

    /// Override the config's residual tolerance (default 1e-9).
    #[arg(long)]
    tol: Option<f64>,

    /// Override the config's group window radius (default 2).
    #[arg(long)]
    window: Option<i64>,

    /// Override the config's RNG seed (default 7).
    #[arg(long)]
    seed: Option<u64>,

    /// Which report files to write.
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

fn run(args: &Args) -> Result<ReportDoc, ConfigError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| ConfigError {
        field: "config".into(),
        message: format!("cannot read {}: {e}", args.config.display()),
    })?;
    let mut config = RunConfig::parse(&text)?;

    // Apply command-line overrides before the config is echoed into the
    // report, so the echo describes the run that actually happened.
    if let Some(tol) = args.tol {
        if !(tol > 0.0) {
            return Err(ConfigError {
                field: "tol".into(),
                message: format!("must be positive, got {tol}"),
            });
        }
        config.tol = Some(tol);
    }
    if let Some(window) = args.window {
        if window < 0 {
            return Err(ConfigError {
                field: "window".into(),
                message: format!("must be nonnegative, got {window}"),
            });
        }
        config.window = Some(window);
    }
    if let Some(seed) = args.seed {
        config.seed = Some(seed);
    }

    let (report, findings) = scenario::execute(&config)?;
    Ok(ReportDoc::build(&config, &report, findings))
}

fn write_outputs(args: &Args, doc: &ReportDoc) -> std::io::Result<()> {
    std::fs::create_dir_all(&args.out)?;
    if matches!(args.format, Format::Json | Format::Both) {
        std::fs::write(args.out.join("report.json"), doc.to_json())?;
    }
    if matches!(args.format, Format::Text | Format::Both) {
        std::fs::write(args.out.join("report.txt"), doc.to_text())?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    let doc = match run(&args) {
        Ok(doc) => doc,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(2);
        }
    };
    if let Err(e) = write_outputs(&args, &doc) {
        eprintln!("cannot write reports to {}: {e}", args.out.display());
        return ExitCode::from(2);
    }
    print!("{}", doc.to_text());
    if doc.passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}
