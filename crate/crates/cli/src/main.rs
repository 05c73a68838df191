//! `hartogs`: batch runs of the Hardy, d-bar and extension experiments.
//!
//! Every run writes `<out>/<command>.json` (the report) and
//! `<out>/<command>.manifest.json`. Exit codes: 0 when every check passes,
//! 1 when a check or hypothesis fails, 2 for configuration and usage errors.

mod commands;
mod config;
mod manifest;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use hartogs_core::grid::{write_field, write_form};
use hartogs_core::Error;
use serde::Serialize;

use commands::{Dump, Outcome};
use config::{ExperimentConfig, Overrides};
use manifest::{config_hash, Recorder};

/// Worker thread count; unset means one per core.
const THREADS_ENV: &str = "HARTOGS_THREADS";

#[derive(Parser)]
#[command(name = "hartogs", version, about = "Hardy inequalities, d-bar solves and Hartogs-type extension on periodic grids")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment configuration (.json or .toml).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `run.out_dir`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid points per axis; overrides the grid section.
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write the computed fields as raw little-endian binaries.
    #[arg(long)]
    dump_fields: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Check the geometric hypotheses of the extension problem.
    CheckAssumptions(Common),
    /// Evaluate Hardy quotients and the witness identity.
    Hardy(Common),
    /// Solve dbar u = v for a synthetic datum and certify the estimates.
    Solve(Common),
    /// Run the full extension pipeline.
    Extend(Common),
}

impl Command {
    fn parts(&self) -> (&'static str, &Common) {
        match self {
            Command::CheckAssumptions(c) => ("check-assumptions", c),
            Command::Hardy(c) => ("hardy", c),
            Command::Solve(c) => ("solve", c),
            Command::Extend(c) => ("extend", c),
        }
    }
}

fn exit_code_for(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Json(_)
        | Error::Io(_)
        | Error::Codimension { .. }
        | Error::TooFewComplexDims(_)
        | Error::InvalidGrid(_)
        | Error::InvalidSubspace(_)
        | Error::InvalidGeometry(_)
        | Error::InvalidFunction(_)
        | Error::DimensionMismatch { .. }
        | Error::GridMismatch
        | Error::Degree { .. } => 2,
        _ => 1,
    }
}

fn error_kind(e: &Error) -> String {
    let dbg = format!("{e:?}");
    dbg.split(|c: char| !c.is_alphanumeric()).next().unwrap_or("").to_string()
}

#[derive(Serialize)]
struct ErrorReport {
    error: String,
    message: String,
    passed: bool,
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> hartogs_core::Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

fn write_dumps(dir: &Path, dumps: &[Dump], rec: &mut Recorder) -> hartogs_core::Result<()> {
    let dir = dir.join("fields");
    fs::create_dir_all(&dir)?;
    for d in dumps {
        let paths = match d {
            Dump::Scalar(name, f) => write_field(&dir, name, f, 0, &[])?,
            Dump::Form(name, f) => write_form(&dir, name, f)?,
        };
        for p in paths {
            rec.output(&p);
        }
    }
    Ok(())
}

fn finish<R: Serialize>(
    result: hartogs_core::Result<Outcome<R>>,
    cfg: &ExperimentConfig,
    report_path: &Path,
    rec: &mut Recorder,
) -> hartogs_core::Result<u8> {
    match result {
        Ok(outcome) => {
            write_json(report_path, &outcome.report)?;
            rec.output(report_path);
            if cfg.run.dump_fields {
                write_dumps(&cfg.out_dir(), &outcome.dumps, rec)?;
            }
            if !outcome.passed {
                eprintln!("checks failed; see {}", report_path.display());
            }
            Ok(if outcome.passed { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("error: {e}");
            let code = exit_code_for(&e);
            write_json(
                report_path,
                &ErrorReport {
                    error: error_kind(&e),
                    message: e.to_string(),
                    passed: false,
                },
            )?;
            rec.output(report_path);
            Ok(code)
        }
    }
}

fn configure_threads() -> Result<(), String> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| format!("{THREADS_ENV} must be a positive integer, got {value:?}"))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| e.to_string())
}

fn run(cli: Cli) -> hartogs_core::Result<u8> {
    let (name, common) = cli.command.parts();
    let mut cfg = ExperimentConfig::load(&common.config)?;
    cfg.apply(&Overrides {
        resolution: common.resolution,
        out_dir: common.out.clone(),
        seed: common.seed,
        dump_fields: common.dump_fields,
    })?;
    let out = cfg.out_dir();
    fs::create_dir_all(&out)?;
    let mut rec = Recorder::new(name, &common.config, config_hash(&cfg)?);
    let report_path = out.join(format!("{name}.json"));
    let code = match &cli.command {
        Command::CheckAssumptions(_) => finish(commands::check_assumptions(&cfg, &mut rec), &cfg, &report_path, &mut rec)?,
        Command::Hardy(_) => finish(commands::hardy(&cfg, &mut rec), &cfg, &report_path, &mut rec)?,
        Command::Solve(_) => finish(commands::solve(&cfg, &mut rec), &cfg, &report_path, &mut rec)?,
        Command::Extend(_) => finish(commands::extend_cmd(&cfg, &mut rec), &cfg, &report_path, &mut rec)?,
    };
    let manifest = rec.finish(code as i32);
    write_json(&out.join(format!("{name}.manifest.json")), &manifest)?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return ExitCode::from(2);
    }
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for(&e))
        }
    }
}
