//! Command-line front end: manifests in, artifact directories out.

pub mod commands;
pub mod manifest;
pub mod scan;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use self::manifest::{parse_table, set_path, write_outputs, Manifest, Written};
use crate::error::{Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Parser)]
#[command(
    name = "dampwave",
    version,
    about = "Structurally damped evolution equations: damping checks, decay rates, blow-up scans"
)]
pub struct Cli {
    /// Experiment manifest (TOML).
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output root; results go to `<out>/<id>/`.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Worker threads; defaults to all cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Overrides `run.rel_tol`.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    ValidateDamping,
    DecayCharacter,
    Zones,
    SolveLinear,
    VerifyDecay,
    SolveSemilinear,
    Exponents,
    Scan,
    /// Runs the subcommand named in the manifest.
    Run,
}

impl Command {
    pub fn name(self) -> Option<&'static str> {
        Some(match self {
            Command::ValidateDamping => "validate-damping",
            Command::DecayCharacter => "decay-character",
            Command::Zones => "zones",
            Command::SolveLinear => "solve-linear",
            Command::VerifyDecay => "verify-decay",
            Command::SolveSemilinear => "solve-semilinear",
            Command::Exponents => "exponents",
            Command::Scan => "scan",
            Command::Run => return None,
        })
    }
}

/// Process exit status for a finished invocation.
pub fn exit_code(result: &Result<Written>) -> u8 {
    match result {
        Ok(w) if w.expectation_met == Some(false) => 2,
        Ok(_) => 0,
        Err(_) => 1,
    }
}

/// Runs a parsed manifest table. `requested` must agree with `subcommand` when both are set.
pub fn run_table(
    raw: toml::Table,
    requested: Option<&str>,
    base: &Path,
    out: &Path,
    exec: Execution,
) -> Result<Written> {
    let m = Manifest::from_table(&raw)?;
    let name = match (requested, m.subcommand.as_deref()) {
        (Some(a), Some(b)) if a != b => {
            return Err(Error::Config(format!("manifest declares subcommand {b:?}, invoked as {a:?}")));
        }
        (Some(a), _) => a.to_string(),
        (None, Some(b)) => b.to_string(),
        (None, None) => return Err(Error::Config("no subcommand given or declared".into())),
    };
    if name == "scan" {
        let (art, all_met) = scan::run(&raw, &m, base, out, exec)?;
        let mut w = write_outputs(out, &m, &name, &raw, &art)?;
        if all_met == Some(false) {
            w.expectation_met = Some(false);
        }
        return Ok(w);
    }
    let art = commands::dispatch(&name, &m, base, exec)?;
    write_outputs(out, &m, &name, &raw, &art)
}

/// Loads `path`, applies the `--tol` override and runs it.
pub fn run_file(
    path: &Path,
    requested: Option<&str>,
    out: &Path,
    tol: Option<f64>,
    exec: Execution,
) -> Result<Written> {
    let text = fs::read_to_string(path)?;
    let mut raw = parse_table(&text)?;
    if let Some(t) = tol {
        if !(t > 0.0) {
            return Err(Error::Config(format!("--tol must be positive, got {t}")));
        }
        set_path(&mut raw, "run.rel_tol", toml::Value::Float(t))?;
    }
    let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
    run_table(raw, requested, &base, out, exec)
}

/// Entry point used by the binary.
pub fn main_with(cli: Cli) -> u8 {
    if let Some(k) = cli.threads {
        if let Err(e) = par::set_threads(k) {
            eprintln!("error: {e}");
            return 1;
        }
    }
    let Some(config) = cli.config.as_deref() else {
        eprintln!("error: --config is required");
        return 1;
    };
    let result = run_file(config, cli.command.name(), &cli.out, cli.tol, Execution::Parallel);
    match &result {
        Ok(w) => {
            let verdict = w.verdict.as_deref().unwrap_or("done");
            println!("{}: {verdict}", w.dir.display());
            if w.expectation_met == Some(false) {
                eprintln!("expectation not met");
            }
        }
        Err(e) => eprintln!("error: {e}"),
    }
    exit_code(&result)
}
