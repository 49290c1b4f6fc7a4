//! Batch front end for the `rkbs` library.
//!
//! A run is configured by a flat `key=value` file plus command-line flags;
//! flags are applied last and win. Every command emits one CSV table (header
//! row, floats with 17 significant digits) and a plain-text summary. With
//! `--out` the table is written atomically to that path and the summary goes
//! to stdout; otherwise the table goes to stdout and the summary to stderr.
//!
//! Exit codes: 0 success, 1 I/O failure, 2 invalid configuration,
//! 3 solver non-convergence, 4 verification failure.

pub mod commands;
pub mod config;
pub mod output;
pub mod verify;

use std::io::Write;
use std::path::PathBuf;

pub use commands::Outcome;
pub use config::{Command, ConfigError, Settings};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NO_CONVERGENCE: i32 = 3;
pub const EXIT_VERIFY: i32 = 4;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("solver failure: {0}")]
    Solver(rkbs::Error),
    #[error("invalid input: {0}")]
    Input(rkbs::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl From<rkbs::Error> for RunError {
    fn from(e: rkbs::Error) -> Self {
        match e {
            rkbs::Error::NoConvergence { .. } | rkbs::Error::NonUnimodal { .. } => Self::Solver(e),
            other => Self::Input(other),
        }
    }
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Config(_) | Self::Input(_) => EXIT_CONFIG,
            Self::Solver(_) => EXIT_NO_CONVERGENCE,
            Self::Io(_) => EXIT_IO,
        }
    }
}

/// Flag values layered over the config file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<Command>,
    pub config: Option<PathBuf>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub tol: Option<f64>,
    pub set: Vec<String>,
}

/// Config file, then `--set` assignments, then the dedicated flags.
pub fn settings_from(overrides: &Overrides) -> Result<Settings, RunError> {
    let mut settings = match &overrides.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ConfigError::new("config", format!("{}: {e}", path.display())))?;
            Settings::parse(&text)?
        }
        None => Settings::default(),
    };
    for assignment in &overrides.set {
        settings.set_pair(assignment).map_err(|e| {
            if e.field.is_empty() {
                ConfigError::new("set", e.message)
            } else {
                e
            }
        })?;
    }
    if let Some(c) = overrides.command {
        settings.set("command", &c.to_string())?;
    }
    if let Some(seed) = overrides.seed {
        settings.set("seed", &seed.to_string())?;
    }
    if let Some(tol) = overrides.tol {
        settings.set("tol", &format!("{tol:e}"))?;
    }
    if let Some(out) = &overrides.out {
        settings.set("out", &out.to_string_lossy())?;
    }
    Ok(settings)
}

/// Runs a configured command and returns the process exit code.
pub fn run(overrides: &Overrides) -> i32 {
    match execute(overrides) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn execute(overrides: &Overrides) -> Result<i32, RunError> {
    let settings = settings_from(overrides)?;
    let outcome = commands::dispatch(&settings)?;
    let csv = outcome.table.to_csv()?;
    match settings.out() {
        Some(path) => {
            output::write_atomic(&path, &csv)?;
            std::io::stdout().write_all(outcome.summary.as_bytes())?;
        }
        None => {
            std::io::stdout().write_all(&csv)?;
            std::io::stderr().write_all(outcome.summary.as_bytes())?;
        }
    }
    Ok(if outcome.verification_failed {
        EXIT_VERIFY
    } else {
        EXIT_OK
    })
}
