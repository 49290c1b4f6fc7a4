use std::path::PathBuf;

use clap::{Parser, ValueEnum};

use rkbs_cli::{Command, Overrides};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Cmd {
    KernelTable,
    Norm,
    SipScan,
    Interpolate,
    Regnet,
    L1,
    Verify,
}

impl From<Cmd> for Command {
    fn from(c: Cmd) -> Self {
        match c {
            Cmd::KernelTable => Command::KernelTable,
            Cmd::Norm => Command::Norm,
            Cmd::SipScan => Command::SipScan,
            Cmd::Interpolate => Command::Interpolate,
            Cmd::Regnet => Command::Regnet,
            Cmd::L1 => Command::L1,
            Cmd::Verify => Command::Verify,
        }
    }
}

/// Reproducing kernel Banach space experiments.
#[derive(Debug, Parser)]
#[command(version, about)]
struct Cli {
    /// Command to run; may instead be given as `command=` in the config file.
    command: Option<Cmd>,
    /// Flat key=value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Write the CSV table here (atomically) instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    tol: Option<f64>,
    /// Extra key=value override; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let overrides = Overrides {
        command: cli.command.map(Command::from),
        config: cli.config,
        seed: cli.seed,
        out: cli.out,
        tol: cli.tol,
        set: cli.set,
    };
    std::process::exit(rkbs_cli::run(&overrides));
}
