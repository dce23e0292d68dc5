//! `nmagg`: batch runner for the nonlocal micropolar two-phase flow
//! simulator. See `README.md` for the configuration format and the artifact
//! layout each subcommand produces.

mod commands;
mod config;

use clap::{Args, Parser, Subcommand};
use commands::{CmdError, Overrides};
use nmagg_core::experiments::ExperimentKind;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nmagg", version, about = "Nonlocal micropolar two-phase flow simulator on the 2-torus")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct CommonArgs {
    /// INI configuration file.
    config: PathBuf,
    /// Output directory (overrides [output] dir and NMAGG_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed for the initial data (overrides [experiment] seed).
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads for sweep rows (overrides [experiment] threads).
    #[arg(long)]
    threads: Option<usize>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            out: self.out.clone(),
            seed: self.seed,
            threads: self.threads,
        }
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the experiment configured under [experiment].
    Run(CommonArgs),
    /// Parse the configuration, evaluate every gate, print the resolved config.
    Validate { config: PathBuf },
    /// Nonpolar consistency sweep over the configured eta_r list.
    SweepEtaR(CommonArgs),
    /// Kernel-concentration sweep over the configured kappa list.
    SweepKappa(CommonArgs),
    /// Static kernel functional-gap table over the configured kappa list.
    KernelTable(CommonArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.cmd {
        Cmd::Run(a) => commands::run(&a.config, &a.overrides()),
        Cmd::Validate { config } => commands::validate(config),
        Cmd::SweepEtaR(a) => commands::load_config(&a.config, &a.overrides())
            .and_then(|cfg| commands::run_with_kind(&cfg, Some(ExperimentKind::EtaRSweep))),
        Cmd::SweepKappa(a) => commands::load_config(&a.config, &a.overrides())
            .and_then(|cfg| commands::run_with_kind(&cfg, Some(ExperimentKind::KappaSweep))),
        Cmd::KernelTable(a) => commands::kernel_table(&a.config, &a.overrides()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CmdError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CmdError::Run(msg)) => {
            eprintln!("run failed: {msg}");
            ExitCode::from(1)
        }
    }
}
