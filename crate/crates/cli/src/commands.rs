//! Orchestration of the CLI subcommands: gate checks, run dispatch, and the
//! on-disk artifact layout (manifest, time series, field dumps, summaries,
//! failure records).

use crate::config::{ConfigError, DumpMode, RunConfig};
use nmagg_core::experiments::{self, ExperimentKind, ExperimentSpec, RunResult};
use nmagg_core::io as core_io;
use nmagg_core::kernel;
use nmagg_core::spectral::ScalarField;
use nmagg_core::{Error as CoreError, TorusGrid};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub enum CmdError {
    /// Configuration problems: exit code 2, no failure record.
    Config(String),
    /// Runtime (stepper) failures: exit code 1, failure record written.
    Run(String),
}

impl From<ConfigError> for CmdError {
    fn from(e: ConfigError) -> Self {
        CmdError::Config(e.to_string())
    }
}

pub type CmdResult = Result<(), CmdError>;

/// Common flags: `--out` overrides `[output] dir` and the `NMAGG_OUT`
/// environment variable; `--seed`/`--threads` override their config keys.
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
}

pub fn load_config(path: &Path, over: &Overrides) -> Result<RunConfig, CmdError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CmdError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(seed) = over.seed {
        cfg.seed = seed;
    }
    if let Some(threads) = over.threads {
        cfg.threads = threads;
    }
    if let Some(out) = &over.out {
        cfg.out_dir = out.display().to_string();
    } else if cfg.out_dir.is_empty() {
        cfg.out_dir = std::env::var("NMAGG_OUT").unwrap_or_else(|_| "nmagg-out".into());
    }
    Ok(cfg)
}

/// Build every model object without running: all gates are evaluated here.
fn check_gates(cfg: &RunConfig) -> Result<ExperimentSpec, CmdError> {
    let spec = cfg.to_experiment_spec()?;
    spec.validate().map_err(core_config_err)?;
    let grid = spec.build_grid().map_err(core_config_err)?;
    spec.build_model(&grid).map_err(core_config_err)?;
    experiments::initial_fields(&grid, &spec.init).map_err(core_config_err)?;
    Ok(spec)
}

fn core_config_err(e: CoreError) -> CmdError {
    CmdError::Config(e.to_string())
}

pub fn validate(config_path: &Path) -> CmdResult {
    let over = Overrides {
        out: None,
        seed: None,
        threads: None,
    };
    let cfg = load_config(config_path, &over)?;
    check_gates(&cfg)?;
    print!("{}", cfg.to_ini());
    println!("# configuration valid");
    Ok(())
}

fn manifest_lines(cfg: &RunConfig, command: &str) -> Vec<String> {
    vec![
        format!("nmagg {} (version {})", command, env!("CARGO_PKG_VERSION")),
        format!("seed = {}, threads = {}", cfg.seed, cfg.threads),
        "time and lengths are dimensionless model units".to_string(),
    ]
}

fn write_manifest(dir: &Path, cfg: &RunConfig, command: &str) -> Result<(), CmdError> {
    let mut text = String::new();
    let _ = writeln!(text, "# manifest: resolved configuration");
    let _ = writeln!(text, "# command = {command}");
    let _ = writeln!(text, "# version = {}", env!("CARGO_PKG_VERSION"));
    text.push_str(&cfg.to_ini());
    std::fs::write(dir.join("manifest.ini"), text)
        .map_err(|e| CmdError::Run(format!("cannot write manifest: {e}")))
}

fn write_failure(dir: &Path, err: &CoreError) {
    let (step, substep) = match err {
        CoreError::NewtonDivergence { step, .. } | CoreError::SeparationLoss { step } => {
            (*step, "ch_step")
        }
        CoreError::CflViolation { step, .. } => (*step, "momentum_step"),
        CoreError::NonFinite { step, substep } => (*step, *substep),
        _ => (0, "setup"),
    };
    let text = format!(
        "[failure]\nstep = {step}\nsubstep = {substep}\nmessage = {err}\n"
    );
    let _ = std::fs::write(dir.join("failure.ini"), text);
}

fn ensure_dir(dir: &Path) -> Result<(), CmdError> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CmdError::Run(format!("cannot create {}: {e}", dir.display())))
}

fn run_failed(dir: &Path, e: CoreError) -> CmdError {
    write_failure(dir, &e);
    CmdError::Run(e.to_string())
}

fn dump_snapshots(dir: &Path, run: &RunResult, mode: DumpMode) -> Result<(), CmdError> {
    let io_err = |e: CoreError| CmdError::Run(e.to_string());
    match mode {
        DumpMode::None => {}
        DumpMode::Final => {
            let s = &run.final_state;
            core_io::write_scalar_dump(&dir.join("phi_final.bin"), "phi", &s.phi, s.t)
                .map_err(io_err)?;
            core_io::write_scalar_dump(&dir.join("mu_final.bin"), "mu", &s.mu, s.t)
                .map_err(io_err)?;
            core_io::write_scalar_dump(&dir.join("omega_final.bin"), "omega", &s.omega, s.t)
                .map_err(io_err)?;
            core_io::write_vector_dump(&dir.join("u_final.bin"), "u", &s.u, s.t).map_err(io_err)?;
        }
        DumpMode::All => {
            for snap in &run.snapshots {
                let tag = format!("{:08}", snap.step);
                core_io::write_scalar_dump(
                    &dir.join(format!("phi_{tag}.bin")),
                    "phi",
                    &snap.phi,
                    snap.t,
                )
                .map_err(io_err)?;
                core_io::write_scalar_dump(
                    &dir.join(format!("omega_{tag}.bin")),
                    "omega",
                    &snap.omega,
                    snap.t,
                )
                .map_err(io_err)?;
                core_io::write_vector_dump(&dir.join(format!("u_{tag}.bin")), "u", &snap.u, snap.t)
                    .map_err(io_err)?;
            }
            let s = &run.final_state;
            core_io::write_scalar_dump(&dir.join("mu_final.bin"), "mu", &s.mu, s.t)
                .map_err(io_err)?;
        }
    }
    Ok(())
}

/// `nmagg run`: dispatch on the configured experiment kind.
pub fn run(config_path: &Path, over: &Overrides) -> CmdResult {
    let cfg = load_config(config_path, over)?;
    run_with_kind(&cfg, None)
}

pub fn run_with_kind(cfg: &RunConfig, force_kind: Option<ExperimentKind>) -> CmdResult {
    let mut cfg = cfg.clone();
    if let Some(kind) = force_kind {
        cfg.kind = match kind {
            ExperimentKind::SingleRun => "single_run".into(),
            ExperimentKind::EtaRSweep => "eta_r_sweep".into(),
            ExperimentKind::KappaSweep => "kappa_sweep".into(),
        };
    }
    let spec = check_gates(&cfg)?;
    let dir = PathBuf::from(&cfg.out_dir);
    ensure_dir(&dir)?;
    write_manifest(&dir, &cfg, "run")?;
    let header = manifest_lines(&cfg, "run");

    match spec.kind {
        ExperimentKind::SingleRun => {
            let run = experiments::run_single_spec(&spec).map_err(|e| run_failed(&dir, e))?;
            core_io::write_timeseries_csv(&dir.join("timeseries.csv"), &header, &run.reports)
                .map_err(|e| CmdError::Run(e.to_string()))?;
            dump_snapshots(&dir, &run, cfg.dump_fields)?;
            println!(
                "single run complete: {} steps, mass drift {:.3e}, min separation gap {:.3e}",
                run.final_state.step, run.max_mass_drift, run.min_separation_gap
            );
        }
        ExperimentKind::EtaRSweep => {
            let out = experiments::eta_r_sweep(&spec).map_err(|e| run_failed(&dir, e))?;
            core_io::write_eta_sweep_csv(&dir.join("summary.csv"), &header, &out)
                .map_err(|e| CmdError::Run(e.to_string()))?;
            for (i, row) in out.rows.iter().enumerate() {
                let mut h = header.clone();
                h.push(format!("eta_r = {}", row.eta_r));
                core_io::write_timeseries_csv(
                    &dir.join(format!("timeseries_row{i:02}.csv")),
                    &h,
                    &row.reports,
                )
                .map_err(|e| CmdError::Run(e.to_string()))?;
            }
            println!(
                "eta_r sweep complete: {} rows, fitted slope {:.4}",
                out.rows.len(),
                out.fitted_slope
            );
        }
        ExperimentKind::KappaSweep => {
            let rows = experiments::kappa_sweep(&spec).map_err(|e| run_failed(&dir, e))?;
            core_io::write_kappa_sweep_csv(&dir.join("summary.csv"), &header, &rows)
                .map_err(|e| CmdError::Run(e.to_string()))?;
            for (i, row) in rows.iter().enumerate() {
                if !row.resolved {
                    continue;
                }
                let mut h = header.clone();
                h.push(format!("kappa = {}", row.kappa));
                core_io::write_timeseries_csv(
                    &dir.join(format!("timeseries_row{i:02}.csv")),
                    &h,
                    &row.reports,
                )
                .map_err(|e| CmdError::Run(e.to_string()))?;
            }
            println!("kappa sweep complete: {} rows", rows.len());
        }
    }
    Ok(())
}

/// `nmagg kernel-table`: static functional-gap table over the configured
/// sweep list, evaluated on the canonical single-mode diagnostic fields
/// `phi = zeta = sin(2 pi x / L)`.
pub fn kernel_table(config_path: &Path, over: &Overrides) -> CmdResult {
    let cfg = load_config(config_path, over)?;
    let spec = cfg.to_experiment_spec()?;
    if cfg.sweep.is_empty() {
        return Err(CmdError::Config(
            "invalid configuration [experiment]: kernel-table needs a sweep list of kappa values"
                .into(),
        ));
    }
    let grid = TorusGrid::new(cfg.grid_n, cfg.grid_length).map_err(core_config_err)?;
    let l = grid.length();
    let phi = ScalarField::from_fn(&grid, |x, _| (2.0 * std::f64::consts::PI * x / l).sin());
    let rows = kernel::kappa_limit_table(&spec.kernel_family, &phi, &phi, &cfg.sweep)
        .map_err(core_config_err)?;
    let dir = PathBuf::from(&cfg.out_dir);
    ensure_dir(&dir)?;
    write_manifest(&dir, &cfg, "kernel-table")?;
    core_io::write_kappa_table_csv(
        &dir.join("kernel_table.csv"),
        &manifest_lines(&cfg, "kernel-table"),
        &rows,
    )
    .map_err(|e| CmdError::Run(e.to_string()))?;
    println!("kernel table complete: {} rows", rows.len());
    Ok(())
}
