//! INI-style run configuration: sections `[grid]`, `[physics]`, `[potential]`,
//! `[kernel]`, `[scheme]`, `[experiment]`, `[output]` with `key = value`
//! lines, `#`/`;` comments, `true`/`false` booleans and comma-separated
//! lists. Emitting and re-parsing a config yields an identical config.

use nmagg_core::experiments::{ExperimentKind, ExperimentSpec, InitialDataSpec};
use nmagg_core::{KernelFamily, PhysParams, PotentialSpec, SchemeConfig};
use std::fmt::Write as _;

#[derive(Debug)]
pub enum ConfigError {
    /// Syntax error with its line number (1-based).
    Parse { line: usize, message: String },
    /// Semantic error naming the offending section/key or gate.
    Validation { section: String, message: String },
}

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ConfigError::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
            ConfigError::Validation { section, message } => {
                write!(f, "invalid configuration [{section}]: {message}")
            }
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DumpMode {
    None,
    Final,
    All,
}

impl DumpMode {
    fn as_str(self) -> &'static str {
        match self {
            DumpMode::None => "none",
            DumpMode::Final => "final",
            DumpMode::All => "all",
        }
    }
}

/// Fully explicit run configuration (defaults filled in).
#[derive(Debug, Clone)]
pub struct RunConfig {
    // [grid]
    pub grid_n: usize,
    pub grid_length: f64,
    // [physics]
    pub physics: PhysParams,
    // [potential]
    pub theta: f64,
    pub theta_c: f64,
    pub reg_epsilon: Option<f64>,
    pub reg_order: usize,
    // [kernel]
    pub kernel_family: String,
    pub kappa: f64,
    pub profile: Vec<f64>,
    // [scheme]
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub stab_s: Option<f64>,
    pub split_visc: Option<f64>,
    pub split_ang: Option<f64>,
    pub cfl_max: f64,
    // [experiment]
    pub kind: String,
    pub t_final: f64,
    pub snapshot_every: usize,
    pub sweep: Vec<f64>,
    pub mean_phi: f64,
    pub amp_phi: f64,
    pub max_mode: usize,
    pub u_norm: f64,
    pub omega_amp: f64,
    pub delta0: f64,
    pub seed: u64,
    pub threads: usize,
    // [output]
    pub out_dir: String,
    pub dump_fields: DumpMode,
}

impl Default for RunConfig {
    fn default() -> Self {
        let p = PhysParams::default();
        let s = SchemeConfig::default();
        Self {
            grid_n: 256,
            grid_length: 1.0,
            physics: p,
            theta: 0.8,
            theta_c: 1.0,
            reg_epsilon: None,
            reg_order: 4,
            kernel_family: "disk".into(),
            kappa: 0.125,
            profile: Vec::new(),
            dt: s.dt,
            newton_tol: s.newton_tol,
            newton_max_iter: s.newton_max_iter,
            stab_s: None,
            split_visc: None,
            split_ang: None,
            cfl_max: s.cfl_max,
            kind: "single_run".into(),
            t_final: 0.25,
            snapshot_every: 10,
            sweep: Vec::new(),
            mean_phi: 0.0,
            amp_phi: 0.05,
            max_mode: 0,
            u_norm: 0.1,
            omega_amp: 0.0,
            delta0: 0.1,
            seed: 42,
            threads: 1,
            out_dir: String::new(),
            dump_fields: DumpMode::Final,
        }
    }
}

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64, ConfigError> {
    v.parse().map_err(|_| ConfigError::Validation {
        section: section.into(),
        message: format!("{key}: not a number: {v:?}"),
    })
}

fn parse_usize(section: &str, key: &str, v: &str) -> Result<usize, ConfigError> {
    v.parse().map_err(|_| ConfigError::Validation {
        section: section.into(),
        message: format!("{key}: not a nonnegative integer: {v:?}"),
    })
}

fn parse_list(section: &str, key: &str, v: &str) -> Result<Vec<f64>, ConfigError> {
    if v.trim().is_empty() {
        return Ok(Vec::new());
    }
    v.split(',')
        .map(|s| parse_f64(section, key, s.trim()))
        .collect()
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut section = String::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let lineno = lineno + 1;
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or(ConfigError::Parse {
                    line: lineno,
                    message: "unterminated section header".into(),
                })?;
                section = name.trim().to_string();
                match section.as_str() {
                    "grid" | "physics" | "potential" | "kernel" | "scheme" | "experiment"
                    | "output" => {}
                    other => {
                        return Err(ConfigError::Validation {
                            section: other.into(),
                            message: "unknown section".into(),
                        })
                    }
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or(ConfigError::Parse {
                line: lineno,
                message: format!("expected 'key = value', got {line:?}"),
            })?;
            let (key, value) = (key.trim(), value.trim());
            if section.is_empty() {
                return Err(ConfigError::Parse {
                    line: lineno,
                    message: format!("key {key:?} before any [section]"),
                });
            }
            cfg.set(&section, key, value)?;
        }
        Ok(cfg)
    }

    fn set(&mut self, section: &str, key: &str, v: &str) -> Result<(), ConfigError> {
        let unknown = || {
            Err(ConfigError::Validation {
                section: section.into(),
                message: format!("unknown key {key:?}"),
            })
        };
        match (section, key) {
            ("grid", "n") => self.grid_n = parse_usize(section, key, v)?,
            ("grid", "length") => self.grid_length = parse_f64(section, key, v)?,

            ("physics", "rho1") => self.physics.rho1 = parse_f64(section, key, v)?,
            ("physics", "rho2") => self.physics.rho2 = parse_f64(section, key, v)?,
            ("physics", "eta1") => self.physics.eta1 = parse_f64(section, key, v)?,
            ("physics", "eta2") => self.physics.eta2 = parse_f64(section, key, v)?,
            ("physics", "eta_r") => self.physics.eta_r = parse_f64(section, key, v)?,
            ("physics", "c_d") => self.physics.c_d = parse_f64(section, key, v)?,
            ("physics", "c_a") => self.physics.c_a = parse_f64(section, key, v)?,
            ("physics", "c0") => self.physics.c0 = parse_f64(section, key, v)?,
            ("physics", "mobility") => self.physics.mobility = parse_f64(section, key, v)?,
            ("physics", "sigma") => self.physics.sigma = parse_f64(section, key, v)?,
            ("physics", "eps_int") => self.physics.eps_int = parse_f64(section, key, v)?,

            ("potential", "theta") => self.theta = parse_f64(section, key, v)?,
            ("potential", "theta_c") => self.theta_c = parse_f64(section, key, v)?,
            ("potential", "reg_epsilon") => {
                self.reg_epsilon = Some(parse_f64(section, key, v)?)
            }
            ("potential", "reg_order") => self.reg_order = parse_usize(section, key, v)?,

            ("kernel", "family") => self.kernel_family = v.to_string(),
            ("kernel", "kappa") => self.kappa = parse_f64(section, key, v)?,
            ("kernel", "profile") => self.profile = parse_list(section, key, v)?,

            ("scheme", "dt") => self.dt = parse_f64(section, key, v)?,
            ("scheme", "newton_tol") => self.newton_tol = parse_f64(section, key, v)?,
            ("scheme", "newton_max_iter") => {
                self.newton_max_iter = parse_usize(section, key, v)?
            }
            ("scheme", "stab_s") => self.stab_s = Some(parse_f64(section, key, v)?),
            ("scheme", "split_visc") => self.split_visc = Some(parse_f64(section, key, v)?),
            ("scheme", "split_ang") => self.split_ang = Some(parse_f64(section, key, v)?),
            ("scheme", "cfl_max") => self.cfl_max = parse_f64(section, key, v)?,

            ("experiment", "kind") => self.kind = v.to_string(),
            ("experiment", "t_final") => self.t_final = parse_f64(section, key, v)?,
            ("experiment", "snapshot_every") => {
                self.snapshot_every = parse_usize(section, key, v)?
            }
            ("experiment", "sweep") => self.sweep = parse_list(section, key, v)?,
            ("experiment", "mean_phi") => self.mean_phi = parse_f64(section, key, v)?,
            ("experiment", "amp_phi") => self.amp_phi = parse_f64(section, key, v)?,
            ("experiment", "max_mode") => self.max_mode = parse_usize(section, key, v)?,
            ("experiment", "u_norm") => self.u_norm = parse_f64(section, key, v)?,
            ("experiment", "omega_amp") => self.omega_amp = parse_f64(section, key, v)?,
            ("experiment", "delta0") => self.delta0 = parse_f64(section, key, v)?,
            ("experiment", "seed") => {
                self.seed = v.parse().map_err(|_| ConfigError::Validation {
                    section: section.into(),
                    message: format!("seed: not a u64: {v:?}"),
                })?
            }
            ("experiment", "threads") => self.threads = parse_usize(section, key, v)?,

            ("output", "dir") => self.out_dir = v.to_string(),
            ("output", "dump_fields") => {
                self.dump_fields = match v {
                    "none" => DumpMode::None,
                    "final" => DumpMode::Final,
                    "all" => DumpMode::All,
                    other => {
                        return Err(ConfigError::Validation {
                            section: section.into(),
                            message: format!("dump_fields must be none|final|all, got {other:?}"),
                        })
                    }
                }
            }
            _ => return unknown(),
        }
        Ok(())
    }

    /// Emit the full configuration; `parse(to_ini(c))` reproduces `c`.
    pub fn to_ini(&self) -> String {
        let mut s = String::new();
        let f = |v: f64| format!("{v}");
        let list = |vs: &[f64]| {
            vs.iter()
                .map(|v| format!("{v}"))
                .collect::<Vec<_>>()
                .join(", ")
        };
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "n = {}", self.grid_n);
        let _ = writeln!(s, "length = {}", f(self.grid_length));
        let _ = writeln!(s, "\n[physics]");
        let p = &self.physics;
        let _ = writeln!(s, "rho1 = {}", f(p.rho1));
        let _ = writeln!(s, "rho2 = {}", f(p.rho2));
        let _ = writeln!(s, "eta1 = {}", f(p.eta1));
        let _ = writeln!(s, "eta2 = {}", f(p.eta2));
        let _ = writeln!(s, "eta_r = {}", f(p.eta_r));
        let _ = writeln!(s, "c_d = {}", f(p.c_d));
        let _ = writeln!(s, "c_a = {}", f(p.c_a));
        let _ = writeln!(s, "c0 = {}", f(p.c0));
        let _ = writeln!(s, "mobility = {}", f(p.mobility));
        let _ = writeln!(s, "sigma = {}", f(p.sigma));
        let _ = writeln!(s, "eps_int = {}", f(p.eps_int));
        let _ = writeln!(s, "\n[potential]");
        let _ = writeln!(s, "theta = {}", f(self.theta));
        let _ = writeln!(s, "theta_c = {}", f(self.theta_c));
        if let Some(e) = self.reg_epsilon {
            let _ = writeln!(s, "reg_epsilon = {}", f(e));
        }
        let _ = writeln!(s, "reg_order = {}", self.reg_order);
        let _ = writeln!(s, "\n[kernel]");
        let _ = writeln!(s, "family = {}", self.kernel_family);
        let _ = writeln!(s, "kappa = {}", f(self.kappa));
        if !self.profile.is_empty() {
            let _ = writeln!(s, "profile = {}", list(&self.profile));
        }
        let _ = writeln!(s, "\n[scheme]");
        let _ = writeln!(s, "dt = {}", f(self.dt));
        let _ = writeln!(s, "newton_tol = {}", f(self.newton_tol));
        let _ = writeln!(s, "newton_max_iter = {}", self.newton_max_iter);
        if let Some(v) = self.stab_s {
            let _ = writeln!(s, "stab_s = {}", f(v));
        }
        if let Some(v) = self.split_visc {
            let _ = writeln!(s, "split_visc = {}", f(v));
        }
        if let Some(v) = self.split_ang {
            let _ = writeln!(s, "split_ang = {}", f(v));
        }
        let _ = writeln!(s, "cfl_max = {}", f(self.cfl_max));
        let _ = writeln!(s, "\n[experiment]");
        let _ = writeln!(s, "kind = {}", self.kind);
        let _ = writeln!(s, "t_final = {}", f(self.t_final));
        let _ = writeln!(s, "snapshot_every = {}", self.snapshot_every);
        if !self.sweep.is_empty() {
            let _ = writeln!(s, "sweep = {}", list(&self.sweep));
        }
        let _ = writeln!(s, "mean_phi = {}", f(self.mean_phi));
        let _ = writeln!(s, "amp_phi = {}", f(self.amp_phi));
        let _ = writeln!(s, "max_mode = {}", self.max_mode);
        let _ = writeln!(s, "u_norm = {}", f(self.u_norm));
        let _ = writeln!(s, "omega_amp = {}", f(self.omega_amp));
        let _ = writeln!(s, "delta0 = {}", f(self.delta0));
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "threads = {}", self.threads);
        let _ = writeln!(s, "\n[output]");
        if !self.out_dir.is_empty() {
            let _ = writeln!(s, "dir = {}", self.out_dir);
        }
        let _ = writeln!(s, "dump_fields = {}", self.dump_fields.as_str());
        s
    }

    /// Validate the double-well regime and assemble the core experiment spec.
    /// All further gates (positivity, coercivity, kernel support/resolution,
    /// splitting dominance) run inside the core constructors.
    pub fn to_experiment_spec(&self) -> Result<ExperimentSpec, ConfigError> {
        if !(self.theta > 0.0 && self.theta < self.theta_c) {
            return Err(ConfigError::Validation {
                section: "potential".into(),
                message: format!(
                    "double-well regime requires 0 < theta < theta_c, got theta = {}, theta_c = {}",
                    self.theta, self.theta_c
                ),
            });
        }
        let mut pot =
            PotentialSpec::new(self.theta, self.theta_c).map_err(|e| ConfigError::Validation {
                section: "potential".into(),
                message: e.to_string(),
            })?;
        if let Some(eps) = self.reg_epsilon {
            pot = pot
                .with_regularization(eps, self.reg_order)
                .map_err(|e| ConfigError::Validation {
                    section: "potential".into(),
                    message: e.to_string(),
                })?;
        }
        let kernel_family = match self.kernel_family.as_str() {
            "disk" => KernelFamily::Disk,
            "custom" => {
                if self.profile.is_empty() {
                    return Err(ConfigError::Validation {
                        section: "kernel".into(),
                        message: "family = custom requires a nonempty profile list".into(),
                    });
                }
                KernelFamily::Custom(self.profile.clone())
            }
            other => {
                return Err(ConfigError::Validation {
                    section: "kernel".into(),
                    message: format!("family must be disk|custom, got {other:?}"),
                })
            }
        };
        let kind = match self.kind.as_str() {
            "single_run" => ExperimentKind::SingleRun,
            "eta_r_sweep" => ExperimentKind::EtaRSweep,
            "kappa_sweep" => ExperimentKind::KappaSweep,
            other => {
                return Err(ConfigError::Validation {
                    section: "experiment".into(),
                    message: format!(
                        "kind must be single_run|eta_r_sweep|kappa_sweep, got {other:?}"
                    ),
                })
            }
        };
        Ok(ExperimentSpec {
            kind,
            grid_n: self.grid_n,
            grid_length: self.grid_length,
            kernel_family,
            kappa: self.kappa,
            pot,
            params: self.physics.clone(),
            scheme: SchemeConfig {
                dt: self.dt,
                newton_tol: self.newton_tol,
                newton_max_iter: self.newton_max_iter,
                stab_s: self.stab_s,
                split_visc: self.split_visc,
                split_ang: self.split_ang,
                cfl_max: self.cfl_max,
            },
            t_final: self.t_final,
            snapshot_every: self.snapshot_every,
            sweep: self.sweep.clone(),
            init: InitialDataSpec {
                mean_phi: self.mean_phi,
                amp_phi: self.amp_phi,
                max_mode: self.max_mode,
                u_norm: self.u_norm,
                omega_amp: self.omega_amp,
                delta0: self.delta0,
                seed: self.seed,
            },
            threads: self.threads,
        })
    }
}
