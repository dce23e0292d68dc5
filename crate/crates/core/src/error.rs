//! Error types shared across the solver library.

use thiserror::Error;

/// Errors raised by grid construction, kernel construction, model
/// configuration and time stepping.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Kernel radius incompatible with the periodic cell (needs kappa < min(1, L/2)).
    #[error("kernel support violation: kappa = {kappa} must be < min(1, L/2) = {limit}")]
    KernelSupport { kappa: f64, limit: f64 },

    /// Kernel radius below the 4-cell resolution floor.
    #[error("kernel under-resolved: kappa = {kappa} < 4 h = {floor} (grid spacing h = {h})")]
    Resolution { kappa: f64, floor: f64, h: f64 },

    /// Two fields (or a kernel and a field) built on different grids.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// Singular potential evaluated outside (-1, 1) without regularization.
    #[error("potential domain violation: |s| = {s_abs} >= 1 and no regularization is active")]
    Domain { s_abs: f64 },

    /// Assumption on F'' + a failed: theta - theta_c + a <= 0.
    #[error("coercivity violation: theta - theta_c + a = {alpha_hat} <= 0")]
    Coercivity { alpha_hat: f64 },

    /// Phase field outside [-1, 1]; an upstream invariant was broken.
    #[error("phase field out of range: max|phi| = {max_abs} > 1")]
    Range { max_abs: f64 },

    /// Newton iteration on the Cahn-Hilliard substep failed to converge.
    #[error("Newton divergence at step {step}: residual {residual:.3e} > tol {tol:.3e} after {iters} iterations")]
    NewtonDivergence {
        step: u64,
        residual: f64,
        tol: f64,
        iters: usize,
    },

    /// Damped Newton could not keep the phase field inside (-1, 1).
    #[error("separation loss at step {step}: no damped Newton step keeps |phi| < 1")]
    SeparationLoss { step: u64 },

    /// Explicit convection exceeded the configured CFL bound.
    #[error("CFL violation at step {step}: max|u| dt / h = {cfl:.3e} > {cfl_max}")]
    CflViolation { step: u64, cfl: f64, cfl_max: f64 },

    /// A field stopped being finite; the run is aborted.
    #[error("non-finite value detected at step {step} in substep '{substep}'")]
    NonFinite { step: u64, substep: &'static str },

    /// Trajectories cannot be compared (grids, times or initial data differ).
    #[error("trajectory mismatch: {0}")]
    Mismatch(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
