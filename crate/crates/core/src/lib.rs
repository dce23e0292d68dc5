//! Pseudo-spectral simulator and verification harness for a nonlocal
//! diffuse-interface model of two-phase micropolar fluids with unmatched
//! densities on the 2-torus.
//!
//! The crate is organized around the pieces of the model:
//!
//! * [`spectral`] — grids, FFTs, derivatives, Leray projection, 2D curls;
//! * [`kernel`] — scaled interaction kernels, periodic convolution and the
//!   nonlocal Ginzburg-Landau energy with its local limit;
//! * [`potential`] — the logarithmic double-well potential and its polynomial
//!   regularization;
//! * [`mixture`] — phase-dependent coefficients, chemical potential, relative
//!   flux, and the simulation state;
//! * [`stepper`] — the IMEX time integrator (Cahn-Hilliard, momentum,
//!   micro-rotation substeps);
//! * [`diagnostics`] — energy/dissipation ledgers, the energy-law residual,
//!   consistency metrics and the pressure diagnostic;
//! * [`experiments`] — packaged single runs and parameter sweeps;
//! * [`io`] — CSV and binary field-dump formats.

pub mod diagnostics;
pub mod error;
pub mod experiments;
pub mod io;
pub mod kernel;
pub mod mixture;
pub mod potential;
pub mod spectral;
pub mod stepper;

pub use error::{Error, Result};
pub use kernel::{KernelFamily, KernelSpec};
pub use mixture::{PhysParams, SimState};
pub use potential::PotentialSpec;
pub use spectral::{ScalarField, TorusGrid, VectorField2};
pub use stepper::{ChOperator, Model, SchemeConfig};

#[cfg(test)]
pub(crate) mod test_util;
