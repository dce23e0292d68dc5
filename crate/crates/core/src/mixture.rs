//! Phase-dependent material coefficients, the nonlocal chemical potential and
//! the relative flux: the algebraic layer between the phase field and the PDE
//! right-hand sides.

use crate::error::{Error, Result};
use crate::kernel::{convolve, KernelSpec};
use crate::potential::PotentialSpec;
use crate::spectral::{self, ScalarField, VectorField2};

/// Constituent material parameters.
///
/// `c0` is retained for configuration fidelity with the three-dimensional
/// model but never enters the dynamics: the term it multiplies drops out in
/// the planar reduction. `eta_r` is a constant scalar here; the
/// phase-interpolated variant stays available through [`coeff`] but is not
/// wired into the stepper.
#[derive(Debug, Clone)]
pub struct PhysParams {
    pub rho1: f64,
    pub rho2: f64,
    pub eta1: f64,
    pub eta2: f64,
    /// Dynamic micro-rotation viscosity (>= 0; zero gives a nonpolar fluid).
    pub eta_r: f64,
    pub c_d: f64,
    pub c_a: f64,
    /// Unused in 2D (see type docs).
    pub c0: f64,
    /// Mobility; the strong-solution regime fixes m = 1 and the stepper
    /// requires exactly that.
    pub mobility: f64,
    /// Surface tension sigma.
    pub sigma: f64,
    /// Interface thickness parameter epsilon.
    pub eps_int: f64,
}

impl Default for PhysParams {
    fn default() -> Self {
        Self {
            rho1: 1.0,
            rho2: 1.0,
            eta1: 1.0,
            eta2: 1.0,
            eta_r: 0.0,
            c_d: 0.5,
            c_a: 0.5,
            c0: 1.0,
            mobility: 1.0,
            sigma: 1.0,
            eps_int: 1.0,
        }
    }
}

impl PhysParams {
    pub fn validate(&self) -> Result<()> {
        let positives = [
            ("rho1", self.rho1),
            ("rho2", self.rho2),
            ("eta1", self.eta1),
            ("eta2", self.eta2),
            ("c_d", self.c_d),
            ("c_a", self.c_a),
            ("c0", self.c0),
            ("mobility", self.mobility),
            ("sigma", self.sigma),
            ("eps_int", self.eps_int),
        ];
        for (name, v) in positives {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!(
                    "physics.{name} must be strictly positive, got {v}"
                )));
            }
        }
        if !(self.eta_r >= 0.0 && self.eta_r.is_finite()) {
            return Err(Error::Parameter(format!(
                "physics.eta_r must be >= 0, got {}",
                self.eta_r
            )));
        }
        Ok(())
    }

    pub fn rho_min(&self) -> f64 {
        self.rho1.min(self.rho2)
    }

    pub fn rho_mean(&self) -> f64 {
        0.5 * (self.rho1 + self.rho2)
    }

    /// `rho'(phi) = (rho1 - rho2) / 2`, constant for the affine law.
    pub fn rho_prime(&self) -> f64 {
        0.5 * (self.rho1 - self.rho2)
    }

    /// Combined angular viscosity `c_{d,a} = c_d + c_a` (the only combination
    /// entering the planar equations).
    pub fn c_da(&self) -> f64 {
        self.c_d + self.c_a
    }

    pub fn eta_max(&self) -> f64 {
        self.eta1.max(self.eta2)
    }
}

/// Affine density `rho(phi) = (rho1 + rho2)/2 + (rho1 - rho2)/2 phi`.
/// Rejects `|phi| > 1` anywhere: that is an invariant breach upstream.
pub fn density(phi: &ScalarField, params: &PhysParams) -> Result<ScalarField> {
    let max_abs = phi.max_abs();
    if max_abs > 1.0 {
        return Err(Error::Range { max_abs });
    }
    let mid = params.rho_mean();
    let slope = params.rho_prime();
    let mut out = phi.clone();
    out.values.mapv_inplace(|p| mid + slope * p);
    Ok(out)
}

/// Shared affine interpolator for phase-dependent coefficients, clamped to
/// `[min(f1, f2), max(f1, f2)]` so roundoff excursions of `phi` outside
/// `[-1, 1]` cannot extrapolate.
pub fn coeff(phi: &ScalarField, f1: f64, f2: f64) -> ScalarField {
    let mid = 0.5 * (f1 + f2);
    let slope = 0.5 * (f1 - f2);
    let (lo, hi) = (f1.min(f2), f1.max(f2));
    let mut out = phi.clone();
    out.values
        .mapv_inplace(|p| (mid + slope * p).clamp(lo, hi));
    out
}

/// Nonlocal chemical potential
/// `mu = sigma eps (a phi - K * phi) + (sigma / eps) F'(phi)`,
/// dealiased like every other nonlinear evaluation of the discretization.
pub fn chemical_potential(
    kernel: &KernelSpec,
    phi: &ScalarField,
    pot: &PotentialSpec,
    params: &PhysParams,
) -> Result<ScalarField> {
    let kphi = convolve(kernel, phi)?;
    let se = params.sigma * params.eps_int;
    let soe = params.sigma / params.eps_int;
    let mut out = phi.clone();
    for ((v, p), kp) in out
        .values
        .iter_mut()
        .zip(phi.values.iter())
        .zip(kphi.values.iter())
    {
        *v = se * (kernel.a_const() * p - kp) + soe * pot.d_f(*p)?;
    }
    Ok(spectral::dealias(&out))
}

/// Local-limit chemical potential
/// `mu = -sigma eps lap(phi) + (sigma / eps) F'(phi)`; the reference model of
/// the kernel-concentration comparisons, evaluated by the same code path with
/// the convolution operator swapped for the spectral Laplacian.
pub fn chemical_potential_local(
    phi: &ScalarField,
    pot: &PotentialSpec,
    params: &PhysParams,
) -> Result<ScalarField> {
    let lap = spectral::laplacian(phi);
    let se = params.sigma * params.eps_int;
    let soe = params.sigma / params.eps_int;
    let mut out = phi.clone();
    for (v, l) in out.values.iter_mut().zip(lap.values.iter()) {
        *v = -se * l + soe * pot.d_f(*v)?;
    }
    Ok(spectral::dealias(&out))
}

/// Relative flux `J = -rho'(phi) m nabla mu` (m = 1), the extra transport
/// mechanism of the volume-averaged-velocity formulation.
pub fn relative_flux(mu: &ScalarField, params: &PhysParams) -> VectorField2 {
    let mut g = spectral::grad(mu);
    let c = -params.rho_prime() * params.mobility;
    g.u1.mapv_inplace(|v| c * v);
    g.u2.mapv_inplace(|v| c * v);
    g
}

/// The evolving `(u, omega, phi, mu, t)` tuple.
///
/// Invariants (checked by the stepper at construction and re-established
/// after every accepted step): `u` divergence-free to roundoff,
/// `max|phi| < 1` strictly, and `mu` consistent with `phi` through the
/// model's chemical potential.
#[derive(Debug, Clone)]
pub struct SimState {
    pub t: f64,
    pub step: u64,
    pub u: VectorField2,
    pub omega: ScalarField,
    pub phi: ScalarField,
    pub mu: ScalarField,
}

impl SimState {
    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.omega.is_finite() && self.phi.is_finite() && self.mu.is_finite()
    }

    /// Positive separation gap `1 - max|phi|`.
    pub fn separation_gap(&self) -> f64 {
        1.0 - self.phi.max_abs()
    }
}
