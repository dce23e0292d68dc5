//! One time step of the coupled system, split into three substeps:
//!
//! 1. `ch_step` — convective nonlocal Cahn-Hilliard update with the singular
//!    potential treated implicitly (damped Newton confined to `(-1, 1)`);
//! 2. `momentum_step` — IMEX momentum update: explicit transport, stress and
//!    forces over a constant-coefficient implicit Helmholtz solve, followed by
//!    the Leray projection;
//! 3. `microrotation_step` — same IMEX pattern for the spin field, with the
//!    stiff local damping integrated exactly by a pointwise factor.
//!
//! The substeps compose by Lie splitting (first order). Discretization
//! choices that the continuous model does not dictate — stabilization `S`,
//! splitting viscosities, frozen-density mass lumping, the 2/3 dealiasing
//! rule — live in [`SchemeConfig`] and the routines below.

use crate::error::{Error, Result};
use crate::kernel::KernelSpec;
use crate::mixture::{self, PhysParams, SimState};
use crate::potential::{check_coercivity, PotentialSpec};
use crate::spectral::{self, ScalarField, TorusGrid, VectorField2};
use ndarray::Array2;
use num_complex::Complex64;
use std::sync::Arc;

/// Time-discretization knobs. `None` entries resolve to their model-derived
/// defaults in [`Model::new`].
#[derive(Debug, Clone)]
pub struct SchemeConfig {
    /// Time step tau.
    pub dt: f64,
    /// Newton residual tolerance (discrete L2 norm of the phase equation).
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    /// Stabilization constant S added as `S (phi^{n+1} - phi^n)` in the mu
    /// update; defaults to `sigma theta_c / eps`, dominating the explicit
    /// concave part.
    pub stab_s: Option<f64>,
    /// Splitting viscosity `nu_s >= max(eta1, eta2) + eta_r` for the implicit
    /// constant-coefficient momentum diffusion.
    pub split_visc: Option<f64>,
    /// Splitting coefficient `>= c_d + c_a` for the micro-rotation diffusion.
    pub split_ang: Option<f64>,
    /// Explicit-convection guard: error if `max|u| dt / h` exceeds this.
    pub cfl_max: f64,
}

impl Default for SchemeConfig {
    fn default() -> Self {
        Self {
            dt: 2.5e-4,
            newton_tol: 1e-10,
            newton_max_iter: 50,
            stab_s: None,
            split_visc: None,
            split_ang: None,
            cfl_max: 0.5,
        }
    }
}

/// Resolved scheme constants (all defaults applied).
#[derive(Debug, Clone)]
pub struct Scheme {
    pub dt: f64,
    pub newton_tol: f64,
    pub newton_max_iter: usize,
    pub stab_s: f64,
    pub split_visc: f64,
    pub split_ang: f64,
    pub cfl_max: f64,
}

/// The linear part of the chemical potential: either the nonlocal convolution
/// operator `sigma eps (a phi - K * phi)` or its local limit
/// `-sigma eps lap(phi)`. Reference runs for the kernel-concentration
/// comparison use the same stepper with this operator swapped — there is no
/// second code path.
#[derive(Debug, Clone)]
pub enum ChOperator {
    Nonlocal(KernelSpec),
    Local,
}

/// A fully validated model: operator, potential, material parameters and
/// resolved scheme constants on a fixed grid. Construction runs every gate
/// (parameter positivity, coercivity, splitting dominance); simulations only
/// start from a `Model`.
#[derive(Debug)]
pub struct Model {
    grid: Arc<TorusGrid>,
    op: ChOperator,
    pot: PotentialSpec,
    params: PhysParams,
    scheme: Scheme,
    /// `|k|^2` from the derivative wavenumbers (so that the implicit operator
    /// composes exactly with the discrete divergence/gradient pair).
    k2: Array2<f64>,
    /// Implicit mu-operator symbol (`sigma eps a` resp. `sigma eps |k|^2`).
    d_imp: Array2<f64>,
    /// Explicit mu-operator symbol (`sigma eps K_hat` resp. `0`).
    d_exp: Array2<f64>,
}

const PHASE_BOUND: f64 = 1.0 - 1e-12;

impl Model {
    pub fn new(
        grid: Arc<TorusGrid>,
        op: ChOperator,
        pot: PotentialSpec,
        params: PhysParams,
        cfg: SchemeConfig,
    ) -> Result<Self> {
        params.validate()?;
        if params.mobility != 1.0 {
            return Err(Error::Parameter(format!(
                "the stepper runs the constant-mobility regime m = 1; got mobility = {}",
                params.mobility
            )));
        }
        if let ChOperator::Nonlocal(kernel) = &op {
            if !kernel.grid().same_grid(&grid) {
                return Err(Error::GridMismatch(
                    "kernel grid does not match model grid".into(),
                ));
            }
            check_coercivity(&pot, kernel.a_const())?;
        }
        if !(cfg.dt > 0.0 && cfg.dt.is_finite()) {
            return Err(Error::Parameter(format!("scheme.dt must be > 0, got {}", cfg.dt)));
        }
        if !(cfg.newton_tol > 0.0) || cfg.newton_max_iter == 0 {
            return Err(Error::Parameter(
                "scheme.newton_tol must be > 0 and newton_max_iter >= 1".into(),
            ));
        }
        if !(cfg.cfl_max > 0.0) {
            return Err(Error::Parameter("scheme.cfl_max must be > 0".into()));
        }
        let stab_s = cfg
            .stab_s
            .unwrap_or(params.sigma * pot.theta_c() / params.eps_int);
        if stab_s < 0.0 {
            return Err(Error::Parameter("scheme.stab_s must be >= 0".into()));
        }
        let visc_floor = params.eta_max() + params.eta_r;
        let split_visc = cfg.split_visc.unwrap_or(visc_floor);
        if split_visc < visc_floor {
            return Err(Error::Parameter(format!(
                "scheme.split_visc = {split_visc} must dominate max(eta) + eta_r = {visc_floor}"
            )));
        }
        let ang_floor = params.c_da();
        let split_ang = cfg.split_ang.unwrap_or(ang_floor);
        if split_ang < ang_floor {
            return Err(Error::Parameter(format!(
                "scheme.split_ang = {split_ang} must dominate c_d + c_a = {ang_floor}"
            )));
        }
        let scheme = Scheme {
            dt: cfg.dt,
            newton_tol: cfg.newton_tol,
            newton_max_iter: cfg.newton_max_iter,
            stab_s,
            split_visc,
            split_ang,
            cfl_max: cfg.cfl_max,
        };

        let n = grid.n();
        let half = n / 2 + 1;
        let kx = grid.k_deriv_axis0().to_vec();
        let ky = grid.k_deriv_axis1().to_vec();
        let k2 = Array2::from_shape_fn((n, half), |(i, j)| kx[i] * kx[i] + ky[j] * ky[j]);
        let se = params.sigma * params.eps_int;
        let (d_imp, d_exp) = match &op {
            ChOperator::Nonlocal(kernel) => (
                Array2::from_elem((n, half), se * kernel.a_const()),
                kernel.symbol().mapv(|v| se * v),
            ),
            ChOperator::Local => (k2.mapv(|v| se * v), Array2::zeros((n, half))),
        };

        Ok(Self {
            grid,
            op,
            pot,
            params,
            scheme,
            k2,
            d_imp,
            d_exp,
        })
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn op(&self) -> &ChOperator {
        &self.op
    }

    pub fn pot(&self) -> &PotentialSpec {
        &self.pot
    }

    pub fn params(&self) -> &PhysParams {
        &self.params
    }

    pub fn scheme(&self) -> &Scheme {
        &self.scheme
    }

    /// Chemical potential of the model's operator at `phi`.
    pub fn chemical_potential(&self, phi: &ScalarField) -> Result<ScalarField> {
        match &self.op {
            ChOperator::Nonlocal(kernel) => {
                mixture::chemical_potential(kernel, phi, &self.pot, &self.params)
            }
            ChOperator::Local => mixture::chemical_potential_local(phi, &self.pot, &self.params),
        }
    }

    /// Build a valid state from initial fields: dealias, project the velocity,
    /// verify strict separation and cache the chemical potential.
    pub fn initial_state(
        &self,
        u0: &VectorField2,
        omega0: &ScalarField,
        phi0: &ScalarField,
    ) -> Result<SimState> {
        if !u0.grid().same_grid(&self.grid)
            || !omega0.grid().same_grid(&self.grid)
            || !phi0.grid().same_grid(&self.grid)
        {
            return Err(Error::GridMismatch(
                "initial fields do not live on the model grid".into(),
            ));
        }
        if !u0.is_finite() || !omega0.is_finite() || !phi0.is_finite() {
            return Err(Error::NonFinite {
                step: 0,
                substep: "initial data",
            });
        }
        let phi = spectral::dealias(phi0);
        let max_abs = phi.max_abs();
        if max_abs >= 1.0 {
            return Err(Error::Range { max_abs });
        }
        let c1 = spectral::dealias(&ScalarField::from_values_unchecked(&self.grid, u0.u1.clone()));
        let c2 = spectral::dealias(&ScalarField::from_values_unchecked(&self.grid, u0.u2.clone()));
        let u = spectral::leray_project(&VectorField2::from_components(c1, c2)?);
        let omega = spectral::dealias(omega0);
        let mu = self.chemical_potential(&phi)?;
        Ok(SimState {
            t: 0.0,
            step: 0,
            u,
            omega,
            phi,
            mu,
        })
    }

    /// Check the state invariants: finite fields, solenoidal velocity,
    /// strict phase bound, chemical-potential consistency.
    pub fn validate_state(&self, state: &SimState) -> Result<()> {
        if !state.is_finite() {
            return Err(Error::NonFinite {
                step: state.step,
                substep: "state validation",
            });
        }
        let max_abs = state.phi.max_abs();
        if max_abs >= 1.0 {
            return Err(Error::Range { max_abs });
        }
        let div = spectral::divergence(&state.u);
        let unorm = spectral::l2_norm_vec(&state.u);
        if spectral::l2_norm(&div) > 1e-10 * unorm.max(1.0) {
            return Err(Error::Parameter(format!(
                "state velocity is not solenoidal: |div u| = {:.3e}",
                spectral::l2_norm(&div)
            )));
        }
        let mu = self.chemical_potential(&state.phi)?;
        let scale = mu.max_abs().max(1.0);
        let diff = mu.add_scaled(-1.0, &state.mu).max_abs();
        if diff > 1e-10 * scale {
            return Err(Error::Parameter(format!(
                "cached mu inconsistent with phi: max diff {diff:.3e}"
            )));
        }
        Ok(())
    }

    // ---- Cahn-Hilliard substep --------------------------------------------

    /// Advance the phase field by the implicit-explicit system
    ///
    /// ```text
    /// (phi+ - phi)/tau + u . grad phi = lap mu+,
    /// mu+ = [imp](phi+) + (sigma/eps) F1'(phi+) + S (phi+ - phi)
    ///     + [exp](phi) + (sigma/eps) F2'(phi),
    /// ```
    ///
    /// where `[imp]` is the Fourier-diagonal implicit part of the mu-operator
    /// (`sigma eps a phi` resp. `-sigma eps lap phi`) and `[exp]` the explicit
    /// remainder (`-sigma eps K * phi` resp. `0`). Newton iteration on `phi+`
    /// keeps iterates strictly inside `(-1, 1)` by step halving; the linear
    /// systems are solved by a Fourier-preconditioned fixed-point iteration
    /// whose contraction is guaranteed by midpoint centering of the pointwise
    /// Jacobian weight.
    ///
    /// The update is in divergence form, so the mean of `phi` is conserved;
    /// it is pinned to the exact target on every iterate so that solver
    /// tolerances cannot leak into the mass ledger.
    ///
    /// Returns `(phi+, mu+)` where `mu+` is the chemical potential evaluated
    /// at `phi+` (the cached-consistency invariant of [`SimState`]).
    pub fn ch_step(&self, state: &SimState) -> Result<(ScalarField, ScalarField)> {
        let grid = &self.grid;
        let tau = self.scheme.dt;
        let soe = self.params.sigma / self.params.eps_int;
        let s_stab = self.scheme.stab_s;
        let step = state.step;

        let mut phi_n_hat = spectral::forward(grid, &state.phi.values);
        spectral::mask_spectrum(grid, &mut phi_n_hat);

        // Explicit transport u . grad phi (dealiased product).
        let gp1 = spectral::inverse(grid, &spectral::deriv_spectrum(grid, &phi_n_hat, 0));
        let gp2 = spectral::inverse(grid, &spectral::deriv_spectrum(grid, &phi_n_hat, 1));
        let mut transport = gp1;
        for ((t, g2), (u1, u2)) in transport
            .iter_mut()
            .zip(gp2.iter())
            .zip(state.u.u1.iter().zip(state.u.u2.iter()))
        {
            *t = u1 * *t + u2 * g2;
        }
        let mean_transport = spectral::kahan_sum(transport.iter().copied()) / transport.len() as f64;
        let mut t_hat = spectral::forward(grid, &transport);
        spectral::mask_spectrum(grid, &mut t_hat);

        // Mean target: the divergence-form update conserves mass up to the
        // (roundoff-sized) mean of the transport term.
        let m_star = spectral::mean(&state.phi) - tau * mean_transport;

        // Explicit part of mu: -[exp](phi^n) + (sigma/eps) F2'(phi^n) - S phi^n.
        let mut f2_part = state.phi.values.clone();
        f2_part.mapv_inplace(|p| soe * (-self.pot.theta_c() * p) - s_stab * p);
        let mut g_exp_hat = spectral::forward(grid, &f2_part);
        spectral::mask_spectrum(grid, &mut g_exp_hat);
        for ((i, j), v) in g_exp_hat.indexed_iter_mut() {
            *v -= self.d_exp[(i, j)] * phi_n_hat[(i, j)];
        }

        // Constant (through Newton) part of the update: phi^n - tau * transport.
        let mut rhs_hat = phi_n_hat.clone();
        rhs_hat.zip_mut_with(&t_hat, |v, t| *v -= tau * t);

        let l2_of = |spec: &Array2<Complex64>| -> f64 {
            // Parseval over the half spectrum: double the interior columns.
            let n = grid.n();
            let half = n / 2 + 1;
            let mut acc = 0.0;
            for ((_, j), v) in spec.indexed_iter() {
                let w = if j == 0 || j == half - 1 { 1.0 } else { 2.0 };
                acc += w * v.norm_sqr();
            }
            (acc * grid.length() * grid.length()).sqrt() / (n * n) as f64
        };

        let mut phi = state.phi.clone();
        let mut phi_hat = phi_n_hat.clone();
        let mut converged = false;
        let mut last_res = f64::INFINITY;

        for iter in 0..=self.scheme.newton_max_iter {
            // Residual G(phi) in spectral space.
            let mut w_nl = phi.values.clone();
            for v in w_nl.iter_mut() {
                *v = soe * self.pot.d_f1(*v)?;
            }
            let mut w_hat = spectral::forward(grid, &w_nl);
            spectral::mask_spectrum(grid, &mut w_hat);

            let mut g_hat = phi_hat.clone();
            for ((i, j), g) in g_hat.indexed_iter_mut() {
                let mu_eff = (self.d_imp[(i, j)] + s_stab) * phi_hat[(i, j)]
                    + w_hat[(i, j)]
                    + g_exp_hat[(i, j)];
                *g = phi_hat[(i, j)] - rhs_hat[(i, j)] + tau * self.k2[(i, j)] * mu_eff;
            }
            let res = l2_of(&g_hat);
            last_res = res;
            if res <= self.scheme.newton_tol {
                converged = true;
                break;
            }
            if iter == self.scheme.newton_max_iter {
                break;
            }

            // Pointwise Jacobian weight W = (sigma/eps) F1''(phi).
            let mut w_pt = phi.values.clone();
            for v in w_pt.iter_mut() {
                *v = soe * self.pot.dd_f1(*v)?;
            }
            let (mut wmin, mut wmax) = (f64::INFINITY, f64::NEG_INFINITY);
            for v in w_pt.iter() {
                wmin = wmin.min(*v);
                wmax = wmax.max(*v);
            }
            let wmid = 0.5 * (wmin + wmax);

            // Preconditioner L = 1 + tau k^2 (d_imp + S + wmid); the iteration
            // matrix is L^{-1} tau k^2 (W - wmid), a contraction since
            // |W - wmid| <= (wmax - wmin)/2 < d_imp_min + S + wmid.
            let precond = |spec: &mut Array2<Complex64>| {
                for ((i, j), v) in spec.indexed_iter_mut() {
                    *v /= 1.0 + tau * self.k2[(i, j)] * (self.d_imp[(i, j)] + s_stab + wmid);
                }
            };

            let mut delta_hat = g_hat.mapv(|v| -v);
            precond(&mut delta_hat);
            let rhs_norm = res.max(1e-300);
            let mut delta = spectral::inverse(grid, &delta_hat);
            for _inner in 0..200 {
                // inner residual r = -G - J delta
                let mut wd = delta.clone();
                wd.zip_mut_with(&w_pt, |d, w| *d *= w);
                let mut wd_hat = spectral::forward(grid, &wd);
                spectral::mask_spectrum(grid, &mut wd_hat);
                let mut r_hat = g_hat.clone();
                for ((i, j), r) in r_hat.indexed_iter_mut() {
                    let jd = delta_hat[(i, j)]
                        * (1.0 + tau * self.k2[(i, j)] * (self.d_imp[(i, j)] + s_stab))
                        + tau * self.k2[(i, j)] * wd_hat[(i, j)];
                    *r = -*r - jd;
                }
                if l2_of(&r_hat) <= 1e-13 * rhs_norm {
                    break;
                }
                precond(&mut r_hat);
                delta_hat.zip_mut_with(&r_hat, |d, r| *d += *r);
                delta = spectral::inverse(grid, &delta_hat);
            }

            // Damped update: halve until strictly inside (-1, 1).
            let mut alpha = 1.0;
            loop {
                let trial = phi.add_scaled(alpha, &ScalarField::from_values_unchecked(grid, delta.clone()));
                if trial.max_abs() <= PHASE_BOUND {
                    phi = trial;
                    break;
                }
                alpha *= 0.5;
                if alpha < 1e-8 {
                    return Err(Error::SeparationLoss { step });
                }
            }
            // Pin the mean so solver tolerance cannot drift the mass ledger.
            let shift = m_star - spectral::mean(&phi);
            phi.values.mapv_inplace(|v| v + shift);
            phi_hat = spectral::forward(grid, &phi.values);
            spectral::mask_spectrum(grid, &mut phi_hat);
        }

        if !converged {
            return Err(Error::NewtonDivergence {
                step,
                residual: last_res,
                tol: self.scheme.newton_tol,
                iters: self.scheme.newton_max_iter,
            });
        }

        // Re-pin after the final (possibly zero-iteration) exit.
        let shift = m_star - spectral::mean(&phi);
        if shift != 0.0 {
            phi.values.mapv_inplace(|v| v + shift);
        }
        if !phi.is_finite() {
            return Err(Error::NonFinite {
                step,
                substep: "ch_step",
            });
        }
        let mu = self.chemical_potential(&phi)?;
        Ok((phi, mu))
    }

    // ---- momentum substep --------------------------------------------------

    /// Total momentum force density (everything on the right-hand side of the
    /// velocity equation except `-grad p`), evaluated pointwise:
    /// `-rho (u.grad) u + rho' (grad mu . grad) u + div(2 eta D u + 2 eta_r W u)
    ///  + mu grad phi + 2 eta_r curl1 omega`.
    ///
    /// Shared between the stepper (with mixed time levels) and the pressure
    /// diagnostic (with a single state).
    pub(crate) fn momentum_rhs(
        &self,
        u: &VectorField2,
        omega: &ScalarField,
        phi_coeff: &ScalarField,
        mu_force: &ScalarField,
        phi_force: &ScalarField,
    ) -> Result<(Array2<f64>, Array2<f64>)> {
        let grid = &self.grid;
        let p = &self.params;
        let rho = mixture::density(phi_coeff, p)?;
        let eta = mixture::coeff(phi_coeff, p.eta1, p.eta2);
        let eta_r = p.eta_r;

        let jac = spectral::jacobian(u);
        let grad_mu = spectral::grad(mu_force);
        let grad_phi = spectral::grad(phi_force);
        let curl1_om = spectral::curl1(omega);

        // Stress sigma_{ij} = 2 eta D_{ij} + 2 eta_r W_{ij} assembled from the
        // velocity gradient: D12 = (g12 + g21)/2, W12 = (g12 - g21)/2.
        let n = grid.n();
        let mut s11 = Array2::<f64>::zeros((n, n));
        let mut s12 = Array2::<f64>::zeros((n, n));
        let mut s21 = Array2::<f64>::zeros((n, n));
        let mut s22 = Array2::<f64>::zeros((n, n));
        for (idx, e) in eta.values.indexed_iter() {
            let (g11, g12, g21, g22) = (jac.xx[idx], jac.xy[idx], jac.yx[idx], jac.yy[idx]);
            let d12 = 0.5 * (g12 + g21);
            let w12 = 0.5 * (g12 - g21);
            s11[idx] = 2.0 * e * g11;
            s22[idx] = 2.0 * e * g22;
            s12[idx] = 2.0 * e * d12 + 2.0 * eta_r * w12;
            s21[idx] = 2.0 * e * d12 - 2.0 * eta_r * w12;
        }
        let div_sigma = {
            let mut sh11 = spectral::forward(grid, &s11);
            let mut sh12 = spectral::forward(grid, &s12);
            let mut sh21 = spectral::forward(grid, &s21);
            let mut sh22 = spectral::forward(grid, &s22);
            for sh in [&mut sh11, &mut sh12, &mut sh21, &mut sh22] {
                spectral::mask_spectrum(grid, sh);
            }
            let kx = grid.k_deriv_axis0().to_vec();
            let ky = grid.k_deriv_axis1().to_vec();
            let mut f1 = sh11;
            for ((i, j), v) in f1.indexed_iter_mut() {
                *v = Complex64::new(0.0, kx[i]) * *v + Complex64::new(0.0, ky[j]) * sh21[(i, j)];
            }
            let mut f2 = sh22;
            for ((i, j), v) in f2.indexed_iter_mut() {
                *v = Complex64::new(0.0, kx[i]) * sh12[(i, j)] + Complex64::new(0.0, ky[j]) * *v;
            }
            (
                spectral::inverse(grid, &f1),
                spectral::inverse(grid, &f2),
            )
        };

        let rho_prime = p.rho_prime();
        let mut f1 = div_sigma.0;
        let mut f2 = div_sigma.1;
        for (idx, v) in f1.indexed_iter_mut() {
            let conv = rho.values[idx] * (u.u1[idx] * jac.xx[idx] + u.u2[idx] * jac.yx[idx]);
            let flux = rho_prime * (grad_mu.u1[idx] * jac.xx[idx] + grad_mu.u2[idx] * jac.yx[idx]);
            let capillary = mu_force.values[idx] * grad_phi.u1[idx];
            *v += -conv + flux + capillary + 2.0 * eta_r * curl1_om.u1[idx];
        }
        for (idx, v) in f2.indexed_iter_mut() {
            let conv = rho.values[idx] * (u.u1[idx] * jac.xy[idx] + u.u2[idx] * jac.yy[idx]);
            let flux = rho_prime * (grad_mu.u1[idx] * jac.xy[idx] + grad_mu.u2[idx] * jac.yy[idx]);
            let capillary = mu_force.values[idx] * grad_phi.u2[idx];
            *v += -conv + flux + capillary + 2.0 * eta_r * curl1_om.u2[idx];
        }
        Ok((f1, f2))
    }

    /// IMEX momentum update. Coefficients (`rho`, `eta`) are frozen at the
    /// pre-step phase field; the capillary force and the relative-flux
    /// transport use the fresh `(phi+, mu+)` pair from [`Model::ch_step`].
    /// A constant kinematic splitting viscosity `nu_s / rho_min` is subtracted
    /// explicitly and solved implicitly, and the Leray projection is applied
    /// last, so the returned velocity is solenoidal to roundoff.
    pub fn momentum_step(
        &self,
        state: &SimState,
        phi_next: &ScalarField,
        mu_next: &ScalarField,
    ) -> Result<VectorField2> {
        let grid = &self.grid;
        let tau = self.scheme.dt;
        let step = state.step;

        let cfl = state.u.max_abs() * tau / grid.spacing();
        if cfl > self.scheme.cfl_max {
            return Err(Error::CflViolation {
                step,
                cfl,
                cfl_max: self.scheme.cfl_max,
            });
        }

        let (rhs1, rhs2) = self.momentum_rhs(&state.u, &state.omega, &state.phi, mu_next, phi_next)?;
        let rho = mixture::density(&state.phi, &self.params)?;
        let nu_hat = self.scheme.split_visc / self.params.rho_min();

        // Explicit split correction -nu_hat lap(u).
        let mut u1_hat = spectral::forward(grid, &state.u.u1);
        let mut u2_hat = spectral::forward(grid, &state.u.u2);
        spectral::mask_spectrum(grid, &mut u1_hat);
        spectral::mask_spectrum(grid, &mut u2_hat);
        let lap_u1 = {
            let mut s = u1_hat.clone();
            spectral::apply_laplacian_symbol(grid, &mut s);
            spectral::inverse(grid, &s)
        };
        let lap_u2 = {
            let mut s = u2_hat.clone();
            spectral::apply_laplacian_symbol(grid, &mut s);
            spectral::inverse(grid, &s)
        };

        let mut util1 = state.u.u1.clone();
        let mut util2 = state.u.u2.clone();
        for (idx, v) in util1.indexed_iter_mut() {
            *v += tau * (rhs1[idx] / rho.values[idx] - nu_hat * lap_u1[idx]);
        }
        for (idx, v) in util2.indexed_iter_mut() {
            *v += tau * (rhs2[idx] / rho.values[idx] - nu_hat * lap_u2[idx]);
        }

        // Implicit Helmholtz solve + projection, in one spectral pass.
        let mut s1 = spectral::forward(grid, &util1);
        let mut s2 = spectral::forward(grid, &util2);
        spectral::mask_spectrum(grid, &mut s1);
        spectral::mask_spectrum(grid, &mut s2);
        for ((i, j), v) in s1.indexed_iter_mut() {
            *v /= 1.0 + tau * nu_hat * self.k2[(i, j)];
        }
        for ((i, j), v) in s2.indexed_iter_mut() {
            *v /= 1.0 + tau * nu_hat * self.k2[(i, j)];
        }
        spectral::project_spectra(grid, &mut s1, &mut s2);
        let u_next = VectorField2::from_components(
            ScalarField::from_values_unchecked(grid, spectral::inverse(grid, &s1)),
            ScalarField::from_values_unchecked(grid, spectral::inverse(grid, &s2)),
        )?;
        if !u_next.is_finite() {
            return Err(Error::NonFinite {
                step,
                substep: "momentum_step",
            });
        }
        Ok(u_next)
    }

    // ---- micro-rotation substep ---------------------------------------------

    /// IMEX spin update: explicit transport/flux/coupling (the couple uses the
    /// fresh `curl2 u+`), implicit constant-split diffusion, and the stiff
    /// pointwise damping `-4 eta_r omega / rho` integrated exactly:
    ///
    /// ```text
    /// omega~ = e^{-lambda tau} omega + tau phi1(lambda tau) s,   lambda = 4 eta_r / rho
    /// ```
    ///
    /// with `phi1(z) = (1 - e^{-z}) / z` and `s` the assembled source.
    pub fn microrotation_step(
        &self,
        state: &SimState,
        mu_next: &ScalarField,
        u_next: &VectorField2,
    ) -> Result<ScalarField> {
        let grid = &self.grid;
        let tau = self.scheme.dt;
        let p = &self.params;
        let step = state.step;

        let rho = mixture::density(&state.phi, p)?;
        let c_da = p.c_da();
        let c_hat = self.scheme.split_ang / p.rho_min();

        let mut om_hat = spectral::forward(grid, &state.omega.values);
        spectral::mask_spectrum(grid, &mut om_hat);
        let g1 = spectral::inverse(grid, &spectral::deriv_spectrum(grid, &om_hat, 0));
        let g2 = spectral::inverse(grid, &spectral::deriv_spectrum(grid, &om_hat, 1));
        let lap_om = {
            let mut s = om_hat.clone();
            spectral::apply_laplacian_symbol(grid, &mut s);
            spectral::inverse(grid, &s)
        };
        let grad_mu = spectral::grad(mu_next);
        let curl_u = spectral::curl2(u_next);
        let rho_prime = p.rho_prime();

        let mut omega_tilde = state.omega.values.clone();
        for (idx, w) in omega_tilde.indexed_iter_mut() {
            let r = rho.values[idx];
            let transport = u_next.u1[idx] * g1[idx] + u_next.u2[idx] * g2[idx];
            let flux = rho_prime * (grad_mu.u1[idx] * g1[idx] + grad_mu.u2[idx] * g2[idx]);
            let source = (c_da * lap_om[idx] + flux + 2.0 * p.eta_r * curl_u.values[idx]) / r
                - transport
                - c_hat * lap_om[idx];
            let z = 4.0 * p.eta_r * tau / r;
            let decay = (-z).exp();
            let phi1 = if z.abs() < 1e-8 {
                1.0 - 0.5 * z
            } else {
                -(-z).exp_m1() / z
            };
            *w = decay * *w + tau * phi1 * source;
        }

        let mut s = spectral::forward(grid, &omega_tilde);
        spectral::mask_spectrum(grid, &mut s);
        for ((i, j), v) in s.indexed_iter_mut() {
            *v /= 1.0 + tau * c_hat * self.k2[(i, j)];
        }
        let omega_next = ScalarField::from_values_unchecked(grid, spectral::inverse(grid, &s));
        if !omega_next.is_finite() {
            return Err(Error::NonFinite {
                step,
                substep: "microrotation_step",
            });
        }
        Ok(omega_next)
    }

    /// One full Lie-split step: phase, momentum, micro-rotation, in that
    /// order. Deterministic: identical inputs give bit-identical outputs.
    pub fn full_step(&self, state: &SimState) -> Result<SimState> {
        let (phi_next, mu_next) = self.ch_step(state)?;
        let u_next = self.momentum_step(state, &phi_next, &mu_next)?;
        let omega_next = self.microrotation_step(state, &mu_next, &u_next)?;
        Ok(SimState {
            t: state.t + self.scheme.dt,
            step: state.step + 1,
            u: u_next,
            omega: omega_next,
            phi: phi_next,
            mu: mu_next,
        })
    }
}

#[cfg(test)]
mod tests;
