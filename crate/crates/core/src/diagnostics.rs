//! Conserved/dissipated quantities and the structural checks built on them:
//! the energy/dissipation ledger, the discrete energy-law residual, the
//! consistency metric between trajectories, and the pressure diagnostic.

use crate::error::{Error, Result};
use crate::kernel;
use crate::mixture::{self, SimState};
use crate::spectral::{self, ScalarField, VectorField2};
use crate::stepper::{ChOperator, Model};

/// Energy and dissipation ledger of one state.
///
/// `e_total` is the Lyapunov functional of the model,
/// `int rho (|u|^2 + |omega|^2)/2 + sigma eps e(phi) + (sigma/eps) int F(phi)`;
/// `d_total` the dissipation functional
/// `int |grad mu|^2 + 2 eta |D u|^2 + 4 eta_r |curl2 u / 2 - omega|^2
///  + c_da |grad omega|^2`. For the local-operator reference model the
/// gradient (Dirichlet) energy replaces `e(phi)`, so the same ledger applies
/// to the limit runs.
#[derive(Debug, Clone)]
pub struct EnergyReport {
    pub t: f64,
    pub step: u64,
    pub e_kinetic: f64,
    pub e_rotation: f64,
    pub e_nonlocal: f64,
    pub e_potential: f64,
    pub e_total: f64,
    pub d_mu: f64,
    pub d_visc: f64,
    pub d_curl: f64,
    pub d_ang: f64,
    pub d_total: f64,
    pub mass: f64,
    pub phi_max: f64,
}

impl EnergyReport {
    pub const CSV_HEADER: &'static str = "t,step,e_kinetic,e_rotation,e_nonlocal,e_potential,e_total,d_mu,d_visc,d_curl,d_ang,d_total,mass,phi_max";
}

/// Evaluate the full ledger by spectral quadrature.
pub fn energy_report(model: &Model, state: &SimState) -> Result<EnergyReport> {
    let p = model.params();
    let grid = model.grid();
    let cell = grid.cell_area();
    let rho = mixture::density(&state.phi, p)?;

    let kin = spectral::kahan_sum(
        rho.values
            .iter()
            .zip(state.u.u1.iter().zip(state.u.u2.iter()))
            .map(|(r, (a, b))| 0.5 * r * (a * a + b * b)),
    ) * cell;
    let rot = spectral::kahan_sum(
        rho.values
            .iter()
            .zip(state.omega.values.iter())
            .map(|(r, w)| 0.5 * r * w * w),
    ) * cell;

    let se = p.sigma * p.eps_int;
    let e_nonlocal = se
        * match model.op() {
            ChOperator::Nonlocal(k) => kernel::nonlocal_energy(k, &state.phi)?,
            ChOperator::Local => kernel::local_energy(&state.phi),
        };
    let e_potential = {
        let f = model.pot().f_field(&state.phi)?;
        p.sigma / p.eps_int * spectral::integral(&f)
    };

    let grad_mu = spectral::grad(&state.mu);
    let d_mu = p.mobility * spectral::l2_norm_sq_vec(&grad_mu);

    let eta = mixture::coeff(&state.phi, p.eta1, p.eta2);
    let (d, _) = spectral::strain_tensors(&state.u);
    let d_visc = spectral::kahan_sum(eta.values.iter().zip(
        d.xx.iter()
            .zip(d.yy.iter())
            .zip(d.xy.iter().zip(d.yx.iter())),
    ).map(|(e, ((dxx, dyy), (dxy, dyx)))| {
        2.0 * e * (dxx * dxx + dyy * dyy + dxy * dxy + dyx * dyx)
    })) * cell;

    // Completed-square spin-coupling dissipation, matching the planar curl
    // identity form.
    let curl_u = spectral::curl2(&state.u);
    let d_curl = spectral::kahan_sum(
        curl_u
            .values
            .iter()
            .zip(state.omega.values.iter())
            .map(|(c, w)| {
                let q = 0.5 * c - w;
                4.0 * p.eta_r * q * q
            }),
    ) * cell;

    let grad_om = spectral::grad(&state.omega);
    let d_ang = p.c_da() * spectral::l2_norm_sq_vec(&grad_om);

    Ok(EnergyReport {
        t: state.t,
        step: state.step,
        e_kinetic: kin,
        e_rotation: rot,
        e_nonlocal,
        e_potential,
        e_total: kin + rot + e_nonlocal + e_potential,
        d_mu,
        d_visc,
        d_curl,
        d_ang,
        d_total: d_mu + d_visc + d_curl + d_ang,
        mass: spectral::mean(&state.phi),
        phi_max: state.phi.max_abs(),
    })
}

/// Per-interval residual of the discrete energy law,
/// `r_n = (E^{n+1} - E^n) / dt + D^{n+1}`, from consecutive ledger rows.
/// The continuous law makes this nonpositive; the first-order scheme leaves
/// an `O(tau)` remainder that the acceptance harness checks by step halving.
pub fn energy_law_residual(reports: &[EnergyReport]) -> Vec<f64> {
    reports
        .windows(2)
        .map(|w| {
            let dt = w[1].t - w[0].t;
            (w[1].e_total - w[0].e_total) / dt + w[1].d_total
        })
        .collect()
}

/// Field snapshot of a trajectory (what the consistency metric consumes).
#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    pub step: u64,
    pub u: VectorField2,
    pub omega: ScalarField,
    pub phi: ScalarField,
}

impl Snapshot {
    pub fn of(state: &SimState) -> Self {
        Self {
            t: state.t,
            step: state.step,
            u: state.u.clone(),
            omega: state.omega.clone(),
            phi: state.phi.clone(),
        }
    }
}

/// Consistency metric between a micropolar run and a nonpolar reference:
/// `sup_t ( ||u_w - u_ref||^2 + ||omega_w||^2 + ||phi_w - phi_ref||^2 )`
/// over the shared snapshot times (discrete L2 norms; the sup over
/// continuous time is approximated by the max over stored snapshots).
pub fn consistency_metric(run_w: &[Snapshot], run_ref: &[Snapshot]) -> Result<f64> {
    if run_w.len() != run_ref.len() || run_w.is_empty() {
        return Err(Error::Mismatch(format!(
            "snapshot counts differ ({} vs {})",
            run_w.len(),
            run_ref.len()
        )));
    }
    let mut worst = 0.0f64;
    for (a, b) in run_w.iter().zip(run_ref.iter()) {
        if !a.phi.grid().same_grid(b.phi.grid()) {
            return Err(Error::Mismatch("snapshots on different grids".into()));
        }
        if (a.t - b.t).abs() > 1e-12 * (1.0 + a.t.abs()) {
            return Err(Error::Mismatch(format!(
                "snapshot times differ: {} vs {}",
                a.t, b.t
            )));
        }
        let du = a.u.add_scaled(-1.0, &b.u);
        let dphi = a.phi.add_scaled(-1.0, &b.phi);
        let m = spectral::l2_norm_sq_vec(&du)
            + spectral::l2_norm_sq(&a.omega)
            + spectral::l2_norm_sq(&dphi);
        worst = worst.max(m);
    }
    Ok(worst)
}

/// Pressure recovered from the projection residual: the mean-free `p` with
/// `grad p` equal to the non-solenoidal part of the momentum right-hand side
/// (all forces, no `-grad p` term), i.e. `lap p = div F`.
pub fn pressure_diagnostic(model: &Model, state: &SimState) -> Result<ScalarField> {
    let (f1, f2) = model.momentum_rhs(&state.u, &state.omega, &state.phi, &state.mu, &state.phi)?;
    let grid = model.grid();
    let mut s1 = spectral::forward(grid, &f1);
    let mut s2 = spectral::forward(grid, &f2);
    spectral::mask_spectrum(grid, &mut s1);
    spectral::mask_spectrum(grid, &mut s2);
    let kx = grid.k_deriv_axis0().to_vec();
    let ky = grid.k_deriv_axis1().to_vec();
    let mut p_hat = s1;
    for ((i, j), v) in p_hat.indexed_iter_mut() {
        let k2 = kx[i] * kx[i] + ky[j] * ky[j];
        if k2 == 0.0 {
            *v = num_complex::Complex64::default();
        } else {
            // p_hat = (i k . F_hat) / (-k^2)
            let div = num_complex::Complex64::new(0.0, kx[i]) * *v
                + num_complex::Complex64::new(0.0, ky[j]) * s2[(i, j)];
            *v = -div / k2;
        }
    }
    Ok(ScalarField::from_values_unchecked(
        grid,
        spectral::inverse(grid, &p_hat),
    ))
}
