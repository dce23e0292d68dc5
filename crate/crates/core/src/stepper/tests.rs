use super::*;
use crate::kernel::{build_kernel, KernelFamily};
use crate::spectral::{divergence, l2_norm, l2_norm_vec, mean};
use crate::test_util::{max_abs_diff, rng};
use ndarray::Array2;
use rand::Rng;
use std::f64::consts::PI;

const TAU2: f64 = 2.0 * PI;

fn pot() -> PotentialSpec {
    PotentialSpec::new(0.8, 1.0).unwrap()
}

fn nonlocal_model(
    n: usize,
    length: f64,
    kappa: f64,
    params: PhysParams,
    cfg: SchemeConfig,
) -> Model {
    let grid = TorusGrid::new(n, length).unwrap();
    let kernel = build_kernel(&KernelFamily::Disk, kappa, &grid).unwrap();
    Model::new(grid, ChOperator::Nonlocal(kernel), pot(), params, cfg).unwrap()
}

fn quiescent_state(model: &Model, phi_const: f64) -> SimState {
    let grid = model.grid();
    model
        .initial_state(
            &VectorField2::zeros(grid),
            &ScalarField::zeros(grid),
            &ScalarField::constant(grid, phi_const),
        )
        .unwrap()
}

/// Band-limited random state that satisfies all invariants.
fn smooth_state_with_cutoff(
    model: &Model,
    seed: u64,
    phi_amp: f64,
    u_amp: f64,
    om_amp: f64,
    cutoff: usize,
) -> SimState {
    let grid = model.grid();
    let n = grid.n();
    let mut r = rng(seed);
    let mut mk = |amp: f64| {
        let mut f = ScalarField::from_values_unchecked(
            grid,
            Array2::from_shape_fn((n, n), |_| r.random_range(-1.0..1.0)),
        );
        // keep only the lowest modes: smooth fields
        let mut spec = crate::spectral::forward(grid, &f.values);
        for ((i, j), v) in spec.indexed_iter_mut() {
            let m1 = if i <= n / 2 { i } else { n - i };
            if m1 > cutoff || j > cutoff {
                *v = num_complex::Complex64::default();
            }
        }
        f.values = crate::spectral::inverse(grid, &spec);
        let max = f.max_abs().max(1e-12);
        f.values.mapv_inplace(|v| amp * v / max);
        f
    };
    let phi0 = mk(phi_amp);
    let u0 = VectorField2::from_components(mk(u_amp), mk(u_amp)).unwrap();
    let om0 = mk(om_amp);
    model.initial_state(&u0, &om0, &phi0).unwrap()
}

fn smooth_state(model: &Model, seed: u64, phi_amp: f64, u_amp: f64, om_amp: f64) -> SimState {
    smooth_state_with_cutoff(model, seed, phi_amp, u_amp, om_amp, 3)
}

#[test]
fn model_gates() {
    let grid = TorusGrid::new(32, 1.0).unwrap();
    let kernel = build_kernel(&KernelFamily::Disk, 0.25, &grid).unwrap();
    // mobility hook must be exactly 1 in this regime
    let mut p = PhysParams::default();
    p.mobility = 0.5;
    assert!(Model::new(
        grid.clone(),
        ChOperator::Nonlocal(kernel.clone()),
        pot(),
        p,
        SchemeConfig::default()
    )
    .is_err());
    // coercivity gate: a = 128 here, so theta_c must be huge to trip it
    let bad_pot = PotentialSpec::new(0.1, 200.0).unwrap();
    assert!(matches!(
        Model::new(
            grid.clone(),
            ChOperator::Nonlocal(kernel.clone()),
            bad_pot,
            PhysParams::default(),
            SchemeConfig::default()
        ),
        Err(Error::Coercivity { .. })
    ));
    // splitting viscosity must dominate
    let cfg = SchemeConfig {
        split_visc: Some(0.1),
        ..SchemeConfig::default()
    };
    assert!(Model::new(
        grid.clone(),
        ChOperator::Nonlocal(kernel),
        pot(),
        PhysParams::default(),
        cfg
    )
    .is_err());
}

#[test]
fn quiescent_uniform_state_is_a_fixed_point() {
    let model = nonlocal_model(32, 1.0, 0.25, PhysParams::default(), SchemeConfig::default());
    let state = quiescent_state(&model, 0.3);
    let next = model.full_step(&state).unwrap();
    assert_eq!(max_abs_diff(&state.phi.values, &next.phi.values), 0.0);
    assert_eq!(next.u.max_abs(), 0.0);
    assert_eq!(next.omega.max_abs(), 0.0);
    assert!(model.validate_state(&next).is_ok());
}

#[test]
fn ch_step_conserves_mass() {
    let model = nonlocal_model(32, 1.0, 0.25, PhysParams::default(), SchemeConfig::default());
    let state = smooth_state(&model, 31, 0.4, 0.2, 0.0);
    let m0 = mean(&state.phi);
    let (phi_next, _) = model.ch_step(&state).unwrap();
    assert!(
        (mean(&phi_next) - m0).abs() <= 1e-13,
        "mass drift {:.3e}",
        (mean(&phi_next) - m0).abs()
    );
}

// Linear-stability oracle: a single-mode perturbation of a uniform state
// decays at the rate of the linearized symbol
// -|k|^2 [sigma eps (a - K_hat(k)) + (sigma/eps) F''(m)].
#[test]
fn ch_step_matches_linearized_decay_rate() {
    let n = 64;
    let length = TAU2; // k = (1, 0)
    let dt = 1e-4;
    let cfg = SchemeConfig {
        dt,
        ..SchemeConfig::default()
    };
    let model = nonlocal_model(n, length, 0.5, PhysParams::default(), cfg);
    let (m, amp) = (0.2, 1e-3);
    let grid = model.grid().clone();
    let phi0 = ScalarField::from_fn(&grid, |x, _| m + amp * x.cos());
    let mut state = model
        .initial_state(&VectorField2::zeros(&grid), &ScalarField::zeros(&grid), &phi0)
        .unwrap();

    let mode_amp = |phi: &ScalarField| -> f64 {
        let spec = crate::spectral::forward(&grid, &phi.values);
        2.0 * spec[(1, 0)].norm() / (n * n) as f64
    };
    let a0 = mode_amp(&state.phi);
    let steps = 10;
    for _ in 0..steps {
        let (phi, mu) = model.ch_step(&state).unwrap();
        state.phi = phi;
        state.mu = mu;
    }
    let a1 = mode_amp(&state.phi);
    let rate_emp = -(a1 / a0).ln() / (steps as f64 * dt);

    let kernel = match model.op() {
        ChOperator::Nonlocal(k) => k,
        _ => unreachable!(),
    };
    let k2 = grid.wavenumbers()[1] * grid.wavenumbers()[1];
    let rate_sym = k2
        * (model.params().sigma * model.params().eps_int
            * (kernel.a_const() - kernel.symbol_at(1, 0))
            + model.params().sigma / model.params().eps_int * pot().dd_f(m).unwrap());
    let rel = (rate_emp - rate_sym).abs() / rate_sym.abs();
    assert!(
        rel <= 0.05,
        "decay rate {rate_emp:.6} vs symbol {rate_sym:.6}, rel {rel:.4}"
    );
}

#[test]
fn local_operator_matches_its_symbol_too() {
    let n = 64;
    let dt = 1e-4;
    let grid = TorusGrid::new(n, TAU2).unwrap();
    let cfg = SchemeConfig {
        dt,
        ..SchemeConfig::default()
    };
    let model = Model::new(
        grid.clone(),
        ChOperator::Local,
        pot(),
        PhysParams::default(),
        cfg,
    )
    .unwrap();
    let (m, amp) = (0.2, 1e-3);
    let phi0 = ScalarField::from_fn(&grid, |x, _| m + amp * x.cos());
    let mut state = model
        .initial_state(&VectorField2::zeros(&grid), &ScalarField::zeros(&grid), &phi0)
        .unwrap();
    let mode_amp = |phi: &ScalarField| -> f64 {
        let spec = crate::spectral::forward(&grid, &phi.values);
        2.0 * spec[(1, 0)].norm() / (n * n) as f64
    };
    let a0 = mode_amp(&state.phi);
    for _ in 0..10 {
        let (phi, mu) = model.ch_step(&state).unwrap();
        state.phi = phi;
        state.mu = mu;
    }
    let a1 = mode_amp(&state.phi);
    let rate_emp = -(a1 / a0).ln() / (10.0 * dt);
    let k2 = 1.0;
    let rate_sym = k2 * (k2 + pot().dd_f(m).unwrap());
    assert!((rate_emp - rate_sym).abs() / rate_sym.abs() <= 0.05);
}

// Classical closed-form oracle: the Taylor-Green vortex decays like
// exp(-2 nu t / rho) under the constant-coefficient degeneracy.
#[test]
fn momentum_step_reproduces_taylor_green_decay() {
    let n = 64;
    let dt = 1e-3;
    let params = PhysParams::default(); // rho = eta = 1, eta_r = 0
    let cfg = SchemeConfig {
        dt,
        ..SchemeConfig::default()
    };
    let model = nonlocal_model(n, TAU2, 0.5, params, cfg);
    let grid = model.grid().clone();
    let u0 = VectorField2::from_fns(&grid, |x, y| x.sin() * y.cos(), |x, y| -(x.cos()) * y.sin());
    let phi = ScalarField::zeros(&grid);
    let mu = ScalarField::zeros(&grid);
    let mut state = SimState {
        t: 0.0,
        step: 0,
        u: u0,
        omega: ScalarField::zeros(&grid),
        phi: phi.clone(),
        mu: mu.clone(),
    };
    let nu = 1.0;
    let mut norm_prev = l2_norm_vec(&state.u);
    for _ in 0..20 {
        let u_next = model.momentum_step(&state, &phi, &mu).unwrap();
        let norm = l2_norm_vec(&u_next);
        let per_step = norm / norm_prev;
        let exact = (-2.0 * nu * dt).exp();
        let rate_err = (per_step.ln() - exact.ln()).abs() / exact.ln().abs();
        assert!(rate_err <= 0.01, "per-step decay rate off by {rate_err:.4}");
        norm_prev = norm;
        state.u = u_next;
        state.step += 1;
    }
    // and it stays solenoidal
    let d = divergence(&state.u);
    assert!(l2_norm(&d) <= 1e-10 * l2_norm_vec(&state.u));
}

// Pointwise ODE oracle: with u = 0 and uniform phi the spin field obeys
// omega' = -4 eta_r omega / rho exactly.
#[test]
fn microrotation_damping_matches_ode() {
    let params = PhysParams {
        eta_r: 1.0,
        ..PhysParams::default()
    };
    let dt = 0.025; // 4 eta_r dt / rho = 0.1
    let cfg = SchemeConfig {
        dt,
        ..SchemeConfig::default()
    };
    let model = nonlocal_model(32, 1.0, 0.25, params, cfg);
    let grid = model.grid().clone();
    let mut state = quiescent_state(&model, 0.0);
    state.omega = ScalarField::constant(&grid, 0.5);
    let u_zero = VectorField2::zeros(&grid);
    let mu_zero = ScalarField::zeros(&grid);
    let mut mean_prev = mean(&state.omega);
    for step in 1..=100 {
        let om = model.microrotation_step(&state, &mu_zero, &u_zero).unwrap();
        let expected = 0.5 * (-4.0 * step as f64 * dt).exp();
        let got = mean(&om);
        assert!(
            (got - expected).abs() <= 0.01 * expected,
            "step {step}: omega {got:.6e} vs {expected:.6e}"
        );
        // damping sign: the mean decreases monotonically
        assert!(got < mean_prev);
        mean_prev = got;
        state.omega = om;
    }
}

#[test]
fn zero_eta_r_keeps_omega_decoupled_at_zero() {
    let model = nonlocal_model(32, 1.0, 0.25, PhysParams::default(), SchemeConfig::default());
    let mut state = smooth_state(&model, 33, 0.3, 0.3, 0.0);
    for _ in 0..5 {
        state = model.full_step(&state).unwrap();
        assert_eq!(state.omega.max_abs(), 0.0);
    }
}

#[test]
fn cfl_guard_trips() {
    let dt = 0.05;
    let cfg = SchemeConfig {
        dt,
        ..SchemeConfig::default()
    };
    let model = nonlocal_model(32, 1.0, 0.25, PhysParams::default(), cfg);
    let grid = model.grid().clone();
    let u = VectorField2::from_fns(&grid, |_, _| 1.0, |_, _| 0.0);
    let state = SimState {
        t: 0.0,
        step: 7,
        u,
        omega: ScalarField::zeros(&grid),
        phi: ScalarField::zeros(&grid),
        mu: ScalarField::zeros(&grid),
    };
    match model.momentum_step(&state, &state.phi, &state.mu) {
        Err(Error::CflViolation { step: 7, .. }) => {}
        other => panic!("expected CFL violation, got {other:?}"),
    }
}

#[test]
fn newton_divergence_reports_step_index() {
    let cfg = SchemeConfig {
        dt: 1.0, // absurd step to make one Newton iteration insufficient
        newton_max_iter: 1,
        ..SchemeConfig::default()
    };
    let model = nonlocal_model(32, 1.0, 0.25, PhysParams::default(), cfg);
    let mut state = smooth_state(&model, 35, 0.6, 0.0, 0.0);
    state.step = 3;
    match model.ch_step(&state) {
        Err(Error::NewtonDivergence { step: 3, .. }) => {}
        Err(Error::SeparationLoss { step: 3 }) => {}
        other => panic!("expected a solver failure with step index, got {other:?}"),
    }
}

#[test]
fn full_step_is_deterministic() {
    let model = nonlocal_model(32, 1.0, 0.25, PhysParams { eta_r: 0.2, rho1: 1.3, rho2: 0.7, ..PhysParams::default() }, SchemeConfig::default());
    let state = smooth_state(&model, 36, 0.4, 0.3, 0.2);
    let a = model.full_step(&state).unwrap();
    let b = model.full_step(&state).unwrap();
    assert!(a
        .phi
        .values
        .iter()
        .zip(b.phi.values.iter())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a
        .u
        .u1
        .iter()
        .zip(b.u.u1.iter())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
    assert!(a
        .omega
        .values
        .iter()
        .zip(b.omega.values.iter())
        .all(|(x, y)| x.to_bits() == y.to_bits()));
}

// First-order splitting: one step at tau vs two at tau/2 differ by O(tau^2).
#[test]
fn splitting_error_is_second_order_locally() {
    let params = PhysParams {
        rho1: 1.2,
        rho2: 0.8,
        eta_r: 0.1,
        ..PhysParams::default()
    };
    // On the 2 pi torus the retained modes have tau * lambda < 1 at these
    // steps, which is where the O(tau^2) local-difference asymptotics hold.
    let mut diffs = Vec::new();
    for &dt in &[1e-3, 5e-4] {
        let big = nonlocal_model(
            64,
            TAU2,
            0.5,
            params.clone(),
            SchemeConfig {
                dt,
                ..SchemeConfig::default()
            },
        );
        let half = nonlocal_model(
            64,
            TAU2,
            0.5,
            params.clone(),
            SchemeConfig {
                dt: dt / 2.0,
                ..SchemeConfig::default()
            },
        );
        let state = smooth_state_with_cutoff(&big, 37, 0.2, 0.2, 0.2, 2);
        let one = big.full_step(&state).unwrap();
        let two = half.full_step(&half.full_step(&state).unwrap()).unwrap();
        let d = l2_norm(&one.phi.add_scaled(-1.0, &two.phi))
            + l2_norm_vec(&one.u.add_scaled(-1.0, &two.u))
            + l2_norm(&one.omega.add_scaled(-1.0, &two.omega));
        diffs.push(d);
    }
    let ratio = diffs[0] / diffs[1];
    assert!(
        (3.0..=5.5).contains(&ratio),
        "Richardson ratio {ratio:.3} outside [3, 5.5] (diffs {:?})",
        diffs
    );
}

#[test]
fn phase_bound_and_mass_hold_over_a_short_spinodal_run() {
    let model = nonlocal_model(32, 1.0, 0.25, PhysParams::default(), SchemeConfig::default());
    let mut state = smooth_state(&model, 38, 0.5, 0.1, 0.0);
    let m0 = mean(&state.phi);
    for _ in 0..50 {
        state = model.full_step(&state).unwrap();
        assert!(state.phi.max_abs() < 1.0);
        assert!(state.separation_gap() > 0.0);
    }
    assert!((mean(&state.phi) - m0).abs() <= 1e-12);
}

#[test]
fn validate_state_catches_inconsistencies() {
    let model = nonlocal_model(32, 1.0, 0.25, PhysParams::default(), SchemeConfig::default());
    let state = smooth_state(&model, 39, 0.3, 0.2, 0.1);
    assert!(model.validate_state(&state).is_ok());
    let mut bad = state.clone();
    bad.mu = ScalarField::constant(model.grid(), 5.0);
    assert!(model.validate_state(&bad).is_err());
    let mut bad = state;
    bad.phi = ScalarField::constant(model.grid(), 1.0);
    assert!(model.validate_state(&bad).is_err());
}
