use super::*;
use crate::spectral::{divergence, l2_norm, l2_norm_vec, mean};

fn small_spec(kind: ExperimentKind) -> ExperimentSpec {
    ExperimentSpec {
        kind,
        grid_n: 32,
        grid_length: 1.0,
        kernel_family: KernelFamily::Disk,
        kappa: 0.25,
        pot: PotentialSpec::new(0.8, 1.0).unwrap(),
        params: PhysParams::default(),
        scheme: SchemeConfig::default(),
        t_final: 0.01,
        snapshot_every: 10,
        sweep: vec![],
        init: InitialDataSpec::default(),
        threads: 2,
    }
}

#[test]
fn initial_fields_follow_the_recipe() {
    let grid = TorusGrid::new(64, 1.0).unwrap();
    let init = InitialDataSpec::default();
    let (u, om, phi) = initial_fields(&grid, &init).unwrap();
    // separated, centered phase
    assert!(phi.max_abs() <= 1.0 - init.delta0);
    assert!((mean(&phi) - init.mean_phi).abs() <= 1e-14);
    assert!(phi.max_abs() > 0.01, "perturbation present");
    // solenoidal velocity with the prescribed norm
    assert!((l2_norm_vec(&u) - init.u_norm).abs() <= 1e-12);
    assert!(l2_norm(&divergence(&u)) <= 1e-11 * init.u_norm);
    // consistency default: no spin
    assert_eq!(om.max_abs(), 0.0);
}

#[test]
fn initial_fields_are_reproducible_and_seed_sensitive() {
    let grid = TorusGrid::new(32, 1.0).unwrap();
    let init = InitialDataSpec::default();
    let (u1, _, p1) = initial_fields(&grid, &init).unwrap();
    let (u2, _, p2) = initial_fields(&grid, &init).unwrap();
    assert!(p1
        .values
        .iter()
        .zip(p2.values.iter())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    assert!(u1
        .u1
        .iter()
        .zip(u2.u1.iter())
        .all(|(a, b)| a.to_bits() == b.to_bits()));
    let other = InitialDataSpec {
        seed: 7,
        ..InitialDataSpec::default()
    };
    let (_, _, p3) = initial_fields(&grid, &other).unwrap();
    assert!(p1.values.iter().zip(p3.values.iter()).any(|(a, b)| a != b));
}

#[test]
fn initial_phase_clips_into_the_separated_band() {
    let grid = TorusGrid::new(32, 1.0).unwrap();
    let init = InitialDataSpec {
        mean_phi: 0.6,
        amp_phi: 0.5,
        delta0: 0.1,
        ..InitialDataSpec::default()
    };
    let (_, _, phi) = initial_fields(&grid, &init).unwrap();
    assert!(phi.max_abs() <= 0.9 + 1e-12);
}

#[test]
fn quiescent_run_is_constant_with_zero_dissipation() {
    let mut spec = small_spec(ExperimentKind::SingleRun);
    spec.init.amp_phi = 0.0;
    spec.init.u_norm = 0.0;
    spec.init.mean_phi = 0.2;
    let run = run_single_spec(&spec).unwrap();
    assert_eq!(run.max_mass_drift, 0.0);
    for rep in &run.reports {
        assert!(rep.d_total <= 1e-14);
        assert!((rep.e_total - run.reports[0].e_total).abs() <= 1e-13);
    }
}

#[test]
fn spinodal_run_dissipates_and_conserves_mass() {
    let mut spec = small_spec(ExperimentKind::SingleRun);
    spec.t_final = 0.02;
    spec.init.amp_phi = 0.3;
    let run = run_single_spec(&spec).unwrap();
    assert!(run.max_mass_drift <= 1e-12, "drift {:.3e}", run.max_mass_drift);
    assert!(run.min_separation_gap > 0.0);
    let first = run.reports.first().unwrap();
    let last = run.reports.last().unwrap();
    assert!(
        last.e_total < first.e_total,
        "energy did not decrease: {} -> {}",
        first.e_total,
        last.e_total
    );
}

#[test]
fn eta_r_sweep_degeneracy_and_slope() {
    let mut spec = small_spec(ExperimentKind::EtaRSweep);
    spec.params = PhysParams {
        rho1: 1.2,
        rho2: 0.8,
        ..PhysParams::default()
    };
    spec.t_final = 0.01;
    spec.snapshot_every = 5;
    spec.init.u_norm = 0.2;
    spec.sweep = vec![1e-1, 1e-2, 1e-3, 1e-4, 0.0];
    let out = eta_r_sweep(&spec).unwrap();
    assert_eq!(out.rows.len(), 5);
    // exact degeneracy at eta_r = 0: same code path, bit-identical
    let zero_row = out.rows.iter().find(|r| r.eta_r == 0.0).unwrap();
    assert!(zero_row.metric_nagg <= 1e-20);
    // metric decreases with eta_r
    let positive: Vec<&EtaRow> = out.rows.iter().filter(|r| r.eta_r > 0.0).collect();
    for w in positive.windows(2) {
        assert!(w[1].metric_nagg < w[0].metric_nagg);
    }
    // O(eta_r) bound implies an asymptotic slope >= 1; the observed leading
    // order is quadratic
    assert!(
        out.fitted_slope >= 0.9,
        "fitted slope {} too shallow",
        out.fitted_slope
    );
    // densities are unmatched: no model-H column
    assert!(out.rows.iter().all(|r| r.metric_nmodelh.is_none()));
}

#[test]
fn eta_r_sweep_matched_densities_brings_the_modelh_column() {
    let mut spec = small_spec(ExperimentKind::EtaRSweep);
    spec.t_final = 0.005;
    spec.snapshot_every = 5;
    spec.sweep = vec![1e-2, 0.0];
    let out = eta_r_sweep(&spec).unwrap();
    for row in &out.rows {
        let m = row.metric_nmodelh.expect("matched densities");
        assert_eq!(m, row.metric_nagg);
    }
    let zero = out.rows.iter().find(|r| r.eta_r == 0.0).unwrap();
    assert!(zero.metric_nmodelh.unwrap() <= 1e-20);
}

#[test]
fn sweep_results_do_not_depend_on_thread_count() {
    let mut spec = small_spec(ExperimentKind::EtaRSweep);
    spec.t_final = 0.005;
    spec.sweep = vec![1e-2, 1e-3];
    spec.threads = 1;
    let a = eta_r_sweep(&spec).unwrap();
    spec.threads = 4;
    let b = eta_r_sweep(&spec).unwrap();
    for (x, y) in a.rows.iter().zip(b.rows.iter()) {
        assert_eq!(x.metric_nagg.to_bits(), y.metric_nagg.to_bits());
    }
}

#[test]
fn modelh_grid_degeneracy_and_fit_shape() {
    let mut spec = small_spec(ExperimentKind::EtaRSweep);
    spec.t_final = 0.005;
    spec.snapshot_every = 5;
    spec.init.u_norm = 0.2;
    let out = nmodelh_consistency_grid(&spec, &[0.05, 0.02], &[0.2, 0.1], 1.0).unwrap();
    assert_eq!(out.cells.len(), 4);
    for c in &out.cells {
        assert!(c.metric >= 0.0 && c.metric.is_finite());
    }
    assert!(out.c1.is_finite() && out.c2.is_finite());
    assert!(out.r_squared <= 1.0);
    // the exact matched nonpolar cell is the reference itself
    let degen = nmodelh_consistency_grid(&spec, &[0.0], &[0.0], 1.0).unwrap();
    assert!(degen.cells[0].metric <= 1e-20);
}

#[test]
fn kappa_sweep_static_gaps_decrease_and_unresolved_rows_are_flagged() {
    // On the 2 pi torus with low-mode data the populated modes satisfy
    // kappa |k| < 1, where the concentration asymptotics are clean.
    let mut spec = small_spec(ExperimentKind::KappaSweep);
    spec.grid_n = 128;
    spec.grid_length = 2.0 * std::f64::consts::PI;
    // tau must resolve the kappa-dependent stiffness (a = 8/kappa^2 is
    // implicit) or the splitting error masks the operator gap
    spec.scheme.dt = 2e-5;
    spec.t_final = 0.002;
    spec.snapshot_every = 20;
    spec.init.amp_phi = 0.2;
    spec.init.max_mode = 2;
    spec.sweep = vec![0.5, 0.4, 0.3, 0.22, 0.05];
    let rows = kappa_sweep(&spec).unwrap();
    assert_eq!(rows.len(), 5);
    let resolved: Vec<&KappaSweepRow> = rows.iter().filter(|r| r.resolved).collect();
    assert_eq!(resolved.len(), 4);
    for w in resolved.windows(2) {
        assert!(
            w[1].rel_gap < w[0].rel_gap,
            "static gap not decreasing: {} -> {}",
            w[0].rel_gap,
            w[1].rel_gap
        );
        assert!(w[1].op_gap < w[0].op_gap);
    }
    // dynamic distances shrink toward the local reference as well
    for w in resolved.windows(2) {
        assert!(
            w[1].traj_dist < w[0].traj_dist,
            "dynamic distance not decreasing: {} -> {}",
            w[0].traj_dist,
            w[1].traj_dist
        );
    }
    let unresolved = rows.last().unwrap();
    assert!(!unresolved.resolved);
    assert!(unresolved.rel_gap.is_nan() && unresolved.traj_dist.is_nan());
}

#[test]
fn spec_validation_gates() {
    let mut spec = small_spec(ExperimentKind::EtaRSweep);
    spec.sweep = vec![];
    assert!(spec.validate().is_err());
    spec.sweep = vec![0.1, 0.2];
    assert!(spec.validate().is_err());
    spec.sweep = vec![0.2, 0.1];
    assert!(spec.validate().is_ok());
    spec.t_final = 0.0;
    assert!(spec.validate().is_err());
}

#[test]
fn loglog_slope_recovers_exact_powers() {
    let pts = [(1e-3, 1e-6), (1e-2, 1e-4), (1e-1, 1e-2)];
    let s = fit_loglog_slope(pts.iter().copied(), 3);
    assert!((s - 2.0).abs() < 1e-12);
}
