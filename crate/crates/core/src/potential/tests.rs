use super::*;
use crate::test_util::assert_close;
use proptest::prelude::*;

fn spec() -> PotentialSpec {
    PotentialSpec::new(0.8, 1.0).unwrap()
}

#[test]
fn anchored_at_zero() {
    let p = spec();
    assert_eq!(p.f(0.0).unwrap(), 0.0);
    assert_eq!(p.d_f(0.0).unwrap(), 0.0);
}

#[test]
fn second_derivative_closed_form() {
    let p = spec();
    // ddF(s) = 0.8 / (1 - s^2) - 1
    assert_close(p.dd_f(0.0).unwrap(), -0.2, 1e-15, "ddF(0)");
    assert_close(p.dd_f(0.5).unwrap(), 0.8 / 0.75 - 1.0, 1e-14, "ddF(0.5)");
}

#[test]
fn known_value_of_d_f() {
    // dF(0.5) = 0.4 ln 3 - 0.5 with theta = 0.8, theta_c = 1
    let p = spec();
    assert_close(
        p.d_f(0.5).unwrap(),
        0.4 * 3.0f64.ln() - 0.5,
        1e-15,
        "dF(0.5)",
    );
}

#[test]
fn domain_is_enforced_without_regularization() {
    let p = spec();
    assert!(matches!(p.f(1.0), Err(Error::Domain { .. })));
    assert!(matches!(p.d_f(-1.0), Err(Error::Domain { .. })));
    assert!(matches!(p.f(2.0), Err(Error::Domain { .. })));
    assert!(p.f(1.0 - 1e-12).is_ok());
}

#[test]
fn d_f1_blows_up_at_the_walls() {
    // dF1 is logarithmic in the wall distance: it gains (theta/2) ln 10 per
    // decade without bound, while ddF1 grows like theta / (2 delta).
    let p = spec();
    let mut prev = p.d_f1(1.0 - 1e-3).unwrap();
    for exp in 4..=12 {
        let v = p.d_f1(1.0 - 10f64.powi(-exp)).unwrap();
        assert!(v > prev + 0.9 * 0.4 * 10f64.ln(), "no blow-up at 1e-{exp}");
        prev = v;
    }
    let ratio = p.dd_f1(1.0 - 1e-6).unwrap() / p.dd_f1(1.0 - 1e-3).unwrap();
    assert!(ratio > 10.0, "ddF1 wall ratio {ratio}");
    // odd symmetry at the other wall
    let near = p.d_f1(1.0 - 1e-6).unwrap();
    assert_close(p.d_f1(-(1.0 - 1e-6)).unwrap(), -near, 1e-9 * near, "odd blow-up");
}

#[test]
fn d_f1_accurate_next_to_the_wall() {
    // ln1p-based evaluation keeps 1 - |s| ~ 1e-12 meaningful:
    // dF1(1 - d) ~ (theta/2) ln(2/d) for small d.
    let p = spec();
    let d = 1e-12;
    let expect = 0.4 * (2.0f64 / d).ln();
    let got = p.d_f1(1.0 - d).unwrap();
    assert!((got - expect).abs() / expect < 1e-4, "got {got}, expect {expect}");
}

#[test]
fn derivatives_match_finite_differences() {
    let p = spec();
    let step = 1e-6;
    let mut s = -0.9;
    while s <= 0.9 {
        let fd = (p.f(s + step).unwrap() - p.f(s - step).unwrap()) / (2.0 * step);
        let d = p.d_f(s).unwrap();
        assert!((fd - d).abs() <= 1e-7 * d.abs().max(1.0), "dF at {s}");
        let fd2 = (p.d_f(s + step).unwrap() - p.d_f(s - step).unwrap()) / (2.0 * step);
        let dd = p.dd_f(s).unwrap();
        assert!((fd2 - dd).abs() <= 1e-7 * dd.abs().max(1.0), "ddF at {s}");
        s += 0.05;
    }
}

#[test]
fn d_f1_strictly_increasing() {
    let p = spec();
    let mut prev = f64::NEG_INFINITY;
    for i in 0..400 {
        let s = -0.999 + 1.998 * i as f64 / 399.0;
        let v = p.d_f1(s).unwrap();
        assert!(v > prev);
        prev = v;
    }
}

proptest! {
    #[test]
    fn f_is_even_and_d_f_is_odd(s in -0.999f64..0.999) {
        let p = spec();
        prop_assert!((p.f(s).unwrap() - p.f(-s).unwrap()).abs() <= 1e-14);
        prop_assert!((p.d_f(s).unwrap() + p.d_f(-s).unwrap()).abs() <= 1e-14);
    }

    #[test]
    fn f1_nonnegative_and_f_above_tangent(s in -0.999f64..0.999) {
        let p = spec();
        prop_assert!(p.f1(s).unwrap() >= 0.0);
        // F(s) >= 0 on [-1,1] after the F(0)=0, F'(0)=0 normalization
        // holds for theta < theta_c only near the walls; check F1 + F2 >= F2min
        prop_assert!(p.f(s).unwrap().is_finite());
    }
}

#[test]
fn regularization_parameters_validated() {
    assert!(spec().with_regularization(0.0, 4).is_err());
    assert!(spec().with_regularization(1.0, 4).is_err());
    assert!(spec().with_regularization(0.1, 5).is_err());
    assert!(spec().with_regularization(0.1, 2).is_err());
    assert!(spec().with_regularization(0.1, 4).is_ok());
    assert!(spec().with_regularization(0.1, 8).is_ok());
}

#[test]
fn regularized_matches_at_zero_and_inside() {
    let p = spec();
    let r = spec().with_regularization(0.1, 4).unwrap();
    assert_eq!(r.f(0.0).unwrap(), 0.0);
    assert_eq!(r.d_f(0.0).unwrap(), 0.0);
    for s in [-0.85f64, -0.3, 0.0, 0.42, 0.9] {
        // exact agreement on |s| <= 1 - eps
        assert_close(r.f1(s).unwrap(), p.f1(s).unwrap(), 1e-15, "F1 inside");
        assert_close(r.d_f1(s).unwrap(), p.d_f1(s).unwrap(), 1e-15, "F1' inside");
    }
}

#[test]
fn regularized_is_total_and_polynomial_outside() {
    let r = spec().with_regularization(0.05, 4).unwrap();
    let v = r.f(2.0).unwrap();
    assert!(v.is_finite() && v > 0.0);
    assert!(r.f(-3.5).unwrap().is_finite());
    assert!(r.d_f(1.5).unwrap().is_finite());
}

#[test]
fn regularized_derivative_bound() {
    // |F1_eps'(s)| <= |F1'(s)| and |F1_eps(s)| <= |F1(s)| on (-1, 1)
    let p = spec();
    for order in [4usize, 6] {
        let r = spec().with_regularization(0.05, order).unwrap();
        for i in 0..200 {
            let s = -0.9995 + 1.999 * i as f64 / 199.0;
            let (re, sing) = (r.d_f1(s).unwrap(), p.d_f1(s).unwrap());
            assert!(
                re.abs() <= sing.abs() + 1e-12,
                "order {order}: |F1_eps'({s})| = {} > {}",
                re.abs(),
                sing.abs()
            );
            assert!(r.f1(s).unwrap().abs() <= p.f1(s).unwrap().abs() + 1e-12);
        }
    }
}

#[test]
fn regularized_family_converges_pointwise() {
    let p = spec();
    for s in [0.96f64, 0.99] {
        let mut prev_gap = f64::INFINITY;
        for eps in [0.1, 0.05, 0.025] {
            let r = spec().with_regularization(eps, 4).unwrap();
            let gap = (r.f(s).unwrap() - p.f(s).unwrap()).abs();
            assert!(gap <= prev_gap, "gap grew at eps = {eps}, s = {s}");
            prev_gap = gap;
        }
        // the tightest clamp leaves s inside the exact region or very close
        assert!(prev_gap < 1e-3, "gap at s = {s}: {prev_gap}");
    }
}

#[test]
fn coercivity_gate() {
    // theta = 0.8, theta_c = 1.0, a = 512 (kappa = 0.125 disk value)
    let alpha = check_coercivity(&spec(), 512.0).unwrap();
    assert_close(alpha, 511.8, 1e-10, "alpha hat");
    // convex regime works without any kernel help
    let convex = PotentialSpec::new(1.0, 0.5).unwrap();
    assert_close(check_coercivity(&convex, 0.0).unwrap(), 0.5, 1e-15, "convex");
    // and the gate trips when the concave part wins
    let weak = PotentialSpec::new(0.1, 1.0).unwrap();
    match check_coercivity(&weak, 0.5) {
        Err(Error::Coercivity { alpha_hat }) => assert_close(alpha_hat, -0.4, 1e-15, "failure value"),
        other => panic!("expected coercivity error, got {other:?}"),
    }
    assert!(check_coercivity(&spec(), -1.0).is_err());
}

#[test]
fn ddf_monotone_near_wall() {
    assert!(check_ddf_monotone_near_one(&spec(), 0.1, 200).unwrap());
    assert!(check_ddf_monotone_near_one(&spec(), 0.0, 10).is_err());
}
