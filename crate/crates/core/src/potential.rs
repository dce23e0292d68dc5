//! The singular logarithmic double-well potential `F = F1 + F2` with
//! `F1(s) = (theta/2) [(1+s) ln(1+s) + (1-s) ln(1-s)]` and
//! `F2(s) = -(theta_c/2) s^2`, plus the polynomial regularization family
//! `F_eps` obtained by clamping the p-th derivative of `F1` outside
//! `|s| <= 1 - eps` and integrating back with matching derivatives at 0.
//!
//! `F(0) = 0` and `F'(0) = 0` hold by construction, `F` is extended by
//! `+infinity` outside `[-1, 1]` (evaluations there raise [`Error::Domain`]
//! unless a regularization is active). Near-boundary evaluations go through
//! `ln_1p` so that `1 - |s|` down to 1e-12 stays accurate.

use crate::error::{Error, Result};
use crate::spectral::ScalarField;

/// Parameters of the logarithmic potential, optionally regularized.
///
/// The double-well regime of the model is `0 < theta < theta_c`; values with
/// `theta >= theta_c` are accepted (the potential is then convex) so that the
/// coercivity gate can be probed on them.
#[derive(Debug, Clone)]
pub struct PotentialSpec {
    theta: f64,
    theta_c: f64,
    reg: Option<RegularizedF1>,
}

impl PotentialSpec {
    pub fn new(theta: f64, theta_c: f64) -> Result<Self> {
        if !(theta > 0.0 && theta.is_finite()) || !(theta_c > 0.0 && theta_c.is_finite()) {
            return Err(Error::Parameter(format!(
                "potential parameters must be positive, got theta = {theta}, theta_c = {theta_c}"
            )));
        }
        Ok(Self {
            theta,
            theta_c,
            reg: None,
        })
    }

    /// Replace `F1` by its clamped-derivative polynomial approximation
    /// `F_{1,eps}` of matching order `p` (even, >= 4).
    pub fn with_regularization(mut self, eps_reg: f64, order: usize) -> Result<Self> {
        if !(eps_reg > 0.0 && eps_reg < 1.0) {
            return Err(Error::Parameter(format!(
                "reg_epsilon must lie in (0, 1), got {eps_reg}"
            )));
        }
        if order < 4 || order % 2 != 0 {
            return Err(Error::Parameter(format!(
                "reg_order must be an even integer >= 4, got {order}"
            )));
        }
        self.reg = Some(RegularizedF1::build(self.theta, eps_reg, order));
        Ok(self)
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn theta_c(&self) -> f64 {
        self.theta_c
    }

    pub fn regularization(&self) -> Option<(f64, usize)> {
        self.reg.as_ref().map(|r| (r.eps, r.order))
    }

    fn check_domain(&self, s: f64) -> Result<()> {
        if self.reg.is_none() && s.abs() >= 1.0 {
            return Err(Error::Domain { s_abs: s.abs() });
        }
        if !s.is_finite() {
            return Err(Error::Domain { s_abs: s.abs() });
        }
        Ok(())
    }

    /// Convex part `F1` (or `F_{1,eps}` under regularization).
    pub fn f1(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match &self.reg {
            None => f1_singular(self.theta, s),
            Some(reg) => reg.eval(s, 0),
        })
    }

    /// Concave part `F2(s) = -(theta_c / 2) s^2` (clamping `F2''` is a no-op).
    pub fn f2(&self, s: f64) -> f64 {
        -0.5 * self.theta_c * s * s
    }

    pub fn f(&self, s: f64) -> Result<f64> {
        Ok(self.f1(s)? + self.f2(s))
    }

    /// `F1'(s) = (theta/2) ln((1+s)/(1-s))`.
    pub fn d_f1(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match &self.reg {
            None => d_f1_singular(self.theta, s),
            Some(reg) => reg.eval(s, 1),
        })
    }

    pub fn d_f2(&self, s: f64) -> f64 {
        -self.theta_c * s
    }

    pub fn d_f(&self, s: f64) -> Result<f64> {
        Ok(self.d_f1(s)? + self.d_f2(s))
    }

    /// `F1''(s) = theta / (1 - s^2)`.
    pub fn dd_f1(&self, s: f64) -> Result<f64> {
        self.check_domain(s)?;
        Ok(match &self.reg {
            None => self.theta / ((1.0 - s) * (1.0 + s)),
            Some(reg) => reg.eval(s, 2),
        })
    }

    pub fn dd_f(&self, s: f64) -> Result<f64> {
        Ok(self.dd_f1(s)? - self.theta_c)
    }

    pub fn f_field(&self, phi: &ScalarField) -> Result<ScalarField> {
        let mut out = phi.clone();
        for v in out.values.iter_mut() {
            *v = self.f(*v)?;
        }
        Ok(out)
    }

    pub fn d_f_field(&self, phi: &ScalarField) -> Result<ScalarField> {
        let mut out = phi.clone();
        for v in out.values.iter_mut() {
            *v = self.d_f(*v)?;
        }
        Ok(out)
    }
}

fn f1_singular(theta: f64, s: f64) -> f64 {
    0.5 * theta * ((1.0 + s) * s.ln_1p() + (1.0 - s) * (-s).ln_1p())
}

fn d_f1_singular(theta: f64, s: f64) -> f64 {
    0.5 * theta * (s.ln_1p() - (-s).ln_1p())
}

/// k-th derivative of `F1` at `y` in closed form (k >= 2):
/// `(theta/2) (k-2)! [(-1)^k (1+y)^{1-k} + (1-y)^{1-k}]`.
fn d_f1_k(theta: f64, y: f64, k: usize) -> f64 {
    match k {
        0 => f1_singular(theta, y),
        1 => d_f1_singular(theta, y),
        _ => {
            let mut fact = 1.0;
            for j in 1..=(k - 2) {
                fact *= j as f64;
            }
            let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
            0.5 * theta
                * fact
                * (sign * (1.0 + y).powi(1 - k as i32) + (1.0 - y).powi(1 - k as i32))
        }
    }
}

/// `F_{1,eps}`: equals `F1` on `|s| <= 1 - eps`; outside, the p-th derivative
/// is frozen at its clamp value and the lower derivatives are the exact
/// Taylor integrals from `1 - eps` (closed form, no quadrature, so the
/// `|F_{1,eps}'| <= |F1'|` bound holds to roundoff).
#[derive(Debug, Clone)]
struct RegularizedF1 {
    theta: f64,
    eps: f64,
    order: usize,
    /// Derivative values `F1^{(j)}(1 - eps)` for `j = 0..=p` (the last entry
    /// is the clamped p-th derivative).
    derivs: Vec<f64>,
}

impl RegularizedF1 {
    fn build(theta: f64, eps: f64, order: usize) -> Self {
        let edge = 1.0 - eps;
        let derivs = (0..=order).map(|j| d_f1_k(theta, edge, j)).collect();
        Self {
            theta,
            eps,
            order,
            derivs,
        }
    }

    /// Evaluate the k-th derivative of `F_{1,eps}` (k <= 2), total on R.
    fn eval(&self, s: f64, k: usize) -> f64 {
        let edge = 1.0 - self.eps;
        let t = s.abs();
        // F1 is even: odd derivatives pick up the sign of s.
        let parity = if k % 2 == 1 { s.signum() } else { 1.0 };
        if t <= edge {
            return parity * d_f1_k(self.theta, t, k);
        }
        let x = t - edge;
        // Taylor sum: sum_{j=k}^{p} c_j x^{j-k} / (j-k)!  (Horner, highest first)
        let mut acc = 0.0;
        for j in (k..=self.order).rev() {
            let m = (j - k) as f64;
            acc = self.derivs[j] + acc * x / (m + 1.0);
        }
        parity * acc
    }
}

/// The coercivity constant of the implicit convex structure:
/// `inf_s F''(s) + a = theta - theta_c + a` (the infimum of
/// `theta / (1 - s^2)` is attained at `s = 0`). Fails when nonpositive,
/// signalling a parameter set outside the theory's hypotheses; model
/// constructors call this gate before any run starts.
pub fn check_coercivity(spec: &PotentialSpec, a_const: f64) -> Result<f64> {
    if a_const < 0.0 {
        return Err(Error::Parameter(format!(
            "a_const must be nonnegative, got {a_const}"
        )));
    }
    let alpha_hat = spec.theta - spec.theta_c + a_const;
    if alpha_hat > 0.0 {
        Ok(alpha_hat)
    } else {
        Err(Error::Coercivity { alpha_hat })
    }
}

/// Numerical spot check that `F''` is monotone non-decreasing on
/// `[1 - eps1, 1)` (sampled); the remaining near-boundary hypotheses of the
/// theory are existential and not represented as data.
pub fn check_ddf_monotone_near_one(spec: &PotentialSpec, eps1: f64, samples: usize) -> Result<bool> {
    if !(eps1 > 0.0 && eps1 < 1.0) || samples < 2 {
        return Err(Error::Parameter(
            "need eps1 in (0,1) and at least two samples".into(),
        ));
    }
    let lo = 1.0 - eps1;
    let hi = 1.0 - 1e-9;
    let mut prev = f64::NEG_INFINITY;
    for i in 0..samples {
        let s = lo + (hi - lo) * i as f64 / (samples - 1) as f64;
        let v = spec.dd_f(s)?;
        if v < prev {
            return Ok(false);
        }
        prev = v;
    }
    Ok(true)
}

#[cfg(test)]
mod tests;
