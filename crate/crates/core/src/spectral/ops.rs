//! Discrete differential calculus on the torus.
//!
//! All derivatives act on the trigonometric interpolant of the samples. The
//! Nyquist mode of odd-order derivatives is zeroed, and the Laplacian is
//! defined as the composition `divergence . grad`, so the two routes agree
//! identically in the discrete setting.

use super::grid::{ScalarField, TorusGrid, VectorField2};
use ndarray::Array2;
use num_complex::Complex64;
use std::sync::Arc;

/// Entries of a 2x2 tensor field, `(i, j)` entry = `d_i v_j` convention.
#[derive(Debug, Clone)]
pub struct TensorField2 {
    pub xx: Array2<f64>,
    pub xy: Array2<f64>,
    pub yx: Array2<f64>,
    pub yy: Array2<f64>,
}

pub(crate) fn forward(grid: &TorusGrid, values: &Array2<f64>) -> Array2<Complex64> {
    grid.fft().forward(values)
}

pub(crate) fn inverse(grid: &TorusGrid, spec: &Array2<Complex64>) -> Array2<f64> {
    grid.fft().inverse(spec)
}

/// Zero every mode outside the 2/3 dealiasing ball.
pub(crate) fn mask_spectrum(grid: &TorusGrid, spec: &mut Array2<Complex64>) {
    spec.zip_mut_with(grid.dealias_keep(), |v, keep| {
        if !keep {
            *v = Complex64::new(0.0, 0.0);
        }
    });
}

/// Multiply a half spectrum by `i * k` along the given axis (0 or 1),
/// Nyquist entries zeroed.
pub(crate) fn deriv_spectrum(
    grid: &TorusGrid,
    spec: &Array2<Complex64>,
    axis: usize,
) -> Array2<Complex64> {
    let kx = grid.k_deriv_axis0();
    let ky = grid.k_deriv_axis1();
    let mut out = spec.clone();
    for ((i, j), v) in out.indexed_iter_mut() {
        let k = if axis == 0 { kx[i] } else { ky[j] };
        *v = Complex64::new(0.0, k) * *v;
    }
    out
}

/// Spectral gradient. Returns `(d1 f, d2 f)`.
pub fn grad(f: &ScalarField) -> VectorField2 {
    let grid = f.grid();
    let spec = forward(grid, &f.values);
    let g1 = inverse(grid, &deriv_spectrum(grid, &spec, 0));
    let g2 = inverse(grid, &deriv_spectrum(grid, &spec, 1));
    VectorField2 {
        grid: grid.clone(),
        u1: g1,
        u2: g2,
    }
}

pub fn divergence(v: &VectorField2) -> ScalarField {
    let grid = v.grid();
    let s1 = forward(grid, &v.u1);
    let s2 = forward(grid, &v.u2);
    let kx = grid.k_deriv_axis0();
    let ky = grid.k_deriv_axis1();
    let mut spec = s1;
    for ((i, j), val) in spec.indexed_iter_mut() {
        *val = Complex64::new(0.0, kx[i]) * *val + Complex64::new(0.0, ky[j]) * s2[(i, j)];
    }
    ScalarField::from_values_unchecked(grid, inverse(grid, &spec))
}

pub fn laplacian(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut spec = forward(grid, &f.values);
    apply_laplacian_symbol(grid, &mut spec);
    ScalarField::from_values_unchecked(grid, inverse(grid, &spec))
}

/// Multiply by `-(k1^2 + k2^2)` built from the derivative wavenumbers.
pub(crate) fn apply_laplacian_symbol(grid: &TorusGrid, spec: &mut Array2<Complex64>) {
    let kx = grid.k_deriv_axis0();
    let ky = grid.k_deriv_axis1();
    for ((i, j), v) in spec.indexed_iter_mut() {
        *v *= -(kx[i] * kx[i] + ky[j] * ky[j]);
    }
}

/// Leray projection onto divergence-free fields, `v - k (k . v) / |k|^2` in
/// Fourier space. Modes with `k = 0` (including the mean flow) pass through.
pub fn leray_project(v: &VectorField2) -> VectorField2 {
    let grid = v.grid();
    let mut s1 = forward(grid, &v.u1);
    let mut s2 = forward(grid, &v.u2);
    project_spectra(grid, &mut s1, &mut s2);
    VectorField2 {
        grid: grid.clone(),
        u1: inverse(grid, &s1),
        u2: inverse(grid, &s2),
    }
}

pub(crate) fn project_spectra(
    grid: &TorusGrid,
    s1: &mut Array2<Complex64>,
    s2: &mut Array2<Complex64>,
) {
    let kx = grid.k_deriv_axis0();
    let ky = grid.k_deriv_axis1();
    for ((i, j), v1) in s1.indexed_iter_mut() {
        let (k1, k2) = (kx[i], ky[j]);
        let k2norm = k1 * k1 + k2 * k2;
        if k2norm == 0.0 {
            continue;
        }
        let v2 = &mut s2[(i, j)];
        let kdotv = (k1 * *v1 + k2 * *v2) / k2norm;
        *v1 -= k1 * kdotv;
        *v2 -= k2 * kdotv;
    }
}

/// `curl2 v = d1 v2 - d2 v1` (scalar in 2D).
pub fn curl2(v: &VectorField2) -> ScalarField {
    let grid = v.grid();
    let s1 = forward(grid, &v.u1);
    let s2 = forward(grid, &v.u2);
    let kx = grid.k_deriv_axis0();
    let ky = grid.k_deriv_axis1();
    let mut spec = s2;
    for ((i, j), val) in spec.indexed_iter_mut() {
        *val = Complex64::new(0.0, kx[i]) * *val - Complex64::new(0.0, ky[j]) * s1[(i, j)];
    }
    ScalarField::from_values_unchecked(grid, inverse(grid, &spec))
}

/// `curl1 w = (d2 w, -d1 w)` (rotation vector of a scalar in 2D).
pub fn curl1(w: &ScalarField) -> VectorField2 {
    let grid = w.grid();
    let spec = forward(grid, &w.values);
    let c1 = inverse(grid, &deriv_spectrum(grid, &spec, 1));
    let mut d1 = deriv_spectrum(grid, &spec, 0);
    d1.mapv_inplace(|v| -v);
    let c2 = inverse(grid, &d1);
    VectorField2 {
        grid: grid.clone(),
        u1: c1,
        u2: c2,
    }
}

/// Full velocity gradient, `(i, j)` entry = `d_i v_j`.
pub fn jacobian(v: &VectorField2) -> TensorField2 {
    let grid = v.grid();
    let s1 = forward(grid, &v.u1);
    let s2 = forward(grid, &v.u2);
    TensorField2 {
        xx: inverse(grid, &deriv_spectrum(grid, &s1, 0)),
        xy: inverse(grid, &deriv_spectrum(grid, &s2, 0)),
        yx: inverse(grid, &deriv_spectrum(grid, &s1, 1)),
        yy: inverse(grid, &deriv_spectrum(grid, &s2, 1)),
    }
}

/// Symmetric and antisymmetric parts of the velocity gradient,
/// `D = (grad v + grad v^T) / 2`, `W = (grad v - grad v^T) / 2`.
pub fn strain_tensors(v: &VectorField2) -> (TensorField2, TensorField2) {
    let g = jacobian(v);
    let n = g.xx.dim();
    let mut d = TensorField2 {
        xx: g.xx.clone(),
        xy: Array2::zeros(n),
        yx: Array2::zeros(n),
        yy: g.yy.clone(),
    };
    let mut w = TensorField2 {
        xx: Array2::zeros(n),
        xy: Array2::zeros(n),
        yx: Array2::zeros(n),
        yy: Array2::zeros(n),
    };
    for ((idx, dxy), wxy) in d.xy.indexed_iter_mut().zip(w.xy.iter_mut()) {
        let a = g.xy[idx];
        let b = g.yx[idx];
        *dxy = 0.5 * (a + b);
        *wxy = 0.5 * (a - b);
    }
    for (idx, v) in d.yx.indexed_iter_mut() {
        *v = d.xy[idx];
    }
    for (idx, v) in w.yx.indexed_iter_mut() {
        *v = -w.xy[idx];
    }
    (d, w)
}

/// 2/3-rule truncation of a field (round trip through the spectrum).
pub fn dealias(f: &ScalarField) -> ScalarField {
    let grid = f.grid();
    let mut spec = forward(grid, &f.values);
    mask_spectrum(grid, &mut spec);
    ScalarField::from_values_unchecked(grid, inverse(grid, &spec))
}

impl ScalarField {
    pub(crate) fn from_values_unchecked(grid: &Arc<TorusGrid>, values: Array2<f64>) -> Self {
        let mut f = ScalarField::zeros(grid);
        f.values = values;
        f
    }
}

// ---- quadrature -----------------------------------------------------------

/// Compensated (Kahan) summation; the quadrature below must not lose mass to
/// cancellation over ~10^5 cells.
pub(crate) fn kahan_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut carry = 0.0f64;
    for x in values {
        let y = x - carry;
        let t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    sum
}

/// `integral f dx = h^2 sum f`; exact for trigonometric polynomials below the
/// Nyquist frequency.
pub fn integral(f: &ScalarField) -> f64 {
    f.grid().cell_area() * kahan_sum(f.values.iter().copied())
}

pub fn mean(f: &ScalarField) -> f64 {
    kahan_sum(f.values.iter().copied()) / (f.values.len() as f64)
}

/// Discrete L2 inner product of two scalar fields.
pub fn inner(f: &ScalarField, g: &ScalarField) -> f64 {
    debug_assert!(f.grid().same_grid(g.grid()));
    f.grid().cell_area() * kahan_sum(f.values.iter().zip(g.values.iter()).map(|(a, b)| a * b))
}

pub fn l2_norm_sq(f: &ScalarField) -> f64 {
    f.grid().cell_area() * kahan_sum(f.values.iter().map(|a| a * a))
}

pub fn l2_norm(f: &ScalarField) -> f64 {
    l2_norm_sq(f).sqrt()
}

pub fn inner_vec(u: &VectorField2, v: &VectorField2) -> f64 {
    debug_assert!(u.grid().same_grid(v.grid()));
    let dot = u
        .u1
        .iter()
        .zip(v.u1.iter())
        .map(|(a, b)| a * b)
        .chain(u.u2.iter().zip(v.u2.iter()).map(|(a, b)| a * b));
    u.grid().cell_area() * kahan_sum(dot)
}

pub fn l2_norm_sq_vec(u: &VectorField2) -> f64 {
    inner_vec(u, u)
}

pub fn l2_norm_vec(u: &VectorField2) -> f64 {
    l2_norm_sq_vec(u).sqrt()
}
