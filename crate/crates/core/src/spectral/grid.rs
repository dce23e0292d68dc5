//! The discrete periodic domain and the field types living on it.

use super::fft::Fft2;
use crate::error::{Error, Result};
use ndarray::Array2;
use std::sync::Arc;

/// Uniform `n x n` grid on the square torus of side `length`, with its
/// wavenumber tables and a planned FFT engine.
///
/// Sample points are `x_i = i L / n`; `values[(i, j)]` of a field holds the
/// sample at `(x_i, y_j)`. Wavenumbers are stored in FFT order,
/// `k_j = 2 pi m_j / L` with `m_j in {0, ..., n/2 - 1, -n/2, ..., -1}`.
#[derive(Debug)]
pub struct TorusGrid {
    n: usize,
    length: f64,
    /// Full signed wavenumber table (axis 0).
    k_full: Vec<f64>,
    /// Full table with the Nyquist entry zeroed, used for odd-order derivatives.
    k_deriv: Vec<f64>,
    /// Half table (axis 1 of the half spectrum) with the Nyquist entry
    /// zeroed, used for odd-order derivatives.
    k_half_deriv: Vec<f64>,
    /// 2/3-rule dealiasing mask over the half spectrum, true = keep.
    dealias_keep: Array2<bool>,
    fft: Fft2,
}

impl TorusGrid {
    pub fn new(n: usize, length: f64) -> Result<Arc<Self>> {
        if n < 8 || n % 2 != 0 {
            return Err(Error::Parameter(format!(
                "grid.n must be an even integer >= 8, got {n}"
            )));
        }
        if !(length > 0.0) || !length.is_finite() {
            return Err(Error::Parameter(format!(
                "grid.period_length must be positive and finite, got {length}"
            )));
        }
        let base = 2.0 * std::f64::consts::PI / length;
        let half = n / 2 + 1;
        let signed = |j: usize| -> i64 {
            if j < n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            }
        };
        let k_full: Vec<f64> = (0..n).map(|j| base * signed(j) as f64).collect();
        let mut k_deriv = k_full.clone();
        k_deriv[n / 2] = 0.0;
        let mut k_half_deriv: Vec<f64> = (0..half).map(|j| base * j as f64).collect();
        k_half_deriv[half - 1] = 0.0;

        let cutoff = (n / 3) as i64;
        let mut dealias_keep = Array2::from_elem((n, half), false);
        for i in 0..n {
            for j in 0..half {
                dealias_keep[(i, j)] = signed(i).abs() <= cutoff && (j as i64) <= cutoff;
            }
        }

        Ok(Arc::new(Self {
            n,
            length,
            k_full,
            k_deriv,
            k_half_deriv,
            dealias_keep,
            fft: Fft2::new(n),
        }))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    /// Grid spacing `h = L / n`.
    pub fn spacing(&self) -> f64 {
        self.length / self.n as f64
    }

    /// Quadrature weight of one cell, `h^2`.
    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    /// Per-axis wavenumber table in FFT storage order.
    pub fn wavenumbers(&self) -> &[f64] {
        &self.k_full
    }

    pub(crate) fn k_deriv_axis0(&self) -> &[f64] {
        &self.k_deriv
    }

    pub(crate) fn k_deriv_axis1(&self) -> &[f64] {
        &self.k_half_deriv
    }

    pub(crate) fn dealias_keep(&self) -> &Array2<bool> {
        &self.dealias_keep
    }

    pub(crate) fn fft(&self) -> &Fft2 {
        &self.fft
    }

    /// Physical coordinate of sample index `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        i as f64 * self.spacing()
    }

    pub fn same_grid(&self, other: &TorusGrid) -> bool {
        std::ptr::eq(self, other) || (self.n == other.n && self.length == other.length)
    }
}

/// Real scalar samples on a [`TorusGrid`].
#[derive(Debug, Clone)]
pub struct ScalarField {
    pub(crate) grid: Arc<TorusGrid>,
    pub values: Array2<f64>,
}

impl ScalarField {
    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        Self {
            grid: grid.clone(),
            values: Array2::zeros((grid.n(), grid.n())),
        }
    }

    pub fn constant(grid: &Arc<TorusGrid>, c: f64) -> Self {
        Self {
            grid: grid.clone(),
            values: Array2::from_elem((grid.n(), grid.n()), c),
        }
    }

    /// Sample `f(x, y)` at the grid nodes.
    pub fn from_fn(grid: &Arc<TorusGrid>, f: impl Fn(f64, f64) -> f64) -> Self {
        let n = grid.n();
        let values = Array2::from_shape_fn((n, n), |(i, j)| f(grid.coord(i), grid.coord(j)));
        Self {
            grid: grid.clone(),
            values,
        }
    }

    pub fn from_values(grid: &Arc<TorusGrid>, values: Array2<f64>) -> Result<Self> {
        if values.dim() != (grid.n(), grid.n()) {
            return Err(Error::GridMismatch(format!(
                "field shape {:?} does not match grid {}x{}",
                values.dim(),
                grid.n(),
                grid.n()
            )));
        }
        let field = Self {
            grid: grid.clone(),
            values,
        };
        field.check_finite()?;
        Ok(field)
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn check_finite(&self) -> Result<()> {
        if self.values.iter().all(|v| v.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                step: 0,
                substep: "field construction",
            })
        }
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `self + alpha * other`, elementwise.
    pub fn add_scaled(&self, alpha: f64, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.values.zip_mut_with(&other.values, |a, b| *a += alpha * b);
        out
    }

    pub fn scale(&self, alpha: f64) -> ScalarField {
        let mut out = self.clone();
        out.values.mapv_inplace(|v| alpha * v);
        out
    }
}

/// Two-component real vector field; both components share the grid.
#[derive(Debug, Clone)]
pub struct VectorField2 {
    pub(crate) grid: Arc<TorusGrid>,
    pub u1: Array2<f64>,
    pub u2: Array2<f64>,
}

impl VectorField2 {
    pub fn zeros(grid: &Arc<TorusGrid>) -> Self {
        let n = grid.n();
        Self {
            grid: grid.clone(),
            u1: Array2::zeros((n, n)),
            u2: Array2::zeros((n, n)),
        }
    }

    pub fn from_fns(
        grid: &Arc<TorusGrid>,
        f1: impl Fn(f64, f64) -> f64,
        f2: impl Fn(f64, f64) -> f64,
    ) -> Self {
        let n = grid.n();
        Self {
            grid: grid.clone(),
            u1: Array2::from_shape_fn((n, n), |(i, j)| f1(grid.coord(i), grid.coord(j))),
            u2: Array2::from_shape_fn((n, n), |(i, j)| f2(grid.coord(i), grid.coord(j))),
        }
    }

    pub fn from_components(c1: ScalarField, c2: ScalarField) -> Result<Self> {
        if !c1.grid().same_grid(c2.grid()) {
            return Err(Error::GridMismatch(
                "vector components live on different grids".into(),
            ));
        }
        Ok(Self {
            grid: c1.grid.clone(),
            u1: c1.values,
            u2: c2.values,
        })
    }

    pub fn grid(&self) -> &Arc<TorusGrid> {
        &self.grid
    }

    pub fn is_finite(&self) -> bool {
        self.u1.iter().all(|v| v.is_finite()) && self.u2.iter().all(|v| v.is_finite())
    }

    pub fn max_abs(&self) -> f64 {
        let m1 = self.u1.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        self.u2.iter().fold(m1, |m, v| m.max(v.abs()))
    }

    pub fn add_scaled(&self, alpha: f64, other: &VectorField2) -> VectorField2 {
        let mut out = self.clone();
        out.u1.zip_mut_with(&other.u1, |a, b| *a += alpha * b);
        out.u2.zip_mut_with(&other.u2, |a, b| *a += alpha * b);
        out
    }
}
