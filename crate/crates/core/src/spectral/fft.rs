//! Two-dimensional real-to-complex FFT engine.
//!
//! Physical fields are `n x n` real arrays; spectra are stored half-size as
//! `n x (n/2 + 1)` complex arrays (Hermitian symmetry along the second axis).
//! Axis 0 carries the full signed wavenumber range, axis 1 the non-negative
//! half range. Transforms are unnormalized in the forward direction; the
//! inverse applies the 1/n^2 factor.

use ndarray::Array2;
use num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::{Fft, FftPlanner};
use std::sync::Arc;

pub struct Fft2 {
    n: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut real_planner = RealFftPlanner::<f64>::new();
        let mut planner = FftPlanner::<f64>::new();
        Self {
            n,
            r2c: real_planner.plan_fft_forward(n),
            c2r: real_planner.plan_fft_inverse(n),
            col_fwd: planner.plan_fft_forward(n),
            col_inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn half_len(&self) -> usize {
        self.n / 2 + 1
    }

    /// Physical -> spectral (unnormalized).
    pub fn forward(&self, values: &Array2<f64>) -> Array2<Complex64> {
        let n = self.n;
        let half = self.half_len();
        debug_assert_eq!(values.dim(), (n, n));
        let mut spec = Array2::<Complex64>::zeros((n, half));

        let mut row_in = vec![0.0f64; n];
        let mut row_out = vec![Complex64::default(); half];
        let mut scratch = vec![Complex64::default(); self.r2c.get_scratch_len()];
        for i in 0..n {
            row_in.copy_from_slice(values.row(i).as_slice().expect("row-major layout"));
            self.r2c
                .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("r2c length mismatch");
            spec.row_mut(i)
                .as_slice_mut()
                .expect("row-major layout")
                .copy_from_slice(&row_out);
        }

        let mut col = vec![Complex64::default(); n];
        let mut col_scratch =
            vec![Complex64::default(); self.col_fwd.get_inplace_scratch_len()];
        for j in 0..half {
            for i in 0..n {
                col[i] = spec[(i, j)];
            }
            self.col_fwd.process_with_scratch(&mut col, &mut col_scratch);
            for i in 0..n {
                spec[(i, j)] = col[i];
            }
        }
        spec
    }

    /// Spectral -> physical, including the 1/n^2 normalization.
    pub fn inverse(&self, spec: &Array2<Complex64>) -> Array2<f64> {
        let n = self.n;
        let half = self.half_len();
        debug_assert_eq!(spec.dim(), (n, half));
        let mut work = spec.clone();

        let mut col = vec![Complex64::default(); n];
        let mut col_scratch =
            vec![Complex64::default(); self.col_inv.get_inplace_scratch_len()];
        for j in 0..half {
            for i in 0..n {
                col[i] = work[(i, j)];
            }
            self.col_inv.process_with_scratch(&mut col, &mut col_scratch);
            for i in 0..n {
                work[(i, j)] = col[i];
            }
        }

        let mut values = Array2::<f64>::zeros((n, n));
        let mut row_in = vec![Complex64::default(); half];
        let mut row_out = vec![0.0f64; n];
        let mut scratch = vec![Complex64::default(); self.c2r.get_scratch_len()];
        let norm = 1.0 / (n * n) as f64;
        for i in 0..n {
            row_in.copy_from_slice(work.row(i).as_slice().expect("row-major layout"));
            // Hermitian symmetry pins these imaginary parts to zero; clear the
            // roundoff residue left by the column transforms, which realfft
            // would otherwise reject.
            row_in[0].im = 0.0;
            row_in[half - 1].im = 0.0;
            self.c2r
                .process_with_scratch(&mut row_in, &mut row_out, &mut scratch)
                .expect("c2r length mismatch");
            let mut row = values.row_mut(i);
            let row = row.as_slice_mut().expect("row-major layout");
            for (dst, src) in row.iter_mut().zip(row_out.iter()) {
                *dst = src * norm;
            }
        }
        values
    }
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}
