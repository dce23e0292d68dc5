//! Shared helpers for the in-crate tests.

use crate::spectral::{ScalarField, TorusGrid, VectorField2};
use ndarray::Array2;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use std::sync::Arc;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// White-noise scalar field with entries uniform in [-1, 1].
pub fn random_field(grid: &Arc<TorusGrid>, rng: &mut ChaCha12Rng) -> ScalarField {
    let n = grid.n();
    let values = Array2::from_shape_fn((n, n), |_| rng.random_range(-1.0..1.0));
    ScalarField::from_values(grid, values).unwrap()
}

pub fn random_vector(grid: &Arc<TorusGrid>, rng: &mut ChaCha12Rng) -> VectorField2 {
    let a = random_field(grid, rng);
    let b = random_field(grid, rng);
    VectorField2::from_components(a, b).unwrap()
}

pub fn assert_close(actual: f64, expected: f64, tol: f64, what: &str) {
    assert!(
        (actual - expected).abs() <= tol,
        "{what}: got {actual:.ce$e}, expected {expected:.ce$e}, tol {tol:.1e}, err {:.3e}",
        (actual - expected).abs(),
        ce = 17,
    );
}

pub fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}
