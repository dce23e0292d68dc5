//! Spectral discretization of the periodic domain: grids, fields, transforms
//! and the differential operators built on them.

mod fft;
mod grid;
mod ops;

pub use grid::{ScalarField, TorusGrid, VectorField2};
pub use ops::{
    curl1, curl2, dealias, divergence, grad, inner, inner_vec, integral, jacobian, l2_norm,
    l2_norm_sq, l2_norm_sq_vec, l2_norm_vec, laplacian, leray_project, mean, strain_tensors,
    TensorField2,
};

pub(crate) use ops::{
    apply_laplacian_symbol, deriv_spectrum, forward, inverse, kahan_sum, mask_spectrum,
    project_spectra,
};
