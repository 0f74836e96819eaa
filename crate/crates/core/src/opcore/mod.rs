//! Discretization core: grids, coefficients, operators, functional calculus and densities.

pub mod boson;
pub mod coefficients;
pub mod density;
pub mod grid;
pub mod model;
pub mod spectral;
pub mod tensor;

pub use boson::BosonOperators;
pub use coefficients::{CoefficientModel, CoefficientSet, MatrixField, Profile};
pub use density::{ChargeDensity, DensityKind};
pub use grid::{bracket, GridSpec};
pub use model::{Model, ModelSpec};
pub use spectral::{
    assemble_h, assemble_k, assemble_k0, high_cutoff, k0_coefficient_derivative, low_cutoff,
    smoothed_sqrt, SpectralOperator,
};
pub use tensor::{TensorSum, DEFAULT_MAX_TENSOR_DIM};

/// Discrete Sobolev norm `(sum_k <xi_k>^{2s} |u^(xi_k)|^2 dxi^d)^{1/2}` of grid samples.
///
/// `u^` is the unitary transform approximated by the node sum, so `s = 0` gives
/// the weighted `L^2` norm of the samples.
pub fn sobolev_norm(u: &[f64], s: f64, grid: &GridSpec) -> f64 {
    let c = grid.forward_real(u);
    let vol = grid.box_length().powi(grid.dim() as i32);
    let sum: f64 = c
        .iter()
        .enumerate()
        .map(|(f, ck)| bracket(&grid.freq(f)).powf(2.0 * s) * ck.norm_sqr())
        .sum();
    (vol * sum).sqrt()
}
