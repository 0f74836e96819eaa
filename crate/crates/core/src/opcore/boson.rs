use faer::Mat;

use super::spectral::{high_cutoff, low_cutoff, smoothed_sqrt, SpectralOperator};
use crate::{Error, Result};

/// Functional calculus of `h` on the boson grid, with the infrared scale `sigma`.
///
/// Every boson operator used downstream (`omega`, `omega_sigma`, the cutoffs,
/// powers of `omega`) is a function of `h` and shares its eigenvectors.
#[derive(Clone, Debug)]
pub struct BosonOperators {
    h: SpectralOperator,
    sigma: f64,
    omega: Vec<f64>,
}

impl BosonOperators {
    pub fn new(h: SpectralOperator, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "sigma = {sigma} must be positive"
            )));
        }
        let omega = h.eigenvalues().iter().map(|&l| l.max(0.0).sqrt()).collect();
        Ok(Self { h, sigma, omega })
    }

    pub fn h(&self) -> &SpectralOperator {
        &self.h
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn dim(&self) -> usize {
        self.h.dim()
    }

    /// Eigenvalues of `omega`, aligned with the eigenvectors of `h`.
    pub fn omega_values(&self) -> &[f64] {
        &self.omega
    }

    /// Spectral values `g(omega_k)`, checked for finiteness.
    pub fn values(&self, g: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        self.omega
            .iter()
            .map(|&w| {
                let v = g(w);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::SingularFunction { eigenvalue: w })
                }
            })
            .collect()
    }

    /// `g(omega)` as a spectral operator.
    pub fn function(&self, g: impl Fn(f64) -> f64) -> Result<SpectralOperator> {
        let v = self.values(g)?;
        Ok(SpectralOperator::from_eigen(
            v,
            self.h.eigenvectors().clone(),
            self.h.grid().cloned(),
        ))
    }

    pub fn omega(&self) -> Result<SpectralOperator> {
        self.function(|w| w)
    }

    /// `omega_sigma = f(h)` with the smoothed square root.
    pub fn omega_sigma(&self) -> Result<SpectralOperator> {
        self.h.map(smoothed_sqrt(self.sigma))
    }

    pub fn omega_sigma_values(&self) -> Vec<f64> {
        let f = smoothed_sqrt(self.sigma);
        self.h.eigenvalues().iter().map(|&l| f(l)).collect()
    }

    pub fn high_values(&self) -> Vec<f64> {
        let f = high_cutoff(self.sigma);
        self.omega.iter().map(|&w| f(w)).collect()
    }

    pub fn low_values(&self) -> Vec<f64> {
        let f = low_cutoff(self.sigma);
        self.omega.iter().map(|&w| f(w)).collect()
    }

    /// `g(omega) v` through the eigenbasis.
    pub fn apply(&self, spectral: &[f64], v: &[f64]) -> Vec<f64> {
        let mut c = self.h.to_eigenbasis(v);
        c.iter_mut().zip(spectral).for_each(|(ci, s)| *ci *= s);
        self.h.from_eigenbasis(&c)
    }

    /// Applies `g(omega)` to every row of `x` (rows are boson-grid functions).
    pub fn apply_rows(&self, spectral: &[f64], x: &Mat<f64>) -> Mat<f64> {
        let q = self.h.eigenvectors();
        let mut c = x * q;
        for j in 0..c.ncols() {
            let s = spectral[j];
            for i in 0..c.nrows() {
                c[(i, j)] *= s;
            }
        }
        &c * q.transpose()
    }

    /// Row-wise eigenbasis coefficients `x Q`.
    pub fn rows_to_eigenbasis(&self, x: &Mat<f64>) -> Mat<f64> {
        x * self.h.eigenvectors()
    }
}
