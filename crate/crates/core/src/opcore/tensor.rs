use faer::Mat;

use super::spectral::SpectralOperator;
use crate::linalg::symmetric_eigen;
use crate::{Error, Result};

/// Default bound on the tensor dimension `P * B`.
pub const DEFAULT_MAX_TENSOR_DIM: usize = 20_000;

/// Tensor sum `T = K (x) I + I (x) W` on the particle-boson product grid.
///
/// Tensor vectors are stored as `P x B` matrices with rows indexed by particle
/// nodes; the flat index is `i * B + j`.
#[derive(Clone, Debug)]
pub struct TensorSum {
    particle: SpectralOperator,
    boson: SpectralOperator,
}

impl TensorSum {
    pub fn new(
        particle: SpectralOperator,
        boson: SpectralOperator,
        max_dim: usize,
    ) -> Result<Self> {
        let dim = particle.dim() * boson.dim();
        if dim > max_dim {
            return Err(Error::DimensionOverflow { dim, max: max_dim });
        }
        Ok(Self { particle, boson })
    }

    pub fn particle(&self) -> &SpectralOperator {
        &self.particle
    }

    pub fn boson(&self) -> &SpectralOperator {
        &self.boson
    }

    pub fn dim(&self) -> usize {
        self.particle.dim() * self.boson.dim()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.particle.min_eigenvalue() + self.boson.min_eigenvalue()
    }

    /// All eigenvalues `k_i + w_j`, sorted.
    pub fn spectrum(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self
            .particle
            .eigenvalues()
            .iter()
            .flat_map(|k| self.boson.eigenvalues().iter().map(move |w| k + w))
            .collect();
        out.sort_by(f64::total_cmp);
        out
    }

    fn check_shape(&self, s: &Mat<f64>) -> Result<()> {
        if s.nrows() != self.particle.dim() || s.ncols() != self.boson.dim() {
            return Err(Error::Shape(format!(
                "tensor vector is {}x{}, expected {}x{}",
                s.nrows(),
                s.ncols(),
                self.particle.dim(),
                self.boson.dim()
            )));
        }
        Ok(())
    }

    /// `T S = K S + S W`.
    pub fn apply(&self, s: &Mat<f64>) -> Result<Mat<f64>> {
        self.check_shape(s)?;
        Ok(self.particle.apply_left(s) + self.boson.apply_right(s))
    }

    /// `T^{-1} S` in the product eigenbasis.
    pub fn solve(&self, s: &Mat<f64>) -> Result<Mat<f64>> {
        self.check_shape(s)?;
        let qk = self.particle.eigenvectors();
        let qw = self.boson.eigenvectors();
        let mut c = qk.transpose() * s * qw;
        let lk = self.particle.eigenvalues();
        let lw = self.boson.eigenvalues();
        for j in 0..c.ncols() {
            for i in 0..c.nrows() {
                let d = lk[i] + lw[j];
                if !(d.abs() > 1e-300) {
                    return Err(Error::SingularFunction { eigenvalue: d });
                }
                c[(i, j)] /= d;
            }
        }
        Ok(qk * &c * qw.transpose())
    }

    /// Dense `(P B) x (P B)` matrix; subject to the same dimension guard.
    pub fn to_dense(&self) -> Mat<f64> {
        let p = self.particle.dim();
        let b = self.boson.dim();
        let k = self.particle.matrix();
        let w = self.boson.matrix();
        Mat::<f64>::from_fn(p * b, p * b, |r, c| {
            let (i, j) = (r / b, r % b);
            let (i2, j2) = (c / b, c % b);
            let mut v = 0.0;
            if j == j2 {
                v += k[(i, i2)];
            }
            if i == i2 {
                v += w[(j, j2)];
            }
            v
        })
    }

    /// Dense eigenvalues of [`Self::to_dense`], for cross-checks on small grids.
    pub fn dense_spectrum(&self) -> Result<Vec<f64>> {
        Ok(symmetric_eigen(&self.to_dense())?.0)
    }
}

/// Flattens a `P x B` tensor matrix into the `i * B + j` ordering.
pub fn flatten(s: &Mat<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(s.nrows() * s.ncols());
    for i in 0..s.nrows() {
        for j in 0..s.ncols() {
            out.push(s[(i, j)]);
        }
    }
    out
}

pub fn unflatten(v: &[f64], rows: usize, cols: usize) -> Mat<f64> {
    Mat::<f64>::from_fn(rows, cols, |i, j| v[i * cols + j])
}

#[cfg(test)]
mod tests {
    use super::*;
    use faer::Mat;

    fn diag_op(values: &[f64]) -> SpectralOperator {
        let n = values.len();
        SpectralOperator::from_symmetric(
            Mat::<f64>::from_fn(n, n, |i, j| if i == j { values[i] } else { 0.0 }),
            None,
        )
        .unwrap()
    }

    #[test]
    fn tensor_sum_spectrum() {
        let t = TensorSum::new(diag_op(&[0.0, 0.5]), diag_op(&[1.0, 2.0]), 100).unwrap();
        assert_eq!(t.spectrum(), vec![1.0, 1.5, 2.0, 2.5]);
        let dense = t.dense_spectrum().unwrap();
        for (a, b) in dense.iter().zip([1.0, 1.5, 2.0, 2.5]) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn dimension_guard() {
        let a = diag_op(&[1.0; 8]);
        assert!(matches!(
            TensorSum::new(a.clone(), a, 63),
            Err(Error::DimensionOverflow { dim: 64, max: 63 })
        ));
    }
}
