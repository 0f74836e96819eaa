use faer::Mat;

use super::coefficients::CoefficientSet;
use super::grid::GridSpec;
use crate::linalg::{frobenius, symmetric_eigen};
use crate::{Error, Result, C64};

/// Real symmetric matrix together with its cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct SpectralOperator {
    matrix: Mat<f64>,
    eigenvalues: Vec<f64>,
    eigenvectors: Mat<f64>,
    grid: Option<GridSpec>,
}

impl SpectralOperator {
    /// Diagonalizes `matrix`, which must be symmetric to `1e-12` relative (Frobenius).
    pub fn from_symmetric(mut matrix: Mat<f64>, grid: Option<GridSpec>) -> Result<Self> {
        let n = matrix.nrows();
        if matrix.ncols() != n {
            return Err(Error::Shape(format!(
                "{}x{} matrix is not square",
                n,
                matrix.ncols()
            )));
        }
        let scale = frobenius(&matrix).max(f64::MIN_POSITIVE);
        let mut asym = 0.0;
        for j in 0..n {
            for i in 0..j {
                let d = matrix[(i, j)] - matrix[(j, i)];
                asym += 2.0 * d * d;
            }
        }
        let residual = asym.sqrt() / scale;
        if residual > 1e-12 {
            return Err(Error::NotHermitian { residual });
        }
        for j in 0..n {
            for i in 0..j {
                let s = 0.5 * (matrix[(i, j)] + matrix[(j, i)]);
                matrix[(i, j)] = s;
                matrix[(j, i)] = s;
            }
        }
        let (eigenvalues, eigenvectors) = symmetric_eigen(&matrix)?;
        Ok(Self {
            matrix,
            eigenvalues,
            eigenvectors,
            grid,
        })
    }

    /// Builds `Q diag(values) Q^T` from a known orthonormal basis.
    pub fn from_eigen(
        eigenvalues: Vec<f64>,
        eigenvectors: Mat<f64>,
        grid: Option<GridSpec>,
    ) -> Self {
        let matrix = reconstruct(&eigenvalues, &eigenvectors);
        Self {
            matrix,
            eigenvalues,
            eigenvectors,
            grid,
        }
    }

    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn matrix(&self) -> &Mat<f64> {
        &self.matrix
    }

    /// Eigenvalues in nondecreasing order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Orthonormal eigenvectors as columns, in the order of [`Self::eigenvalues`].
    pub fn eigenvectors(&self) -> &Mat<f64> {
        &self.eigenvectors
    }

    pub fn grid(&self) -> Option<&GridSpec> {
        self.grid.as_ref()
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        self.eigenvalues[self.eigenvalues.len() - 1]
    }

    /// Spectral norm.
    pub fn norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// `f(op)` by functional calculus on the cached eigenbasis.
    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        let values = self.map_values(&f)?;
        Ok(Self::from_eigen(
            values,
            self.eigenvectors.clone(),
            self.grid.clone(),
        ))
    }

    /// `f` applied to the spectrum, checked for finiteness.
    pub fn map_values(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        self.eigenvalues
            .iter()
            .map(|&l| {
                let v = f(l);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::SingularFunction { eigenvalue: l })
                }
            })
            .collect()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        assert_eq!(v.len(), n, "vector length does not match operator");
        let mut out = vec![0.0; n];
        for j in 0..n {
            let vj = v[j];
            if vj != 0.0 {
                let col = self.matrix.col(j);
                for i in 0..n {
                    out[i] += col[i] * vj;
                }
            }
        }
        out
    }

    /// `M X` for a matrix whose rows are indexed by this operator's space.
    pub fn apply_left(&self, x: &Mat<f64>) -> Mat<f64> {
        &self.matrix * x
    }

    /// `X M` for a matrix whose columns are indexed by this operator's space.
    pub fn apply_right(&self, x: &Mat<f64>) -> Mat<f64> {
        x * &self.matrix
    }

    /// Coefficients of `v` in the eigenbasis, `Q^T v`.
    pub fn to_eigenbasis(&self, v: &[f64]) -> Vec<f64> {
        let n = self.dim();
        (0..n)
            .map(|k| {
                let col = self.eigenvectors.col(k);
                (0..n).map(|i| col[i] * v[i]).sum()
            })
            .collect()
    }

    pub fn from_eigenbasis(&self, c: &[f64]) -> Vec<f64> {
        let n = self.dim();
        let mut out = vec![0.0; n];
        for (k, &ck) in c.iter().enumerate() {
            if ck != 0.0 {
                let col = self.eigenvectors.col(k);
                for i in 0..n {
                    out[i] += col[i] * ck;
                }
            }
        }
        out
    }

    /// `||M - Q L Q^T|| / ||M||` in the Frobenius norm.
    pub fn reconstruction_residual(&self) -> f64 {
        let r = reconstruct(&self.eigenvalues, &self.eigenvectors);
        frobenius(&(&self.matrix - &r)) / frobenius(&self.matrix).max(f64::MIN_POSITIVE)
    }

    /// `max |Q^T Q - I|`.
    pub fn orthonormality_residual(&self) -> f64 {
        let g = self.eigenvectors.transpose() * &self.eigenvectors;
        let mut worst = 0.0f64;
        for j in 0..g.ncols() {
            for i in 0..g.nrows() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g[(i, j)] - target).abs());
            }
        }
        worst
    }

    /// Whether the smallest eigenvalue is above `-tol * ||M||`.
    pub fn is_semidefinite(&self, tol: f64) -> bool {
        self.min_eigenvalue() >= -tol * self.norm().max(1.0)
    }
}

pub(crate) fn reconstruct(values: &[f64], vectors: &Mat<f64>) -> Mat<f64> {
    let n = vectors.nrows();
    let scaled = Mat::<f64>::from_fn(n, values.len(), |i, k| vectors[(i, k)] * values[k]);
    &scaled * vectors.transpose()
}

/// Quintic Hermite profile for the smoothed square root: `sigma` below `sigma^2`,
/// `sqrt(lambda)` above `4 sigma^2`, matching value and two derivatives at both ends.
pub fn smoothed_sqrt(sigma: f64) -> impl Fn(f64) -> f64 + Clone {
    move |lambda: f64| {
        let l = lambda.abs();
        let lo = sigma * sigma;
        let hi = 4.0 * lo;
        if l <= lo {
            return sigma;
        }
        if l >= hi {
            return l.sqrt();
        }
        let t = (l - lo) / (hi - lo);
        let span = hi - lo;
        let (p0, v0, a0) = (sigma, 0.0, 0.0);
        let p1 = 2.0 * sigma;
        let v1 = span / (4.0 * sigma);
        let a1 = -span * span / (32.0 * sigma.powi(3));
        let t2 = t * t;
        let t3 = t2 * t;
        let t4 = t3 * t;
        let t5 = t4 * t;
        let h00 = 1.0 - 10.0 * t3 + 15.0 * t4 - 6.0 * t5;
        let h10 = t - 6.0 * t3 + 8.0 * t4 - 3.0 * t5;
        let h20 = 0.5 * t2 - 1.5 * t3 + 1.5 * t4 - 0.5 * t5;
        let h01 = 10.0 * t3 - 15.0 * t4 + 6.0 * t5;
        let h11 = -4.0 * t3 + 7.0 * t4 - 3.0 * t5;
        let h21 = 0.5 * t3 - t4 + 0.5 * t5;
        p0 * h00 + v0 * h10 + a0 * h20 + p1 * h01 + v1 * h11 + a1 * h21
    }
}

/// Smooth cutoff onto `|lambda| >= sigma`: 0 below `2 sigma`, 1 above `4 sigma`.
pub fn high_cutoff(sigma: f64) -> impl Fn(f64) -> f64 + Clone {
    move |lambda: f64| {
        let t = ((lambda.abs() - 2.0 * sigma) / (2.0 * sigma)).clamp(0.0, 1.0);
        t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
    }
}

/// Complement `1 - high_cutoff`.
pub fn low_cutoff(sigma: f64) -> impl Fn(f64) -> f64 + Clone {
    let f = high_cutoff(sigma);
    move |lambda: f64| 1.0 - f(lambda)
}

/// `Re(sum_jk D_j^* diag(c_jk) D_k)` with `D_j` the complex spectral momentum.
fn divergence_form(grid: &GridSpec, field: &[[[f64; 3]; 3]]) -> Mat<f64> {
    let n = grid.len();
    let d = grid.dim();
    let momenta: Vec<Mat<C64>> = (0..d).map(|a| grid.momentum_matrix(a)).collect();
    let mut out = Mat::<f64>::zeros(n, n);
    for j in 0..d {
        let mut y = Mat::<C64>::zeros(n, n);
        for k in 0..d {
            let dk = &momenta[k];
            for c in 0..n {
                for r in 0..n {
                    y[(r, c)] += dk[(r, c)] * field[r][j][k];
                }
            }
        }
        let prod = momenta[j].adjoint() * &y;
        for c in 0..n {
            for r in 0..n {
                out[(r, c)] += prod[(r, c)].re;
            }
        }
    }
    out
}

fn build(
    grid: &GridSpec,
    field: &[[[f64; 3]; 3]],
    potential: &[f64],
    label: &str,
) -> Result<SpectralOperator> {
    let mut m = divergence_form(grid, field);
    for (i, p) in potential.iter().enumerate() {
        m[(i, i)] += p;
    }
    let op = SpectralOperator::from_symmetric(m, Some(grid.clone()))?;
    if !op.is_semidefinite(1e-9) {
        log::warn!(
            "{label} is indefinite: min eigenvalue {:.3e} (norm {:.3e})",
            op.min_eigenvalue(),
            op.norm()
        );
    }
    Ok(op)
}

/// One-particle operator `h = sum D_j a^{jk} D_k + v + m^2` on the boson grid.
pub fn assemble_h(grid: &GridSpec, coeffs: &CoefficientSet) -> Result<SpectralOperator> {
    if coeffs.a.len() != grid.len() {
        return Err(Error::Shape(
            "boson coefficient samples do not match grid".into(),
        ));
    }
    build(grid, &coeffs.a, &coeffs.potential, "h")
}

/// Electron kinetic operator `K0 = sum D_j A^{jk} D_k` on the particle grid.
pub fn assemble_k0(grid: &GridSpec, coeffs: &CoefficientSet) -> Result<SpectralOperator> {
    if coeffs.big_a.len() != grid.len() {
        return Err(Error::Shape(
            "particle coefficient samples do not match grid".into(),
        ));
    }
    build(grid, &coeffs.big_a, &vec![0.0; grid.len()], "K0")
}

/// `K = K0 + W`.
pub fn assemble_k(grid: &GridSpec, coeffs: &CoefficientSet) -> Result<SpectralOperator> {
    if coeffs.big_a.len() != grid.len() {
        return Err(Error::Shape(
            "particle coefficient samples do not match grid".into(),
        ));
    }
    build(grid, &coeffs.big_a, &coeffs.w, "K")
}

/// Matrix of `sum_jk D_j (d_axis A^{jk}) D_k`, the commutator `[d_X_axis, K0]`.
pub fn k0_coefficient_derivative(
    grid: &GridSpec,
    coeffs: &CoefficientSet,
    axis: usize,
) -> Mat<f64> {
    let d = grid.dim();
    let field: Vec<[[f64; 3]; 3]> = (0..grid.len())
        .map(|i| coeffs.model.big_a.derivative(&grid.node(i), d, axis))
        .collect();
    divergence_form(grid, &field)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::coefficients::CoefficientModel;
    use std::f64::consts::PI;

    #[test]
    fn constant_h_spectrum_is_xi_squared_plus_one() {
        let g = GridSpec::new(1, 8, 2.0 * PI).unwrap();
        let c = CoefficientSet::sample(&CoefficientModel::constant(1, 1.0, 0.5), &g, &g).unwrap();
        let h = assemble_h(&g, &c).unwrap();
        let mut expect: Vec<f64> = g.axis_freqs().iter().map(|x| x * x + 1.0).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in h.eigenvalues().iter().zip(expect) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn profiles_are_continuous_at_the_joints() {
        let s = 0.7;
        let f = smoothed_sqrt(s);
        for (l, target) in [(s * s, s), (4.0 * s * s, 2.0 * s)] {
            assert!((f(l * (1.0 + 1e-12)) - target).abs() < 1e-9);
            assert!((f(l * (1.0 - 1e-12)) - target).abs() < 1e-9);
        }
        let mut prev = f(0.0);
        for i in 0..2000 {
            let v = f(i as f64 * 0.002);
            assert!(v >= prev - 1e-15 && v >= s);
            prev = v;
        }
        let hc = high_cutoff(s);
        assert_eq!(hc(2.0 * s), 0.0);
        assert_eq!(hc(4.0 * s), 1.0);
    }
}
