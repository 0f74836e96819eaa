//! Dense helpers over `faer`, a small CSR type, Lanczos and conjugate gradients.

use faer::{Mat, Side};

use crate::{Error, Result, C64};

/// Eigenpairs of a real symmetric matrix, eigenvalues nondecreasing.
pub fn symmetric_eigen(m: &Mat<f64>) -> Result<(Vec<f64>, Mat<f64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i]).collect();
    Ok((values, evd.U().to_owned()))
}

/// Eigenpairs of a complex Hermitian matrix.
pub fn hermitian_eigen(m: &Mat<C64>) -> Result<(Vec<f64>, Mat<C64>)> {
    let evd = m
        .self_adjoint_eigen(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    let s = evd.S();
    let values: Vec<f64> = (0..m.nrows()).map(|i| s[i].re).collect();
    Ok((values, evd.U().to_owned()))
}

pub fn symmetric_eigenvalues(m: &Mat<f64>) -> Result<Vec<f64>> {
    m.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

pub fn frobenius(m: &Mat<f64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)] * m[(i, j)];
        }
    }
    s.sqrt()
}

pub fn frobenius_c(m: &Mat<C64>) -> f64 {
    let mut s = 0.0;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            s += m[(i, j)].norm_sqr();
        }
    }
    s.sqrt()
}

/// Largest singular value of a real matrix.
pub fn spectral_norm(m: &Mat<f64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(sv.first().copied().unwrap_or(0.0))
}

pub fn spectral_norm_c(m: &Mat<C64>) -> Result<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Ok(0.0);
    }
    let sv = m
        .singular_values()
        .map_err(|e| Error::Eigen(format!("{e:?}")))?;
    Ok(sv.first().copied().unwrap_or(0.0))
}

/// Spectral norm of a symmetric matrix via its eigenvalues.
pub fn symmetric_norm(m: &Mat<f64>) -> Result<f64> {
    let ev = symmetric_eigenvalues(m)?;
    Ok(ev.iter().fold(0.0f64, |a, v| a.max(v.abs())))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(yi, xi)| *yi += alpha * xi);
}

/// Least-squares line `y = slope * x + intercept`; returns `(slope, intercept, rms residual)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> (f64, f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rms = (x
        .iter()
        .zip(y)
        .map(|(a, b)| (b - slope * a - intercept).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    (slope, intercept, rms)
}

/// Compressed sparse row matrix with real entries.
#[derive(Clone, Debug, Default)]
pub struct CsrMatrix {
    nrows: usize,
    ncols: usize,
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<f64>,
}

/// Triplet accumulator for [`CsrMatrix`]; duplicates are summed.
#[derive(Clone, Debug, Default)]
pub struct Triplets {
    nrows: usize,
    ncols: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl Triplets {
    pub fn new(nrows: usize, ncols: usize) -> Self {
        Self {
            nrows,
            ncols,
            entries: Vec::new(),
        }
    }

    pub fn push(&mut self, row: usize, col: usize, value: f64) {
        debug_assert!(row < self.nrows && col < self.ncols);
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn build(mut self) -> CsrMatrix {
        self.entries
            .sort_unstable_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut indptr = vec![0usize; self.nrows + 1];
        let mut indices = Vec::with_capacity(self.entries.len());
        let mut values: Vec<f64> = Vec::with_capacity(self.entries.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in self.entries {
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                indices.push(c);
                values.push(v);
                indptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..self.nrows {
            indptr[r + 1] += indptr[r];
        }
        CsrMatrix {
            nrows: self.nrows,
            ncols: self.ncols,
            indptr,
            indices,
            values,
        }
    }
}

impl CsrMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        Triplets::new(nrows, ncols).build()
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    pub fn diagonal(d: &[f64]) -> Self {
        let mut t = Triplets::new(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            t.push(i, i, v);
        }
        t.build()
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.indptr[r], self.indptr[r + 1]);
        self.indices[a..b]
            .iter()
            .copied()
            .zip(self.values[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).filter(|&(j, _)| j == c).map(|(_, v)| v).sum()
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        assert_eq!(x.len(), self.ncols);
        for (r, yr) in y.iter_mut().enumerate().take(self.nrows) {
            let (a, b) = (self.indptr[r], self.indptr[r + 1]);
            let mut s = 0.0;
            for k in a..b {
                s += self.values[k] * x[self.indices[k]];
            }
            *yr = s;
        }
    }

    pub fn to_triplets(&self) -> Triplets {
        let mut t = Triplets::new(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push(r, c, v);
            }
        }
        t
    }

    pub fn transpose(&self) -> Self {
        let mut t = Triplets::new(self.ncols, self.nrows);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                t.push(c, r, v);
            }
        }
        t.build()
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= s);
        out
    }

    /// `self + s * other`
    pub fn add_scaled(&self, other: &Self, s: f64) -> Self {
        assert_eq!((self.nrows, self.ncols), (other.nrows, other.ncols));
        let mut t = self.to_triplets();
        for r in 0..other.nrows {
            for (c, v) in other.row(r) {
                t.push(r, c, s * v);
            }
        }
        t.build()
    }

    /// Sparse product `self * other`.
    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.ncols, other.nrows);
        let mut t = Triplets::new(self.nrows, other.ncols);
        let mut acc = vec![0.0; other.ncols];
        let mut touched: Vec<usize> = Vec::new();
        for r in 0..self.nrows {
            for (k, v) in self.row(r) {
                for (c, w) in other.row(k) {
                    if acc[c] == 0.0 {
                        touched.push(c);
                    }
                    acc[c] += v * w;
                }
            }
            for &c in &touched {
                t.push(r, c, acc[c]);
                acc[c] = 0.0;
            }
            touched.clear();
        }
        t.build()
    }

    pub fn to_dense(&self) -> Mat<f64> {
        let mut m = Mat::<f64>::zeros(self.nrows, self.ncols);
        for r in 0..self.nrows {
            for (c, v) in self.row(r) {
                m[(r, c)] += v;
            }
        }
        m
    }

    pub fn from_dense(m: &Mat<f64>, drop_below: f64) -> Self {
        let mut t = Triplets::new(m.nrows(), m.ncols());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                let v = m[(r, c)];
                if v.abs() > drop_below {
                    t.push(r, c, v);
                }
            }
        }
        t.build()
    }

    /// Largest `|A_ij - A_ji|` and largest `|A_ij|`.
    pub fn asymmetry(&self) -> (f64, f64) {
        let tr = self.transpose();
        let diff = self.add_scaled(&tr, -1.0);
        let a = diff.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let s = self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (a, s)
    }

    /// Kronecker product `a (x) b`.
    pub fn kron(a: &Self, b: &Self) -> Self {
        let mut t = Triplets::new(a.nrows * b.nrows, a.ncols * b.ncols);
        for ra in 0..a.nrows {
            for (ca, va) in a.row(ra) {
                for rb in 0..b.nrows {
                    for (cb, vb) in b.row(rb) {
                        t.push(ra * b.nrows + rb, ca * b.ncols + cb, va * vb);
                    }
                }
            }
        }
        t.build()
    }
}

/// Which end of the spectrum a Krylov iteration targets.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Extreme {
    Lowest,
    Highest,
}

/// Result of a Lanczos run.
#[derive(Clone, Debug)]
pub struct LanczosResult {
    pub value: f64,
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Lanczos with full reorthogonalization for one extreme eigenpair of a symmetric operator.
///
/// The start vector is deterministic. Convergence is declared when the Ritz residual
/// `|beta_k s_k|` drops below `tol * max(1, |theta|)`.
pub fn lanczos(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    dim: usize,
    which: Extreme,
    tol: f64,
    max_iter: usize,
) -> Result<LanczosResult> {
    if dim == 0 {
        return Err(Error::InvalidArgument("empty operator".into()));
    }
    let mut q0: Vec<f64> = (0..dim)
        .map(|i| 1.0 + 0.5 * ((i as f64 + 1.0) * 0.618_033_988_749_895).fract())
        .collect();
    let n0 = norm2(&q0);
    q0.iter_mut().for_each(|v| *v /= n0);
    let mut basis: Vec<Vec<f64>> = vec![q0];
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let cap = max_iter.min(dim);
    let mut best: Option<(f64, Vec<f64>, f64)> = None;
    for k in 0..cap {
        let mut w = apply(&basis[k]);
        let a = dot(&w, &basis[k]);
        alphas.push(a);
        for _ in 0..2 {
            for q in &basis {
                let c = dot(&w, q);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm2(&w);
        let last = b < 1e-14 || k + 1 == cap;
        // the small eigenproblem is re-solved only every few steps
        if last || k < 8 || k % 6 == 5 {
            let (theta, s) = tridiagonal_extreme(&alphas, &betas, which)?;
            let res = (b * s[k]).abs();
            let converged = res <= tol * theta.abs().max(1.0);
            best = Some((theta, s, res));
            if converged || last {
                break;
            }
        }
        betas.push(b);
        w.iter_mut().for_each(|v| *v /= b);
        basis.push(w);
    }
    let (value, s, residual) = best.expect("at least one iteration");
    let mut vector = vec![0.0; dim];
    for (coef, q) in s.iter().zip(&basis) {
        axpy(*coef, q, &mut vector);
    }
    let nv = norm2(&vector);
    vector.iter_mut().for_each(|v| *v /= nv);
    if residual > 1e3 * tol * value.abs().max(1.0) && basis.len() < dim {
        return Err(Error::NoConvergence(format!(
            "Lanczos residual {residual:.3e} after {} iterations",
            basis.len()
        )));
    }
    Ok(LanczosResult {
        value,
        vector,
        iterations: alphas.len(),
        residual,
    })
}

fn tridiagonal_extreme(alphas: &[f64], betas: &[f64], which: Extreme) -> Result<(f64, Vec<f64>)> {
    let k = alphas.len();
    let t = Mat::<f64>::from_fn(k, k, |i, j| {
        if i == j {
            alphas[i]
        } else if i + 1 == j {
            betas[i]
        } else if j + 1 == i {
            betas[j]
        } else {
            0.0
        }
    });
    let (vals, vecs) = symmetric_eigen(&t)?;
    let idx = match which {
        Extreme::Lowest => 0,
        Extreme::Highest => k - 1,
    };
    Ok((vals[idx], (0..k).map(|i| vecs[(i, idx)]).collect()))
}

/// Conjugate gradients for a symmetric positive definite operator.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Result<Vec<f64>> {
    let n = b.len();
    let bn = norm2(b);
    if bn == 0.0 {
        return Ok(vec![0.0; n]);
    }
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    for _ in 0..max_iter {
        let ap = apply(&p);
        let pap = dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NoConvergence(
                "operator is not positive definite".into(),
            ));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= tol * bn {
            return Ok(x);
        }
        let beta = rr_new / rr;
        p.iter_mut()
            .zip(&r)
            .for_each(|(pi, ri)| *pi = ri + beta * *pi);
        rr = rr_new;
    }
    Err(Error::NoConvergence(format!(
        "CG did not reach {tol:.1e} in {max_iter} iterations"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn laplacian(n: usize) -> CsrMatrix {
        let mut t = Triplets::new(n, n);
        for i in 0..n {
            t.push(i, i, 2.0 + i as f64 * 0.01);
            if i + 1 < n {
                t.push(i, i + 1, -1.0);
                t.push(i + 1, i, -1.0);
            }
        }
        t.build()
    }

    #[test]
    fn lanczos_matches_dense() {
        let a = laplacian(60);
        let dense = a.to_dense();
        let ev = symmetric_eigenvalues(&dense).unwrap();
        let lo = lanczos(|v| a.matvec(v), 60, Extreme::Lowest, 1e-12, 200).unwrap();
        let hi = lanczos(|v| a.matvec(v), 60, Extreme::Highest, 1e-12, 200).unwrap();
        assert!((lo.value - ev[0]).abs() < 1e-10);
        assert!((hi.value - ev[59]).abs() < 1e-10);
    }

    #[test]
    fn cg_solves() {
        let a = laplacian(40);
        let b: Vec<f64> = (0..40).map(|i| (i as f64).sin()).collect();
        let x = conjugate_gradient(|v| a.matvec(v), &b, 1e-13, 500).unwrap();
        let r = a.matvec(&x);
        for (ri, bi) in r.iter().zip(&b) {
            assert!((ri - bi).abs() < 1e-11);
        }
    }

    #[test]
    fn triplets_sum_duplicates_and_multiply() {
        let mut t = Triplets::new(2, 2);
        t.push(0, 0, 1.0);
        t.push(0, 0, 2.0);
        t.push(1, 0, 4.0);
        let a = t.build();
        assert_eq!(a.get(0, 0), 3.0);
        let p = a.matmul(&a.transpose());
        assert_eq!(p.get(1, 1), 16.0);
        assert_eq!(p.get(0, 1), 12.0);
    }

    #[test]
    fn line_fit_recovers_slope() {
        let x: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let y: Vec<f64> = x.iter().map(|v| -1.5 * v + 2.0).collect();
        let (s, c, r) = fit_line(&x, &y);
        assert!((s + 1.5).abs() < 1e-12 && (c - 2.0).abs() < 1e-12 && r < 1e-12);
    }
}
