use faer::Mat;

use super::basis::FockBasis;
use crate::linalg::{hermitian_eigen, norm2, CsrMatrix, Triplets};
use crate::opcore::{BosonOperators, GridSpec, Model, SpectralOperator};
use crate::{Error, Result, C64};

/// The lowest `M` eigenmodes of `h`, normalized in the grid `L^2` product.
#[derive(Clone, Debug)]
pub struct ModeSet {
    /// `B x M`, columns are the raw (Euclidean-normalized) eigenvectors.
    vectors: Mat<f64>,
    omega: Vec<f64>,
    cell: f64,
}

impl ModeSet {
    pub fn lowest(boson: &BosonOperators, grid: &GridSpec, count: usize) -> Result<Self> {
        if count == 0 || count > boson.dim() {
            return Err(Error::InvalidArgument(format!(
                "cannot select {count} of {} modes",
                boson.dim()
            )));
        }
        let q = boson.h().eigenvectors();
        let vectors = Mat::<f64>::from_fn(q.nrows(), count, |i, m| q[(i, m)]);
        Ok(Self {
            vectors,
            omega: boson.omega_values()[..count].to_vec(),
            cell: grid.cell_volume(),
        })
    }

    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    /// `omega` on the selected modes.
    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Mode coefficients `(e_m | f)` and the norm fraction of `f` outside the span.
    pub fn project(&self, f: &[f64]) -> (Vec<f64>, f64) {
        let s = self.cell.sqrt();
        let c: Vec<f64> = (0..self.len())
            .map(|m| {
                s * (0..f.len())
                    .map(|i| self.vectors[(i, m)] * f[i])
                    .sum::<f64>()
            })
            .collect();
        let total = self.cell * f.iter().map(|v| v * v).sum::<f64>();
        let kept: f64 = c.iter().map(|v| v * v).sum();
        let leak = if total > 0.0 {
            ((total - kept).max(0.0) / total).sqrt()
        } else {
            0.0
        };
        (c, leak)
    }

    /// Row-wise projection of a `P x B` tensor matrix; returns `P x M` and the worst leakage.
    pub fn project_rows(&self, m: &Mat<f64>) -> (Mat<f64>, f64) {
        let mut out = Mat::<f64>::zeros(m.nrows(), self.len());
        let mut worst = 0.0f64;
        for i in 0..m.nrows() {
            let row: Vec<f64> = (0..m.ncols()).map(|j| m[(i, j)]).collect();
            let (c, leak) = self.project(&row);
            worst = worst.max(leak);
            for (k, v) in c.into_iter().enumerate() {
                out[(i, k)] = v;
            }
        }
        (out, worst)
    }
}

/// Particle grid tensored with a truncated Fock space; flat index `i * D + s`.
#[derive(Clone, Debug)]
pub struct CoupledSystem {
    particle: SpectralOperator,
    k0: Mat<f64>,
    derivatives: Vec<Mat<f64>>,
    big_a: Vec<[[f64; 3]; 3]>,
    fock: FockBasis,
    omega: Vec<f64>,
}

/// Mode-space ingredients of the dressed Hamiltonian, all `P x M` or per node.
#[derive(Clone, Debug)]
pub struct DressedParts {
    /// `omega^{-1/2} rho + (K0 + omega) beta`, projected.
    pub coupling: Mat<f64>,
    /// `d/dX_j beta`, projected, one matrix per axis.
    pub grad_beta: Vec<Mat<f64>>,
    /// `V(X_i)` on the projected vectors.
    pub potential: Vec<f64>,
    /// Subtracted energy per node.
    pub shift: Vec<f64>,
}

impl CoupledSystem {
    pub fn new(
        particle: SpectralOperator,
        k0: Mat<f64>,
        derivatives: Vec<Mat<f64>>,
        big_a: Vec<[[f64; 3]; 3]>,
        fock: FockBasis,
        omega: Vec<f64>,
    ) -> Result<Self> {
        let p = particle.dim();
        if k0.nrows() != p || big_a.len() != p || derivatives.iter().any(|d| d.nrows() != p) {
            return Err(Error::Shape("particle operators disagree in size".into()));
        }
        if omega.len() != fock.modes() {
            return Err(Error::Shape(
                "mode energies do not match the Fock basis".into(),
            ));
        }
        Ok(Self {
            particle,
            k0,
            derivatives,
            big_a,
            fock,
            omega,
        })
    }

    /// Particle operators from `model`, modes `omega` from `modes`.
    pub fn from_model(model: &Model, fock: FockBasis, modes: &ModeSet) -> Result<Self> {
        let pg = model.particle_grid();
        let derivatives = (0..pg.dim()).map(|a| pg.derivative_matrix(a)).collect();
        Self::new(
            model.k.clone(),
            model.k0.matrix().clone(),
            derivatives,
            model.coeffs.big_a.clone(),
            fock,
            modes.omega().to_vec(),
        )
    }

    /// Single-node system with `K = 0`, for pure Fock-space checks.
    pub fn single_node(fock: FockBasis, omega: Vec<f64>) -> Result<Self> {
        let zero = Mat::<f64>::zeros(1, 1);
        let particle = SpectralOperator::from_symmetric(zero.clone(), None)?;
        Self::new(particle, zero, Vec::new(), vec![[[0.0; 3]; 3]], fock, omega)
    }

    pub fn particle_dim(&self) -> usize {
        self.particle.dim()
    }

    pub fn fock(&self) -> &FockBasis {
        &self.fock
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    /// Kinetic part `K0` of the particle operator.
    pub fn k0(&self) -> &Mat<f64> {
        &self.k0
    }

    pub fn big_a(&self) -> &[[[f64; 3]; 3]] {
        &self.big_a
    }

    pub fn particle(&self) -> &SpectralOperator {
        &self.particle
    }

    pub fn dim(&self) -> usize {
        self.particle_dim() * self.fock.dim()
    }

    /// `m (x) I_D`.
    pub fn particle_op(&self, m: &Mat<f64>) -> CsrMatrix {
        let d = self.fock.dim();
        let mut t = Triplets::new(self.dim(), self.dim());
        for i in 0..m.nrows() {
            for l in 0..m.ncols() {
                let v = m[(i, l)];
                if v != 0.0 {
                    for s in 0..d {
                        t.push(i * d + s, l * d + s, v);
                    }
                }
            }
        }
        t.build()
    }

    /// Diagonal of `I (x) dGamma(omega)`.
    pub fn free_field_diagonal(&self) -> Vec<f64> {
        let e = self.fock.second_quantize_diagonal(&self.omega);
        (0..self.particle_dim())
            .flat_map(|_| e.iter().copied())
            .collect()
    }

    /// `sum_i |X_i><X_i| (x) diag(values_i)`.
    pub fn node_diagonal(&self, values: &[f64]) -> CsrMatrix {
        let d = self.fock.dim();
        CsrMatrix::diagonal(&(0..self.dim()).map(|r| values[r / d]).collect::<Vec<_>>())
    }

    /// `H0 = K (x) I + I (x) dGamma(omega)`.
    pub fn h0(&self) -> CsrMatrix {
        self.particle_op(self.particle.matrix())
            .add_scaled(&CsrMatrix::diagonal(&self.free_field_diagonal()), 1.0)
    }

    /// Spectrum bottom of `H0`: `min spec K + 0`.
    pub fn h0_min(&self) -> f64 {
        self.particle.min_eigenvalue()
    }

    fn check_rows(&self, m: &Mat<f64>) -> Result<()> {
        if m.nrows() != self.particle_dim() || m.ncols() != self.fock.modes() {
            return Err(Error::Shape(format!(
                "coupling is {}x{}, expected {}x{}",
                m.nrows(),
                m.ncols(),
                self.particle_dim(),
                self.fock.modes()
            )));
        }
        Ok(())
    }

    fn row(m: &Mat<f64>, i: usize) -> Vec<f64> {
        (0..m.ncols()).map(|j| m[(i, j)]).collect()
    }

    /// `sum_i |X_i><X_i| (x) a(v_i)` for a `P x M` coupling.
    pub fn block_annihilation(&self, v: &Mat<f64>) -> Result<CsrMatrix> {
        self.check_rows(v)?;
        let d = self.fock.dim();
        let mut t = Triplets::new(self.dim(), self.dim());
        for i in 0..self.particle_dim() {
            self.fock
                .push_annihilation(&mut t, &Self::row(v, i), i * d, 1.0);
        }
        Ok(t.build())
    }

    /// `sum_i |X_i><X_i| (x) phi(g_i)`.
    pub fn interaction(&self, g: &Mat<f64>) -> Result<CsrMatrix> {
        let a = self.block_annihilation(g)?;
        Ok(a.add_scaled(&a.transpose(), 1.0)
            .scaled(std::f64::consts::FRAC_1_SQRT_2))
    }

    /// `H = K + dGamma(omega) + phi(g_X)`.
    pub fn hamiltonian(&self, g: &Mat<f64>) -> Result<CsrMatrix> {
        Ok(self.h0().add_scaled(&self.interaction(g)?, 1.0))
    }

    /// Block generator `J = sum_i |X_i><X_i| (x) (a*(beta_i) - a(beta_i)) / sqrt 2`; `U = exp(-J)`.
    pub fn generator(&self, beta: &Mat<f64>) -> Result<CsrMatrix> {
        let a = self.block_annihilation(beta)?;
        Ok(a.transpose()
            .add_scaled(&a, -1.0)
            .scaled(std::f64::consts::FRAC_1_SQRT_2))
    }

    /// Dressed Hamiltonian in the algebraic form
    /// `K + dGamma(omega) + phi(coupling) + R + V - E`, with `a_j = a(d_j beta) / sqrt 2` and
    /// `R = 2 sum (d_j A_jk a_k - a_j^* A_jk d_k) + sum A_jk (2 a_j^* a_k - a_j^* a_k^* - a_j a_k)`.
    pub fn assemble_dressed(&self, parts: &DressedParts) -> Result<CsrMatrix> {
        let dims = self.derivatives.len();
        if parts.grad_beta.len() != dims {
            return Err(Error::Shape(
                "one gradient per particle axis is required".into(),
            ));
        }
        let p = self.particle_dim();
        if parts.potential.len() != p || parts.shift.len() != p {
            return Err(Error::Shape(
                "scalar terms must have one value per particle node".into(),
            ));
        }
        let ann: Vec<CsrMatrix> = parts
            .grad_beta
            .iter()
            .map(|g| {
                self.block_annihilation(g)
                    .map(|a| a.scaled(std::f64::consts::FRAC_1_SQRT_2))
            })
            .collect::<Result<_>>()?;
        let cre: Vec<CsrMatrix> = ann.iter().map(|a| a.transpose()).collect();
        let mut r = CsrMatrix::zeros(self.dim(), self.dim());
        for j in 0..dims {
            for k in 0..dims {
                let a_diag: Vec<f64> = self.big_a.iter().map(|a| a[j][k]).collect();
                if a_diag.iter().all(|&v| v == 0.0) {
                    continue;
                }
                let a_op = self.node_diagonal(&a_diag);
                // d_j A_jk acting on the particle factor
                let da = Mat::<f64>::from_fn(p, p, |i, l| self.derivatives[j][(i, l)] * a_diag[l]);
                let ad = Mat::<f64>::from_fn(p, p, |i, l| a_diag[i] * self.derivatives[k][(i, l)]);
                let first = self.particle_op(&da).matmul(&ann[k]);
                let second = cre[j].matmul(&self.particle_op(&ad));
                r = r.add_scaled(&first, 2.0).add_scaled(&second, -2.0);
                let quad = cre[j]
                    .matmul(&ann[k])
                    .scaled(2.0)
                    .add_scaled(&cre[j].matmul(&cre[k]), -1.0)
                    .add_scaled(&ann[j].matmul(&ann[k]), -1.0);
                r = r.add_scaled(&a_op.matmul(&quad), 1.0);
            }
        }
        let (asym, scale) = r.asymmetry();
        if asym > 1e-10 * scale.max(1.0) {
            return Err(Error::NotHermitian {
                residual: asym / scale.max(1.0),
            });
        }
        let scalars: Vec<f64> = parts
            .potential
            .iter()
            .zip(&parts.shift)
            .map(|(v, e)| v - e)
            .collect();
        Ok(self
            .h0()
            .add_scaled(&self.interaction(&parts.coupling)?, 1.0)
            .add_scaled(&r, 1.0)
            .add_scaled(&self.node_diagonal(&scalars), 1.0))
    }

    /// `exp(-J) v`, or `exp(J) v` for the adjoint.
    pub fn apply_unitary(&self, generator: &CsrMatrix, v: &[f64], adjoint: bool) -> Vec<f64> {
        exp_apply(generator, v, if adjoint { 1.0 } else { -1.0 })
    }
}

/// `exp(t J) v` by a Taylor series of the sparse generator.
pub fn exp_apply(generator: &CsrMatrix, v: &[f64], t: f64) -> Vec<f64> {
    let mut out = v.to_vec();
    let mut term = v.to_vec();
    let scale = norm2(v).max(f64::MIN_POSITIVE);
    for k in 1..400 {
        term = generator.matvec(&term);
        let f = t / k as f64;
        term.iter_mut().for_each(|x| *x *= f);
        out.iter_mut().zip(&term).for_each(|(o, x)| *o += x);
        if norm2(&term) < 1e-17 * scale {
            break;
        }
    }
    out
}

/// Dense `exp(-J(beta))` on one Fock block, from the Hermitian eigendecomposition of `iJ`.
pub fn dressing_unitary_block(fock: &FockBasis, beta: &[f64]) -> Result<Mat<f64>> {
    let j = fock.generator(beta).to_dense();
    let n = j.nrows();
    let ij = Mat::<C64>::from_fn(n, n, |r, c| C64::new(0.0, j[(r, c)]));
    let (vals, vecs) = hermitian_eigen(&ij)?;
    // exp(-J) = exp(i (iJ)) = V diag(e^{i lambda}) V^*
    let scaled = Mat::<C64>::from_fn(n, n, |r, c| vecs[(r, c)] * C64::from_polar(1.0, vals[c]));
    let u = &scaled * vecs.adjoint();
    Ok(Mat::<f64>::from_fn(n, n, |r, c| u[(r, c)].re))
}

/// `|U^T U - I|_max`.
pub fn unitarity_defect(u: &Mat<f64>) -> f64 {
    let g = u.transpose() * u;
    let mut worst = 0.0f64;
    for j in 0..g.ncols() {
        for i in 0..g.nrows() {
            let e = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((g[(i, j)] - e).abs());
        }
    }
    worst
}
