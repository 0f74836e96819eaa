use faer::Mat;

use super::basis::unit;
use super::basis::FockBasis;
use super::system::{exp_apply, CoupledSystem, DressedParts, ModeSet};
use crate::dressing::{density_rows, dressing_vector, particle_derivative};
use crate::linalg::{dot, symmetric_norm, CsrMatrix};
use crate::opcore::{ChargeDensity, Model};
use crate::{Error, Result};

/// Mode-space data of one dressed configuration.
#[derive(Clone, Debug)]
pub struct ProjectedDressing {
    /// `omega^{-1/2} rho_X`, `P x M`.
    pub coupling: Mat<f64>,
    pub beta: Mat<f64>,
    pub grad_beta: Vec<Mat<f64>>,
    /// Worst norm fraction outside the mode span, coupling and `beta`.
    pub coupling_leakage: f64,
    pub beta_leakage: f64,
}

pub fn project_dressing(
    model: &Model,
    density: &ChargeDensity,
    modes: &ModeSet,
) -> Result<ProjectedDressing> {
    let rows = density_rows(model, density)?;
    let inv_sqrt = model.boson.values(|w| 1.0 / w.sqrt())?;
    let g = model.boson.apply_rows(&inv_sqrt, &rows);
    let (coupling, coupling_leakage) = modes.project_rows(&g);
    let dressing = dressing_vector(model, density)?;
    let (beta, beta_leakage) = modes.project_rows(&dressing.beta);
    let pg = model.particle_grid();
    let grad_beta = (0..pg.dim())
        .map(|a| particle_derivative(pg, &beta, a))
        .collect::<Result<_>>()?;
    if coupling_leakage > 0.1 {
        log::warn!("interaction leakage {coupling_leakage:.3} exceeds 10%");
    }
    Ok(ProjectedDressing {
        coupling,
        beta,
        grad_beta,
        coupling_leakage,
        beta_leakage,
    })
}

impl ProjectedDressing {
    /// `sup_X |beta_X|` in the mode space.
    pub fn sup_beta(&self) -> f64 {
        row_norms(&self.beta).into_iter().fold(0.0, f64::max)
    }

    /// Terms of the algebraic dressed Hamiltonian for `system`, with node energies `shift` subtracted.
    pub fn parts(&self, system: &CoupledSystem, shift: Vec<f64>) -> Result<DressedParts> {
        let (k0, big_a) = (system.k0(), system.big_a());
        let p = self.beta.nrows();
        let m = self.beta.ncols();
        if shift.len() != p || big_a.len() != p || k0.nrows() != p {
            return Err(Error::Shape(
                "per-node data does not match the particle grid".into(),
            ));
        }
        let omega = system.omega();
        let k0b = k0 * &self.beta;
        let coupling = Mat::<f64>::from_fn(p, m, |i, j| {
            self.coupling[(i, j)] + k0b[(i, j)] + omega[j] * self.beta[(i, j)]
        });
        let dims = self.grad_beta.len();
        let potential = (0..p)
            .map(|i| {
                let mut v = 0.0;
                for j in 0..m {
                    let b = self.beta[(i, j)];
                    v += (0.5 * omega[j] * b + self.coupling[(i, j)]) * b;
                }
                for a in 0..dims {
                    for c in 0..dims {
                        let dot: f64 = (0..m)
                            .map(|j| self.grad_beta[a][(i, j)] * self.grad_beta[c][(i, j)])
                            .sum();
                        v += 0.5 * big_a[i][a][c] * dot;
                    }
                }
                v
            })
            .collect();
        Ok(DressedParts {
            coupling,
            grad_beta: self.grad_beta.clone(),
            potential,
            shift,
        })
    }
}

pub(crate) fn row_norms(m: &Mat<f64>) -> Vec<f64> {
    (0..m.nrows())
        .map(|i| {
            (0..m.ncols())
                .map(|j| m[(i, j)].powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .collect()
}

/// Displacement identity check on one Fock block: `U (dGamma(omega) + phi(g)) U^*` against
/// `dGamma(omega) + phi(omega beta + g) + (omega beta / 2 + g | beta)`.
#[derive(Clone, Debug, serde::Serialize)]
pub struct WeylShiftReport {
    pub n_max: usize,
    pub sector: usize,
    pub absolute: f64,
    pub relative: f64,
}

pub fn verify_weyl_shift(
    fock: &FockBasis,
    omega: &[f64],
    g: &[f64],
    beta: &[f64],
    sector: usize,
) -> Result<WeylShiftReport> {
    let bn = beta.iter().map(|b| b * b).sum::<f64>().sqrt();
    if bn > 1.0 {
        return Err(Error::InvalidArgument(format!(
            "|beta| = {bn:.3} is too large for the truncation"
        )));
    }
    if sector > fock.n_max() {
        return Err(Error::InvalidArgument(
            "protected sector exceeds the truncation".into(),
        ));
    }
    let free = CsrMatrix::diagonal(&fock.second_quantize_diagonal(omega));
    let h = free.add_scaled(&fock.field(g), 1.0);
    let keep: Vec<usize> = (0..fock.dim())
        .filter(|&i| fock.total(i) <= sector)
        .collect();
    // columns of U^* = exp(J) on the protected sector; (U H U^*)_{st} = (U^* e_s | H U^* e_t)
    let j = fock.generator(beta);
    let cols: Vec<Vec<f64>> = keep
        .iter()
        .map(|&s| exp_apply(&j, &unit(fock.dim(), s), 1.0))
        .collect();
    let hcols: Vec<Vec<f64>> = cols.iter().map(|c| h.matvec(c)).collect();
    let shifted: Vec<f64> = omega
        .iter()
        .zip(beta)
        .zip(g)
        .map(|((w, b), g)| w * b + g)
        .collect();
    let scalar: f64 = omega
        .iter()
        .zip(beta)
        .zip(g)
        .map(|((w, b), g)| (0.5 * w * b + g) * b)
        .sum();
    let rhs = free
        .add_scaled(&fock.field(&shifted), 1.0)
        .add_scaled(&CsrMatrix::identity(fock.dim()), scalar);
    let n = keep.len();
    let rhs_s = Mat::<f64>::from_fn(n, n, |a, b| rhs.get(keep[a], keep[b]));
    let diff = Mat::<f64>::from_fn(n, n, |a, b| dot(&cols[a], &hcols[b]) - rhs_s[(a, b)]);
    let absolute = symmetric_norm(&diff)?;
    let scale = symmetric_norm(&rhs_s)?;
    Ok(WeylShiftReport {
        n_max: fock.n_max(),
        sector,
        absolute,
        relative: absolute / scale.max(f64::MIN_POSITIVE),
    })
}

/// Exact ground energy `-1/2 sum_m g_m^2 / omega_m` of `dGamma(omega) + phi(g)`.
pub fn van_hove_energy(coupling: &[f64], omega: &[f64]) -> f64 {
    -0.5 * coupling
        .iter()
        .zip(omega)
        .map(|(g, w)| g * g / w)
        .sum::<f64>()
}
