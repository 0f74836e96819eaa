//! The dressing vector `beta(X, .)`, the solution of
//! `(K0 + omega) beta = -rho_X omega^{-1/2} F`, and checks of its defining identity.

use faer::Mat;
use serde::Serialize;

use crate::linalg::frobenius;
use crate::opcore::{sobolev_norm, ChargeDensity, GridSpec, Model, TensorSum};
use crate::{Error, Result};

/// Rows `rho^kappa_{X_i}` sampled on the boson grid, one row per particle node.
pub fn density_rows(model: &Model, density: &ChargeDensity) -> Result<Mat<f64>> {
    rows_from(model, |center| density.sample(model.boson_grid(), center))
}

/// Rows `d/dX_axis rho_{X_i}(x) = -(d_axis rho)(x - X_i)`.
pub fn density_gradient_rows(
    model: &Model,
    density: &ChargeDensity,
    axis: usize,
) -> Result<Mat<f64>> {
    let mut m = rows_from(model, |center| {
        density.sample_gradient(model.boson_grid(), center, axis)
    })?;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            m[(i, j)] = -m[(i, j)];
        }
    }
    Ok(m)
}

fn rows_from(model: &Model, f: impl Fn(&[f64]) -> Result<Vec<f64>>) -> Result<Mat<f64>> {
    let pg = model.particle_grid();
    let b = model.boson_grid().len();
    let mut out = Mat::<f64>::zeros(pg.len(), b);
    for i in 0..pg.len() {
        let row = f(&pg.node(i)[..pg.dim()])?;
        for (j, v) in row.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Real spectral derivative of every column of a `P x B` tensor matrix along the particle grid.
pub fn particle_derivative(pg: &GridSpec, m: &Mat<f64>, axis: usize) -> Result<Mat<f64>> {
    if pg.n_points() < 16 {
        return Err(Error::InvalidGrid(format!(
            "particle grid with {} points per axis is too coarse to differentiate",
            pg.n_points()
        )));
    }
    if m.nrows() != pg.len() {
        return Err(Error::Shape(
            "tensor rows do not match the particle grid".into(),
        ));
    }
    let mut out = Mat::<f64>::zeros(m.nrows(), m.ncols());
    let mut col = vec![0.0; m.nrows()];
    for j in 0..m.ncols() {
        for (i, c) in col.iter_mut().enumerate() {
            *c = m[(i, j)];
        }
        for (i, v) in pg.derivative(&col, axis).into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    Ok(out)
}

/// Spectral values of `omega^{-1/2} F`, zero where `F` vanishes.
pub fn source_weights(model: &Model) -> Vec<f64> {
    let w = model.boson.omega_values();
    model
        .boson
        .high_values()
        .iter()
        .zip(w)
        .map(|(&f, &w)| if f == 0.0 { 0.0 } else { f / w.sqrt() })
        .collect()
}

/// `beta` together with the density rows it was built from.
#[derive(Clone, Debug)]
pub struct Dressing {
    pub rows: Mat<f64>,
    pub source: Mat<f64>,
    pub beta: Mat<f64>,
}

/// Solves `T beta = -rho omega^{-1/2} F` row-wise on the product grid.
pub fn dressing_vector(model: &Model, density: &ChargeDensity) -> Result<Dressing> {
    let rows = density_rows(model, density)?;
    dressing_from_rows(model, rows)
}

pub fn dressing_from_rows(model: &Model, rows: Mat<f64>) -> Result<Dressing> {
    let source = model.boson.apply_rows(&source_weights(model), &rows);
    let beta = -model.t.solve(&source)?;
    if beta.col_iter().any(|c| c.iter().any(|v| !v.is_finite())) {
        return Err(Error::NoConvergence("dressing vector is not finite".into()));
    }
    Ok(Dressing { rows, source, beta })
}

/// Sup over particle nodes of the identity residual, absolute and relative to `|omega^{-1/2} rho|`.
#[derive(Clone, Debug, Serialize)]
pub struct IdentityResidual {
    pub absolute: f64,
    pub relative: f64,
    pub per_row: Vec<f64>,
}

impl Dressing {
    /// `rho omega^{-1/2} + K0 beta + beta omega - rho omega^{-1/2} F_low`, row norms on the boson grid.
    pub fn identity_residual(&self, model: &Model) -> Result<IdentityResidual> {
        let w = model.boson.omega_values();
        let inv_sqrt = model.boson.values(|w| 1.0 / w.sqrt())?;
        let low: Vec<f64> = model
            .boson
            .low_values()
            .iter()
            .zip(&inv_sqrt)
            .map(|(f, s)| f * s)
            .collect();
        let full = model.boson.apply_rows(&inv_sqrt, &self.rows);
        let low_part = model.boson.apply_rows(&low, &self.rows);
        let k0b = model.k0.apply_left(&self.beta);
        let bw = model.boson.apply_rows(w, &self.beta);
        let res = &full + &k0b + &bw - &low_part;
        let grid = model.boson_grid();
        let mut per_row = Vec::with_capacity(res.nrows());
        let mut absolute = 0.0f64;
        let mut relative = 0.0f64;
        for i in 0..res.nrows() {
            let r: Vec<f64> = (0..res.ncols()).map(|j| res[(i, j)]).collect();
            let s: Vec<f64> = (0..res.ncols()).map(|j| full[(i, j)]).collect();
            let rn = grid.norm(&r);
            let sn = grid.norm(&s);
            per_row.push(rn);
            absolute = absolute.max(rn);
            if sn > 0.0 {
                relative = relative.max(rn / sn);
            }
        }
        Ok(IdentityResidual {
            absolute,
            relative,
            per_row,
        })
    }

    /// `d/dX_axis beta` by spectral differentiation of each column along the particle grid.
    pub fn gradient_spectral(&self, model: &Model, axis: usize) -> Result<Mat<f64>> {
        particle_derivative(model.particle_grid(), &self.beta, axis)
    }

    /// `d/dX_axis beta = -T^{-1}(d_X source + [d_X, K0] beta)`.
    pub fn gradient_analytic(
        &self,
        model: &Model,
        density: &ChargeDensity,
        axis: usize,
    ) -> Result<Mat<f64>> {
        let grad_rows = density_gradient_rows(model, density, axis)?;
        let ds = model.boson.apply_rows(&source_weights(model), &grad_rows);
        let dk =
            crate::opcore::k0_coefficient_derivative(model.particle_grid(), &model.coeffs, axis);
        let rhs = &ds + &dk * &self.beta;
        Ok(-model.t.solve(&rhs)?)
    }

    /// `sup_X |beta(X, .)|_{L^2}`.
    pub fn sup_row_norm(&self, model: &Model) -> f64 {
        let grid = model.boson_grid();
        (0..self.beta.nrows())
            .map(|i| {
                let r: Vec<f64> = (0..self.beta.ncols()).map(|j| self.beta[(i, j)]).collect();
                grid.norm(&r)
            })
            .fold(0.0, f64::max)
    }

    pub fn frobenius(&self) -> f64 {
        frobenius(&self.beta)
    }
}

/// Same solve with `omega` in place of `omega_sigma` in the tensor sum.
pub fn dressing_vector_unsmoothed(model: &Model, density: &ChargeDensity) -> Result<Dressing> {
    let rows = density_rows(model, density)?;
    let source = model.boson.apply_rows(&source_weights(model), &rows);
    let t = TensorSum::new(
        model.k0.clone(),
        model.boson.omega()?,
        model.spec.max_tensor_dim,
    )?;
    let beta = -t.solve(&source)?;
    Ok(Dressing { rows, source, beta })
}

/// One row of the weighted norm table.
#[derive(Clone, Debug, Serialize)]
pub struct WeightedNorm {
    pub node: usize,
    pub alpha: f64,
    pub norm: f64,
    pub ratio: f64,
}

/// Sobolev index of the negative norm the weighted norms are compared to.
pub const NEGATIVE_SOBOLEV_INDEX: f64 = 1.6;

impl Dressing {
    /// `|omega^alpha beta_{X_i}|` and its ratio to `|rho_{X_i}|_{H^{-1.6}}` for every node and power.
    pub fn weighted_norms(&self, model: &Model, alphas: &[f64]) -> Result<Vec<WeightedNorm>> {
        let grid = model.boson_grid();
        let mut out = Vec::new();
        for &alpha in alphas {
            if alpha >= 1.0 {
                log::warn!("weighted norm with alpha = {alpha} is outside [0, 1)");
            }
            let weights: Vec<f64> = model
                .boson
                .omega_values()
                .iter()
                .zip(model.boson.high_values())
                .map(|(&w, f)| if f == 0.0 { 0.0 } else { w.powf(alpha) })
                .collect();
            let weighted = model.boson.apply_rows(&weights, &self.beta);
            for i in 0..self.beta.nrows() {
                let r: Vec<f64> = (0..weighted.ncols()).map(|j| weighted[(i, j)]).collect();
                let rho: Vec<f64> = (0..self.rows.ncols()).map(|j| self.rows[(i, j)]).collect();
                let norm = grid.norm(&r);
                let denom = sobolev_norm(&rho, -NEGATIVE_SOBOLEV_INDEX, grid);
                let ratio = if denom > 0.0 { norm / denom } else { 0.0 };
                out.push(WeightedNorm {
                    node: i,
                    alpha,
                    norm,
                    ratio,
                });
            }
        }
        Ok(out)
    }
}

/// Closed-form `beta` for constant coefficients `a = 1`, `A = scale`, constant mass, in one
/// dimension: a plane-wave sum over the lattice frequencies of the boson grid.
///
/// Uses the exact `omega_k = (k^2 + m^2)^{1/2}` and the analytic density transform.
pub fn plane_wave_beta(
    model: &Model,
    density: &ChargeDensity,
    mass: f64,
    scale: f64,
) -> Result<Mat<f64>> {
    let bg = model.boson_grid();
    let pg = model.particle_grid();
    if bg.dim() != 1 {
        return Err(Error::InvalidArgument(
            "plane-wave reference is one dimensional".into(),
        ));
    }
    let cut = crate::opcore::high_cutoff(model.sigma());
    let l = bg.box_length();
    let freqs = bg.axis_freqs();
    let nodes = bg.axis_nodes();
    let weights: Vec<f64> = freqs
        .iter()
        .map(|&k| {
            let w = (k * k + mass * mass).sqrt();
            let f = cut(w);
            if f == 0.0 {
                0.0
            } else {
                f / w.sqrt() * (2.0 * std::f64::consts::PI).sqrt() * density.fourier(&[k])
                    / (w + scale * k * k)
            }
        })
        .collect();
    Ok(Mat::<f64>::from_fn(pg.len(), bg.len(), |i, j| {
        let xp = pg.node(i)[0];
        let mut s = 0.0;
        for (k, wk) in freqs.iter().zip(&weights) {
            if *wk != 0.0 {
                s += wk * (k * (nodes[j] - xp)).cos();
            }
        }
        -s / l
    }))
}
