//! Renormalization energies: the position dependent counterterm `E^kappa(X)`, the constant
//! coefficient reference energy `E_Lambda`, the dressed potential `V^kappa(X)`, its split
//! into a convergent and a divergent group, and the divergence cancellation study.
//!
//! Two normalizations of the counterterm appear. [`e_kappa`] is the integral exactly as
//! written, with prefactor `(2 pi)^{-d}` in front of `|rho^|^2`. With the unitary
//! transform used everywhere else, the energy that cancels the divergence of `V^kappa` is
//! [`e_kappa_physical`] `= (2 pi)^d e_kappa`.

use std::f64::consts::PI;

use faer::Mat;
use serde::Serialize;

use crate::dressing::{density_rows, particle_derivative, Dressing};
use crate::linalg::fit_line;
use crate::opcore::coefficients::quad as quad_form;
use crate::opcore::{ChargeDensity, CoefficientModel, GridSpec, Model};
use crate::pdo::{apply_kn, LeadingSymbols};
use crate::quadrature::{adaptive, doubling_panels, gauss_legendre};
use crate::{Error, Result, C64};

/// Radial and angular quadrature parameters.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct QuadratureRule {
    /// Gauss-Legendre order in `cos(theta)`.
    pub polar_order: usize,
    /// Uniform nodes in the azimuth.
    pub azimuth_points: usize,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureRule {
    fn default() -> Self {
        Self {
            polar_order: 16,
            azimuth_points: 32,
            rel_tol: 1e-8,
            max_panels: 80,
        }
    }
}

impl QuadratureRule {
    fn check(&self) -> Result<()> {
        if !(1e-12..=1e-4).contains(&self.rel_tol) {
            return Err(Error::InvalidArgument(format!(
                "rel_tol = {:e} outside [1e-12, 1e-4]",
                self.rel_tol
            )));
        }
        if self.polar_order == 0 || self.azimuth_points == 0 {
            return Err(Error::InvalidArgument("empty angular rule".into()));
        }
        Ok(())
    }
}

/// Unit directions with weights summing to the area of `S^{d-1}`.
pub fn sphere_rule(dim: usize, rule: &QuadratureRule) -> Vec<([f64; 3], f64)> {
    match dim {
        1 => vec![([1.0, 0.0, 0.0], 1.0), ([-1.0, 0.0, 0.0], 1.0)],
        2 => {
            let n = rule.azimuth_points;
            (0..n)
                .map(|i| {
                    let p = 2.0 * PI * i as f64 / n as f64;
                    ([p.cos(), p.sin(), 0.0], 2.0 * PI / n as f64)
                })
                .collect()
        }
        _ => {
            let (ct, wt) = gauss_legendre(rule.polar_order);
            let n = rule.azimuth_points;
            let mut out = Vec::with_capacity(ct.len() * n);
            for (c, w) in ct.iter().zip(&wt) {
                let s = (1.0 - c * c).sqrt();
                for i in 0..n {
                    let p = 2.0 * PI * i as f64 / n as f64;
                    out.push(([s * p.cos(), s * p.sin(), *c], w * 2.0 * PI / n as f64));
                }
            }
            out
        }
    }
}

/// Inputs of one counterterm evaluation.
#[derive(Clone, Debug)]
pub struct CountertermQuery<'a> {
    pub point: [f64; 3],
    pub model: &'a CoefficientModel,
    /// Density already rescaled to the wanted `kappa`.
    pub density: &'a ChargeDensity,
    pub rule: QuadratureRule,
}

impl CountertermQuery<'_> {
    fn check(&self) -> Result<()> {
        self.rule.check()?;
        if self.density.dim() != self.model.dim {
            return Err(Error::Shape(
                "density and coefficients differ in dimension".into(),
            ));
        }
        Ok(())
    }

    /// Per-direction `(h0(X, theta), K(X, theta), weight)`.
    fn directions(&self) -> Vec<(f64, f64, f64)> {
        let d = self.model.dim;
        let x = &self.point[..d];
        sphere_rule(d, &self.rule)
            .into_iter()
            .map(|(t, w)| (self.model.h0(x, &t[..d]), self.model.k(x, &t[..d]), w))
            .collect()
    }

    fn radial(&self, mut f: impl FnMut(f64) -> f64) -> Result<f64> {
        let scale = self.density.kappa() / self.density.width();
        let (v, _) = doubling_panels(
            &mut f,
            1.0,
            12.0 * scale,
            self.rule.rel_tol,
            self.rule.max_panels,
        )?;
        Ok(v)
    }
}

/// `|rho^(r e_1)|^2`; every supported profile is radial.
fn radial_power(density: &ChargeDensity, r: f64) -> f64 {
    let mut xi = [0.0; 3];
    xi[0] = r;
    density.fourier(&xi[..density.dim()]).powi(2)
}

/// `-1/2 (2 pi)^{-d} int (h0(X, xi) + 1)^{-1/2} K(X, xi) (K(X, xi) + 1)^{-2} |rho^|^2(xi / kappa) dxi`.
pub fn e_kappa(query: &CountertermQuery<'_>) -> Result<f64> {
    query.check()?;
    let d = query.model.dim;
    let dirs = query.directions();
    let integral = query.radial(|r| {
        let p = radial_power(query.density, r);
        if p == 0.0 {
            return 0.0;
        }
        let r2 = r * r;
        let ang: f64 = dirs
            .iter()
            .map(|&(h, k, w)| {
                let kk = r2 * k;
                w * (r2 * h + 1.0).powf(-0.5) * kk / ((kk + 1.0) * (kk + 1.0))
            })
            .sum();
        r.powi(d as i32 - 1) * ang * p
    })?;
    Ok(-0.5 * (2.0 * PI).powi(-(d as i32)) * integral)
}

/// Counterterm in the unitary normalization, `(2 pi)^d e_kappa`.
pub fn e_kappa_physical(query: &CountertermQuery<'_>) -> Result<f64> {
    Ok((2.0 * PI).powi(query.model.dim as i32) * e_kappa(query)?)
}

/// Large-`kappa` slope `dE/dlog kappa` of [`e_kappa`] in `d = 3`:
/// `-1/2 (2 pi)^{-2d} q^2 int_{S^2} (theta.a theta)^{-1/2} (theta.A theta)^{-1} dtheta`.
/// Zero in lower dimension, where the integral converges.
pub fn asymptotic_slope(
    model: &CoefficientModel,
    point: &[f64],
    total_charge: f64,
    rule: &QuadratureRule,
) -> f64 {
    let d = model.dim;
    if d < 3 {
        return 0.0;
    }
    let ang: f64 = sphere_rule(d, rule)
        .into_iter()
        .map(|(t, w)| w * model.h0(point, &t[..d]).powf(-0.5) / model.k(point, &t[..d]))
        .sum();
    -0.5 * (2.0 * PI).powi(-2 * d as i32) * total_charge * total_charge * ang
}

/// Constant coefficient energy with a sharp cutoff `|k| < Lambda`, sharp infrared cutoff
/// `omega(k) >= sigma` and `T(k) = omega(k) + |k|^2 / 2` in three dimensions:
/// `-1/2 int omega^{-1} chi T^{-1} dk`, with the cutoff transform equal to one (no `(2 pi)` factor).
pub fn nelson_e_lambda(lambda: f64, mass: f64, sigma: f64, rel_tol: f64) -> Result<f64> {
    if !(lambda > sigma) || !(sigma > 0.0) || !(mass >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need Lambda > sigma > 0 and m >= 0, got Lambda = {lambda}, sigma = {sigma}, m = {mass}"
        )));
    }
    let lo = (sigma * sigma - mass * mass).max(0.0).sqrt();
    if lo >= lambda {
        return Ok(0.0);
    }
    let mut f = |k: f64| {
        let w = (k * k + mass * mass).sqrt();
        if w < sigma {
            return 0.0;
        }
        k * k / (w * (w + 0.5 * k * k))
    };
    let mut total = 0.0;
    let mut a = lo;
    while a < lambda {
        let b = if a < 1.0 {
            1.0f64.min(lambda)
        } else {
            (2.0 * a).min(lambda)
        };
        total += adaptive(&mut f, a, b, rel_tol, 0.0, 400)?.0;
        a = b;
    }
    Ok(-2.0 * PI * total)
}

/// Closed form of [`nelson_e_lambda`] at `m = 0`.
pub fn nelson_e_lambda_massless(lambda: f64, sigma: f64) -> f64 {
    -4.0 * PI * ((1.0 + 0.5 * lambda) / (1.0 + 0.5 * sigma)).ln()
}

/// The three contributions to `V^kappa(X)` at one particle node.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PotentialTerms {
    /// `-(rho | omega^{-1} F T^{-1} rho)`
    pub coupling: f64,
    /// `1/2 (T^{-1} rho | F^2 T^{-1} rho)`
    pub field: f64,
    /// `1/2 sum A_jk (d_j T^{-1} rho | omega^{-1} F^2 d_k T^{-1} rho)`
    pub kinetic: f64,
}

impl PotentialTerms {
    pub fn total(&self) -> f64 {
        self.coupling + self.field + self.kinetic
    }
}

/// Convergent and divergent groups of `V^kappa(X)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct SplitPotential {
    pub v1: f64,
    pub v2: f64,
}

struct PotentialWorkspace {
    rows: Mat<f64>,
    w: Mat<f64>,
    grad_w: Vec<Mat<f64>>,
    omega_inv_f: Vec<f64>,
    f_sq: Vec<f64>,
    omega_inv_f_sq: Vec<f64>,
}

fn workspace(model: &Model, density: &ChargeDensity) -> Result<PotentialWorkspace> {
    let rows = density_rows(model, density)?;
    let w = model.t.solve(&rows)?;
    let d = model.particle_grid().dim();
    let grad_w = (0..d)
        .map(|a| particle_derivative(model.particle_grid(), &w, a))
        .collect::<Result<Vec<_>>>()?;
    let omega = model.boson.omega_values();
    let high = model.boson.high_values();
    let masked = |p: i32, fp: i32| -> Vec<f64> {
        omega
            .iter()
            .zip(&high)
            .map(|(&o, &f)| {
                if f == 0.0 {
                    0.0
                } else {
                    f.powi(fp) * o.powi(p)
                }
            })
            .collect()
    };
    Ok(PotentialWorkspace {
        omega_inv_f: masked(-1, 1),
        f_sq: masked(0, 2),
        omega_inv_f_sq: masked(-1, 2),
        rows,
        w,
        grad_w,
    })
}

fn row(m: &Mat<f64>, i: usize) -> Vec<f64> {
    (0..m.ncols()).map(|j| m[(i, j)]).collect()
}

/// Form `sum_jk A_jk(X_i) (u_j | S v_k)` on row `i`, with `S` a function of `omega`.
fn a_form(model: &Model, i: usize, spectral: &[f64], u: &[Mat<f64>], v: &[Mat<f64>]) -> f64 {
    let grid = model.boson_grid();
    let d = grid.dim();
    let a = &model.coeffs.big_a[i];
    let sv: Vec<Vec<f64>> = v
        .iter()
        .map(|m| model.boson.apply(spectral, &row(m, i)))
        .collect();
    let mut s = 0.0;
    for j in 0..d {
        let uj = row(&u[j], i);
        for k in 0..d {
            if a[j][k] != 0.0 {
                s += a[j][k] * grid.inner(&uj, &sv[k]);
            }
        }
    }
    s
}

/// `V^kappa(X_i)` at every particle node from `w = T^{-1} rho`.
pub fn v_kappa(model: &Model, density: &ChargeDensity) -> Result<Vec<PotentialTerms>> {
    let ws = workspace(model, density)?;
    let grid = model.boson_grid();
    Ok((0..ws.rows.nrows())
        .map(|i| {
            let r = row(&ws.rows, i);
            let w = row(&ws.w, i);
            let coupling = -grid.inner(&r, &model.boson.apply(&ws.omega_inv_f, &w));
            let field = 0.5 * grid.inner(&w, &model.boson.apply(&ws.f_sq, &w));
            let kinetic = 0.5 * a_form(model, i, &ws.omega_inv_f_sq, &ws.grad_w, &ws.grad_w);
            PotentialTerms {
                coupling,
                field,
                kinetic,
            }
        })
        .collect())
}

/// `V^kappa(X_i) = (omega^{-1/2} rho + 1/2 omega beta | beta) + 1/2 sum A_jk (d_j beta | d_k beta)`.
pub fn v_kappa_from_beta(model: &Model, dressing: &Dressing) -> Result<Vec<f64>> {
    let grid = model.boson_grid();
    let d = grid.dim();
    let inv_sqrt: Vec<f64> = model
        .boson
        .omega_values()
        .iter()
        .zip(model.boson.high_values())
        .map(|(&o, f)| if f == 0.0 { 0.0 } else { o.powf(-0.5) })
        .collect();
    let grads = (0..d)
        .map(|a| dressing.gradient_spectral(model, a))
        .collect::<Result<Vec<_>>>()?;
    let ones = vec![1.0; model.boson.dim()];
    Ok((0..dressing.beta.nrows())
        .map(|i| {
            let b = row(&dressing.beta, i);
            let mut lhs = model.boson.apply(&inv_sqrt, &row(&dressing.rows, i));
            let wb = model.boson.apply(model.boson.omega_values(), &b);
            lhs.iter_mut().zip(&wb).for_each(|(l, w)| *l += 0.5 * w);
            grid.inner(&lhs, &b) + 0.5 * a_form(model, i, &ones, &grads, &grads)
        })
        .collect())
}

/// `V = V1 + V2` with `g = T^{-1} d_x rho`, `p = d_X w + g`:
/// `V1 = 1/2 (w|F^2 w) + 1/2 sum A (p|omega^{-1}F^2 p) - sum A (p|omega^{-1}F^2 g)`,
/// `V2 = -(rho|omega^{-1}F w) + 1/2 sum A (g|omega^{-1}F^2 g)`.
pub fn split_v(model: &Model, density: &ChargeDensity) -> Result<Vec<SplitPotential>> {
    let ws = workspace(model, density)?;
    let grid = model.boson_grid();
    let d = grid.dim();
    let pg = model.particle_grid();
    let mut g = Vec::with_capacity(d);
    for a in 0..d {
        let mut dr = Mat::<f64>::zeros(pg.len(), grid.len());
        for i in 0..pg.len() {
            let v = density.sample_gradient(grid, &pg.node(i)[..d], a)?;
            for (j, x) in v.into_iter().enumerate() {
                dr[(i, j)] = x;
            }
        }
        g.push(model.t.solve(&dr)?);
    }
    let p: Vec<Mat<f64>> = ws.grad_w.iter().zip(&g).map(|(dw, ga)| dw + ga).collect();
    Ok((0..ws.rows.nrows())
        .map(|i| {
            let r = row(&ws.rows, i);
            let w = row(&ws.w, i);
            let v1 = 0.5 * grid.inner(&w, &model.boson.apply(&ws.f_sq, &w))
                + 0.5 * a_form(model, i, &ws.omega_inv_f_sq, &p, &p)
                - a_form(model, i, &ws.omega_inv_f_sq, &p, &g);
            let v2 = -grid.inner(&r, &model.boson.apply(&ws.omega_inv_f, &w))
                + 0.5 * a_form(model, i, &ws.omega_inv_f_sq, &g, &g);
            SplitPotential { v1, v2 }
        })
        .collect())
}

/// `V~2(X) = -(rho_X | c_X(x, D) rho_X) + 1/2 sum A_jk(X) (d_j rho_X | d_X(x, D) d_k rho_X)`
/// with the (1,0) quantizations applied on `grid`.
pub fn v_tilde2_grid(
    model: &CoefficientModel,
    grid: &GridSpec,
    density: &ChargeDensity,
    point: &[f64],
) -> Result<f64> {
    let d = grid.dim();
    let lead = LeadingSymbols::new(model);
    let c = lead.c_x(point);
    let dx = lead.d_x(point);
    let rho = density.sample(grid, point)?;
    let to_c = |v: &[f64]| v.iter().map(|&x| C64::new(x, 0.0)).collect::<Vec<_>>();
    let pair = |u: &[f64], v: &[C64]| {
        grid.cell_volume() * u.iter().zip(v).map(|(a, b)| a * b.re).sum::<f64>()
    };
    let mut total = -pair(&rho, &apply_kn(&c, grid, &to_c(&rho))?);
    let a = model.big_a.value(point, d);
    let grads = (0..d)
        .map(|ax| density.sample_gradient(grid, point, ax))
        .collect::<Result<Vec<_>>>()?;
    for k in 0..d {
        if (0..d).all(|j| a[j][k] == 0.0) {
            continue;
        }
        let dk = apply_kn(&dx, grid, &to_c(&grads[k]))?;
        for j in 0..d {
            if a[j][k] != 0.0 {
                total += 0.5 * a[j][k] * pair(&grads[j], &dk);
            }
        }
    }
    Ok(total)
}

/// Frozen-coefficient lattice evaluation of `V~2(X)`:
/// `dxi^d sum_k [-c_X(X, xi_k) + 1/2 xi.A(X) xi d_X(X, xi_k)] |rho^(xi_k)|^2`.
pub fn v_tilde2_lattice(
    model: &CoefficientModel,
    grid: &GridSpec,
    density: &ChargeDensity,
    point: &[f64],
) -> Result<f64> {
    density.check_resolved(grid)?;
    let d = grid.dim();
    let a = model.a.value(point, d);
    let big_a = model.big_a.value(point, d);
    let freqs = grid.axis_freqs();
    let n = freqs.len();
    let count = n.pow(d as u32);
    let mut total = 0.0;
    let mut xi = [0.0; 3];
    for f in 0..count {
        let mut rest = f;
        for slot in xi.iter_mut().take(d).rev() {
            *slot = freqs[rest % n];
            rest /= n;
        }
        let p = density.fourier(&xi[..d]);
        if p == 0.0 {
            continue;
        }
        let h = quad_form(&a, &xi[..d], d);
        let k = quad_form(&big_a, &xi[..d], d);
        let s = (h + 1.0).powf(-0.5) / (k + 1.0);
        total += (-s + 0.5 * k * s / (k + 1.0)) * p * p;
    }
    Ok(total * grid.freq_spacing().powi(d as i32))
}

/// Route used by [`renorm_limit_study`].
#[derive(Clone, Debug)]
pub enum StudyMode<'a> {
    /// Exact discrete operators; `V^kappa` at the given particle node indices.
    Exact { model: &'a Model, nodes: Vec<usize> },
    /// Frozen-coefficient lattice sum for `V~2^kappa` at the given points.
    Symbol {
        coefficients: &'a CoefficientModel,
        lattice: &'a GridSpec,
        points: Vec<[f64; 3]>,
    },
}

/// Ladder table of `E^kappa`, the potential and their difference.
#[derive(Clone, Debug, Serialize)]
pub struct RenormReport {
    pub kappa_ladder: Vec<f64>,
    pub points: Vec<[f64; 3]>,
    /// `[rung][point]`, unitary normalization.
    pub e_values: Vec<Vec<f64>>,
    pub v_values: Vec<Vec<f64>>,
    pub diffs: Vec<Vec<f64>>,
    /// `sup_X |diff(kappa_{r+1}) - diff(kappa_r)|`
    pub diff_increments: Vec<f64>,
    /// `sup_X |E(kappa_{r+1}) - E(kappa_r)|`
    pub e_increments: Vec<f64>,
    /// Fitted `dE/dlog kappa` at the first point.
    pub slope: f64,
}

pub fn renorm_limit_study(
    density: &ChargeDensity,
    kappa_ladder: &[f64],
    mode: &StudyMode<'_>,
    rule: &QuadratureRule,
) -> Result<RenormReport> {
    if kappa_ladder.len() < 3 {
        return Err(Error::InvalidArgument(
            "the kappa ladder needs at least three rungs".into(),
        ));
    }
    if kappa_ladder.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument(
            "the kappa ladder must increase strictly".into(),
        ));
    }
    let (coefficients, points): (&CoefficientModel, Vec<[f64; 3]>) = match mode {
        StudyMode::Exact { model, nodes } => (
            &model.spec.coefficients,
            nodes
                .iter()
                .map(|&i| model.particle_grid().node(i))
                .collect(),
        ),
        StudyMode::Symbol {
            coefficients,
            points,
            ..
        } => (coefficients, points.clone()),
    };
    let d = coefficients.dim;
    let mut e_values = Vec::new();
    let mut v_values = Vec::new();
    for &kappa in kappa_ladder {
        let rho = density.rescale(kappa)?;
        let mut e_row = Vec::with_capacity(points.len());
        for p in &points {
            let q = CountertermQuery {
                point: *p,
                model: coefficients,
                density: &rho,
                rule: *rule,
            };
            e_row.push(e_kappa_physical(&q)?);
        }
        let v_row = match mode {
            StudyMode::Exact { model, nodes } => {
                let all = v_kappa(model, &rho)?;
                nodes.iter().map(|&i| all[i].total()).collect()
            }
            StudyMode::Symbol { lattice, .. } => points
                .iter()
                .map(|p| v_tilde2_lattice(coefficients, lattice, &rho, &p[..d]))
                .collect::<Result<Vec<_>>>()?,
        };
        e_values.push(e_row);
        v_values.push(v_row);
    }
    let diffs: Vec<Vec<f64>> = e_values
        .iter()
        .zip(&v_values)
        .map(|(e, v)| v.iter().zip(e).map(|(v, e)| v - e).collect())
        .collect();
    let increments = |t: &[Vec<f64>]| -> Vec<f64> {
        t.windows(2)
            .map(|w| {
                w[1].iter()
                    .zip(&w[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect()
    };
    let lx: Vec<f64> = kappa_ladder.iter().map(|k| k.ln()).collect();
    let ly: Vec<f64> = e_values.iter().map(|r| r[0]).collect();
    let (slope, _, _) = fit_line(&lx, &ly);
    Ok(RenormReport {
        kappa_ladder: kappa_ladder.to_vec(),
        points,
        diff_increments: increments(&diffs),
        e_increments: increments(&e_values),
        e_values,
        v_values,
        diffs,
        slope,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_rule_weights() {
        let r = QuadratureRule::default();
        for (d, area) in [(1, 2.0), (2, 2.0 * PI), (3, 4.0 * PI)] {
            let s: f64 = sphere_rule(d, &r).iter().map(|x| x.1).sum();
            assert!((s - area).abs() < 1e-12);
        }
    }

    #[test]
    fn massless_nelson_energy_has_closed_form() {
        for lambda in [2.0, 50.0, 1e4] {
            let v = nelson_e_lambda(lambda, 0.0, 1.0, 1e-12).unwrap();
            let exact = nelson_e_lambda_massless(lambda, 1.0);
            assert!((v - exact).abs() < 1e-9 * exact.abs(), "{v} {exact}");
        }
        assert!(nelson_e_lambda(0.5, 0.0, 1.0, 1e-10).is_err());
    }

    #[test]
    fn rejects_loose_tolerance() {
        let m = CoefficientModel::constant(3, 1.0, 0.5);
        let rho = ChargeDensity::gaussian(3, 1.0, 1.0).unwrap();
        let rule = QuadratureRule {
            rel_tol: 1e-2,
            ..Default::default()
        };
        let q = CountertermQuery {
            point: [0.0; 3],
            model: &m,
            density: &rho,
            rule,
        };
        assert!(e_kappa(&q).is_err());
    }
}
