use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::quadrature::{composite_gauss_legendre, gauss_legendre};
use crate::{Error, Result, C64};

/// Radial profile of a charge density.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DensityKind {
    /// `q (2 pi s^2)^{-d/2} exp(-|x|^2 / 2 s^2)`
    Gaussian,
    /// Compactly supported `exp(-1/(1 - |x/s|^2))`, normalized to charge `q`.
    Bump,
    /// Signed zero-charge profile `q (G_s - G_2s)` built from normalized Gaussians.
    NeutralPair,
}

/// Charge density `rho^kappa(x) = kappa^d rho(kappa x)` with a closed-form profile.
#[derive(Clone, Debug)]
pub struct ChargeDensity {
    kind: DensityKind,
    dim: usize,
    q: f64,
    width: f64,
    kappa: f64,
    table: Option<Arc<BumpTable>>,
}

impl ChargeDensity {
    pub fn new(kind: DensityKind, dim: usize, q: f64, width: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidArgument(format!("density dimension {dim}")));
        }
        if !(width > 0.0) || !q.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "density with q = {q}, width = {width}"
            )));
        }
        let table = match kind {
            DensityKind::Bump => Some(bump_table(dim)),
            _ => None,
        };
        Ok(Self {
            kind,
            dim,
            q,
            width,
            kappa: 1.0,
            table,
        })
    }

    pub fn gaussian(dim: usize, q: f64, width: f64) -> Result<Self> {
        Self::new(DensityKind::Gaussian, dim, q, width)
    }

    /// `rho^kappa`; `kappa` is absolute, not relative to the current scale.
    pub fn rescale(&self, kappa: f64) -> Result<Self> {
        if !(kappa >= 1.0) || !kappa.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kappa = {kappa} must be >= 1"
            )));
        }
        Ok(Self {
            kappa,
            ..self.clone()
        })
    }

    /// Same profile with the charge multiplied by `factor`.
    pub fn scaled_charge(&self, factor: f64) -> Self {
        Self {
            q: self.q * factor,
            ..self.clone()
        }
    }

    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn charge_parameter(&self) -> f64 {
        self.q
    }

    /// `int rho`, zero for the neutral profile.
    pub fn total_charge(&self) -> f64 {
        match self.kind {
            DensityKind::NeutralPair => 0.0,
            _ => self.q,
        }
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn effective_width(&self) -> f64 {
        self.width / self.kappa
    }

    /// Largest admissible `kappa` on `grid`: `0.25 * nyquist * width`.
    pub fn aliasing_cap(&self, grid: &GridSpec) -> f64 {
        0.25 * grid.nyquist() * self.width
    }

    pub fn check_resolved(&self, grid: &GridSpec) -> Result<()> {
        let cap = self.aliasing_cap(grid);
        if self.kappa > cap * (1.0 + 1e-12) {
            return Err(Error::AliasingCap {
                kappa: self.kappa,
                cap,
            });
        }
        Ok(())
    }

    fn gauss(d: usize, s: f64, r2: f64) -> f64 {
        (2.0 * PI * s * s).powf(-(d as f64) / 2.0) * (-0.5 * r2 / (s * s)).exp()
    }

    /// `rho^kappa(x)` centred at the origin.
    pub fn value(&self, x: &[f64]) -> f64 {
        let d = self.dim;
        let s = self.effective_width();
        let r2: f64 = x.iter().take(d).map(|v| v * v).sum();
        match self.kind {
            DensityKind::Gaussian => self.q * Self::gauss(d, s, r2),
            DensityKind::NeutralPair => {
                self.q * (Self::gauss(d, s, r2) - Self::gauss(d, 2.0 * s, r2))
            }
            DensityKind::Bump => {
                let u2 = r2 / (s * s);
                if u2 >= 1.0 {
                    0.0
                } else {
                    let z = self.table.as_ref().expect("bump table").norm;
                    self.q * (-1.0 / (1.0 - u2)).exp() / (z * s.powi(d as i32))
                }
            }
        }
    }

    /// Gradient of `rho^kappa` at `x`.
    pub fn gradient(&self, x: &[f64]) -> [f64; 3] {
        let d = self.dim;
        let s = self.effective_width();
        let r2: f64 = x.iter().take(d).map(|v| v * v).sum();
        // radial factor g with grad rho = g(r) * x
        let g = match self.kind {
            DensityKind::Gaussian => -self.q * Self::gauss(d, s, r2) / (s * s),
            DensityKind::NeutralPair => {
                let s2 = 2.0 * s;
                -self.q * (Self::gauss(d, s, r2) / (s * s) - Self::gauss(d, s2, r2) / (s2 * s2))
            }
            DensityKind::Bump => {
                let u2 = r2 / (s * s);
                if u2 >= 1.0 {
                    0.0
                } else {
                    let z = self.table.as_ref().expect("bump table").norm;
                    let b = (-1.0 / (1.0 - u2)).exp();
                    -2.0 * self.q * b / ((1.0 - u2).powi(2) * z * s.powi(d as i32) * s * s)
                }
            }
        };
        let mut out = [0.0; 3];
        for a in 0..d {
            out[a] = g * x[a];
        }
        out
    }

    /// Unitary Fourier transform `rho^^kappa(xi) = rho^(xi / kappa)`, real for these radial profiles.
    pub fn fourier(&self, xi: &[f64]) -> f64 {
        let d = self.dim;
        let s = self.effective_width();
        let k2: f64 = xi.iter().take(d).map(|v| v * v).sum();
        let pref = (2.0 * PI).powf(-(d as f64) / 2.0) * self.q;
        match self.kind {
            DensityKind::Gaussian => pref * (-0.5 * s * s * k2).exp(),
            DensityKind::NeutralPair => {
                pref * ((-0.5 * s * s * k2).exp() - (-2.0 * s * s * k2).exp())
            }
            DensityKind::Bump => {
                pref * self.table.as_ref().expect("bump table").eval(s * k2.sqrt())
            }
        }
    }

    /// `rho^kappa_X(x_j)` summed over the nearest periodic images.
    pub fn sample(&self, grid: &GridSpec, center: &[f64]) -> Result<Vec<f64>> {
        self.check_resolved(grid)?;
        Ok(self.periodized(grid, center, |y| self.value(y)))
    }

    /// `d/dx_axis rho^kappa_X` at the nodes, periodized like [`Self::sample`].
    pub fn sample_gradient(
        &self,
        grid: &GridSpec,
        center: &[f64],
        axis: usize,
    ) -> Result<Vec<f64>> {
        self.check_resolved(grid)?;
        Ok(self.periodized(grid, center, |y| self.gradient(y)[axis]))
    }

    fn periodized(&self, grid: &GridSpec, center: &[f64], f: impl Fn(&[f64]) -> f64) -> Vec<f64> {
        let d = grid.dim();
        let l = grid.box_length();
        let images: Vec<[f64; 3]> = image_shifts(d)
            .into_iter()
            .map(|m| m.map(|v| v * l))
            .collect();
        (0..grid.len())
            .map(|j| {
                let x = grid.node(j);
                let mut base = [0.0; 3];
                for a in 0..d {
                    let t = x[a] - center[a];
                    base[a] = t - l * (t / l).round();
                }
                images
                    .iter()
                    .map(|sh| {
                        let y = [base[0] + sh[0], base[1] + sh[1], base[2] + sh[2]];
                        f(&y[..d])
                    })
                    .sum()
            })
            .collect()
    }

    /// Analytic grid coefficient `c_k` of the periodized sample (see [`GridSpec::forward`]).
    pub fn grid_coefficient(&self, grid: &GridSpec, center: &[f64], flat: usize) -> C64 {
        let d = grid.dim();
        let xi = grid.freq(flat);
        let phase: f64 = (0..d).map(|a| xi[a] * center[a]).sum();
        let scale = (2.0 * PI).powf(d as f64 / 2.0) / grid.box_length().powi(d as i32);
        C64::from_polar(scale * self.fourier(&xi[..d]), -phase)
    }
}

fn image_shifts(d: usize) -> Vec<[f64; 3]> {
    let mut out = Vec::new();
    let r = |a: usize| if a < d { -1..=1 } else { 0..=0 };
    for i in r(0) {
        for j in r(1) {
            for k in r(2) {
                out.push([i as f64, j as f64, k as f64]);
            }
        }
    }
    out
}

/// Tabulated Fourier transform of the unit bump, `Phi(t) / Z`.
#[derive(Debug)]
struct BumpTable {
    norm: f64,
    step: f64,
    values: Vec<f64>,
}

const BUMP_T_MAX: f64 = 300.0;
const BUMP_STEP: f64 = 0.02;

impl BumpTable {
    fn eval(&self, t: f64) -> f64 {
        let u = t / self.step;
        let n = self.values.len();
        if u >= (n - 3) as f64 {
            return 0.0;
        }
        let i = (u.floor() as usize).max(1).min(n - 3);
        let f = u - i as f64;
        let (p0, p1, p2, p3) = (
            self.values[i - 1],
            self.values[i],
            self.values[i + 1],
            self.values[i + 2],
        );
        // cubic Lagrange through i-1..i+2
        let a = -f * (f - 1.0) * (f - 2.0) / 6.0;
        let b = (f + 1.0) * (f - 1.0) * (f - 2.0) / 2.0;
        let c = -(f + 1.0) * f * (f - 2.0) / 2.0;
        let e = (f + 1.0) * f * (f - 1.0) / 6.0;
        a * p0 + b * p1 + c * p2 + e * p3
    }
}

fn bump(u2: f64) -> f64 {
    if u2 >= 1.0 {
        0.0
    } else {
        (-1.0 / (1.0 - u2)).exp()
    }
}

/// Marginal of the unit bump along one axis in `d` dimensions.
fn bump_marginal(d: usize, y: f64, inner: &(Vec<f64>, Vec<f64>)) -> f64 {
    let y2 = y * y;
    if y2 >= 1.0 {
        return 0.0;
    }
    let top = (1.0 - y2).sqrt();
    let (x, w) = inner;
    match d {
        1 => bump(y2),
        2 => {
            x.iter()
                .zip(w)
                .map(|(xi, wi)| {
                    let u = 0.5 * top * (xi + 1.0);
                    wi * 0.5 * top * bump(y2 + u * u)
                })
                .sum::<f64>()
                * 2.0
        }
        _ => {
            x.iter()
                .zip(w)
                .map(|(xi, wi)| {
                    let u = 0.5 * top * (xi + 1.0);
                    wi * 0.5 * top * u * bump(y2 + u * u)
                })
                .sum::<f64>()
                * 2.0
                * PI
        }
    }
}

fn bump_table(dim: usize) -> Arc<BumpTable> {
    static TABLES: [OnceLock<Arc<BumpTable>>; 3] =
        [OnceLock::new(), OnceLock::new(), OnceLock::new()];
    TABLES[dim - 1]
        .get_or_init(|| {
            let inner = gauss_legendre(48);
            let (ys, ws) = composite_gauss_legendre(0.0, 1.0, 64, 16);
            let marg: Vec<f64> = ys.iter().map(|&y| bump_marginal(dim, y, &inner)).collect();
            let z: f64 = 2.0 * marg.iter().zip(&ws).map(|(m, w)| m * w).sum::<f64>();
            let n = (BUMP_T_MAX / BUMP_STEP) as usize + 1;
            let values = (0..n)
                .map(|i| {
                    let t = i as f64 * BUMP_STEP;
                    2.0 * ys
                        .iter()
                        .zip(&ws)
                        .zip(&marg)
                        .map(|((y, w), m)| w * m * (t * y).cos())
                        .sum::<f64>()
                        / z
                })
                .collect();
            Arc::new(BumpTable {
                norm: z,
                step: BUMP_STEP,
                values,
            })
        })
        .clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integrates_to_charge() {
        let g = GridSpec::new(1, 64, 16.0).unwrap();
        let rho = ChargeDensity::gaussian(1, 1.0, 1.0).unwrap();
        let s = rho.sample(&g, &[0.0]).unwrap();
        assert!((g.integrate(&s) - 1.0).abs() < 1e-10);
        assert!((rho.fourier(&[0.0]) - (2.0 * PI).powf(-0.5)).abs() < 1e-15);
    }

    #[test]
    fn bump_transform_matches_direct_quadrature() {
        for d in 1..=3 {
            let rho = ChargeDensity::new(DensityKind::Bump, d, 1.0, 1.0).unwrap();
            assert!(
                (rho.fourier(&[0.0, 0.0, 0.0]) - (2.0 * PI).powf(-(d as f64) / 2.0)).abs() < 1e-12
            );
        }
        // d = 3 radial formula at a few radii
        let rho = ChargeDensity::new(DensityKind::Bump, 3, 1.0, 1.0).unwrap();
        let (r, w) = composite_gauss_legendre(0.0, 1.0, 200, 16);
        for t in [0.5, 3.0, 11.7] {
            let direct: f64 = r
                .iter()
                .zip(&w)
                .map(|(&r, &w)| {
                    w * 4.0 * PI * r * r * rho.value(&[r, 0.0, 0.0]) * (t * r).sin() / (t * r)
                })
                .sum::<f64>()
                * (2.0 * PI).powf(-1.5);
            assert!((direct - rho.fourier(&[t, 0.0, 0.0])).abs() < 1e-9, "t={t}");
        }
    }

    #[test]
    fn aliasing_cap_rejects() {
        let g = GridSpec::new(1, 64, 16.0).unwrap();
        let rho = ChargeDensity::gaussian(1, 1.0, 1.0)
            .unwrap()
            .rescale(4.0)
            .unwrap();
        assert!(matches!(
            rho.sample(&g, &[0.0]),
            Err(Error::AliasingCap { .. })
        ));
    }
}
