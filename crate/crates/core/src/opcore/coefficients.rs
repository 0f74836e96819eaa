use serde::{Deserialize, Serialize};

use super::grid::GridSpec;
use crate::{Error, Result};

/// Closed-form scalar profile used for every coefficient field.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Profile {
    /// `value`
    Constant { value: f64 },
    /// `base + amplitude * mean_a sin(wavenumber * x_a)`
    Sinusoidal {
        base: f64,
        amplitude: f64,
        wavenumber: f64,
    },
    /// `base + height * prod_a (tanh((x_a + radius)/edge) - tanh((x_a - radius)/edge)) / 2`
    Plateau {
        base: f64,
        height: f64,
        radius: f64,
        edge: f64,
    },
}

impl Profile {
    pub fn constant(value: f64) -> Self {
        Profile::Constant { value }
    }

    pub fn value(&self, x: &[f64], dim: usize) -> f64 {
        match *self {
            Profile::Constant { value } => value,
            Profile::Sinusoidal {
                base,
                amplitude,
                wavenumber,
            } => {
                let s: f64 = x.iter().take(dim).map(|&t| (wavenumber * t).sin()).sum();
                base + amplitude * s / dim as f64
            }
            Profile::Plateau {
                base,
                height,
                radius,
                edge,
            } => {
                let p: f64 = x
                    .iter()
                    .take(dim)
                    .map(|&t| plateau_factor(t, radius, edge))
                    .product();
                base + height * p
            }
        }
    }

    /// Partial derivative along `axis`.
    pub fn derivative(&self, x: &[f64], dim: usize, axis: usize) -> f64 {
        match *self {
            Profile::Constant { .. } => 0.0,
            Profile::Sinusoidal {
                amplitude,
                wavenumber,
                ..
            } => amplitude * wavenumber * (wavenumber * x[axis]).cos() / dim as f64,
            Profile::Plateau {
                height,
                radius,
                edge,
                ..
            } => {
                let mut p = 1.0;
                for (a, &t) in x.iter().enumerate().take(dim) {
                    p *= if a == axis {
                        plateau_slope(t, radius, edge)
                    } else {
                        plateau_factor(t, radius, edge)
                    };
                }
                height * p
            }
        }
    }

    /// Checks that the profile is periodic on the torus of the grid.
    pub fn check_periodic(&self, grid: &GridSpec) -> Result<()> {
        if let Profile::Sinusoidal { wavenumber, .. } = *self {
            let turns = wavenumber * grid.box_length() / (2.0 * std::f64::consts::PI);
            if (turns - turns.round()).abs() > 1e-9 {
                return Err(Error::InvalidField(format!(
                    "wavenumber {wavenumber} is not periodic on a box of length {}",
                    grid.box_length()
                )));
            }
        }
        Ok(())
    }

    pub fn sample(&self, grid: &GridSpec) -> Vec<f64> {
        (0..grid.len())
            .map(|i| self.value(&grid.node(i), grid.dim()))
            .collect()
    }
}

fn plateau_factor(t: f64, radius: f64, edge: f64) -> f64 {
    0.5 * (((t + radius) / edge).tanh() - ((t - radius) / edge).tanh())
}

fn plateau_slope(t: f64, radius: f64, edge: f64) -> f64 {
    let sech2 = |u: f64| 1.0 / u.cosh().powi(2);
    0.5 * (sech2((t + radius) / edge) - sech2((t - radius) / edge)) / edge
}

/// Symmetric matrix field `profile(x) * base`.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixField {
    pub profile: Profile,
    pub base: [[f64; 3]; 3],
}

const IDENTITY: [[f64; 3]; 3] = [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];

impl MatrixField {
    pub fn scalar(profile: Profile) -> Self {
        Self {
            profile,
            base: IDENTITY,
        }
    }

    pub fn constant(value: f64) -> Self {
        Self::scalar(Profile::constant(value))
    }

    pub fn value(&self, x: &[f64], dim: usize) -> [[f64; 3]; 3] {
        scale(&self.base, self.profile.value(x, dim))
    }

    pub fn derivative(&self, x: &[f64], dim: usize, axis: usize) -> [[f64; 3]; 3] {
        scale(&self.base, self.profile.derivative(x, dim, axis))
    }

    /// `xi . M(x) xi`
    pub fn quadratic(&self, x: &[f64], xi: &[f64], dim: usize) -> f64 {
        self.profile.value(x, dim) * quad(&self.base, xi, dim)
    }

    /// Extreme eigenvalues of the base matrix restricted to the leading `dim` block.
    pub fn base_extremes(&self, dim: usize) -> Result<(f64, f64)> {
        let b = &self.base;
        for j in 0..dim {
            for k in 0..dim {
                if (b[j][k] - b[k][j]).abs() > 1e-14 * (1.0 + b[j][k].abs()) {
                    return Err(Error::InvalidField("matrix field is not symmetric".into()));
                }
            }
        }
        let m = faer::Mat::<f64>::from_fn(dim, dim, |j, k| b[j][k]);
        let ev = m
            .self_adjoint_eigenvalues(faer::Side::Lower)
            .map_err(|e| Error::Eigen(format!("{e:?}")))?;
        Ok((ev[0], ev[dim - 1]))
    }
}

fn scale(m: &[[f64; 3]; 3], s: f64) -> [[f64; 3]; 3] {
    let mut out = *m;
    out.iter_mut().flatten().for_each(|v| *v *= s);
    out
}

pub fn quad(m: &[[f64; 3]; 3], xi: &[f64], dim: usize) -> f64 {
    let mut s = 0.0;
    for j in 0..dim {
        for k in 0..dim {
            s += xi[j] * m[j][k] * xi[k];
        }
    }
    s
}

/// Closed-form coefficient model: `a`, `v`, `m` on the boson side, `A`, `W` on the particle side.
#[derive(Clone, Debug, PartialEq)]
pub struct CoefficientModel {
    pub dim: usize,
    pub a: MatrixField,
    pub v: Profile,
    pub m: Profile,
    pub big_a: MatrixField,
    pub w: Profile,
    /// Lower bound applied to the mass field, `m -> max(m, floor)`.
    pub mass_floor: f64,
}

impl CoefficientModel {
    /// `a = I`, `v = 0`, `m = mass`, `A = particle_scale * I`, `W = 0`.
    pub fn constant(dim: usize, mass: f64, particle_scale: f64) -> Self {
        Self {
            dim,
            a: MatrixField::constant(1.0),
            v: Profile::constant(0.0),
            m: Profile::constant(mass),
            big_a: MatrixField::constant(particle_scale),
            w: Profile::constant(0.0),
            mass_floor: 0.0,
        }
    }

    pub fn with_mass_floor(mut self, floor: f64) -> Self {
        self.mass_floor = floor;
        self
    }

    pub fn mass(&self, x: &[f64]) -> f64 {
        self.m.value(x, self.dim).max(self.mass_floor)
    }

    /// `v(x) + m(x)^2`
    pub fn potential(&self, x: &[f64]) -> f64 {
        let m = self.mass(x);
        self.v.value(x, self.dim) + m * m
    }

    /// `h0(x, xi) = xi . a(x) xi`
    pub fn h0(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.a.quadratic(x, xi, self.dim)
    }

    /// `K(X, xi) = xi . A(X) xi`
    pub fn k(&self, x: &[f64], xi: &[f64]) -> f64 {
        self.big_a.quadratic(x, xi, self.dim)
    }

    pub fn check_periodic(&self, boson: &GridSpec, particle: &GridSpec) -> Result<()> {
        self.a.profile.check_periodic(boson)?;
        self.v.check_periodic(boson)?;
        self.m.check_periodic(boson)?;
        self.big_a.profile.check_periodic(particle)?;
        self.w.check_periodic(particle)
    }
}

/// Coefficient fields sampled on the boson and particle grids.
#[derive(Clone, Debug)]
pub struct CoefficientSet {
    pub model: CoefficientModel,
    pub a: Vec<[[f64; 3]; 3]>,
    pub potential: Vec<f64>,
    pub big_a: Vec<[[f64; 3]; 3]>,
    pub w: Vec<f64>,
    pub c0: f64,
    pub c1: f64,
}

impl CoefficientSet {
    pub fn sample(model: &CoefficientModel, boson: &GridSpec, particle: &GridSpec) -> Result<Self> {
        if boson.dim() != model.dim || particle.dim() != model.dim {
            return Err(Error::Shape(
                "grid dimension differs from coefficient dimension".into(),
            ));
        }
        model.check_periodic(boson, particle)?;
        let d = model.dim;
        let xs = boson.nodes();
        let ps = particle.nodes();
        let a: Vec<_> = xs.iter().map(|x| model.a.value(x, d)).collect();
        let potential: Vec<f64> = xs.iter().map(|x| model.potential(x)).collect();
        let big_a: Vec<_> = ps.iter().map(|x| model.big_a.value(x, d)).collect();
        let w: Vec<f64> = ps.iter().map(|x| model.w.value(x, d)).collect();
        let (c0a, c1a) = field_extremes(&model.a, &xs, d)?;
        let (c0b, c1b) = field_extremes(&model.big_a, &ps, d)?;
        let c0 = c0a.min(c0b);
        let c1 = c1a.max(c1b);
        if !(c0 > 0.0) {
            return Err(Error::Ellipticity(format!(
                "lower ellipticity constant c0 = {c0:.3e} is not positive"
            )));
        }
        if potential.iter().chain(&w).any(|v| !v.is_finite()) {
            return Err(Error::InvalidField("non-finite potential sample".into()));
        }
        Ok(Self {
            model: model.clone(),
            a,
            potential,
            big_a,
            w,
            c0,
            c1,
        })
    }
}

fn field_extremes(field: &MatrixField, nodes: &[[f64; 3]], dim: usize) -> Result<(f64, f64)> {
    let (lo, hi) = field.base_extremes(dim)?;
    let mut c0 = f64::INFINITY;
    let mut c1 = f64::NEG_INFINITY;
    for x in nodes {
        let p = field.profile.value(x, dim);
        let (a, b) = if p >= 0.0 {
            (p * lo, p * hi)
        } else {
            (p * hi, p * lo)
        };
        c0 = c0.min(a);
        c1 = c1.max(b);
    }
    Ok((c0, c1))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn plateau_derivative_matches_difference() {
        let p = Profile::Plateau {
            base: 1.0,
            height: 0.5,
            radius: 1.0,
            edge: 0.3,
        };
        let x = [0.7, -0.2, 0.0];
        let h = 1e-6;
        let fd =
            (p.value(&[x[0] + h, x[1], 0.0], 2) - p.value(&[x[0] - h, x[1], 0.0], 2)) / (2.0 * h);
        assert!((fd - p.derivative(&x, 2, 0)).abs() < 1e-8);
    }

    #[test]
    fn rejects_degenerate_particle_metric() {
        let g = GridSpec::new(1, 8, 6.0).unwrap();
        let mut model = CoefficientModel::constant(1, 1.0, 0.5);
        model.big_a = MatrixField::constant(0.0);
        assert!(matches!(
            CoefficientSet::sample(&model, &g, &g),
            Err(Error::Ellipticity(_))
        ));
    }
}
