use faer::Mat;
use serde::Serialize;

use super::system::CoupledSystem;
use crate::linalg::{lanczos, CsrMatrix, Extreme};
use crate::{Error, Result};

/// `H0 = K (x) I + I (x) dGamma(omega)` in its eigenbasis, with `K` shifted up so that `H0 >= 0`.
#[derive(Clone, Debug)]
pub struct FreeSpectrum {
    k_values: Vec<f64>,
    k_vectors: Mat<f64>,
    field: Vec<f64>,
    offset: f64,
}

impl FreeSpectrum {
    pub fn new(system: &CoupledSystem) -> Self {
        let k = system.particle();
        let offset = (-k.min_eigenvalue()).max(0.0);
        Self {
            k_values: k.eigenvalues().iter().map(|v| v + offset).collect(),
            k_vectors: k.eigenvectors().clone(),
            field: system.fock().second_quantize_diagonal(system.omega()),
            offset,
        }
    }

    /// Constant added to `K`.
    pub fn offset(&self) -> f64 {
        self.offset
    }

    pub fn dim(&self) -> usize {
        self.k_values.len() * self.field.len()
    }

    /// `(H0 + c)^power v`.
    pub fn apply_power(&self, v: &[f64], c: f64, power: f64) -> Vec<f64> {
        let p = self.k_values.len();
        let d = self.field.len();
        let q = &self.k_vectors;
        let mut w = vec![0.0; v.len()];
        for i in 0..p {
            for l in 0..p {
                let ql = q[(l, i)];
                if ql != 0.0 {
                    for s in 0..d {
                        w[i * d + s] += ql * v[l * d + s];
                    }
                }
            }
        }
        for i in 0..p {
            for s in 0..d {
                w[i * d + s] *= (self.k_values[i] + self.field[s] + c).powf(power);
            }
        }
        let mut out = vec![0.0; v.len()];
        for l in 0..p {
            for i in 0..p {
                let ql = q[(l, i)];
                if ql != 0.0 {
                    for s in 0..d {
                        out[l * d + s] += ql * w[i * d + s];
                    }
                }
            }
        }
        out
    }
}

/// Which number operator weights the bounds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub enum NumberWeight {
    /// `N = dGamma(1)`.
    Full,
    /// `dGamma(1[omega >= threshold])`, for the massless argument.
    Above(f64),
}

fn number_diagonal(system: &CoupledSystem, weight: NumberWeight) -> Vec<f64> {
    let ones: Vec<f64> = system
        .omega()
        .iter()
        .map(|&w| match weight {
            NumberWeight::Full => 1.0,
            NumberWeight::Above(t) => f64::from(u8::from(w >= t)),
        })
        .collect();
    let per_block = system.fock().second_quantize_diagonal(&ones);
    (0..system.particle_dim())
        .flat_map(|_| per_block.iter().copied())
        .collect()
}

/// Operator norm of `apply`, from the top eigenvalue of `X^T X`.
pub fn operator_norm(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    apply_t: impl Fn(&[f64]) -> Vec<f64>,
    dim: usize,
) -> Result<f64> {
    let r = lanczos(
        |x| apply_t(&apply(x)),
        dim,
        Extreme::Highest,
        1e-10,
        dim.min(400),
    )?;
    Ok(r.value.max(0.0).sqrt())
}

/// `sup_X |omega^alpha v_X|` for a `P x M` coupling.
pub fn coupling_norm(v: &Mat<f64>, omega: &[f64], alpha: f64) -> f64 {
    (0..v.nrows())
        .map(|i| {
            (0..v.ncols())
                .map(|m| (omega[m].powf(alpha) * v[(i, m)]).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// One inequality evaluated on one sample.
#[derive(Clone, Debug, Serialize)]
pub struct BoundRow {
    pub sample: usize,
    pub bound: &'static str,
    pub s: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
    /// Sharp constant in front of `rhs` for the quadratic bounds: `sqrt(n / (n - 1)) <= sqrt 2`
    /// from `a a |n>` at the endpoint where no `H0` weight is present.
    pub constant: f64,
}

fn scale(v: &mut [f64], d: &[f64]) {
    v.iter_mut().zip(d).for_each(|(x, w)| *x *= w);
}

/// Left/right diagonal or free-spectrum weights of a sandwiched operator.
enum Weight<'a> {
    Number(Vec<f64>),
    Free(&'a FreeSpectrum, f64),
}

impl Weight<'_> {
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        match self {
            Weight::Number(d) => {
                let mut w = v.to_vec();
                scale(&mut w, d);
                w
            }
            Weight::Free(f, power) => f.apply_power(v, 1.0, *power),
        }
    }
}

fn sandwich_norm(left: &Weight, middle: &CsrMatrix, right: &Weight) -> Result<f64> {
    let mt = middle.transpose();
    operator_norm(
        |x| left.apply(&middle.matvec(&right.apply(x))),
        |y| right.apply(&mt.matvec(&left.apply(y))),
        middle.ncols(),
    )
}

/// The four sandwiched bounds on creation/annihilation operators plus the plain
/// `|a#(v)(N+1)^{-1/2}| <= |v|` estimate, for every sample and every `s`.
///
/// The quadratic bounds use `v1 = v_j`, `v2 = v_{j+1}` cyclically.
pub fn operator_bounds(
    system: &CoupledSystem,
    samples: &[Mat<f64>],
    s_values: &[f64],
    weight: NumberWeight,
) -> Result<Vec<BoundRow>> {
    if s_values.iter().any(|s| !(0.0..=1.0).contains(s)) {
        return Err(Error::InvalidArgument("s must lie in [0, 1]".into()));
    }
    let free = FreeSpectrum::new(system);
    let n1: Vec<f64> = number_diagonal(system, weight)
        .iter()
        .map(|n| n + 1.0)
        .collect();
    let pow = |e: f64| Weight::Number(n1.iter().map(|n| n.powf(e)).collect());
    let omega = system.omega();
    let mut rows = Vec::new();
    for (idx, v1) in samples.iter().enumerate() {
        let v2 = &samples[(idx + 1) % samples.len()];
        let a1 = system.block_annihilation(v1)?;
        let a2 = system.block_annihilation(v2)?;
        let c1 = a1.transpose();
        let c2 = a2.transpose();
        let plain = coupling_norm(v1, omega, 0.0);
        let mut push = |bound: &'static str, s: f64, lhs: f64, rhs: f64| {
            let constant = match bound {
                "pair-annihilation" => std::f64::consts::SQRT_2.powf(s),
                "pair-creation" => std::f64::consts::SQRT_2.powf(1.0 - s),
                _ => 1.0,
            };
            rows.push(BoundRow {
                sample: idx,
                bound,
                s,
                lhs,
                rhs,
                slack: rhs - lhs,
                constant,
            });
        };
        let id = Weight::Number(vec![1.0; n1.len()]);
        push(
            "field-annihilation",
            1.0,
            sandwich_norm(&id, &a1, &pow(-0.5))?,
            plain,
        );
        push(
            "field-creation",
            1.0,
            sandwich_norm(&id, &c1, &pow(-0.5))?,
            plain,
        );
        let aa = a1.matmul(&a2);
        let cc = c1.matmul(&c2);
        for &s in s_values {
            let lhs = sandwich_norm(&pow(-s / 2.0), &a1, &Weight::Free(&free, -(1.0 - s) / 2.0))?;
            push(
                "weighted-annihilation",
                s,
                lhs,
                coupling_norm(v1, omega, (s - 1.0) / 2.0),
            );
            let lhs = sandwich_norm(&Weight::Free(&free, -s / 2.0), &c1, &pow(-(1.0 - s) / 2.0))?;
            push(
                "weighted-creation",
                s,
                lhs,
                coupling_norm(v1, omega, -s / 2.0),
            );
            let lhs = sandwich_norm(&pow(-s), &aa, &Weight::Free(&free, -1.0 + s))?;
            let e = -(1.0 - s) / 2.0;
            push(
                "pair-annihilation",
                s,
                lhs,
                coupling_norm(v1, omega, e) * coupling_norm(v2, omega, e),
            );
            let lhs = sandwich_norm(&Weight::Free(&free, -s), &cc, &pow(-1.0 + s))?;
            push(
                "pair-creation",
                s,
                lhs,
                coupling_norm(v1, omega, -s / 2.0) * coupling_norm(v2, omega, -s / 2.0),
            );
        }
    }
    Ok(rows)
}

/// Relative form bound `|B(psi, psi)| <= a |H0^{1/2} psi|^2 + b |psi|^2` on the truncated space.
#[derive(Clone, Debug, Serialize)]
pub struct FormBound {
    pub a: f64,
    pub b: f64,
    /// Some tested shift gives `a < 1`.
    pub premise_holds: bool,
    /// `(c, a(c))` for every tested shift.
    pub table: Vec<(f64, f64)>,
}

/// Sweeps `c` over `shifts`, with `a(c)` the spectral radius of `(H0 + c)^{-1/2} B (H0 + c)^{-1/2}`
/// and `b = a c`. Reports the smallest `c` with `a(c) < 1`, else the smallest `a` found.
pub fn form_bound(free: &FreeSpectrum, form: &CsrMatrix, shifts: &[f64]) -> Result<FormBound> {
    if shifts.is_empty() || shifts.iter().any(|&c| c <= 0.0) {
        return Err(Error::InvalidArgument(
            "form bound shifts must be positive".into(),
        ));
    }
    if form.nrows() != free.dim() {
        return Err(Error::Shape("form does not act on the free space".into()));
    }
    let mut table = Vec::with_capacity(shifts.len());
    let mut sorted = shifts.to_vec();
    sorted.sort_by(f64::total_cmp);
    for &c in &sorted {
        let a = if form.nnz() == 0 {
            0.0
        } else {
            let op = |x: &[f64]| {
                let y = free.apply_power(x, c, -0.5);
                free.apply_power(&form.matvec(&y), c, -0.5)
            };
            let hi = lanczos(
                op,
                form.nrows(),
                Extreme::Highest,
                1e-10,
                form.nrows().min(400),
            )?
            .value;
            let lo = lanczos(
                op,
                form.nrows(),
                Extreme::Lowest,
                1e-10,
                form.nrows().min(400),
            )?
            .value;
            hi.abs().max(lo.abs())
        };
        table.push((c, a));
    }
    let chosen = table
        .iter()
        .find(|(_, a)| *a < 1.0)
        .copied()
        .unwrap_or_else(|| {
            *table
                .iter()
                .min_by(|x, y| x.1.total_cmp(&y.1))
                .expect("nonempty")
        });
    let premise_holds = chosen.1 < 1.0;
    Ok(FormBound {
        a: chosen.1,
        b: chosen.1 * chosen.0,
        premise_holds,
        table,
    })
}
