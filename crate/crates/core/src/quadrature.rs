//! Gauss-Legendre rules and adaptive Gauss-Kronrod integration.

use crate::{Error, Result};

/// Nodes and weights of the `n`-point Gauss-Legendre rule on `[-1, 1]`.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(n, z);
        if d != 0.0 {
            dp = d;
        }
        x[i] = -z;
        x[n - 1 - i] = z;
        let wi = 2.0 / ((1.0 - z * z) * dp * dp);
        w[i] = wi;
        w[n - 1 - i] = wi;
    }
    (x, w)
}

fn legendre(n: usize, z: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = z;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * z * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (z * p1 - p0) / (z * z - 1.0);
    (p1, d)
}

/// Composite Gauss-Legendre rule on `[a, b]` with `panels` equal panels of `order` nodes.
pub fn composite_gauss_legendre(
    a: f64,
    b: f64,
    panels: usize,
    order: usize,
) -> (Vec<f64>, Vec<f64>) {
    let (x, w) = gauss_legendre(order);
    let h = (b - a) / panels as f64;
    let mut nodes = Vec::with_capacity(panels * order);
    let mut weights = Vec::with_capacity(panels * order);
    for p in 0..panels {
        let lo = a + p as f64 * h;
        for (xi, wi) in x.iter().zip(&w) {
            nodes.push(lo + 0.5 * h * (xi + 1.0));
            weights.push(0.5 * h * wi);
        }
    }
    (nodes, weights)
}

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One G7-K15 panel: `(kronrod estimate, |kronrod - gauss|)`.
pub fn gauss_kronrod_15(f: &mut impl FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut k = fc * WGK[7];
    let mut g = fc * WG[3];
    for j in 0..7 {
        let dx = h * XGK[j];
        let s = f(c - dx) + f(c + dx);
        k += WGK[j] * s;
        if j % 2 == 1 {
            g += WG[j / 2] * s;
        }
    }
    (k * h, ((k - g) * h).abs())
}

/// Adaptive bisection with G7-K15 panels until the summed error estimate is below
/// `max(abs_tol, rel_tol * |I|)`.
pub fn adaptive(
    f: &mut impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    rel_tol: f64,
    abs_tol: f64,
    max_panels: usize,
) -> Result<(f64, f64)> {
    let (v0, e0) = gauss_kronrod_15(f, a, b);
    let mut panels: Vec<(f64, f64, f64, f64)> = vec![(a, b, v0, e0)];
    loop {
        let total: f64 = panels.iter().map(|p| p.2).sum();
        let err: f64 = panels.iter().map(|p| p.3).sum();
        if err <= abs_tol.max(rel_tol * total.abs()) {
            return Ok((total, err));
        }
        if panels.len() >= max_panels {
            return Err(Error::Quadrature {
                partial: total,
                error: err,
            });
        }
        let (idx, _) = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1 .3.total_cmp(&y.1 .3))
            .expect("nonempty");
        let (lo, hi, _, _) = panels.swap_remove(idx);
        let mid = 0.5 * (lo + hi);
        let (vl, el) = gauss_kronrod_15(f, lo, mid);
        let (vr, er) = gauss_kronrod_15(f, mid, hi);
        panels.push((lo, mid, vl, el));
        panels.push((mid, hi, vr, er));
    }
}

/// Integral over `[start, inf)` on doubling panels `[r_k, 2 r_k]`, each adaptively refined.
///
/// Stops once two consecutive panels contribute less than `rel_tol * |I|` and the panel
/// start exceeds `min_extent`.
pub fn doubling_panels(
    f: &mut impl FnMut(f64) -> f64,
    first: f64,
    min_extent: f64,
    rel_tol: f64,
    max_panels: usize,
) -> Result<(f64, f64)> {
    let (mut total, mut err) = adaptive(f, 0.0, first, rel_tol, 0.0, 200)?;
    let mut lo = first;
    let mut quiet = 0;
    for _ in 0..max_panels {
        let hi = 2.0 * lo;
        let (v, e) = match adaptive(f, lo, hi, rel_tol, 1e-300, 400) {
            Ok(r) => r,
            Err(Error::Quadrature { partial, error }) => {
                return Err(Error::Quadrature {
                    partial: total + partial,
                    error: err + error,
                })
            }
            Err(e) => return Err(e),
        };
        total += v;
        err += e;
        lo = hi;
        if v.abs() <= rel_tol * total.abs() {
            quiet += 1;
        } else {
            quiet = 0;
        }
        if quiet >= 2 && lo >= min_extent {
            return Ok((total, err));
        }
    }
    Err(Error::Quadrature {
        partial: total,
        error: err,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_rule_integrates_polynomials() {
        let (x, w) = gauss_legendre(16);
        let s: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(30)).sum();
        assert!((s - 2.0 / 31.0).abs() < 1e-14);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_peaks() {
        let mut f = |x: f64| 1.0 / (1e-4 + (x - 0.3).powi(2));
        let (v, _) = adaptive(&mut f, 0.0, 1.0, 1e-12, 0.0, 2000).unwrap();
        let exact = (0.7f64 / 1e-2).atan() / 1e-2 + (0.3f64 / 1e-2).atan() / 1e-2;
        assert!((v - exact).abs() < 1e-9 * exact);
    }

    #[test]
    fn doubling_panels_reach_tails() {
        let mut f = |x: f64| (-x).exp();
        let (v, _) = doubling_panels(&mut f, 0.5, 1.0, 1e-12, 80).unwrap();
        assert!((v - 1.0).abs() < 1e-11);
    }
}
