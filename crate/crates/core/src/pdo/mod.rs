//! Symbols, their Weyl and (1,0) quantizations on the torus, leading symbols of
//! `T^{-1}` and `omega^{-1}`, and remainder decay measurements.

use std::sync::Arc;

use faer::Mat;
use serde::Serialize;

use crate::linalg::{fit_line, spectral_norm_c};
use crate::opcore::{bracket, CoefficientModel, GridSpec};
use crate::{Error, Result, C64};

type SymbolFn = dyn Fn(&[f64], &[f64]) -> C64 + Send + Sync;

/// Metric a symbol is measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Metric {
    /// `dx^2 + <xi>^{-2} dxi^2`
    Standard,
    /// Product metric on the particle-boson phase space, Planck function `min(<Xi>, <xi>)`.
    Product,
}

/// Phase-space function `a(x, xi)` with a claimed weight order `p` (class `S(<xi>^p)`).
#[derive(Clone)]
pub struct Symbol {
    name: String,
    dim: usize,
    order: i32,
    metric: Metric,
    eval: Arc<SymbolFn>,
}

impl std::fmt::Debug for Symbol {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Symbol")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("order", &self.order)
            .field("metric", &self.metric)
            .finish()
    }
}

impl Symbol {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        order: i32,
        f: impl Fn(&[f64], &[f64]) -> C64 + Send + Sync + 'static,
    ) -> Self {
        Self {
            name: name.into(),
            dim,
            order,
            metric: Metric::Standard,
            eval: Arc::new(f),
        }
    }

    pub fn real(
        name: impl Into<String>,
        dim: usize,
        order: i32,
        f: impl Fn(&[f64], &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self::new(name, dim, order, move |x, xi| C64::new(f(x, xi), 0.0))
    }

    pub fn with_metric(mut self, metric: Metric) -> Self {
        self.metric = metric;
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn order(&self) -> i32 {
        self.order
    }

    pub fn metric(&self) -> Metric {
        self.metric
    }

    pub fn eval(&self, x: &[f64], xi: &[f64]) -> C64 {
        (self.eval)(x, xi)
    }

    /// `max |a(x, xi)| <xi>^{-p}` over nodes and lattice frequencies.
    pub fn weight_constant(&self, grid: &GridSpec) -> Result<f64> {
        self.check_grid(grid)?;
        let d = grid.dim();
        let mut worst = 0.0f64;
        for i in 0..grid.len() {
            let x = grid.node(i);
            for k in 0..grid.len() {
                let xi = grid.freq(k);
                let v = self.eval(&x[..d], &xi[..d]);
                if !(v.re.is_finite() && v.im.is_finite()) {
                    return Err(Error::InvalidArgument(format!(
                        "symbol {} is not finite",
                        self.name
                    )));
                }
                worst = worst.max(v.norm() * bracket(&xi[..d]).powi(-self.order));
            }
        }
        Ok(worst)
    }

    fn check_grid(&self, grid: &GridSpec) -> Result<()> {
        if grid.dim() != self.dim {
            return Err(Error::Shape(format!(
                "symbol {} lives in dimension {}, grid in {}",
                self.name,
                self.dim,
                grid.dim()
            )));
        }
        Ok(())
    }
}

/// `E_{ik} = exp(i x_i . xi_k)`
fn plane_wave_matrix(grid: &GridSpec) -> Mat<C64> {
    let d = grid.dim();
    let nodes = grid.nodes();
    let freqs = grid.freqs();
    Mat::<C64>::from_fn(grid.len(), grid.len(), |i, k| {
        let ph: f64 = (0..d).map(|a| nodes[i][a] * freqs[k][a]).sum();
        C64::from_polar(1.0, ph)
    })
}

/// (1,0) quantization: `(Op u)(x_i) = sum_k e^{i x_i xi_k} a(x_i, xi_k) u^_k`.
pub fn quantize_kn(symbol: &Symbol, grid: &GridSpec) -> Result<Mat<C64>> {
    symbol.check_grid(grid)?;
    let d = grid.dim();
    let n = grid.len();
    let e = plane_wave_matrix(grid);
    let nodes = grid.nodes();
    let freqs = grid.freqs();
    let ea = Mat::<C64>::from_fn(n, n, |i, k| {
        e[(i, k)] * symbol.eval(&nodes[i][..d], &freqs[k][..d])
    });
    let mut out = &ea * e.adjoint();
    let inv = 1.0 / n as f64;
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] *= inv;
        }
    }
    Ok(out)
}

/// Weyl quantization built in the frequency basis:
/// `Op[k', k] = a^_{k'-k}((xi_k + xi_k') / 2)`, with the frequency midpoints on the doubled lattice.
pub fn quantize_weyl(symbol: &Symbol, grid: &GridSpec) -> Result<Mat<C64>> {
    symbol.check_grid(grid)?;
    let n_axis = grid.n_points();
    if n_axis % 2 != 0 {
        return Err(Error::InvalidGrid(
            "midpoint lattice needs an even grid size".into(),
        ));
    }
    let d = grid.dim();
    let n = grid.len();
    let nodes = grid.nodes();
    let half = (n_axis / 2) as i64;
    let span = 2 * n_axis - 1; // midpoint sums k + k' in [-n, n-2]
    let mid_count = span.pow(d as u32);
    let dk = grid.freq_spacing();
    let mut table: Vec<Vec<C64>> = Vec::with_capacity(mid_count);
    let mut samples = vec![C64::new(0.0, 0.0); n];
    for m in 0..mid_count {
        let mut eta = [0.0; 3];
        let mut rest = m;
        for a in (0..d).rev() {
            let s = (rest % span) as i64 - 2 * half;
            rest /= span;
            eta[a] = 0.5 * dk * s as f64;
        }
        for (j, slot) in samples.iter_mut().enumerate() {
            *slot = symbol.eval(&nodes[j][..d], &eta[..d]);
        }
        table.push(grid.forward(&samples));
    }
    let labels: Vec<[i64; 3]> = (0..n).map(|f| grid.label(f)).collect();
    let mut freq_op = Mat::<C64>::zeros(n, n);
    for k in 0..n {
        for kp in 0..n {
            let mut mid = 0usize;
            let mut diff = [0usize; 3];
            for a in 0..d {
                let s = labels[kp][a] + labels[k][a] + 2 * half;
                mid = mid * span + s as usize;
                let q = (labels[kp][a] - labels[k][a]).rem_euclid(n_axis as i64);
                diff[a] = ((q + half) % n_axis as i64) as usize;
            }
            freq_op[(kp, k)] = table[mid][grid.flat_index(&diff[..d])];
        }
    }
    let e = plane_wave_matrix(grid);
    let mut out = &e * &freq_op * e.adjoint();
    let inv = 1.0 / n as f64;
    for j in 0..n {
        for i in 0..n {
            out[(i, j)] *= inv;
        }
    }
    Ok(out)
}

/// Matrix-free (1,0) quantization applied to one vector; `O(N^2)` work.
pub fn apply_kn(symbol: &Symbol, grid: &GridSpec, u: &[C64]) -> Result<Vec<C64>> {
    symbol.check_grid(grid)?;
    let d = grid.dim();
    let c = grid.forward(u);
    let freqs = grid.freqs();
    Ok((0..grid.len())
        .map(|i| {
            let x = grid.node(i);
            let mut s = C64::new(0.0, 0.0);
            for (k, ck) in c.iter().enumerate() {
                if ck.norm_sqr() == 0.0 {
                    continue;
                }
                let ph: f64 = (0..d).map(|a| x[a] * freqs[k][a]).sum();
                s += C64::from_polar(1.0, ph) * symbol.eval(&x[..d], &freqs[k][..d]) * ck;
            }
            s
        })
        .collect())
}

/// Largest `|M - M^*|` relative to the largest entry.
pub fn hermiticity_residual(m: &Mat<C64>) -> f64 {
    let mut worst = 0.0f64;
    let mut scale = 0.0f64;
    for j in 0..m.ncols() {
        for i in 0..m.nrows() {
            worst = worst.max((m[(i, j)] - m[(j, i)].conj()).norm());
            scale = scale.max(m[(i, j)].norm());
        }
    }
    worst / scale.max(f64::MIN_POSITIVE)
}

/// Norm of `op` from the discrete `H^s` to `H^{s-p}`.
pub fn sobolev_operator_norm(op: &Mat<C64>, grid: &GridSpec, s: f64, p: f64) -> Result<f64> {
    let n = grid.len();
    let e = plane_wave_matrix(grid);
    let mut f = e.adjoint() * op * &e;
    let weights: Vec<f64> = (0..n)
        .map(|k| bracket(&grid.freq(k)[..grid.dim()]))
        .collect();
    for k in 0..n {
        for kp in 0..n {
            f[(kp, k)] *= weights[kp].powf(s - p) * weights[k].powf(-s) / n as f64;
        }
    }
    spectral_norm_c(&f)
}

/// Closed-form leading symbols built from the coefficient model.
#[derive(Clone, Debug)]
pub struct LeadingSymbols {
    model: Arc<CoefficientModel>,
}

impl LeadingSymbols {
    pub fn new(model: &CoefficientModel) -> Self {
        Self {
            model: Arc::new(model.clone()),
        }
    }

    fn dim(&self) -> usize {
        self.model.dim
    }

    /// `h0(x, xi) = xi . a(x) xi`
    pub fn h0(&self) -> Symbol {
        let m = self.model.clone();
        Symbol::real("h0", self.dim(), 2, move |x, xi| m.h0(x, xi))
    }

    /// Principal symbol of `h`, `h0 + v + m^2`.
    pub fn h(&self) -> Symbol {
        let m = self.model.clone();
        Symbol::real("h", self.dim(), 2, move |x, xi| {
            m.h0(x, xi) + m.potential(x)
        })
    }

    /// `K(X, xi) = xi . A(X) xi`
    pub fn k(&self) -> Symbol {
        let m = self.model.clone();
        Symbol::real("K", self.dim(), 2, move |x, xi| m.k(x, xi))
    }

    /// Leading symbol of `omega^{-1}`: `(h0 + 1)^{-1/2}`.
    pub fn d_lead(&self) -> Symbol {
        let m = self.model.clone();
        Symbol::real("d_lead", self.dim(), -1, move |x, xi| {
            (m.h0(x, xi) + 1.0).powf(-0.5)
        })
    }

    /// `b_X(x, xi) = (K(X, xi) + (h0(x, xi) + 1)^{1/2})^{-1}` at a fixed particle point.
    pub fn b_lead(&self, particle: &[f64]) -> Symbol {
        let m = self.model.clone();
        let p = particle.to_vec();
        Symbol::real("b_lead", self.dim(), -2, move |x, xi| {
            1.0 / (m.k(&p, xi) + (m.h0(x, xi) + 1.0).sqrt())
        })
    }

    /// `(K(X, Xi) + (h0(x, xi) + 1)^{1/2})^{-1}` on the product phase space (one-dimensional factors).
    pub fn b_tensor(&self) -> Result<Symbol> {
        if self.dim() != 1 {
            return Err(Error::InvalidArgument(
                "tensor symbol is only built for d = 1 factors".into(),
            ));
        }
        let m = self.model.clone();
        Ok(Symbol::real("b_tensor", 2, -2, move |x, xi| {
            1.0 / (m.k(&x[..1], &xi[..1]) + (m.h0(&x[1..2], &xi[1..2]) + 1.0).sqrt())
        })
        .with_metric(Metric::Product))
    }

    /// `c_X(x, xi) = (h0(x, xi) + 1)^{-1/2} (K(X, xi) + 1)^{-1}`
    pub fn c_x(&self, particle: &[f64]) -> Symbol {
        let m = self.model.clone();
        let p = particle.to_vec();
        Symbol::real("c_X", self.dim(), -3, move |x, xi| {
            (m.h0(x, xi) + 1.0).powf(-0.5) / (m.k(&p, xi) + 1.0)
        })
    }

    /// `d_X(x, xi) = (h0(x, xi) + 1)^{-1/2} (K(X, xi) + 1)^{-2}`
    pub fn d_x(&self, particle: &[f64]) -> Symbol {
        let m = self.model.clone();
        let p = particle.to_vec();
        Symbol::real("d_X", self.dim(), -5, move |x, xi| {
            (m.h0(x, xi) + 1.0).powf(-0.5) / (m.k(&p, xi) + 1.0).powi(2)
        })
    }
}

/// One plane-wave probe of a decay measurement.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecayRow {
    pub bracket: f64,
    pub residual: f64,
}

/// Fitted `log r = slope log <xi> + intercept` over the retained probes.
#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub symbol: String,
    pub rows: Vec<DecayRow>,
    pub slope: f64,
    pub intercept: f64,
    pub rms: f64,
}

/// Relative residual of an exact operator against the (1,0) quantization of `symbol`
/// on plane waves `e_xi`, fitted in log-log form.
///
/// Probes (flat frequency indices) in the top octave of any axis are discarded; the
/// remaining probes must span at least a decade of `<xi>`.
pub fn remainder_decay_check(
    exact_apply: &dyn Fn(&[C64]) -> Vec<C64>,
    symbol: &Symbol,
    grid: &GridSpec,
    probes: &[usize],
) -> Result<DecayReport> {
    symbol.check_grid(grid)?;
    let d = grid.dim();
    let quarter = (grid.n_points() / 4) as i64;
    let kept: Vec<usize> = probes
        .iter()
        .copied()
        .filter(|&f| grid.label(f).iter().take(d).all(|k| k.abs() <= quarter))
        .collect();
    if kept.is_empty() {
        return Err(Error::ProbeRange { ratio: 1.0 });
    }
    let brackets: Vec<f64> = kept.iter().map(|&f| bracket(&grid.freq(f)[..d])).collect();
    let lo = brackets.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = brackets.iter().cloned().fold(0.0, f64::max);
    if hi / lo < 10.0 {
        return Err(Error::ProbeRange { ratio: hi / lo });
    }
    let mut rows = Vec::with_capacity(kept.len());
    for (&f, &br) in kept.iter().zip(&brackets) {
        let xi = grid.freq(f);
        let wave: Vec<C64> = (0..grid.len())
            .map(|j| {
                let x = grid.node(j);
                C64::from_polar(1.0, (0..d).map(|a| x[a] * xi[a]).sum())
            })
            .collect();
        let exact = exact_apply(&wave);
        let mut num = 0.0;
        let mut den = 0.0;
        for j in 0..grid.len() {
            let x = grid.node(j);
            let lead = symbol.eval(&x[..d], &xi[..d]) * wave[j];
            num += (exact[j] - lead).norm_sqr();
            den += lead.norm_sqr();
        }
        rows.push(DecayRow {
            bracket: br,
            residual: (num / den).sqrt(),
        });
    }
    let lx: Vec<f64> = rows.iter().map(|r| r.bracket.ln()).collect();
    let ly: Vec<f64> = rows.iter().map(|r| r.residual.max(1e-300).ln()).collect();
    let (slope, intercept, rms) = fit_line(&lx, &ly);
    Ok(DecayReport {
        symbol: symbol.name().to_string(),
        rows,
        slope,
        intercept,
        rms,
    })
}

/// Wraps a real matrix as a complex vector map.
pub fn real_operator(m: &Mat<f64>) -> impl Fn(&[C64]) -> Vec<C64> + '_ {
    move |u: &[C64]| {
        let n = m.nrows();
        let mut out = vec![C64::new(0.0, 0.0); n];
        for (j, uj) in u.iter().enumerate() {
            let col = m.col(j);
            for i in 0..n {
                out[i] += uj * col[i];
            }
        }
        out
    }
}

/// Flat indices of the one-dimensional probes with labels `k` (or diagonal probes on
/// a two-dimensional product grid, `(-k, k)`).
pub fn probe_indices(grid: &GridSpec, labels: &[i64]) -> Vec<usize> {
    let half = (grid.n_points() / 2) as i64;
    labels
        .iter()
        .map(|&k| match grid.dim() {
            1 => grid.flat_index(&[(k + half) as usize]),
            _ => {
                let mut m = vec![(k + half) as usize; grid.dim()];
                m[0] = (-k + half) as usize;
                grid.flat_index(&m)
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::opcore::{assemble_h, CoefficientSet};
    use std::f64::consts::PI;

    fn grid() -> GridSpec {
        GridSpec::new(1, 16, 2.0 * PI).unwrap()
    }

    #[test]
    fn kn_of_xi_squared_is_spectral_laplacian() {
        let g = grid();
        let mut model = CoefficientModel::constant(1, 0.0, 1.0);
        model.mass_floor = 0.0;
        let set = CoefficientSet::sample(&model, &g, &g).unwrap();
        let h = assemble_h(&g, &set).unwrap();
        let q = quantize_kn(&Symbol::real("xi2", 1, 2, |_, xi| xi[0] * xi[0]), &g).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert!((q[(i, j)] - C64::new(h.matrix()[(i, j)], 0.0)).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn kn_of_multiplier_and_first_order_symbol() {
        let g = grid();
        let w = |x: f64| 1.0 + 0.4 * x.cos();
        let q = quantize_kn(&Symbol::real("w", 1, 0, move |x, _| w(x[0])), &g).unwrap();
        let d = g.momentum_matrix(0);
        let qd = quantize_kn(
            &Symbol::real("w xi", 1, 1, move |x, xi| w(x[0]) * xi[0]),
            &g,
        )
        .unwrap();
        for i in 0..16 {
            for j in 0..16 {
                let expect = if i == j { w(g.node(i)[0]) } else { 0.0 };
                assert!((q[(i, j)] - C64::new(expect, 0.0)).norm() < 1e-12);
                let wd = d[(i, j)] * w(g.node(i)[0]);
                assert!((qd[(i, j)] - wd).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn weyl_of_first_order_symbol_is_symmetrized() {
        let g = grid();
        let w = |x: f64| 1.0 + 0.4 * x.cos() + 0.2 * (2.0 * x).sin();
        let q = quantize_weyl(
            &Symbol::real("w xi", 1, 1, move |x, xi| w(x[0]) * xi[0]),
            &g,
        )
        .unwrap();
        let d = g.momentum_matrix(0);
        for i in 0..16 {
            for j in 0..16 {
                let sym = 0.5 * (d[(i, j)] * w(g.node(i)[0]) + d[(i, j)] * w(g.node(j)[0]));
                assert!((q[(i, j)] - sym).norm() < 1e-10, "{i} {j}");
            }
        }
        assert!(hermiticity_residual(&q) < 1e-10);
    }

    #[test]
    fn leading_symbols_at_zero_frequency() {
        let l = LeadingSymbols::new(&CoefficientModel::constant(3, 1.0, 0.5));
        let x = [0.3, 0.1, -0.2];
        assert_eq!(l.c_x(&x).eval(&x, &[0.0; 3]).re, 1.0);
        assert_eq!(l.d_x(&x).eval(&x, &[0.0; 3]).re, 1.0);
        let xi = [1.0, 2.0, 2.0];
        assert!((l.k().eval(&x, &xi).re - 4.5).abs() < 1e-14);
    }

    #[test]
    fn decay_check_rejects_narrow_range() {
        let g = GridSpec::new(1, 64, 2.0 * PI).unwrap();
        let s = Symbol::real("one", 1, 0, |_, _| 1.0);
        let id = |u: &[C64]| u.to_vec();
        let probes = probe_indices(&g, &[2, 3, 4]);
        assert!(matches!(
            remainder_decay_check(&id, &s, &g, &probes),
            Err(Error::ProbeRange { .. })
        ));
    }
}
