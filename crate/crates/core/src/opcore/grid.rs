use std::sync::Arc;

use faer::Mat;
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result, C64};

/// Periodic uniform grid on the torus `[-L/2, L/2)^d` with its dual lattice.
///
/// Flat indices are row-major with axis 0 slowest, both for nodes and for
/// frequencies. Frequencies on each axis run over `2 pi k / L`,
/// `k = -n/2, ..., n/2 - 1` in increasing order.
#[derive(Clone)]
pub struct GridSpec {
    dim: usize,
    n_points: usize,
    box_length: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridSpec {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridSpec")
            .field("dim", &self.dim)
            .field("n_points", &self.n_points)
            .field("box_length", &self.box_length)
            .finish()
    }
}

impl PartialEq for GridSpec {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.n_points == other.n_points
            && self.box_length == other.box_length
    }
}

impl GridSpec {
    pub fn new(dim: usize, n_points: usize, box_length: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in 1..=3")));
        }
        if n_points < 8 || !n_points.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "{n_points} points per axis; need a power of two >= 8"
            )));
        }
        if !(box_length > 0.0) || !box_length.is_finite() {
            return Err(Error::InvalidGrid(format!(
                "box length {box_length} must be positive"
            )));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n_points);
        let ifft = planner.plan_fft_inverse(n_points);
        Ok(Self {
            dim,
            n_points,
            box_length,
            fft,
            ifft,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_points(&self) -> usize {
        self.n_points
    }

    pub fn box_length(&self) -> f64 {
        self.box_length
    }

    /// Total number of nodes, `n^d`.
    pub fn len(&self) -> usize {
        self.n_points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        self.box_length / self.n_points as f64
    }

    /// Quadrature weight of one node, `dx^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    pub fn freq_spacing(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.box_length
    }

    /// Largest resolved frequency magnitude `pi n / L`.
    pub fn nyquist(&self) -> f64 {
        std::f64::consts::PI * self.n_points as f64 / self.box_length
    }

    pub fn axis_nodes(&self) -> Vec<f64> {
        let h = self.spacing();
        (0..self.n_points)
            .map(|i| -0.5 * self.box_length + i as f64 * h)
            .collect()
    }

    /// Integer labels `k` of the dual lattice on one axis.
    pub fn axis_labels(&self) -> Vec<i64> {
        let half = (self.n_points / 2) as i64;
        (-half..half).collect()
    }

    pub fn axis_freqs(&self) -> Vec<f64> {
        let dk = self.freq_spacing();
        self.axis_labels()
            .into_iter()
            .map(|k| k as f64 * dk)
            .collect()
    }

    /// Multi-index of a flat index (unused axes are zero).
    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let n = self.n_points;
        let mut out = [0usize; 3];
        let mut rest = flat;
        for a in (0..self.dim).rev() {
            out[a] = rest % n;
            rest /= n;
        }
        out
    }

    pub fn flat_index(&self, multi: &[usize]) -> usize {
        multi
            .iter()
            .take(self.dim)
            .fold(0, |acc, &m| acc * self.n_points + m)
    }

    pub fn node(&self, flat: usize) -> [f64; 3] {
        let m = self.multi_index(flat);
        let h = self.spacing();
        let mut x = [0.0; 3];
        for a in 0..self.dim {
            x[a] = -0.5 * self.box_length + m[a] as f64 * h;
        }
        x
    }

    /// Integer lattice label of a flat frequency index.
    pub fn label(&self, flat: usize) -> [i64; 3] {
        let m = self.multi_index(flat);
        let half = (self.n_points / 2) as i64;
        let mut k = [0i64; 3];
        for a in 0..self.dim {
            k[a] = m[a] as i64 - half;
        }
        k
    }

    pub fn freq(&self, flat: usize) -> [f64; 3] {
        let k = self.label(flat);
        let dk = self.freq_spacing();
        [k[0] as f64 * dk, k[1] as f64 * dk, k[2] as f64 * dk]
    }

    pub fn nodes(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.node(i)).collect()
    }

    pub fn freqs(&self) -> Vec<[f64; 3]> {
        (0..self.len()).map(|i| self.freq(i)).collect()
    }

    /// Whether a flat frequency index carries the unpaired Nyquist label on some axis.
    pub fn is_nyquist(&self, flat: usize) -> bool {
        let m = self.multi_index(flat);
        m.iter().take(self.dim).any(|&v| v == 0)
    }

    /// Index of the node closest to `x` (periodically).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let h = self.spacing();
        let n = self.n_points as i64;
        let mut multi = [0usize; 3];
        for a in 0..self.dim {
            let s = ((x[a] + 0.5 * self.box_length) / h).round() as i64;
            multi[a] = s.rem_euclid(n) as usize;
        }
        self.flat_index(&multi[..self.dim])
    }

    fn transform_axes(&self, data: &mut [C64], inverse: bool) {
        let n = self.n_points;
        let plan = if inverse { &self.ifft } else { &self.fft };
        let mut line = vec![C64::new(0.0, 0.0); n];
        for axis in 0..self.dim {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + offset + i * stride];
                    }
                    plan.process(&mut line);
                    for (i, v) in line.iter().enumerate() {
                        data[start + offset + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Fourier coefficients `c_k = N^-1 sum_j u_j e^{-i xi_k . x_j}` in dual-lattice order,
    /// so that `u_j = sum_k c_k e^{i xi_k . x_j}`.
    pub fn forward(&self, u: &[C64]) -> Vec<C64> {
        assert_eq!(u.len(), self.len(), "vector length does not match grid");
        let mut work = u.to_vec();
        self.transform_axes(&mut work, false);
        let inv_n = 1.0 / self.len() as f64;
        let n = self.n_points;
        let half = n / 2;
        let mut out = vec![C64::new(0.0, 0.0); work.len()];
        for (f, slot) in out.iter_mut().enumerate() {
            let m = self.multi_index(f);
            let mut src = [0usize; 3];
            let mut parity = 0i64;
            for a in 0..self.dim {
                src[a] = (m[a] + half) % n;
                parity += m[a] as i64 - half as i64;
            }
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            *slot = work[self.flat_index(&src[..self.dim])] * (sign * inv_n);
        }
        out
    }

    /// Inverse of [`GridSpec::forward`].
    pub fn inverse(&self, c: &[C64]) -> Vec<C64> {
        assert_eq!(
            c.len(),
            self.len(),
            "coefficient length does not match grid"
        );
        let n = self.n_points;
        let half = n / 2;
        let mut work = vec![C64::new(0.0, 0.0); c.len()];
        for (f, &value) in c.iter().enumerate() {
            let m = self.multi_index(f);
            let mut dst = [0usize; 3];
            let mut parity = 0i64;
            for a in 0..self.dim {
                dst[a] = (m[a] + half) % n;
                parity += m[a] as i64 - half as i64;
            }
            let sign = if parity.rem_euclid(2) == 0 { 1.0 } else { -1.0 };
            work[self.flat_index(&dst[..self.dim])] = value * sign;
        }
        self.transform_axes(&mut work, true);
        work
    }

    pub fn forward_real(&self, u: &[f64]) -> Vec<C64> {
        let z: Vec<C64> = u.iter().map(|&v| C64::new(v, 0.0)).collect();
        self.forward(&z)
    }

    /// Real spectral derivative along `axis`; the unpaired Nyquist mode is dropped.
    pub fn derivative(&self, u: &[f64], axis: usize) -> Vec<f64> {
        let mut c = self.forward_real(u);
        for (f, v) in c.iter_mut().enumerate() {
            let k = self.label(f);
            if k[axis] == -((self.n_points / 2) as i64) {
                *v = C64::new(0.0, 0.0);
            } else {
                *v *= C64::new(0.0, self.freq(f)[axis]);
            }
        }
        self.inverse(&c).into_iter().map(|z| z.re).collect()
    }

    /// Applies the Fourier multiplier `m(xi)` to a complex vector.
    pub fn apply_multiplier(&self, u: &[C64], m: impl Fn([f64; 3]) -> C64) -> Vec<C64> {
        let mut c = self.forward(u);
        for (f, v) in c.iter_mut().enumerate() {
            *v *= m(self.freq(f));
        }
        self.inverse(&c)
    }

    /// Matrix of `D_axis = -i d/dx_axis` (complex, Nyquist kept as the multiplier `-pi n/L`).
    pub fn momentum_matrix(&self, axis: usize) -> Mat<C64> {
        let n = self.len();
        let mut out = Mat::<C64>::zeros(n, n);
        let mut e = vec![C64::new(0.0, 0.0); n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = C64::new(0.0, 0.0));
            e[j] = C64::new(1.0, 0.0);
            let col = self.apply_multiplier(&e, |xi| C64::new(xi[axis], 0.0));
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    /// Matrix of the real spectral derivative along `axis` (antisymmetric).
    pub fn derivative_matrix(&self, axis: usize) -> Mat<f64> {
        let n = self.len();
        let mut out = Mat::<f64>::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e.iter_mut().for_each(|v| *v = 0.0);
            e[j] = 1.0;
            let col = self.derivative(&e, axis);
            for i in 0..n {
                out[(i, j)] = col[i];
            }
        }
        out
    }

    /// `L^2` inner product with node weight `dx^d`.
    pub fn inner(&self, u: &[f64], v: &[f64]) -> f64 {
        self.cell_volume() * u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>()
    }

    pub fn norm(&self, u: &[f64]) -> f64 {
        self.inner(u, u).sqrt()
    }

    /// Sum of samples times the cell volume.
    pub fn integrate(&self, u: &[f64]) -> f64 {
        self.cell_volume() * u.iter().sum::<f64>()
    }
}

/// Japanese bracket `<xi> = (1 + |xi|^2)^{1/2}`.
pub fn bracket(xi: &[f64]) -> f64 {
    (1.0 + xi.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn dual_lattice_for_two_pi_box() {
        let g = GridSpec::new(1, 8, 2.0 * PI).unwrap();
        let f = g.axis_freqs();
        let expect = [-4.0, -3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn two_dimensional_counts() {
        let g = GridSpec::new(2, 8, 10.0).unwrap();
        assert_eq!(g.len(), 64);
        assert_eq!(g.freqs().len(), 64);
    }

    #[test]
    fn rejects_bad_sizes() {
        assert!(GridSpec::new(1, 7, 2.0 * PI).is_err());
        assert!(GridSpec::new(1, 4, 1.0).is_err());
        assert!(GridSpec::new(1, 8, 0.0).is_err());
        assert!(GridSpec::new(4, 8, 1.0).is_err());
    }

    #[test]
    fn forward_matches_direct_sum() {
        let g = GridSpec::new(2, 8, 3.0).unwrap();
        let u: Vec<C64> = (0..g.len())
            .map(|i| C64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let c = g.forward(&u);
        for f in [0usize, 5, 17, 63] {
            let xi = g.freq(f);
            let mut direct = C64::new(0.0, 0.0);
            for (j, uj) in u.iter().enumerate() {
                let x = g.node(j);
                let ph = -(xi[0] * x[0] + xi[1] * x[1]);
                direct += uj * C64::from_polar(1.0, ph);
            }
            direct /= g.len() as f64;
            assert!((direct - c[f]).norm() < 1e-12);
        }
        let back = g.inverse(&c);
        for (a, b) in back.iter().zip(&u) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let g = GridSpec::new(1, 32, 2.0 * PI).unwrap();
        let x = g.axis_nodes();
        let u: Vec<f64> = x.iter().map(|v| (3.0 * v).sin()).collect();
        let du = g.derivative(&u, 0);
        for (xi, d) in x.iter().zip(du) {
            assert!((d - 3.0 * (3.0 * xi).cos()).abs() < 1e-11);
        }
    }
}
