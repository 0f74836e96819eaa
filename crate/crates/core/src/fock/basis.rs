use std::collections::HashMap;

use faer::Mat;

use crate::linalg::{CsrMatrix, Triplets};
use crate::{Error, Result};

/// Default cap on the number of Fock states.
pub const DEFAULT_MAX_FOCK_DIM: usize = 50_000;

/// Occupation-number basis over `M` modes with at most `n_max` bosons.
///
/// States are ordered by total number, then lexicographically with larger
/// occupation of earlier modes first. The vacuum is state 0.
#[derive(Clone, Debug)]
pub struct FockBasis {
    modes: usize,
    n_max: usize,
    states: Vec<Vec<u16>>,
    totals: Vec<usize>,
    index: HashMap<Vec<u16>, usize>,
}

/// `sum_{n <= n_max} C(M + n - 1, n)`
pub fn fock_dimension(modes: usize, n_max: usize) -> usize {
    // equals C(M + n_max, n_max)
    let mut c: u128 = 1;
    for i in 1..=n_max as u128 {
        c = c * (modes as u128 + i) / i;
    }
    c.min(usize::MAX as u128) as usize
}

fn compositions(total: usize, parts: usize, prefix: &mut Vec<u16>, out: &mut Vec<Vec<u16>>) {
    if parts == 1 {
        prefix.push(total as u16);
        out.push(prefix.clone());
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first as u16);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

impl FockBasis {
    pub fn new(modes: usize, n_max: usize, max_dim: usize) -> Result<Self> {
        if modes == 0 {
            return Err(Error::InvalidArgument(
                "at least one mode is required".into(),
            ));
        }
        let dim = fock_dimension(modes, n_max);
        if dim > max_dim {
            return Err(Error::DimensionOverflow { dim, max: max_dim });
        }
        let mut states = Vec::with_capacity(dim);
        let mut totals = Vec::with_capacity(dim);
        for n in 0..=n_max {
            let start = states.len();
            compositions(n, modes, &mut Vec::with_capacity(modes), &mut states);
            totals.extend(std::iter::repeat(n).take(states.len() - start));
        }
        let index = states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.clone(), i))
            .collect();
        Ok(Self {
            modes,
            n_max,
            states,
            totals,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn state(&self, i: usize) -> &[u16] {
        &self.states[i]
    }

    pub fn total(&self, i: usize) -> usize {
        self.totals[i]
    }

    pub fn index_of(&self, occupation: &[u16]) -> Option<usize> {
        self.index.get(occupation).copied()
    }

    /// Indicator of the sector with at most `n` bosons.
    pub fn sector(&self, n: usize) -> Vec<bool> {
        self.totals.iter().map(|&t| t <= n).collect()
    }

    /// Diagonal of `N = dGamma(1)`.
    pub fn number(&self) -> Vec<f64> {
        self.totals.iter().map(|&t| t as f64).collect()
    }

    /// Diagonal of `dGamma(diag(e))`.
    pub fn second_quantize_diagonal(&self, energies: &[f64]) -> Vec<f64> {
        assert_eq!(energies.len(), self.modes);
        self.states
            .iter()
            .map(|s| s.iter().zip(energies).map(|(&n, e)| n as f64 * e).sum())
            .collect()
    }

    /// Annihilator of mode `m`.
    pub fn annihilator(&self, m: usize) -> CsrMatrix {
        self.annihilation(&unit(self.modes, m))
    }

    /// `a(f) = sum_m f_m a_m` for real mode coefficients `f`.
    pub fn annihilation(&self, coeffs: &[f64]) -> CsrMatrix {
        let mut t = Triplets::new(self.dim(), self.dim());
        self.push_annihilation(&mut t, coeffs, 0, 1.0);
        t.build()
    }

    /// Adds `scale * a(f)` into the diagonal block starting at `offset`.
    pub(crate) fn push_annihilation(
        &self,
        t: &mut Triplets,
        coeffs: &[f64],
        offset: usize,
        scale: f64,
    ) {
        assert_eq!(coeffs.len(), self.modes, "mode coefficient length");
        let mut target = vec![0u16; self.modes];
        for (col, s) in self.states.iter().enumerate() {
            for (m, &c) in coeffs.iter().enumerate() {
                if c == 0.0 || s[m] == 0 {
                    continue;
                }
                target.copy_from_slice(s);
                target[m] -= 1;
                let row = self.index[&target];
                t.push(offset + row, offset + col, scale * c * (s[m] as f64).sqrt());
            }
        }
    }

    pub fn creation(&self, coeffs: &[f64]) -> CsrMatrix {
        self.annihilation(coeffs).transpose()
    }

    /// Segal field `phi(f) = (a*(f) + a(f)) / sqrt 2`.
    pub fn field(&self, coeffs: &[f64]) -> CsrMatrix {
        let a = self.annihilation(coeffs);
        a.add_scaled(&a.transpose(), 1.0)
            .scaled(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// Generator `J(f) = (a*(f) - a(f)) / sqrt 2`, so that `i phi(i f) = -J(f)` for real `f`.
    pub fn generator(&self, coeffs: &[f64]) -> CsrMatrix {
        let a = self.annihilation(coeffs);
        a.transpose()
            .add_scaled(&a, -1.0)
            .scaled(std::f64::consts::FRAC_1_SQRT_2)
    }

    /// `dGamma(b) = sum_{mn} b_{mn} a_m^* a_n` for a real mode matrix `b`.
    pub fn second_quantize(&self, b: &Mat<f64>) -> CsrMatrix {
        assert!(b.nrows() == self.modes && b.ncols() == self.modes);
        let mut t = Triplets::new(self.dim(), self.dim());
        let mut target = vec![0u16; self.modes];
        for (col, s) in self.states.iter().enumerate() {
            for n in 0..self.modes {
                if s[n] == 0 {
                    continue;
                }
                for m in 0..self.modes {
                    let v = b[(m, n)];
                    if v == 0.0 {
                        continue;
                    }
                    target.copy_from_slice(s);
                    target[n] -= 1;
                    target[m] += 1;
                    let amp = (s[n] as f64).sqrt() * (target[m] as f64).sqrt();
                    t.push(self.index[&target], col, v * amp);
                }
            }
        }
        t.build()
    }
}

pub(crate) fn unit(n: usize, m: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[m] = 1.0;
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimensions() {
        assert_eq!(FockBasis::new(2, 2, 100).unwrap().dim(), 6);
        assert_eq!(FockBasis::new(8, 4, 1000).unwrap().dim(), 495);
        assert_eq!(FockBasis::new(3, 0, 10).unwrap().dim(), 1);
        assert_eq!(fock_dimension(4, 10), 1001);
        assert!(matches!(
            FockBasis::new(8, 4, 100),
            Err(Error::DimensionOverflow { dim: 495, .. })
        ));
    }

    #[test]
    fn ordering_starts_with_vacuum() {
        let b = FockBasis::new(2, 2, 100).unwrap();
        let s: Vec<Vec<u16>> = (0..b.dim()).map(|i| b.state(i).to_vec()).collect();
        assert_eq!(
            s,
            vec![
                vec![0, 0],
                vec![1, 0],
                vec![0, 1],
                vec![2, 0],
                vec![1, 1],
                vec![0, 2]
            ]
        );
    }

    #[test]
    fn second_quantized_identity_is_number() {
        let b = FockBasis::new(3, 3, 100).unwrap();
        let id = Mat::<f64>::from_fn(3, 3, |i, j| if i == j { 1.0 } else { 0.0 });
        let n = b.second_quantize(&id);
        for (i, v) in b.number().iter().enumerate() {
            assert!((n.get(i, i) - v).abs() < 1e-12);
        }
    }
}
