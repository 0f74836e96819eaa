use std::io::{Read, Write};
use std::path::Path;

use faer::Mat;

use crate::linalg::{conjugate_gradient, lanczos, symmetric_eigen, CsrMatrix, Extreme};
use crate::{Error, Result};

/// Above this dimension ground states and resolvents switch to Krylov methods.
pub const DENSE_LIMIT: usize = 2000;

#[derive(Clone, Debug)]
pub struct GroundState {
    pub energy: f64,
    pub vector: Vec<f64>,
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lowest eigenpair; the entry of largest modulus is made positive.
pub fn ground_state(h: &CsrMatrix) -> Result<GroundState> {
    ground_state_of(|x| h.matvec(x), h.nrows(), || Ok(h.to_dense()))
}

/// Lowest eigenpair of a matrix-free symmetric operator.
pub fn ground_state_of(
    apply: impl Fn(&[f64]) -> Vec<f64>,
    dim: usize,
    dense: impl FnOnce() -> Result<Mat<f64>>,
) -> Result<GroundState> {
    let (energy, mut vector) = if dim <= DENSE_LIMIT {
        let (vals, vecs) = symmetric_eigen(&dense()?)?;
        (vals[0], (0..dim).map(|i| vecs[(i, 0)]).collect::<Vec<_>>())
    } else {
        let r = lanczos(apply, dim, Extreme::Lowest, 1e-11, dim.min(600))?;
        (r.value, r.vector)
    };
    fix_sign(&mut vector);
    Ok(GroundState { energy, vector })
}

fn check_point(z: f64, min_spec: f64) -> Result<()> {
    if z > min_spec - 1.0 {
        return Err(Error::ResolventPoint { z, min_spec });
    }
    Ok(())
}

/// `(H - z)^{-1} psi`, with `z <= min spec H - 1` verified first.
pub fn resolvent_apply(h: &CsrMatrix, z: f64, psi: &[f64]) -> Result<Vec<f64>> {
    let min_spec = ground_state(h)?.energy;
    resolvent_apply_below(h, z, psi, min_spec)
}

/// As [`resolvent_apply`] with the spectrum bottom supplied by the caller.
pub fn resolvent_apply_below(
    h: &CsrMatrix,
    z: f64,
    psi: &[f64],
    min_spec: f64,
) -> Result<Vec<f64>> {
    check_point(z, min_spec)?;
    conjugate_gradient(
        |x| {
            let mut y = h.matvec(x);
            y.iter_mut().zip(x).for_each(|(y, x)| *y -= z * x);
            y
        },
        psi,
        1e-13,
        10 * h.nrows().max(100),
    )
}

/// Dense `(H - z)^{-1}` from the eigendecomposition.
pub fn dense_resolvent(h: &CsrMatrix, z: f64) -> Result<Mat<f64>> {
    if h.nrows() > 4 * DENSE_LIMIT {
        return Err(Error::DimensionOverflow {
            dim: h.nrows(),
            max: 4 * DENSE_LIMIT,
        });
    }
    let (vals, vecs) = symmetric_eigen(&h.to_dense())?;
    check_point(z, vals[0])?;
    let scaled = Mat::<f64>::from_fn(vecs.nrows(), vecs.ncols(), |i, j| {
        vecs[(i, j)] / (vals[j] - z)
    });
    Ok(&scaled * vecs.transpose())
}

/// Writes `m` as two little-endian `u64` dimensions followed by row-major little-endian `f64`.
pub fn write_dense(path: &Path, m: &Mat<f64>) -> std::io::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    f.write_all(&(m.nrows() as u64).to_le_bytes())?;
    f.write_all(&(m.ncols() as u64).to_le_bytes())?;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            f.write_all(&m[(i, j)].to_le_bytes())?;
        }
    }
    f.flush()
}

pub fn read_dense(path: &Path) -> std::io::Result<Mat<f64>> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)?.read_to_end(&mut bytes)?;
    let bad = || {
        std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            "truncated dense matrix file",
        )
    };
    if bytes.len() < 16 {
        return Err(bad());
    }
    let word = |k: usize| u64::from_le_bytes(bytes[8 * k..8 * k + 8].try_into().expect("8 bytes"));
    let (r, c) = (word(0) as usize, word(1) as usize);
    if bytes.len() != 16 + 8 * r * c {
        return Err(bad());
    }
    Ok(Mat::<f64>::from_fn(r, c, |i, j| {
        f64::from_le_bytes(
            bytes[16 + 8 * (i * c + j)..24 + 8 * (i * c + j)]
                .try_into()
                .expect("8 bytes"),
        )
    }))
}
