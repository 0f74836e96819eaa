use super::boson::BosonOperators;
use super::coefficients::{CoefficientModel, CoefficientSet};
use super::grid::GridSpec;
use super::spectral::{assemble_h, assemble_k, assemble_k0, SpectralOperator};
use super::tensor::TensorSum;
use crate::{Error, Result};

/// Inputs needed to build every one-particle and particle operator of a run.
#[derive(Clone, Debug)]
pub struct ModelSpec {
    pub coefficients: CoefficientModel,
    pub boson_grid: GridSpec,
    pub particle_grid: GridSpec,
    pub sigma: f64,
    pub max_tensor_dim: usize,
}

/// Assembled operators: `h` with its calculus, `K0`, `K` and the tensor sum `T`.
#[derive(Clone, Debug)]
pub struct Model {
    pub spec: ModelSpec,
    pub coeffs: CoefficientSet,
    pub boson: BosonOperators,
    pub k0: SpectralOperator,
    pub k: SpectralOperator,
    pub t: TensorSum,
    pub warnings: Vec<String>,
}

impl Model {
    pub fn build(spec: ModelSpec) -> Result<Self> {
        let bg = &spec.boson_grid;
        let pg = &spec.particle_grid;
        if bg.dim() != pg.dim() {
            return Err(Error::Shape(
                "particle and boson grids differ in dimension".into(),
            ));
        }
        if (bg.box_length() - pg.box_length()).abs() > 1e-12 * bg.box_length() {
            return Err(Error::Shape(
                "particle and boson grids must share the torus".into(),
            ));
        }
        let coeffs = CoefficientSet::sample(&spec.coefficients, bg, pg)?;
        let h = assemble_h(bg, &coeffs)?;
        let k0 = assemble_k0(pg, &coeffs)?;
        let k = assemble_k(pg, &coeffs)?;
        let mut warnings = Vec::new();
        for (name, op) in [("h", &h), ("K0", &k0)] {
            if !op.is_semidefinite(1e-9) {
                warnings.push(format!(
                    "{name} has eigenvalue {:.3e} below zero",
                    op.min_eigenvalue()
                ));
            }
        }
        let boson = BosonOperators::new(h, spec.sigma)?;
        let t = TensorSum::new(k0.clone(), boson.omega_sigma()?, spec.max_tensor_dim)?;
        Ok(Self {
            spec,
            coeffs,
            boson,
            k0,
            k,
            t,
            warnings,
        })
    }

    pub fn boson_grid(&self) -> &GridSpec {
        &self.spec.boson_grid
    }

    pub fn particle_grid(&self) -> &GridSpec {
        &self.spec.particle_grid
    }

    pub fn sigma(&self) -> f64 {
        self.spec.sigma
    }
}
