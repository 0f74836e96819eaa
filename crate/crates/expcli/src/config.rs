//! Scenario files: TOML, every key checked, unknown keys rejected.

use std::path::Path;

use nelson_core::counterterm::QuadratureRule;
use nelson_core::opcore::{
    ChargeDensity, CoefficientModel, DensityKind, GridSpec, MatrixField, Model, ModelSpec, Profile,
    DEFAULT_MAX_TENSOR_DIM,
};
use serde::{Deserialize, Serialize};

use crate::error::LabError;
use crate::experiments::ExperimentId;

/// Bundled scenarios, by name.
pub const BUNDLED: &[(&str, &str)] = &[
    ("constant-1d", include_str!("scenarios/constant-1d.toml")),
    ("variable-1d", include_str!("scenarios/variable-1d.toml")),
    (
        "counterterm-3d",
        include_str!("scenarios/counterterm-3d.toml"),
    ),
    (
        "massless-floor-1d",
        include_str!("scenarios/massless-floor-1d.toml"),
    ),
];

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub dim: usize,
    pub sigma: f64,
    pub seed: u64,
    pub threads: usize,
    pub kappa_ladder: Vec<f64>,
    pub experiments: Vec<ExperimentId>,
    pub grid: GridConfig,
    pub coefficients: CoefficientConfig,
    pub density: DensityConfig,
    #[serde(default)]
    pub fock: FockConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub ccr: CcrConfig,
    #[serde(default)]
    pub sandwich_bounds: SandwichConfig,
    #[serde(default)]
    pub van_hove: VanHoveConfig,
    #[serde(default)]
    pub counterterm: CountertermConfig,
    #[serde(default)]
    pub renorm: RenormConfig,
    #[serde(default)]
    pub dressed: DressedConfig,
    #[serde(default)]
    pub resolvent: ResolventConfig,
    #[serde(default)]
    pub klmn: KlmnConfig,
    #[serde(default)]
    pub symbols: SymbolConfig,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub box_length: f64,
    pub boson_points: usize,
    pub particle_points: usize,
    #[serde(default = "default_tensor_dim")]
    pub max_tensor_dim: usize,
}

fn default_tensor_dim() -> usize {
    DEFAULT_MAX_TENSOR_DIM
}

/// Scalar profiles; `a` and `particle` multiply the identity matrix.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoefficientConfig {
    pub a: Profile,
    pub v: Profile,
    pub mass: Profile,
    pub particle: Profile,
    pub w: Profile,
    #[serde(default)]
    pub mass_floor: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DensityConfig {
    pub kind: DensityKind,
    pub charge: f64,
    pub width: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FockConfig {
    pub modes: usize,
    pub n_max: usize,
    pub particle_points: usize,
    #[serde(default = "default_fock_dim")]
    pub max_dim: usize,
}

impl Default for FockConfig {
    fn default() -> Self {
        Self {
            modes: 4,
            n_max: 4,
            particle_points: 16,
            max_dim: default_fock_dim(),
        }
    }
}

fn default_fock_dim() -> usize {
    nelson_core::fock::DEFAULT_MAX_FOCK_DIM
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuadratureConfig {
    pub polar_order: usize,
    pub azimuth_points: usize,
    pub rel_tol: f64,
    pub max_panels: usize,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let r = QuadratureRule::default();
        Self {
            polar_order: r.polar_order,
            azimuth_points: r.azimuth_points,
            rel_tol: r.rel_tol,
            max_panels: r.max_panels,
        }
    }
}

impl QuadratureConfig {
    pub fn rule(&self) -> QuadratureRule {
        QuadratureRule {
            polar_order: self.polar_order,
            azimuth_points: self.azimuth_points,
            rel_tol: self.rel_tol,
            max_panels: self.max_panels,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CcrConfig {
    pub samples: usize,
}

impl Default for CcrConfig {
    fn default() -> Self {
        Self { samples: 20 }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SandwichConfig {
    pub modes: usize,
    pub n_max: usize,
    pub samples: usize,
    pub s_values: Vec<f64>,
    /// Also evaluate with the number operator restricted to `omega >= sigma / 2`.
    pub projected_number: bool,
}

impl Default for SandwichConfig {
    fn default() -> Self {
        Self {
            modes: 6,
            n_max: 4,
            samples: 20,
            s_values: vec![0.0, 0.5, 1.0],
            projected_number: false,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VanHoveConfig {
    pub modes: usize,
    pub n_max: Vec<usize>,
    /// Overrides the density charge.
    pub charge: Option<f64>,
}

impl Default for VanHoveConfig {
    fn default() -> Self {
        Self {
            modes: 4,
            n_max: vec![2, 4, 6, 8],
            charge: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CountertermConfig {
    pub kappa: Vec<f64>,
    pub point: [f64; 3],
    pub lambdas: Vec<f64>,
    pub nelson_mass: f64,
    pub nelson_sigma: f64,
}

impl Default for CountertermConfig {
    fn default() -> Self {
        Self {
            kappa: (4..=10).map(|k| 2f64.powi(k)).collect(),
            point: [0.0; 3],
            lambdas: vec![1e2, 1e3, 1e4],
            nelson_mass: 0.0,
            nelson_sigma: 1.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormConfig {
    pub lattice_points: usize,
    pub kappa: Vec<f64>,
    pub points: Vec<[f64; 3]>,
}

impl Default for RenormConfig {
    fn default() -> Self {
        Self {
            lattice_points: 256,
            kappa: vec![1.0, 2.0, 4.0, 8.0],
            points: vec![[0.0; 3]],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DressedConfig {
    pub modes: usize,
    pub n_max: Vec<usize>,
    pub kappa: f64,
    pub max_beta: f64,
}

impl Default for DressedConfig {
    fn default() -> Self {
        Self {
            modes: 4,
            n_max: vec![6, 8, 10],
            kappa: 1.0,
            max_beta: 0.5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ResolventConfig {
    pub modes: usize,
    pub n_max: usize,
    pub random_probes: usize,
    pub eigen_probes: usize,
    /// `z = min spec H0 - offset`.
    pub offset: f64,
}

impl Default for ResolventConfig {
    fn default() -> Self {
        Self {
            modes: 4,
            n_max: 4,
            random_probes: 3,
            eigen_probes: 3,
            offset: 5.0,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KlmnConfig {
    pub modes: usize,
    pub n_max: usize,
    pub shifts: Vec<f64>,
}

impl Default for KlmnConfig {
    fn default() -> Self {
        Self {
            modes: 4,
            n_max: 4,
            shifts: (-4..=10).map(|k| 2f64.powi(k)).collect(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SymbolConfig {
    pub points: usize,
    pub labels: Vec<i64>,
}

impl Default for SymbolConfig {
    fn default() -> Self {
        Self {
            points: 256,
            labels: vec![1, 2, 3, 4, 6, 8, 11, 16, 22, 32, 45, 64],
        }
    }
}

fn invalid(msg: impl Into<String>) -> LabError {
    LabError::Config(msg.into())
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self, LabError> {
        let cfg: Self = toml::from_str(text).map_err(|e| invalid(e.message().to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_path(path: &Path) -> Result<Self, LabError> {
        let text = std::fs::read_to_string(path).map_err(|source| LabError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn bundled(name: &str) -> Result<Self, LabError> {
        let text = BUNDLED
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, t)| *t)
            .ok_or_else(|| invalid(format!("no bundled scenario named {name}")))?;
        Self::from_toml(text)
    }

    /// A path if it exists, else a bundled name.
    pub fn load(spec: &str) -> Result<Self, LabError> {
        let path = Path::new(spec);
        if path.exists() {
            Self::from_path(path)
        } else {
            Self::bundled(spec)
        }
    }

    pub fn validate(&self) -> Result<(), LabError> {
        if !(1..=3).contains(&self.dim) {
            return Err(invalid(format!("dim = {} must be 1, 2 or 3", self.dim)));
        }
        if !(self.sigma > 0.0) {
            return Err(invalid("sigma must be positive"));
        }
        if self.threads == 0 {
            return Err(invalid("threads must be at least 1"));
        }
        if self.kappa_ladder.is_empty() || self.kappa_ladder.iter().any(|&k| !(k >= 1.0)) {
            return Err(invalid("kappa_ladder entries must be >= 1"));
        }
        if self.kappa_ladder.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(invalid("kappa_ladder must increase strictly"));
        }
        if self.experiments.is_empty() {
            return Err(invalid("experiments must not be empty"));
        }
        if self.fock.modes == 0 || self.fock.n_max == 0 {
            return Err(invalid("fock.modes and fock.n_max must be positive"));
        }
        let density = self.base_density()?;
        let grid = self.boson_grid()?;
        let cap = density.aliasing_cap(&grid);
        if let Some(&k) = self.kappa_ladder.iter().find(|&&k| k > cap) {
            return Err(invalid(format!(
                "kappa_ladder entry {k} exceeds the aliasing cap {cap:.4} of the boson grid"
            )));
        }
        if self.experiments.contains(&ExperimentId::RenormCancellation) {
            let lattice = self.renorm_lattice()?;
            let cap = density.aliasing_cap(&lattice);
            if let Some(&k) = self.renorm.kappa.iter().find(|&&k| k > cap) {
                return Err(invalid(format!(
                    "renorm.kappa entry {k} exceeds the aliasing cap {cap:.4} of the lattice"
                )));
            }
        }
        for id in &self.experiments {
            if id.dim() != self.dim {
                return Err(invalid(format!(
                    "experiment {} needs dim = {}",
                    id.as_str(),
                    id.dim()
                )));
            }
        }
        Ok(())
    }

    pub fn coefficient_model(&self) -> CoefficientModel {
        let c = &self.coefficients;
        CoefficientModel {
            dim: self.dim,
            a: MatrixField::scalar(c.a.clone()),
            v: c.v.clone(),
            m: c.mass.clone(),
            big_a: MatrixField::scalar(c.particle.clone()),
            w: c.w.clone(),
            mass_floor: c.mass_floor,
        }
    }

    pub fn base_density(&self) -> Result<ChargeDensity, LabError> {
        let d = &self.density;
        ChargeDensity::new(d.kind, self.dim, d.charge, d.width).map_err(|e| invalid(e.to_string()))
    }

    fn grid(&self, points: usize) -> Result<GridSpec, LabError> {
        GridSpec::new(self.dim, points, self.grid.box_length).map_err(|e| invalid(e.to_string()))
    }

    pub fn boson_grid(&self) -> Result<GridSpec, LabError> {
        self.grid(self.grid.boson_points)
    }

    pub fn renorm_lattice(&self) -> Result<GridSpec, LabError> {
        self.grid(self.renorm.lattice_points)
    }

    /// Operators on the boson grid with `particle_points` particle nodes.
    pub fn model(&self, particle_points: usize) -> nelson_core::Result<Model> {
        self.model_on(
            self.grid.boson_points,
            particle_points,
            self.grid.max_tensor_dim,
        )
    }

    pub fn model_on(
        &self,
        boson_points: usize,
        particle_points: usize,
        max_tensor_dim: usize,
    ) -> nelson_core::Result<Model> {
        let l = self.grid.box_length;
        Model::build(ModelSpec {
            coefficients: self.coefficient_model(),
            boson_grid: GridSpec::new(self.dim, boson_points, l)?,
            particle_grid: GridSpec::new(self.dim, particle_points, l)?,
            sigma: self.sigma,
            max_tensor_dim,
        })
    }
}
