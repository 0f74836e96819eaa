//! The twelve named experiments. Each returns an [`Outcome`] with its tables; numeric
//! failures abort with the experiment id as the failing stage.

mod dressing;
mod energies;
mod fockspace;
mod symbols;

use faer::Mat;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::ScenarioConfig;
use crate::error::LabError;
use crate::report::Outcome;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentId {
    BetaIdentity,
    BetaOracle,
    CcrFieldBound,
    SandwichBounds,
    VanHove,
    CountertermSlope,
    NelsonLog,
    RenormCancellation,
    DressedConsistency,
    ResolventConvergence,
    KlmnPremise,
    SymbolOrder,
}

impl ExperimentId {
    pub const ALL: [ExperimentId; 12] = [
        ExperimentId::BetaIdentity,
        ExperimentId::BetaOracle,
        ExperimentId::CcrFieldBound,
        ExperimentId::SandwichBounds,
        ExperimentId::VanHove,
        ExperimentId::CountertermSlope,
        ExperimentId::NelsonLog,
        ExperimentId::RenormCancellation,
        ExperimentId::DressedConsistency,
        ExperimentId::ResolventConvergence,
        ExperimentId::KlmnPremise,
        ExperimentId::SymbolOrder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentId::BetaIdentity => "beta-identity",
            ExperimentId::BetaOracle => "beta-oracle",
            ExperimentId::CcrFieldBound => "ccr-field-bound",
            ExperimentId::SandwichBounds => "sandwich-bounds",
            ExperimentId::VanHove => "van-hove",
            ExperimentId::CountertermSlope => "counterterm-slope",
            ExperimentId::NelsonLog => "nelson-log",
            ExperimentId::RenormCancellation => "renorm-cancellation",
            ExperimentId::DressedConsistency => "dressed-consistency",
            ExperimentId::ResolventConvergence => "resolvent-convergence",
            ExperimentId::KlmnPremise => "klmn-premise",
            ExperimentId::SymbolOrder => "symbol-order",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|id| id.as_str() == s)
    }

    /// Acceptance criterion number, 1 to 12.
    pub fn criterion(self) -> usize {
        Self::ALL.iter().position(|&i| i == self).expect("listed") + 1
    }

    /// Spatial dimension the experiment is defined in.
    pub fn dim(self) -> usize {
        match self {
            ExperimentId::CountertermSlope
            | ExperimentId::NelsonLog
            | ExperimentId::RenormCancellation => 3,
            _ => 1,
        }
    }

    /// Execution order: operators, dressing, counterterm, Fock space.
    fn stage(self) -> usize {
        match self {
            ExperimentId::SymbolOrder => 0,
            ExperimentId::BetaIdentity | ExperimentId::BetaOracle => 1,
            ExperimentId::CountertermSlope
            | ExperimentId::NelsonLog
            | ExperimentId::RenormCancellation => 2,
            _ => 3,
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            ExperimentId::BetaIdentity => {
                "dressing identity residual on the variable-coefficient grid"
            }
            ExperimentId::BetaOracle => "dressing vector against the plane-wave formula",
            ExperimentId::CcrFieldBound => {
                "canonical commutation relations and the number-weighted field bound"
            }
            ExperimentId::SandwichBounds => "the four sandwiched creation/annihilation bounds",
            ExperimentId::VanHove => "van Hove ground energy against the coherent-state value",
            ExperimentId::CountertermSlope => {
                "logarithmic slope of the counterterm in three dimensions"
            }
            ExperimentId::NelsonLog => "doubling increments of the constant-coefficient energy",
            ExperimentId::RenormCancellation => {
                "cancellation of the divergence in potential minus counterterm"
            }
            ExperimentId::DressedConsistency => {
                "algebraic dressed Hamiltonian against explicit conjugation"
            }
            ExperimentId::ResolventConvergence => {
                "resolvent Cauchy differences along the kappa ladder"
            }
            ExperimentId::KlmnPremise => "relative form bound of the dressed interaction",
            ExperimentId::SymbolOrder => "decay of exact-minus-leading quantization residuals",
        }
    }
}

/// Pinned acceptance tolerances, echoed in the manifest.
pub const TOLERANCES: &[(&str, f64)] = &[
    ("beta_identity_relative", 1e-9),
    ("beta_oracle_absolute", 1e-8),
    ("ccr_absolute", 1e-12),
    ("bound_slack", 1e-9),
    ("van_hove_relative", 1e-6),
    ("counterterm_slope_relative", 0.02),
    ("nelson_increment_spread", 0.05),
    ("renorm_increment_ratio", 10.0),
    ("form_bound_a", 1.0),
    ("symbol_slope_max", -0.6),
];

pub fn tolerance(name: &str) -> f64 {
    TOLERANCES
        .iter()
        .find(|(n, _)| *n == name)
        .map(|(_, v)| *v)
        .expect("known tolerance")
}

pub(crate) trait AtStage<T> {
    fn at(self, id: ExperimentId) -> Result<T, LabError>;
}

impl<T> AtStage<T> for nelson_core::Result<T> {
    fn at(self, id: ExperimentId) -> Result<T, LabError> {
        self.map_err(|source| LabError::Numeric {
            stage: id.as_str().to_string(),
            source,
        })
    }
}

/// Seed of sample `k` of experiment `id`.
pub(crate) fn sample_seed(base: u64, id: ExperimentId, k: usize) -> u64 {
    base.wrapping_add(1000 * id.criterion() as u64 + k as u64)
}

pub(crate) fn gaussian_matrix(seed: u64, rows: usize, cols: usize) -> Mat<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m = Mat::<f64>::zeros(rows, cols);
    for j in 0..cols {
        for i in 0..rows {
            m[(i, j)] = StandardNormal.sample(&mut rng);
        }
    }
    m
}

pub(crate) fn strictly_decreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] < w[0])
}

/// Requested experiments in dependency order, optionally filtered.
pub fn plan(config: &ScenarioConfig, only: &[ExperimentId]) -> Vec<ExperimentId> {
    let mut ids: Vec<ExperimentId> = config
        .experiments
        .iter()
        .copied()
        .filter(|id| only.is_empty() || only.contains(id))
        .collect();
    ids.sort_by_key(|id| (id.stage(), id.criterion()));
    ids.dedup();
    ids
}

pub fn run(config: &ScenarioConfig, id: ExperimentId) -> Result<Outcome, LabError> {
    log::info!("running {}", id.as_str());
    match id {
        ExperimentId::BetaIdentity => dressing::beta_identity(config),
        ExperimentId::BetaOracle => dressing::beta_oracle(config),
        ExperimentId::CcrFieldBound => fockspace::ccr_field_bound(config),
        ExperimentId::SandwichBounds => fockspace::sandwich_bounds(config),
        ExperimentId::VanHove => fockspace::van_hove(config),
        ExperimentId::CountertermSlope => energies::counterterm_slope(config),
        ExperimentId::NelsonLog => energies::nelson_log(config),
        ExperimentId::RenormCancellation => energies::renorm_cancellation(config),
        ExperimentId::DressedConsistency => fockspace::dressed_consistency(config),
        ExperimentId::ResolventConvergence => fockspace::resolvent_convergence(config),
        ExperimentId::KlmnPremise => fockspace::klmn_premise(config),
        ExperimentId::SymbolOrder => symbols::symbol_order(config),
    }
}
