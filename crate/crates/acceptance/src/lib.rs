//! Criterion table for the acceptance suite.
//!
//! Each criterion runs one experiment on one bundled scenario. Before running, the scenario
//! is checked against the fixed acceptance parameters (grid sizes, ladders, truncations) and
//! the experiment tolerance against its pinned value, so an edited scenario cannot loosen a
//! criterion silently.

use std::time::{Duration, Instant};

use nelson_lab::experiments::{tolerance, ExperimentId};
use nelson_lab::{run_scenario, LabError, ScenarioConfig};

pub struct Criterion {
    pub number: usize,
    pub scenario: &'static str,
    pub id: ExperimentId,
    /// Tolerance name and the value it must have.
    pub pinned: Option<(&'static str, f64)>,
    /// Runtime budget.
    pub budget: Duration,
}

const fn c(
    number: usize,
    scenario: &'static str,
    id: ExperimentId,
    pinned: Option<(&'static str, f64)>,
    minutes: u64,
) -> Criterion {
    Criterion {
        number,
        scenario,
        id,
        pinned,
        budget: Duration::from_secs(60 * minutes),
    }
}

pub const CRITERIA: [Criterion; 12] = [
    c(
        1,
        "variable-1d",
        ExperimentId::BetaIdentity,
        Some(("beta_identity_relative", 1e-9)),
        1,
    ),
    c(
        2,
        "constant-1d",
        ExperimentId::BetaOracle,
        Some(("beta_oracle_absolute", 1e-8)),
        1,
    ),
    c(
        3,
        "constant-1d",
        ExperimentId::CcrFieldBound,
        Some(("ccr_absolute", 1e-12)),
        1,
    ),
    c(
        4,
        "massless-floor-1d",
        ExperimentId::SandwichBounds,
        Some(("bound_slack", 1e-9)),
        2,
    ),
    c(
        5,
        "constant-1d",
        ExperimentId::VanHove,
        Some(("van_hove_relative", 1e-6)),
        2,
    ),
    c(
        6,
        "counterterm-3d",
        ExperimentId::CountertermSlope,
        Some(("counterterm_slope_relative", 0.02)),
        1,
    ),
    c(
        7,
        "counterterm-3d",
        ExperimentId::NelsonLog,
        Some(("nelson_increment_spread", 0.05)),
        1,
    ),
    c(
        8,
        "counterterm-3d",
        ExperimentId::RenormCancellation,
        Some(("renorm_increment_ratio", 10.0)),
        2,
    ),
    c(9, "constant-1d", ExperimentId::DressedConsistency, None, 5),
    c(
        10,
        "constant-1d",
        ExperimentId::ResolventConvergence,
        None,
        5,
    ),
    c(
        11,
        "variable-1d",
        ExperimentId::KlmnPremise,
        Some(("form_bound_a", 1.0)),
        2,
    ),
    c(
        12,
        "variable-1d",
        ExperimentId::SymbolOrder,
        Some(("symbol_slope_max", -0.6)),
        2,
    ),
];

fn doublings(ladder: &[f64]) -> bool {
    ladder.windows(2).all(|w| (w[1] / w[0] - 2.0).abs() < 1e-12)
}

/// Scenario parameters the criterion is defined at. Returns the first mismatch.
pub fn check_parameters(cr: &Criterion, cfg: &ScenarioConfig) -> Result<(), String> {
    let need = |ok: bool, what: &str| {
        if ok {
            Ok(())
        } else {
            Err(format!("{}: expected {what}", cfg.name))
        }
    };
    need(cfg.dim == cr.id.dim(), "matching dimension")?;
    need(
        cfg.experiments.contains(&cr.id),
        "the experiment to be listed",
    )?;
    match cr.id {
        ExperimentId::BetaIdentity => need(
            cfg.grid.particle_points == 32 && cfg.grid.boson_points == 64,
            "particle grid 32, boson grid 64",
        ),
        ExperimentId::CcrFieldBound => need(cfg.ccr.samples == 20, "20 samples"),
        ExperimentId::SandwichBounds => {
            let l = &cfg.sandwich_bounds;
            need(
                l.modes == 6 && l.n_max == 4 && l.samples == 20,
                "M = 6, n_max = 4, 20 samples",
            )?;
            need(l.s_values == [0.0, 0.5, 1.0], "s in {0, 1/2, 1}")
        }
        ExperimentId::VanHove => need(cfg.van_hove.n_max == [2, 4, 6, 8], "n_max in {2,4,6,8}"),
        ExperimentId::CountertermSlope => {
            let k = &cfg.counterterm.kappa;
            need(
                k.first() == Some(&16.0) && k.last() == Some(&1024.0),
                "kappa over [2^4, 2^10]",
            )?;
            need(
                cfg.counterterm.point == [0.0; 3] && cfg.density.charge == 1.0,
                "q = 1 at the origin",
            )
        }
        ExperimentId::NelsonLog => {
            let c = &cfg.counterterm;
            need(c.lambdas == [1e2, 1e3, 1e4], "Lambda in {1e2,1e3,1e4}")?;
            need(
                c.nelson_mass == 0.0 && c.nelson_sigma == 1.0,
                "m = 0, sigma = 1",
            )
        }
        ExperimentId::RenormCancellation => {
            need(cfg.renorm.kappa.len() >= 3, "at least three rungs")
        }
        ExperimentId::DressedConsistency => {
            let d = &cfg.dressed;
            need(
                d.modes == 4 && d.n_max == [6, 8, 10] && d.max_beta == 0.5,
                "M = 4, n_max in {6,8,10}, |beta| <= 0.5",
            )
        }
        ExperimentId::ResolventConvergence => need(
            cfg.kappa_ladder.len() == 4 && doublings(&cfg.kappa_ladder),
            "three kappa doublings",
        ),
        ExperimentId::KlmnPremise => need(cfg.kappa_ladder.len() >= 2, "a kappa ladder"),
        ExperimentId::SymbolOrder => need(cfg.symbols.points == 256, "N = 256"),
        ExperimentId::BetaOracle => Ok(()),
    }
}

pub struct Verdict {
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

/// Runs one criterion. Parameter or tolerance drift and runtime errors count as failures.
pub fn run(cr: &Criterion) -> Verdict {
    let start = Instant::now();
    let result = (|| -> Result<(bool, String), LabError> {
        let cfg = ScenarioConfig::bundled(cr.scenario)?;
        cfg.validate()?;
        if let Err(e) = check_parameters(cr, &cfg) {
            return Ok((false, format!("parameter drift: {e}")));
        }
        if let Some((name, value)) = cr.pinned {
            if tolerance(name) != value {
                return Ok((
                    false,
                    format!("tolerance {name} is {} instead of {value}", tolerance(name)),
                ));
            }
        }
        let out = run_scenario(&cfg, &[cr.id])?;
        let o = &out.outcomes[0];
        Ok((o.passed, o.detail.clone()))
    })();
    let elapsed = start.elapsed();
    let (mut passed, mut detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    if elapsed > cr.budget {
        passed = false;
        detail.push_str(&format!("; over the {} s budget", cr.budget.as_secs()));
    }
    Verdict {
        passed,
        detail,
        elapsed,
    }
}
