//! Scenario runner for the Nelson model laboratory.
//!
//! A scenario is a TOML file (see [`config::ScenarioConfig`]) naming the grids, coefficient
//! fields, charge density, Fock truncation and the experiments to run. [`run_scenario`]
//! executes the experiments in dependency order and [`report::emit_report`] writes
//! `summary.csv`, one CSV per table and `manifest.json`.

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::ScenarioConfig;
pub use error::LabError;
pub use experiments::ExperimentId;
pub use report::{emit_report, Outcome, RunResult};

/// Runs the experiments of `config` (restricted to `only` when nonempty) on a pool of
/// `config.threads` workers.
pub fn run_scenario(config: &ScenarioConfig, only: &[ExperimentId]) -> Result<RunResult, LabError> {
    let ids = experiments::plan(config, only);
    if ids.is_empty() {
        return Err(LabError::Config("no experiment selected".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| LabError::Config(format!("thread pool: {e}")))?;
    let outcomes = pool.install(|| {
        ids.iter()
            .map(|&id| experiments::run(config, id))
            .collect::<Result<Vec<_>, _>>()
    })?;
    Ok(RunResult {
        config: config.clone(),
        outcomes,
    })
}
