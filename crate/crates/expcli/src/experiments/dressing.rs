use nelson_core::dressing::{dressing_vector, plane_wave_beta};
use nelson_core::opcore::Profile;
use rayon::prelude::*;

use super::{tolerance, AtStage, ExperimentId};
use crate::config::ScenarioConfig;
use crate::error::LabError;
use crate::report::{Outcome, Table};

pub fn beta_identity(cfg: &ScenarioConfig) -> Result<Outcome, LabError> {
    let id = ExperimentId::BetaIdentity;
    let model = cfg.model(cfg.grid.particle_points).at(id)?;
    let density = cfg.base_density()?;
    let rows = cfg
        .kappa_ladder
        .par_iter()
        .map(|&kappa| {
            let rho = density.rescale(kappa)?;
            let beta = dressing_vector(&model, &rho)?;
            let r = beta.identity_residual(&model)?;
            Ok((kappa, r.absolute, r.relative, beta.sup_row_norm(&model)))
        })
        .collect::<nelson_core::Result<Vec<_>>>()
        .at(id)?;
    let mut out = Outcome::new(id);
    out.warnings = model.warnings.clone();
    let mut table = Table::new("residuals", &["absolute", "relative", "sup_beta"]);
    let mut worst = 0.0f64;
    for &(kappa, abs, rel, sup) in &rows {
        table.push(Some(kappa), vec![abs.into(), rel.into(), sup.into()]);
        worst = worst.max(rel);
    }
    out.tables.push(table);
    out.metric("max_relative_residual", worst);
    let tol = tolerance("beta_identity_relative");
    Ok(out.verdict(
        worst <= tol,
        format!("max relative residual {worst:.3e} (tolerance {tol:.0e})"),
    ))
}

/// Requires constant `a`, `A`, `m` and `v = 0`: the plane-wave formula is exact only there.
pub fn beta_oracle(cfg: &ScenarioConfig) -> Result<Outcome, LabError> {
    let id = ExperimentId::BetaOracle;
    let c = &cfg.coefficients;
    let constant = |p: &Profile| match p {
        Profile::Constant { value } => Some(*value),
        _ => None,
    };
    let (Some(a), Some(v), Some(mass), Some(scale)) = (
        constant(&c.a),
        constant(&c.v),
        constant(&c.mass),
        constant(&c.particle),
    ) else {
        return Err(LabError::Config(
            "beta-oracle needs constant coefficient profiles".into(),
        ));
    };
    if a != 1.0 || v != 0.0 {
        return Err(LabError::Config("beta-oracle needs a = 1 and v = 0".into()));
    }
    let mass = mass.max(c.mass_floor);
    let model = cfg.model(cfg.grid.particle_points).at(id)?;
    let density = cfg.base_density()?;
    // the discrete K0 only matches the continuum formula while rho^kappa is resolved in X as well
    let cap = density.aliasing_cap(model.particle_grid());
    let ladder: Vec<f64> = cfg
        .kappa_ladder
        .iter()
        .copied()
        .filter(|&k| k <= cap)
        .collect();
    if ladder.is_empty() {
        return Err(LabError::Config(format!(
            "beta-oracle: no kappa within the particle-grid cap {cap:.3}"
        )));
    }
    let rows = ladder
        .par_iter()
        .map(|&kappa| {
            let rho = density.rescale(kappa)?;
            let got = dressing_vector(&model, &rho)?.beta;
            let want = plane_wave_beta(&model, &rho, mass, scale)?;
            let mut diff = 0.0f64;
            let mut size = 0.0f64;
            for j in 0..got.ncols() {
                for i in 0..got.nrows() {
                    diff = diff.max((got[(i, j)] - want[(i, j)]).abs());
                    size = size.max(want[(i, j)].abs());
                }
            }
            Ok((kappa, diff, size))
        })
        .collect::<nelson_core::Result<Vec<_>>>()
        .at(id)?;
    let mut out = Outcome::new(id);
    let mut table = Table::new("nodewise", &["max_abs_difference", "max_abs_beta"]);
    let mut worst = 0.0f64;
    for &(kappa, diff, size) in &rows {
        table.push(Some(kappa), vec![diff.into(), size.into()]);
        worst = worst.max(diff);
    }
    out.tables.push(table);
    out.metric("max_abs_difference", worst);
    out.metric("particle_grid_cap", cap);
    let tol = tolerance("beta_oracle_absolute");
    Ok(out.verdict(
        worst <= tol,
        format!("max node-wise difference {worst:.3e} (tolerance {tol:.0e})"),
    ))
}
