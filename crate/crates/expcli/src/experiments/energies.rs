use nelson_core::counterterm::{
    asymptotic_slope, e_kappa, e_kappa_physical, nelson_e_lambda, nelson_e_lambda_massless,
    renorm_limit_study, CountertermQuery, StudyMode,
};
use nelson_core::linalg::fit_line;
use rayon::prelude::*;

use super::{tolerance, AtStage, ExperimentId};
use crate::config::ScenarioConfig;
use crate::error::LabError;
use crate::report::{Outcome, Table};

pub fn counterterm_slope(cfg: &ScenarioConfig) -> Result<Outcome, LabError> {
    let id = ExperimentId::CountertermSlope;
    let model = cfg.coefficient_model();
    let density = cfg.base_density()?;
    let rule = cfg.quadrature.rule();
    let point = cfg.counterterm.point;
    let ladder = &cfg.counterterm.kappa;
    if ladder.len() < 2 {
        return Err(LabError::Config(
            "counterterm.kappa needs at least two entries".into(),
        ));
    }
    let values = ladder
        .par_iter()
        .map(|&kappa| {
            let rho = density.rescale(kappa)?;
            let q = CountertermQuery {
                point,
                model: &model,
                density: &rho,
                rule,
            };
            Ok((e_kappa(&q)?, e_kappa_physical(&q)?))
        })
        .collect::<nelson_core::Result<Vec<_>>>()
        .at(id)?;
    let lx: Vec<f64> = ladder.iter().map(|k| k.ln()).collect();
    let ly: Vec<f64> = values.iter().map(|v| v.0).collect();
    let (slope, _, _) = fit_line(&lx, &ly);
    let expected = asymptotic_slope(&model, &point, density.total_charge(), &rule);
    let rel = (slope / expected - 1.0).abs();
    let mut out = Outcome::new(id);
    let mut table = Table::new("ladder", &["log_kappa", "e_kappa", "e_kappa_unitary"]);
    for ((k, l), (e, p)) in ladder.iter().zip(&lx).zip(&values) {
        table.push(Some(*k), vec![(*l).into(), (*e).into(), (*p).into()]);
    }
    out.tables.push(table);
    out.metric("fitted_slope", slope);
    out.metric("asymptotic_slope", expected);
    out.metric("relative_deviation", rel);
    let tol = tolerance("counterterm_slope_relative");
    Ok(out.verdict(
        expected.is_finite() && expected != 0.0 && rel <= tol,
        format!(
            "slope {slope:.6e} vs asymptote {expected:.6e}, deviation {:.3}% (tolerance {:.0}%)",
            100.0 * rel,
            100.0 * tol
        ),
    ))
}

pub fn nelson_log(cfg: &ScenarioConfig) -> Result<Outcome, LabError> {
    let id = ExperimentId::NelsonLog;
    let c = &cfg.counterterm;
    if c.lambdas.len() < 2 {
        return Err(LabError::Config(
            "counterterm.lambdas needs at least two entries".into(),
        ));
    }
    let tol_q = cfg.quadrature.rel_tol;
    let rows = c
        .lambdas
        .par_iter()
        .map(|&l| {
            let e1 = nelson_e_lambda(l, c.nelson_mass, c.nelson_sigma, tol_q)?;
            let e2 = nelson_e_lambda(2.0 * l, c.nelson_mass, c.nelson_sigma, tol_q)?;
            Ok((l, e1, e2))
        })
        .collect::<nelson_core::Result<Vec<_>>>()
        .at(id)?;
    let mut out = Outcome::new(id);
    let mut table = Table::new(
        "increments",
        &[
            "lambda",
            "e_lambda",
            "e_2lambda",
            "increment",
            "closed_form_increment",
        ],
    );
    let incs: Vec<f64> = rows.iter().map(|(_, a, b)| b - a).collect();
    for ((l, a, b), inc) in rows.iter().zip(&incs) {
        let closed = if c.nelson_mass == 0.0 {
            nelson_e_lambda_massless(2.0 * l, c.nelson_sigma)
                - nelson_e_lambda_massless(*l, c.nelson_sigma)
        } else {
            f64::NAN
        };
        table.push(
            None,
            vec![
                (*l).into(),
                (*a).into(),
                (*b).into(),
                (*inc).into(),
                closed.into(),
            ],
        );
    }
    out.tables.push(table);
    let lo = incs.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = incs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let spread = (hi - lo) / lo.abs().max(hi.abs());
    out.metric("increment_spread", spread);
    out.metric("last_increment", *incs.last().expect("nonempty"));
    let tol = tolerance("nelson_increment_spread");
    Ok(out.verdict(
        spread <= tol,
        format!(
            "doubling increments spread {:.2}% (tolerance {:.0}%)",
            100.0 * spread,
            100.0 * tol
        ),
    ))
}

pub fn renorm_cancellation(cfg: &ScenarioConfig) -> Result<Outcome, LabError> {
    let id = ExperimentId::RenormCancellation;
    let model = cfg.coefficient_model();
    let density = cfg.base_density()?;
    let lattice = cfg.renorm_lattice()?;
    let mode = StudyMode::Symbol {
        coefficients: &model,
        lattice: &lattice,
        points: cfg.renorm.points.clone(),
    };
    let report =
        renorm_limit_study(&density, &cfg.renorm.kappa, &mode, &cfg.quadrature.rule()).at(id)?;
    let mut out = Outcome::new(id);
    let mut table = Table::new("ladder", &["point", "e_kappa", "v_tilde2", "difference"]);
    for (r, &k) in report.kappa_ladder.iter().enumerate() {
        for p in 0..report.points.len() {
            table.push(
                Some(k),
                vec![
                    p.into(),
                    report.e_values[r][p].into(),
                    report.v_values[r][p].into(),
                    report.diffs[r][p].into(),
                ],
            );
        }
    }
    out.tables.push(table);
    let mut inc = Table::new("increments", &["e_increment", "difference_increment"]);
    for (r, (e, d)) in report
        .e_increments
        .iter()
        .zip(&report.diff_increments)
        .enumerate()
    {
        inc.push(
            Some(report.kappa_ladder[r + 1]),
            vec![(*e).into(), (*d).into()],
        );
    }
    out.tables.push(inc);
    let e_top = *report.e_increments.last().expect("ladder has increments");
    let d_top = *report
        .diff_increments
        .last()
        .expect("ladder has increments");
    let ratio = e_top / d_top.max(f64::MIN_POSITIVE);
    out.metric("top_e_increment", e_top);
    out.metric("top_difference_increment", d_top);
    out.metric("ratio", ratio);
    out.metric("fitted_slope", report.slope);
    let tol = tolerance("renorm_increment_ratio");
    Ok(out.verdict(
        ratio >= tol,
        format!("top-rung increments: counterterm {e_top:.3e}, difference {d_top:.3e}, ratio {ratio:.1} (need >= {tol})"),
    ))
}
