use std::cell::RefCell;

use faer::Mat;
use nelson_core::opcore::{tensor::flatten, tensor::unflatten, GridSpec};
use nelson_core::pdo::{
    probe_indices, quantize_weyl, real_operator, remainder_decay_check, LeadingSymbols, Symbol,
};
use nelson_core::C64;

use super::{tolerance, AtStage, ExperimentId};
use crate::config::ScenarioConfig;
use crate::error::LabError;
use crate::report::{Outcome, Table};

/// Exact discrete operators against the (1,0) quantization of their leading symbols on
/// `N = symbols.points` nodes: the assembled `h`, its Weyl quantization, `omega^{-1}` and
/// `T^{-1}` on the particle-boson product grid.
pub fn symbol_order(cfg: &ScenarioConfig) -> Result<Outcome, LabError> {
    let id = ExperimentId::SymbolOrder;
    let n = cfg.symbols.points;
    let model = cfg.model_on(n, n, n * n).at(id)?;
    let grid = model.boson_grid().clone();
    let lead = LeadingSymbols::new(&model.spec.coefficients);
    let probes = probe_indices(&grid, &cfg.symbols.labels);
    let h = model.boson.h().matrix();
    let weyl = quantize_weyl(&lead.h(), &grid).at(id)?;
    let weyl_apply = |u: &[C64]| -> Vec<C64> {
        (0..weyl.nrows())
            .map(|i| (0..weyl.ncols()).map(|j| weyl[(i, j)] * u[j]).sum())
            .collect()
    };
    let inv = model.boson.function(|w| 1.0 / w).at(id)?;
    let checks: Vec<(&str, Box<dyn Fn(&[C64]) -> Vec<C64> + '_>, Symbol)> = vec![
        ("h", Box::new(real_operator(h)), lead.h()),
        ("weyl-h", Box::new(weyl_apply), lead.h()),
        (
            "omega-inverse",
            Box::new(real_operator(inv.matrix())),
            lead.d_lead(),
        ),
    ];
    let mut reports = Vec::new();
    for (name, apply, symbol) in &checks {
        reports.push((
            *name,
            remainder_decay_check(apply.as_ref(), symbol, &grid, &probes).at(id)?,
        ));
    }
    let product = GridSpec::new(2, n, cfg.grid.box_length).at(id)?;
    let failure: RefCell<Option<nelson_core::Error>> = RefCell::new(None);
    let solve = |u: &[C64]| -> Vec<C64> {
        let part = |f: fn(&C64) -> f64| -> Mat<f64> {
            let v: Vec<f64> = u.iter().map(f).collect();
            unflatten(&v, n, n)
        };
        let re = model.t.solve(&part(|c| c.re));
        let im = model.t.solve(&part(|c| c.im));
        match (re, im) {
            (Ok(re), Ok(im)) => flatten(&re)
                .into_iter()
                .zip(flatten(&im))
                .map(|(a, b)| C64::new(a, b))
                .collect(),
            (Err(e), _) | (_, Err(e)) => {
                failure.borrow_mut().get_or_insert(e);
                vec![C64::new(f64::NAN, 0.0); u.len()]
            }
        }
    };
    let tensor_probes = probe_indices(&product, &cfg.symbols.labels);
    let t_report =
        remainder_decay_check(&solve, &lead.b_tensor().at(id)?, &product, &tensor_probes).at(id)?;
    if let Some(e) = failure.into_inner() {
        return Err(e).at(id);
    }
    reports.push(("t-inverse", t_report));
    let mut out = Outcome::new(id);
    let mut table = Table::new("decay", &["operator", "bracket", "residual"]);
    let mut fits = Table::new("fits", &["operator", "slope", "intercept", "rms"]);
    let limit = tolerance("symbol_slope_max");
    let mut worst = f64::NEG_INFINITY;
    let mut parts = Vec::new();
    for (name, r) in &reports {
        for row in &r.rows {
            table.push(
                None,
                vec![(*name).into(), row.bracket.into(), row.residual.into()],
            );
        }
        fits.push(
            None,
            vec![
                (*name).into(),
                r.slope.into(),
                r.intercept.into(),
                r.rms.into(),
            ],
        );
        out.metric(&format!("slope_{name}"), r.slope);
        worst = worst.max(r.slope);
        parts.push(format!("{name} {:.2}", r.slope));
    }
    out.tables.push(table);
    out.tables.push(fits);
    Ok(out.verdict(
        worst <= limit,
        format!("slopes {} (need <= {limit})", parts.join(", ")),
    ))
}
