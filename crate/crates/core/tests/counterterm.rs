use std::f64::consts::PI;

use nelson_core::counterterm::*;
use nelson_core::opcore::{ChargeDensity, CoefficientModel};
use proptest::prelude::*;

fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

#[test]
fn one_dimensional_counterterm_matches_direct_integral() {
    let (scale, q, width) = (0.5, 1.0, 1.0);
    let model = CoefficientModel::constant(1, 1.0, scale);
    for kappa in [1.0, 4.0] {
        let rho = ChargeDensity::gaussian(1, q, width)
            .unwrap()
            .rescale(kappa)
            .unwrap();
        let e = e_kappa(&CountertermQuery {
            point: [0.0; 3],
            model: &model,
            density: &rho,
            rule: QuadratureRule::default(),
        })
        .unwrap();
        let integrand = |x: f64| {
            let k = scale * x * x;
            let p = q * q / (2.0 * PI) * (-(x * width / kappa).powi(2)).exp();
            (x * x + 1.0).powf(-0.5) * k / ((k + 1.0) * (k + 1.0)) * p
        };
        let cut = 40.0 * kappa / width;
        let oracle = -0.5 / (2.0 * PI) * 2.0 * simpson(integrand, 0.0, cut, 200_000);
        assert!(
            (e - oracle).abs() < 1e-8 * oracle.abs(),
            "kappa {kappa}: {e} vs {oracle}"
        );
    }
}

#[test]
fn isotropic_slope_constant() {
    let model = CoefficientModel::constant(3, 1.0, 0.5);
    let s = asymptotic_slope(&model, &[0.0; 3], 1.0, &QuadratureRule::default());
    let expect = -1.0 / (16.0 * PI.powi(5));
    assert!((s - expect).abs() < 1e-12 * expect.abs(), "{s} vs {expect}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn nelson_energy_matches_direct_integral(mass in 0.5f64..2.0, lambda in 5.0f64..50.0) {
        let sigma = 0.25;
        let e = nelson_e_lambda(lambda, mass, sigma, 1e-10).unwrap();
        let f = |k: f64| {
            let w = (k * k + mass * mass).sqrt();
            k * k / (w * (w + 0.5 * k * k))
        };
        let oracle = -2.0 * PI * simpson(f, 0.0, lambda, 20_000);
        prop_assert!((e - oracle).abs() < 1e-8 * oracle.abs());
    }

    #[test]
    fn nelson_doubling_increment_tends_to_log(lambda in 1e3f64..1e4) {
        let e1 = nelson_e_lambda(lambda, 1.0, 0.5, 1e-10).unwrap();
        let e2 = nelson_e_lambda(2.0 * lambda, 1.0, 0.5, 1e-10).unwrap();
        prop_assert!(((e2 - e1) / (-4.0 * PI * 2f64.ln()) - 1.0).abs() < 2e-2);
    }
}

#[test]
fn massless_closed_form_agrees() {
    let e = nelson_e_lambda(100.0, 0.0, 1.0, 1e-10).unwrap();
    let c = nelson_e_lambda_massless(100.0, 1.0);
    assert!((e - c).abs() < 1e-8 * c.abs());
}
