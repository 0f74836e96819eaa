use std::f64::consts::PI;

use nelson_core::dressing::*;
use nelson_core::opcore::*;

fn model(coefficients: CoefficientModel, boson: usize, particle: usize) -> Model {
    Model::build(ModelSpec {
        coefficients,
        boson_grid: GridSpec::new(1, boson, 16.0).unwrap(),
        particle_grid: GridSpec::new(1, particle, 16.0).unwrap(),
        sigma: 0.25,
        max_tensor_dim: DEFAULT_MAX_TENSOR_DIM,
    })
    .unwrap()
}

#[test]
fn constant_coefficient_beta_matches_fourier_sum() {
    let (mass, scale, q, width) = (1.0, 0.5, 1.0, 1.0);
    let m = model(CoefficientModel::constant(1, mass, scale), 128, 32);
    let rho = ChargeDensity::gaussian(1, q, width).unwrap();
    let beta = dressing_vector(&m, &rho).unwrap().beta;
    let bg = m.boson_grid();
    let pg = m.particle_grid();
    let cut = high_cutoff(m.sigma());
    let l = bg.box_length();
    for i in 0..pg.len() {
        let xp = pg.node(i)[0];
        for (j, &x) in bg.axis_nodes().iter().enumerate() {
            let mut s = 0.0;
            for &k in &bg.axis_freqs() {
                let w = (k * k + mass * mass).sqrt();
                let rho_hat = q * (-0.5 * k * k * width * width).exp();
                s += cut(w) / w.sqrt() * rho_hat * (k * (x - xp)).cos() / (w + scale * k * k);
            }
            let oracle = -s / l;
            assert!(
                (beta[(i, j)] - oracle).abs() < 1e-10,
                "node {i} {j}: {} vs {oracle}",
                beta[(i, j)]
            );
        }
    }
    let _ = PI;
}

#[test]
fn identity_holds_for_variable_coefficients() {
    let mut c = CoefficientModel::constant(1, 1.0, 0.5);
    c.a = MatrixField::scalar(Profile::Sinusoidal {
        base: 1.0,
        amplitude: 0.4,
        wavenumber: PI / 8.0,
    });
    c.big_a = MatrixField::scalar(Profile::Sinusoidal {
        base: 0.5,
        amplitude: 0.2,
        wavenumber: PI / 4.0,
    });
    let m = model(c, 64, 32);
    let rho = ChargeDensity::gaussian(1, 1.0, 1.0).unwrap();
    let d = dressing_vector(&m, &rho).unwrap();
    let r = d.identity_residual(&m).unwrap();
    assert!(r.relative < 1e-9, "{r:?}");
    let spectral = d.gradient_spectral(&m, 0).unwrap();
    let analytic = d.gradient_analytic(&m, &rho, 0).unwrap();
    let diff = nelson_core::linalg::frobenius(&(&spectral - &analytic));
    assert!(
        diff < 1e-4 * nelson_core::linalg::frobenius(&analytic),
        "{diff}"
    );
}

#[test]
fn zero_charge_gives_zero_beta() {
    let m = model(CoefficientModel::constant(1, 1.0, 0.5), 32, 16);
    let rho = ChargeDensity::gaussian(1, 0.0, 1.0).unwrap();
    let d = dressing_vector(&m, &rho).unwrap();
    assert_eq!(d.frobenius(), 0.0);
}
