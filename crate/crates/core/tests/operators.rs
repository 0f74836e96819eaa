use nelson_core::opcore::*;
use nelson_core::C64;
use proptest::prelude::*;

fn constant_model(n: usize, mass: f64) -> Model {
    Model::build(ModelSpec {
        coefficients: CoefficientModel::constant(1, mass, 0.5),
        boson_grid: GridSpec::new(1, n, 8.0).unwrap(),
        particle_grid: GridSpec::new(1, 16, 8.0).unwrap(),
        sigma: 0.25,
        max_tensor_dim: DEFAULT_MAX_TENSOR_DIM,
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn transform_roundtrip(values in prop::collection::vec(-5.0f64..5.0, 16)) {
        let g = GridSpec::new(1, 16, 3.0).unwrap();
        let u: Vec<C64> = values.iter().map(|&v| C64::new(v, 0.0)).collect();
        let back = g.inverse(&g.forward(&u));
        for (a, b) in u.iter().zip(&back) {
            prop_assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn constant_h_has_free_dispersion(mass in 0.3f64..2.0) {
        let m = constant_model(32, mass);
        let g = m.boson_grid();
        let mut expect: Vec<f64> = g.axis_freqs().iter().map(|k| k * k + mass * mass).collect();
        expect.sort_by(f64::total_cmp);
        for (a, b) in m.boson.h().eigenvalues().iter().zip(&expect) {
            prop_assert!((a - b).abs() < 1e-10 * b.max(1.0));
        }
        let w = m.boson.omega_values();
        prop_assert!((w[0] - mass).abs() < 1e-10);
    }

    #[test]
    fn smoothed_root_is_exact_above_blend(sigma in 0.1f64..1.0, t in 0.0f64..10.0) {
        let f = smoothed_sqrt(sigma);
        let lam = 4.0 * sigma * sigma * (1.0 + t);
        prop_assert!((f(lam) - lam.sqrt()).abs() < 1e-14 * lam.sqrt().max(1.0));
        let lo = sigma * sigma * (1.0 + 3.0 * t / 10.0);
        prop_assert!(f(lo) <= f(lam) + 1e-15);
    }

    #[test]
    fn cutoffs_partition_unity(sigma in 0.05f64..2.0, w in 0.0f64..20.0) {
        let hi = high_cutoff(sigma);
        let lo = low_cutoff(sigma);
        prop_assert!((hi(w) + lo(w) - 1.0).abs() < 1e-14);
        prop_assert!((0.0..=1.0).contains(&hi(w)));
    }
}

#[test]
fn plane_wave_sobolev_norm() {
    let g = GridSpec::new(1, 32, 2.0 * std::f64::consts::PI).unwrap();
    let u: Vec<f64> = g.axis_nodes().iter().map(|x| (3.0 * x).cos()).collect();
    let plain = g.norm(&u);
    for s in [-1.6, 0.5, 1.0] {
        let expect = (1.0f64 + 9.0).powf(s / 2.0) * plain;
        assert!((sobolev_norm(&u, s, &g) - expect).abs() < 1e-12 * expect);
    }
}

#[test]
fn variable_h_is_symmetric_and_positive() {
    let mut c = CoefficientModel::constant(1, 1.0, 0.5);
    c.a = MatrixField::scalar(Profile::Sinusoidal {
        base: 1.0,
        amplitude: 0.3,
        wavenumber: std::f64::consts::PI / 4.0,
    });
    let m = Model::build(ModelSpec {
        coefficients: c,
        boson_grid: GridSpec::new(1, 32, 8.0).unwrap(),
        particle_grid: GridSpec::new(1, 16, 8.0).unwrap(),
        sigma: 0.25,
        max_tensor_dim: DEFAULT_MAX_TENSOR_DIM,
    })
    .unwrap();
    let h = m.boson.h();
    assert!(h.reconstruction_residual() < 1e-12);
    assert!(h.orthonormality_residual() < 1e-12);
    assert!(h.min_eigenvalue() > 0.99);
}
