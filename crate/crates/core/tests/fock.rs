use faer::Mat;
use nelson_core::fock::*;
use nelson_core::linalg::CsrMatrix;
use nelson_core::opcore::*;
use proptest::prelude::*;

fn constant_model(particle: usize, potential: f64) -> Model {
    let mut c = CoefficientModel::constant(1, 1.0, 0.5);
    c.w = Profile::constant(potential);
    Model::build(ModelSpec {
        coefficients: c,
        boson_grid: GridSpec::new(1, 64, 16.0).unwrap(),
        particle_grid: GridSpec::new(1, particle, 16.0).unwrap(),
        sigma: 0.25,
        max_tensor_dim: DEFAULT_MAX_TENSOR_DIM,
    })
    .unwrap()
}

/// `dGamma(b)` on `M = 2`, `n <= 2` from explicit symmetrized tensors.
#[test]
fn second_quantization_matches_tensor_construction() {
    let b = [[0.7, -0.3], [-0.3, 1.9]];
    let basis = FockBasis::new(2, 2, 100).unwrap();
    let got = basis
        .second_quantize(&Mat::<f64>::from_fn(2, 2, |i, j| b[i][j]))
        .to_dense();
    // two-particle symmetric states in the 4-dim product space, order (00, 01, 10, 11)
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let two: [[f64; 4]; 3] = [[1.0, 0.0, 0.0, 0.0], [0.0, s, s, 0.0], [0.0, 0.0, 0.0, 1.0]];
    let bb = |i: usize, j: usize| -> f64 {
        let (i1, i2, j1, j2) = (i / 2, i % 2, j / 2, j % 2);
        let mut v = 0.0;
        if i2 == j2 {
            v += b[i1][j1];
        }
        if i1 == j1 {
            v += b[i2][j2];
        }
        v
    };
    let mut expect = Mat::<f64>::zeros(6, 6);
    for i in 0..2 {
        for j in 0..2 {
            expect[(1 + i, 1 + j)] = b[i][j];
        }
    }
    for (r, u) in two.iter().enumerate() {
        for (c, w) in two.iter().enumerate() {
            let mut v = 0.0;
            for i in 0..4 {
                for j in 0..4 {
                    v += u[i] * bb(i, j) * w[j];
                }
            }
            expect[(3 + r, 3 + c)] = v;
        }
    }
    for i in 0..6 {
        for j in 0..6 {
            assert!((got[(i, j)] - expect[(i, j)]).abs() < 1e-14, "{i} {j}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn ccr_and_adjoints(f in prop::collection::vec(-2.0f64..2.0, 3), g in prop::collection::vec(-2.0f64..2.0, 3), n in 2usize..5) {
        let basis = FockBasis::new(3, n, 1000).unwrap();
        let a = basis.annihilation(&f);
        let c = basis.creation(&g);
        prop_assert_eq!(basis.creation(&f).to_dense(), a.transpose().to_dense());
        let comm = a.matmul(&c).add_scaled(&c.matmul(&a), -1.0).to_dense();
        let fg: f64 = f.iter().zip(&g).map(|(x, y)| x * y).sum();
        let keep = basis.sector(n - 1);
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                if keep[i] && keep[j] {
                    let e = if i == j { fg } else { 0.0 };
                    prop_assert!((comm[(i, j)] - e).abs() < 1e-12);
                }
            }
        }
        let phi = basis.field(&f);
        prop_assert_eq!(phi.get(0, 0), 0.0);
        let (asym, _) = phi.asymmetry();
        prop_assert!(asym < 1e-15);
    }
}

#[test]
fn van_hove_ground_energy_converges() {
    let model = constant_model(16, 0.0);
    let modes = ModeSet::lowest(&model.boson, model.boson_grid(), 4).unwrap();
    let rho = ChargeDensity::gaussian(1, 0.5, 1.0).unwrap();
    let pd = project_dressing(&model, &rho, &modes).unwrap();
    let g: Vec<f64> = (0..4).map(|j| pd.coupling[(0, j)]).collect();
    let exact = van_hove_energy(&g, modes.omega());
    let mut last = f64::INFINITY;
    for n in [2, 4, 6, 8] {
        let sys =
            CoupledSystem::single_node(FockBasis::new(4, n, 1000).unwrap(), modes.omega().to_vec())
                .unwrap();
        let gm = Mat::<f64>::from_fn(1, 4, |_, j| g[j]);
        let e = ground_state(&sys.hamiltonian(&gm).unwrap()).unwrap().energy;
        let err = ((e - exact) / exact).abs();
        assert!(err < last);
        last = err;
    }
    assert!(last < 1e-6, "{last}");
}

#[test]
fn potential_offset_shifts_spectrum() {
    let fock = FockBasis::new(2, 2, 100).unwrap();
    let base = constant_model(16, 0.0);
    let lifted = constant_model(16, 0.75);
    let modes = ModeSet::lowest(&base.boson, base.boson_grid(), 2).unwrap();
    let rho = ChargeDensity::gaussian(1, 1.0, 1.0).unwrap();
    let pd = project_dressing(&base, &rho, &modes).unwrap();
    let e = |m: &Model| {
        let sys = CoupledSystem::from_model(m, fock.clone(), &modes).unwrap();
        nelson_core::linalg::symmetric_eigenvalues(
            &sys.hamiltonian(&pd.coupling).unwrap().to_dense(),
        )
        .unwrap()
    };
    for (a, b) in e(&base).iter().zip(e(&lifted)) {
        assert!((b - a - 0.75).abs() < 1e-10);
    }
}

#[test]
fn undressed_limit_of_dressed_assembly() {
    let model = constant_model(16, 0.0);
    let modes = ModeSet::lowest(&model.boson, model.boson_grid(), 3).unwrap();
    let sys =
        CoupledSystem::from_model(&model, FockBasis::new(3, 3, 1000).unwrap(), &modes).unwrap();
    let g = Mat::<f64>::from_fn(16, 3, |i, j| 0.1 * ((i + 2 * j) as f64).cos());
    let zero = Mat::<f64>::zeros(16, 3);
    let parts = DressedParts {
        coupling: g.clone(),
        grad_beta: vec![zero],
        potential: vec![0.0; 16],
        shift: vec![0.0; 16],
    };
    let d = sys.assemble_dressed(&parts).unwrap();
    let h = sys.hamiltonian(&g).unwrap();
    let diff = d.add_scaled(&h, -1.0);
    assert!((0..diff.nrows()).all(|r| diff.row(r).all(|(_, v)| v.abs() < 1e-14)));
}

#[test]
fn dressed_assembly_matches_conjugation() {
    let model = constant_model(16, 0.0);
    let modes = ModeSet::lowest(&model.boson, model.boson_grid(), 3).unwrap();
    let rho = ChargeDensity::gaussian(1, 1.0, 2.0).unwrap();
    let pd = project_dressing(&model, &rho, &modes).unwrap();
    assert!(pd.sup_beta() < 0.5);
    let sys =
        CoupledSystem::from_model(&model, FockBasis::new(3, 4, 1000).unwrap(), &modes).unwrap();
    let hd = sys
        .assemble_dressed(&pd.parts(&sys, vec![0.0; 16]).unwrap())
        .unwrap();
    let h = sys.hamiltonian(&pd.coupling).unwrap();
    let j = sys.generator(&pd.beta).unwrap();
    let conj = |x: &[f64]| sys.apply_unitary(&j, &h.matvec(&sys.apply_unitary(&j, x, true)), false);
    let ea = ground_state(&hd).unwrap();
    let ec = ground_state_of(conj, sys.dim(), || {
        let cols: Vec<Vec<f64>> = (0..sys.dim()).map(|c| conj(&unit(sys.dim(), c))).collect();
        Ok(Mat::<f64>::from_fn(sys.dim(), sys.dim(), |r, c| cols[c][r]))
    })
    .unwrap();
    assert!(
        (ea.energy - ec.energy).abs() < 1e-6,
        "{} vs {}",
        ea.energy,
        ec.energy
    );
}

fn unit(n: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[k] = 1.0;
    v
}

#[test]
fn dressing_unitary_blocks_are_orthogonal() {
    let basis = FockBasis::new(4, 5, 1000).unwrap();
    let u = dressing_unitary_block(&basis, &[0.2, -0.3, 0.1, 0.05]).unwrap();
    assert!(unitarity_defect(&u) < 1e-10);
    let r = verify_weyl_shift(
        &basis,
        &[1.0, 1.2, 1.2, 1.5],
        &[0.1, 0.0, 0.2, -0.1],
        &[0.0; 4],
        5,
    )
    .unwrap();
    assert!(r.absolute < 1e-12);
}

#[test]
fn resolvent_solve_residual() {
    let model = constant_model(16, 0.0);
    let modes = ModeSet::lowest(&model.boson, model.boson_grid(), 2).unwrap();
    let sys =
        CoupledSystem::from_model(&model, FockBasis::new(2, 3, 100).unwrap(), &modes).unwrap();
    let g = Mat::<f64>::from_fn(16, 2, |i, j| 0.2 * ((i * (j + 1)) as f64).sin());
    let h = sys.hamiltonian(&g).unwrap();
    let z = sys.h0_min() - 5.0;
    let psi: Vec<f64> = (0..sys.dim()).map(|i| ((i % 7) as f64) - 3.0).collect();
    let x = resolvent_apply(&h, z, &psi).unwrap();
    let back = h.matvec(&x);
    let res: f64 = back
        .iter()
        .zip(&x)
        .zip(&psi)
        .map(|((b, x), p)| (b - z * x - p).powi(2))
        .sum::<f64>()
        .sqrt();
    assert!(res < 1e-10);
    let dense = dense_resolvent(&h, z).unwrap();
    let y: Vec<f64> = (0..sys.dim())
        .map(|r| (0..sys.dim()).map(|c| dense[(r, c)] * psi[c]).sum())
        .collect();
    assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-10));
    let _ = CsrMatrix::identity(1);
}
