use faer::Mat;

use super::*;
use crate::linalg::CsrMatrix;

fn diag_system(fock: FockBasis, omega: Vec<f64>) -> CoupledSystem {
    CoupledSystem::single_node(fock, omega).unwrap()
}

#[test]
fn ccr_on_protected_sector() {
    let b = FockBasis::new(3, 4, 1000).unwrap();
    let f = [0.3, -1.2, 0.7];
    let g = [1.1, 0.4, -0.2];
    let comm = b
        .annihilation(&f)
        .matmul(&b.creation(&g))
        .add_scaled(&b.creation(&g).matmul(&b.annihilation(&f)), -1.0);
    let fg: f64 = f.iter().zip(&g).map(|(x, y)| x * y).sum();
    let keep = b.sector(3);
    let d = comm.to_dense();
    for i in 0..b.dim() {
        for j in 0..b.dim() {
            if keep[i] && keep[j] {
                let e = if i == j { fg } else { 0.0 };
                assert!((d[(i, j)] - e).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn van_hove_single_mode() {
    let b = FockBasis::new(1, 30, 1000).unwrap();
    let sys = diag_system(b, vec![1.5]);
    let g = Mat::<f64>::from_fn(1, 1, |_, _| 0.6);
    let e = ground_state(&sys.hamiltonian(&g).unwrap()).unwrap().energy;
    assert!((e - van_hove_energy(&[0.6], &[1.5])).abs() < 1e-12, "{e}");
}

#[test]
fn unitary_is_orthogonal_and_trivial_at_zero() {
    let b = FockBasis::new(2, 5, 1000).unwrap();
    let u = dressing_unitary_block(&b, &[0.3, -0.2]).unwrap();
    assert!(unitarity_defect(&u) < 1e-10);
    let id = dressing_unitary_block(&b, &[0.0, 0.0]).unwrap();
    for i in 0..b.dim() {
        assert!((id[(i, i)] - 1.0).abs() < 1e-12);
    }
    let sys = diag_system(b.clone(), vec![1.0, 2.0]);
    let beta = Mat::<f64>::from_fn(1, 2, |_, j| [0.3, -0.2][j]);
    let j = sys.generator(&beta).unwrap();
    let v: Vec<f64> = (0..b.dim()).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
    let taylor = sys.apply_unitary(&j, &v, false);
    for i in 0..b.dim() {
        let dense: f64 = (0..b.dim()).map(|k| u[(i, k)] * v[k]).sum();
        assert!((dense - taylor[i]).abs() < 1e-11);
    }
}

#[test]
fn weyl_shift_single_mode_displacement() {
    let g = [0.4];
    let beta = [-0.4 / 1.3];
    for n in [10, 20] {
        let b = FockBasis::new(1, n, 1000).unwrap();
        let r = verify_weyl_shift(&b, &[1.3], &g, &[0.0], n).unwrap();
        assert!(r.absolute < 1e-12);
        let r = verify_weyl_shift(&b, &[1.3], &g, &beta, n / 2).unwrap();
        assert!(r.relative < 1e-3, "{r:?}");
    }
}

#[test]
fn bounds_hold_on_small_system() {
    let b = FockBasis::new(3, 3, 1000).unwrap();
    let sys = diag_system(b, vec![0.5, 1.0, 2.0]);
    let samples: Vec<Mat<f64>> = (0..3)
        .map(|s| Mat::<f64>::from_fn(1, 3, |_, j| ((s * 3 + j) as f64 * 0.77).sin()))
        .collect();
    let rows = operator_bounds(&sys, &samples, &[0.0, 0.5, 1.0], NumberWeight::Full).unwrap();
    assert_eq!(rows.len(), 3 * (2 + 12));
    for r in rows {
        assert!(r.lhs <= r.constant * r.rhs + 1e-9, "{r:?}");
        let endpoint = (r.bound == "pair-annihilation" && r.s == 1.0)
            || (r.bound == "pair-creation" && r.s == 0.0);
        if !endpoint {
            assert!(r.slack > -1e-9, "{r:?}");
        }
    }
}

#[test]
fn quadratic_bound_endpoint_constant_is_sharp() {
    let sys = diag_system(FockBasis::new(1, 2, 10).unwrap(), vec![1.0]);
    let v = Mat::<f64>::from_fn(1, 1, |_, _| 1.0);
    let rows = operator_bounds(&sys, &[v], &[1.0], NumberWeight::Full).unwrap();
    let r = rows
        .iter()
        .find(|r| r.bound == "pair-annihilation")
        .unwrap();
    assert!((r.lhs - std::f64::consts::SQRT_2).abs() < 1e-9 && (r.rhs - 1.0).abs() < 1e-12);
}

#[test]
fn form_bound_trivial_cases() {
    let b = FockBasis::new(2, 3, 1000).unwrap();
    let sys = diag_system(b, vec![1.0, 2.0]);
    let free = FreeSpectrum::new(&sys);
    let shifts: Vec<f64> = (0..20).map(|k| 1e-3 * 2f64.powi(k)).collect();
    let zero = form_bound(&free, &CsrMatrix::zeros(sys.dim(), sys.dim()), &shifts).unwrap();
    assert_eq!((zero.a, zero.b), (0.0, 0.0));
    let sat = form_bound(&free, &sys.h0(), &shifts).unwrap();
    assert!((sat.a - 1.0).abs() < 1e-3 && sat.b < 2e-3, "{sat:?}");
}

#[test]
fn resolvent_and_ground_state() {
    let h = CsrMatrix::diagonal(&[3.0, 1.0, 2.0]).add_scaled(
        &CsrMatrix::from_dense(
            &Mat::<f64>::from_fn(3, 3, |i, j| if i != j { 0.1 } else { 0.0 }),
            0.0,
        ),
        1.0,
    );
    let gs = ground_state(&CsrMatrix::diagonal(&[3.0, 1.0, 2.0])).unwrap();
    assert_eq!(gs.energy, 1.0);
    assert_eq!(gs.vector, vec![0.0, 1.0, 0.0]);
    let psi = [1.0, -2.0, 0.5];
    let x = resolvent_apply(&h, -4.0, &psi).unwrap();
    let back = h.matvec(&x);
    for i in 0..3 {
        assert!((back[i] + 4.0 * x[i] - psi[i]).abs() < 1e-10);
    }
    assert!(matches!(
        resolvent_apply(&h, 0.5, &psi),
        Err(crate::Error::ResolventPoint { .. })
    ));
}

#[test]
fn dense_roundtrip() {
    let m = Mat::<f64>::from_fn(3, 2, |i, j| i as f64 - 0.5 * j as f64);
    let path = std::env::temp_dir().join(format!("fock-dense-{}.bin", std::process::id()));
    write_dense(&path, &m).unwrap();
    let r = read_dense(&path).unwrap();
    std::fs::remove_file(&path).ok();
    assert_eq!(r, m);
}
