mod common;

use common::*;
use lattice_sternberg::lattice::{LatticeVector, LatticeWindow, NodeNorm};
use lattice_sternberg::linear::*;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::Rng;

/// Max absolute row sum: the induced sup norm of a dense matrix.
fn row_sum_norm(m: &DMatrix<f64>) -> f64 {
    m.row_iter().map(|r| r.iter().map(|v| v.abs()).sum::<f64>()).fold(0.0, f64::max)
}

/// `sup_ij ||A_ij||_∞ / Γ(i-j)` from the dense matrix.
fn gamma_oracle(a: &BlockLinearMap, g: &lattice_sternberg::decay::DecayFunction) -> f64 {
    let w = a.window();
    let n = w.node_dim;
    let d = a.to_dense();
    let mut worst: f64 = 0.0;
    for i in 0..w.nodes() {
        for j in 0..w.nodes() {
            let b = d.view((i * n, j * n), (n, n)).clone_owned();
            worst = worst.max(row_sum_norm(&b) / g.between(w, i, j));
        }
    }
    worst
}

#[test]
fn uncoupled_identity_holds_exactly() {
    let g = gamma_2_1();
    let mut r = rng(11);
    for t in 0..20 {
        let n = 1 + t % 3;
        let w = LatticeWindow::new(1, 4, n).unwrap();
        let block = random_matrix(&mut r, n, 1.0);
        let a = BlockLinearMap::uncoupled(&w, &block);
        let expect = row_sum_norm(&block) / g.at_origin();
        assert!((a.gamma_norm(&g) - expect).abs() <= 1e-14 * expect.max(1.0));
        assert!((a.op_norm() - row_sum_norm(&block)).abs() <= 1e-14);
    }
}

#[test]
fn norms_match_dense_oracles() {
    let g = gamma_2_1();
    let mut r = rng(5);
    for n in 1..=2 {
        let w = LatticeWindow::new(1, 5, n).unwrap();
        let a = random_decaying(&mut r, &w, &g, 1.0);
        let dense = row_sum_norm(&a.to_dense());
        if n == 1 {
            assert_eq!(a.op_norm_mode(), NormMode::Exact);
            assert!((a.op_norm() - dense).abs() < 1e-13);
        } else {
            assert!(a.op_norm() >= dense - 1e-13);
        }
        assert!((a.gamma(&g) - gamma_oracle(&a, &g)).abs() < 1e-12 * a.gamma(&g));
    }
}

#[test]
fn compose_and_apply_match_dense_products() {
    let g = gamma_2_1();
    let mut r = rng(9);
    let w = LatticeWindow::new(2, 2, 2).unwrap();
    let a = random_decaying(&mut r, &w, &g, 1.0);
    let b = random_decaying(&mut r, &w, &g, 1.0);
    let ab = a.compose(&b).unwrap().to_dense();
    assert!((ab - a.to_dense() * b.to_dense()).abs().max() < 1e-14);
    let x = random_vector(&mut r, &w, 1.0);
    let y = a.apply(&x).unwrap();
    let oracle = a.to_dense() * nalgebra::DVector::from_column_slice(x.values());
    assert!(y.values().iter().zip(oracle.iter()).all(|(p, q)| (p - q).abs() < 1e-14));
}

#[test]
fn neumann_inverse_matches_dense_inverse() {
    let g = gamma_2_1();
    let w = LatticeWindow::new(1, 6, 1).unwrap();
    let m0 = BlockLinearMap::uncoupled(&w, &DMatrix::from_element(1, 1, 2.0));
    let m1 = BlockLinearMap::decay_coupling(&w, &g, 0.1, &DMatrix::identity(1, 1));
    let inv = neumann_invert(&m0.inverse_dense().unwrap(), &m1, &g, 1e-15, 500).unwrap();
    assert!(inv.contraction < 1.0);
    let dense = m0.add(&m1).to_dense().try_inverse().unwrap();
    assert!((inv.inverse.to_dense() - dense).abs().max() < 1e-13);
}

#[test]
fn neumann_rejects_large_perturbation() {
    let g = gamma_2_1();
    let w = LatticeWindow::new(1, 3, 1).unwrap();
    let m0_inv = BlockLinearMap::identity(&w);
    let m1 = BlockLinearMap::uncoupled(&w, &DMatrix::from_element(1, 1, 0.5));
    assert!(neumann_invert(&m0_inv, &m1, &g, 1e-12, 100).is_err());
}

#[test]
fn csv_round_trip() {
    let g = gamma_2_1();
    let mut r = rng(2);
    let w = LatticeWindow::new(2, 1, 2).unwrap();
    let a = random_decaying(&mut r, &w, &g, 1.0);
    let mut buf = Vec::new();
    a.write_csv(&mut buf).unwrap();
    let back = BlockLinearMap::read_csv(&w, buf.as_slice()).unwrap();
    assert!(back.max_block_diff(&a) < 1e-15);
}

#[test]
fn shifts_commute_and_invert() {
    let w = LatticeWindow::new(1, 3, 1).unwrap();
    let right = BlockLinearMap::shift(&w, 0, 1);
    let left = BlockLinearMap::shift(&w, 0, -1);
    let e = LatticeVector::embed(&w, w.center(), &[1.0]).unwrap();
    let back = left.apply(&right.apply(&e).unwrap()).unwrap();
    assert_eq!(back.values(), e.values());
}

#[test]
fn node_norm_choice_is_respected() {
    let w = LatticeWindow::new(1, 0, 2).unwrap().with_node_norm(NodeNorm::One);
    let a = BlockLinearMap::uncoupled(&w, &DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    assert_eq!(a.op_norm(), 6.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn gamma_norm_is_submultiplicative(seed in any::<u64>(), n in 1usize..=2, radius in 1usize..=4) {
        let g = gamma_2_1();
        let mut r = rng(seed);
        let w = LatticeWindow::new(1, radius, n).unwrap();
        let a = random_decaying(&mut r, &w, &g, 1.0);
        let b = random_decaying(&mut r, &w, &g, 1.0);
        let ab = a.compose(&b).unwrap();
        prop_assert!(within(ab.gamma(&g), a.gamma(&g) * b.gamma(&g), 1e-12));
        prop_assert!(within(ab.op_norm(), a.op_norm() * b.op_norm(), 1e-12));
        prop_assert!(within(ab.gamma_norm(&g), a.gamma_norm(&g) * b.gamma_norm(&g), 1e-12));
    }

    #[test]
    fn norms_are_seminorms(seed in any::<u64>(), c in -3.0f64..3.0) {
        let g = gamma_2_1();
        let mut r = rng(seed);
        let w = LatticeWindow::new(1, 3, 2).unwrap();
        let a = random_decaying(&mut r, &w, &g, 1.0);
        let b = random_decaying(&mut r, &w, &g, 1.0);
        prop_assert!(within(a.add(&b).gamma_norm(&g), a.gamma_norm(&g) + b.gamma_norm(&g), 1e-12));
        prop_assert!((a.scaled(c).gamma(&g) - c.abs() * a.gamma(&g)).abs() <= 1e-12 * a.gamma(&g));
        let _ = r.random::<f64>();
    }
}
