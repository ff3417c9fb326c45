mod common;

use common::*;
use lattice_sternberg::error::Error;
use lattice_sternberg::lattice::{LatticeVector, LatticeWindow};
use lattice_sternberg::multilinear::MultiLinearMap;
use proptest::prelude::*;

/// `W(v_1, .., v_k)` by looping over every index tuple.
fn apply_oracle(w: &MultiLinearMap, vs: &[&LatticeVector]) -> Vec<f64> {
    let big = w.dim();
    let k = w.arity();
    let mut out = vec![0.0; big];
    let mut idx = vec![0usize; k];
    for (o, slot) in out.iter_mut().enumerate() {
        let total = big.pow(k as u32);
        for flat in 0..total {
            let mut rest = flat;
            for d in (0..k).rev() {
                idx[d] = rest % big;
                rest /= big;
            }
            let prod: f64 = idx.iter().zip(vs).map(|(&i, v)| v.values()[i]).product();
            *slot += w.get(o, &idx) * prod;
        }
    }
    out
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * (1.0 + y.abs()))
}

fn sup(v: &LatticeVector) -> f64 {
    v.values().iter().fold(0.0, |m, x| m.max(x.abs()))
}

#[test]
fn apply_matches_loop_oracle() {
    let g = gamma_2_1();
    let mut r = rng(1);
    let w = LatticeWindow::new(1, 2, 2).unwrap();
    let t = random_multilinear(&mut r, &w, &g, 3, 1.0);
    let vs: Vec<LatticeVector> = (0..3).map(|_| random_vector(&mut r, &w, 1.0)).collect();
    let refs: Vec<&LatticeVector> = vs.iter().collect();
    assert!(close(t.apply(&refs).unwrap().values(), &apply_oracle(&t, &refs), 1e-13));
}

#[test]
fn compose_multi_matches_pointwise_composition() {
    let g = gamma_2_1();
    let mut r = rng(2);
    let w = LatticeWindow::new(1, 2, 1).unwrap();
    let a = random_multilinear(&mut r, &w, &g, 2, 1.0);
    let b1 = random_multilinear(&mut r, &w, &g, 2, 1.0);
    let b2 = random_multilinear(&mut r, &w, &g, 1, 1.0);
    let c = a.compose_multi(&[&b1, &b2]).unwrap();
    assert_eq!(c.arity(), 3);
    let vs: Vec<LatticeVector> = (0..3).map(|_| random_vector(&mut r, &w, 1.0)).collect();
    let inner1 = b1.apply(&[&vs[0], &vs[1]]).unwrap();
    let inner2 = b2.apply(&[&vs[2]]).unwrap();
    let expect = a.apply(&[&inner1, &inner2]).unwrap();
    let got = c.apply(&[&vs[0], &vs[1], &vs[2]]).unwrap();
    assert!(close(got.values(), expect.values(), 1e-13));
}

#[test]
fn slot_substitutions_commute() {
    let g = gamma_2_1();
    let mut r = rng(3);
    let w = LatticeWindow::new(1, 2, 1).unwrap();
    let t = random_multilinear(&mut r, &w, &g, 3, 1.0);
    let p = random_decaying(&mut r, &w, &g, 1.0);
    let q = random_decaying(&mut r, &w, &g, 1.0);
    let pq = t.right_linear(0, &p).unwrap().right_linear(2, &q).unwrap();
    let qp = t.right_linear(2, &q).unwrap().right_linear(0, &p).unwrap();
    assert!(pq.max_abs_diff(&qp) < 1e-14);
    // Left and right multiplication commute as well.
    let lr = t.left_linear(&p).unwrap().right_linear(1, &q).unwrap();
    let rl = t.right_linear(1, &q).unwrap().left_linear(&p).unwrap();
    assert!(lr.max_abs_diff(&rl) < 1e-14);
}

#[test]
fn composition_is_associative() {
    let g = gamma_2_1();
    let mut r = rng(4);
    let w = LatticeWindow::new(1, 1, 2).unwrap();
    let a = random_multilinear(&mut r, &w, &g, 2, 1.0);
    let b = random_multilinear(&mut r, &w, &g, 2, 1.0);
    let c = random_decaying(&mut r, &w, &g, 1.0);
    let id = MultiLinearMap::identity(&w);
    let cm = MultiLinearMap::from_linear(&c);
    // A(B(C., C.), .) two ways.
    let left = a.compose_multi(&[&b.compose_multi(&[&cm, &cm]).unwrap(), &id]).unwrap();
    let right = a.compose_multi(&[&b, &id]).unwrap().compose_multi(&[&cm, &cm, &id]).unwrap();
    assert!(left.max_abs_diff(&right) < 1e-13);
}

#[test]
fn contraction_of_all_slots_is_rejected() {
    let w = LatticeWindow::new(1, 1, 1).unwrap();
    let t = MultiLinearMap::zeros(&w, 2).unwrap();
    let x = LatticeVector::zeros(&w);
    assert!(matches!(t.contract(&[0, 1], &[&x, &x]), Err(Error::ArityMismatch { .. })));
    assert!(matches!(t.contract(&[3], &[&x]), Err(Error::SlotOutOfRange { .. })));
}

#[test]
fn contraction_then_apply_equals_apply() {
    let g = gamma_2_1();
    let mut r = rng(6);
    let w = LatticeWindow::new(1, 2, 1).unwrap();
    let t = random_multilinear(&mut r, &w, &g, 3, 1.0);
    let vs: Vec<LatticeVector> = (0..3).map(|_| random_vector(&mut r, &w, 1.0)).collect();
    let c = t.contract(&[0, 2], &[&vs[0], &vs[2]]).unwrap();
    let full = t.apply(&[&vs[0], &vs[1], &vs[2]]).unwrap();
    assert!(close(c.apply(&[&vs[1]]).unwrap().values(), full.values(), 1e-13));
}

#[test]
fn symmetrization_is_a_projection() {
    let g = gamma_2_1();
    let mut r = rng(7);
    let w = LatticeWindow::new(1, 1, 2).unwrap();
    let t = random_multilinear(&mut r, &w, &g, 3, 1.0);
    let s = t.symmetrized();
    assert!(s.asymmetry() < 1e-15);
    assert!(s.symmetrized().max_abs_diff(&s) < 1e-15);
    let x = random_vector(&mut r, &w, 1.0);
    assert!(close(s.apply_diag(&x).unwrap().values(), t.apply_diag(&x).unwrap().values(), 1e-13));
    let p = t.permute_slots(&[2, 0, 1]).unwrap();
    assert!(p.symmetrized().max_abs_diff(&s) < 1e-15);
}

#[test]
fn uncoupled_multilinear_gamma() {
    let g = gamma_2_1();
    let w = LatticeWindow::new(1, 3, 1).unwrap();
    let t = MultiLinearMap::node_local(&w, 2, &[2.5]).unwrap();
    assert!((t.ml_gamma(&g) - 2.5 / g.at_origin()).abs() < 1e-12);
    assert!((t.op_norm() - 2.5).abs() < 1e-15);
}

#[test]
fn csv_has_one_row_per_nonzero() {
    let w = LatticeWindow::new(1, 2, 1).unwrap();
    let t = MultiLinearMap::node_local(&w, 2, &[1.0]).unwrap();
    let mut buf = Vec::new();
    t.write_csv(&mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert_eq!(text.lines().count(), 1 + w.nodes());
}

#[test]
fn linear_round_trip() {
    let g = gamma_2_1();
    let mut r = rng(8);
    let w = LatticeWindow::new(1, 2, 2).unwrap();
    let a = random_decaying(&mut r, &w, &g, 1.0);
    let back = MultiLinearMap::from_linear(&a).to_linear().unwrap();
    assert!(back.max_block_diff(&a) < 1e-15);
    assert!((MultiLinearMap::from_linear(&a).ml_gamma(&g) - a.gamma(&g)).abs() < 1e-12 * a.gamma(&g));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(30))]

    #[test]
    fn composition_bounds(seed in any::<u64>(), k in 1usize..=3, n in 1usize..=2) {
        let g = gamma_2_1();
        let mut r = rng(seed);
        let w = LatticeWindow::new(1, 2, n).unwrap();
        let a = random_multilinear(&mut r, &w, &g, k, 1.0);
        let bs: Vec<MultiLinearMap> = (0..k).map(|p| random_multilinear(&mut r, &w, &g, if p == 0 && k < 3 { 2 } else { 1 }, 1.0)).collect();
        let refs: Vec<&MultiLinearMap> = bs.iter().collect();
        let c = a.compose_multi(&refs).unwrap();
        let prod: f64 = bs.iter().map(|b| b.gamma_norm(&g)).product();
        prop_assert!(within(c.ml_gamma(&g), a.ml_gamma(&g) * prod, 1e-12));
        prop_assert!(within(c.gamma_norm(&g), a.gamma_norm(&g) * prod, 1e-12));
        let lin = random_decaying(&mut r, &w, &g, 1.0);
        let l = a.left_linear(&lin).unwrap();
        prop_assert!(within(l.ml_gamma(&g), lin.gamma(&g) * a.ml_gamma(&g), 1e-12));
    }

    #[test]
    fn contraction_bounds(seed in any::<u64>(), k in 2usize..=3, n in 1usize..=2) {
        let g = gamma_2_1();
        let mut r = rng(seed);
        let w = LatticeWindow::new(1, 2, n).unwrap();
        let a = random_multilinear(&mut r, &w, &g, k, 1.0);
        let u = random_vector(&mut r, &w, 1.0);
        for slot in 0..k {
            let b = a.contract(&[slot], &[&u]).unwrap();
            prop_assert!(within(b.ml_gamma(&g), a.ml_gamma(&g) * sup(&u), 1e-12));
            prop_assert!(within(b.gamma_norm(&g), a.gamma_norm(&g) * sup(&u), 1e-12));
        }
    }
}

