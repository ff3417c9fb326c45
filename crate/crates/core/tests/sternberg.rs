mod common;

use common::*;
use lattice_sternberg::error::Error;
use lattice_sternberg::jets::PolyJet;
use lattice_sternberg::lattice::{LatticeVector, LatticeWindow};
use lattice_sternberg::linear::BlockLinearMap;
use lattice_sternberg::multilinear::MultiLinearMap;
use lattice_sternberg::sternberg::*;
use nalgebra::{DMatrix, DVector};
use rand::Rng;

fn scalar(lambda: f64, c: f64) -> PolyJet {
    let w = scalar_window();
    let a = BlockLinearMap::uncoupled(&w, &DMatrix::from_element(1, 1, lambda));
    PolyJet::with_linear_part(&a, vec![MultiLinearMap::node_local(&w, 2, &[c]).unwrap()]).unwrap()
}

fn point(w: &LatticeWindow, v: Vec<f64>) -> LatticeVector {
    LatticeVector::from_values(w, v).unwrap()
}

fn ball_samples(window: &LatticeWindow, radius: f64, count: usize, seed: u64) -> Vec<LatticeVector> {
    let mut r = rng(seed);
    (0..count)
        .map(|_| {
            let v = (0..window.size()).map(|_| r.random_range(-radius..=radius)).collect();
            point(window, v)
        })
        .collect()
}

fn coupled(radius: usize) -> PolyJet {
    coupled_quadratic(&LatticeWindow::new(1, radius, 1).unwrap(), 0.5, 1.0, 0.05, &gamma_2_1()).unwrap()
}

#[test]
fn parameter_selection_examples() {
    let g0 = gamma_2_1().at_origin();
    let cfg = select_m_delta(0.5, 0.5, g0, None).unwrap();
    assert_eq!((cfg.nu, cfg.r0), (1.0, 2));
    let scan = (1..).find(|&m| g0.powi(-2) * 0.5f64.powi(m) < 1.0).unwrap() as usize;
    assert_eq!(cfg.m, scan);
    assert!(cfg.slack_inequality() < 1.0 && cfg.eps1 <= 0.1);

    let cfg = select_m_delta(0.25, 0.5, g0, None).unwrap();
    assert_eq!((cfg.nu, cfg.r0), (2.0, 3));
    assert!(matches!(select_m_delta(0.5, 1.0, g0, None), Err(Error::NotContraction { .. })));
    assert!(select_m_delta(0.6, 0.5, g0, None).is_err());
}

#[test]
fn s0_examples() {
    let s0 = build_s0(&scalar(0.5, 1.0), 1, 2).unwrap();
    assert!((s0.coeff(1).unwrap().data()[0] - 1.0).abs() < 1e-14);
    assert!((s0.coeff(2).unwrap().data()[0] - 4.0).abs() < 1e-12);

    let w = LatticeWindow::new(1, 2, 1).unwrap();
    let a = BlockLinearMap::uncoupled(&w, &DMatrix::from_element(1, 1, 0.4))
        .add(&BlockLinearMap::nearest_neighbour(&w, 0.05, &DMatrix::identity(1, 1)));
    let s0 = build_s0(&PolyJet::linear(&a), 2, 3).unwrap();
    assert!(s0.coeff(1).unwrap().max_abs_diff(&MultiLinearMap::identity(&w)) < 1e-14);
    assert!(s0.coeffs()[1..].iter().all(|c| c.max_abs() < 1e-14));
}

#[test]
fn linear_map_is_its_own_linearization() {
    let g = gamma_2_1();
    let w = LatticeWindow::new(1, 2, 1).unwrap();
    let a = BlockLinearMap::uncoupled(&w, &DMatrix::from_element(1, 1, 0.5))
        .add(&BlockLinearMap::nearest_neighbour(&w, 0.02, &DMatrix::identity(1, 1)));
    let (conj, _) = linearize(&PolyJet::linear(&a), &g, ConjugacyMode::Perturbative, 1e-15).unwrap();
    let x = point(&w, vec![1e-3, -2e-4, 5e-4, 0.0, 1e-4]);
    let p = conj.eval(&x).unwrap();
    assert_eq!(p.iterations, 1);
    for (u, v) in p.value.iter().zip(x.values()) {
        assert!((u - v).abs() < 1e-15);
    }
    let rep = conjugacy_residual(&conj, &[x], &g).unwrap();
    assert!(rep.sup_residual < 1e-15);
}

#[test]
fn coupled_fixture_conjugacy() {
    let g = gamma_2_1();
    let f = coupled(8);
    let (conj, cal) = linearize(&f, &g, ConjugacyMode::Perturbative, 1e-15).unwrap();
    assert!(cal.factor < 1.0);
    let w = f.window().clone();
    let rep = conjugacy_residual(&conj, &ball_samples(&w, conj.config.certified_radius(), 100, 7), &g).unwrap();
    assert!(rep.sup_residual <= 1e-6, "{}", rep.sup_residual);
    assert!(rep.geometric);
    assert!(rep.jet_agreement.iter().all(|&v| v <= 1e-8));
    let defect = s0_defect(&f, conj.target.target(), &conj.s0, conj.config.m, conj.config.r0).unwrap();
    assert!(defect.coeff_max_abs().iter().all(|&v| v <= 1e-10));
}

#[test]
fn zero_maps_to_zero() {
    let g = gamma_2_1();
    let f = coupled(3);
    let (conj, _) = linearize(&f, &g, ConjugacyMode::Perturbative, 1e-15).unwrap();
    let p = conj.eval(&LatticeVector::zeros(f.window())).unwrap();
    assert!(p.value.iter().all(|&v| v == 0.0));
}

#[test]
fn decay_persists_across_windows() {
    let g = gamma_2_1();
    let (conj, _) = linearize(&coupled(8), &g, ConjugacyMode::Perturbative, 1e-15).unwrap();
    let rep = decay_persistence(|l| Ok(coupled(l)), &[4, 8], &g, conj.config.m).unwrap();
    assert!(rep.k2_relative_change <= 0.1);
    assert!(rep.d2r_relative_change <= 0.1);
    assert!(rep.k2_gamma.iter().all(|&v| v > 0.0));
}

#[test]
fn semigroup_consistency() {
    let g = gamma_2_1();
    let f = coupled(3);
    let (conj, _) = linearize(&f, &g, ConjugacyMode::Perturbative, 1e-15).unwrap();
    let m = conj.config.m;
    for x in ball_samples(f.window(), conj.config.certified_radius(), 5, 3) {
        for n in 1..4 {
            let a = conjugacy_iterate(&f, &conj.target, &conj.s0, m, n, &x).unwrap();
            let b = conjugacy_iterate(&f, &conj.target, &conj.s0, 1, m * n, &x).unwrap();
            assert!(a.sub(&b).unwrap().norm() <= 1e-10);
        }
    }
}

#[test]
fn modes_agree_on_uncoupled_maps() {
    let g = gamma_2_1();
    let w = LatticeWindow::new(1, 2, 2).unwrap();
    for diag in [[0.3, 0.5], [0.2, 0.45], [0.12, 0.4]] {
        let a = BlockLinearMap::uncoupled(&w, &DMatrix::from_diagonal(&DVector::from_vec(diag.to_vec())));
        let f = PolyJet::linear(&a);
        let p = plan_parameters(&f, &g, ConjugacyMode::Perturbative).unwrap();
        let s = plan_parameters(&f, &g, ConjugacyMode::Spectral).unwrap();
        assert_eq!(p.r0, s.r0, "{diag:?}");
        assert_eq!(s.mode, ConjugacyMode::Spectral);
    }
}

#[test]
fn shrinking_delta_never_raises_factor() {
    let g = gamma_2_1();
    for (radius, c) in [(8, 1.0), (2, 5.0), (0, 20.0)] {
        let f = coupled_quadratic(&LatticeWindow::new(1, radius, 1).unwrap(), 0.5, c, 0.05, &g).unwrap();
        let planned = plan_parameters(&f, &g, ConjugacyMode::Perturbative).unwrap();
        let (_, cal) = calibrate_delta(&planned, &f, &g).unwrap();
        assert!(cal.trace.len() > 1);
        assert!(cal.trace.windows(2).all(|w| w[1].0 == w[0].0 / 2.0 && w[1].1 <= w[0].1));
    }
}

#[test]
fn newton_examples() {
    let w = scalar_window();
    let half = PolyJet::linear(&BlockLinearMap::uncoupled(&w, &DMatrix::from_element(1, 1, 0.5)));
    let x = newton_invert_poly(&half, &point(&w, vec![0.3]), 1e-15, 20).unwrap();
    assert!((x.values()[0] - 0.6).abs() < 1e-15);

    let h = scalar(0.5, 0.1);
    let x = newton_invert_poly(&h, &point(&w, vec![0.06]), 1e-15, 50).unwrap();
    let root = (-0.5 + (0.25f64 + 0.024).sqrt()) / 0.2;
    assert!((x.values()[0] - root).abs() < 1e-14);
    let x = newton_invert_poly(&h, &point(&w, vec![0.0]), 1e-15, 50).unwrap();
    assert_eq!(x.values()[0], 0.0);
}

#[test]
fn scalar_fixture_residual_in_certified_ball() {
    let g = gamma_2_1();
    let f = scalar(0.5, 1.0);
    let (conj, _) = linearize(&f, &g, ConjugacyMode::Perturbative, 1e-16).unwrap();
    let rep = conjugacy_residual(&conj, &ball_samples(f.window(), conj.config.certified_radius(), 100, 11), &g).unwrap();
    assert!(rep.sup_residual <= 1e-6);
    assert!(rep.geometric);
}

#[test]
fn scalar_value_matches_series() {
    // x = 0.01 lies outside the calibrated ball, so use a hand-picked domain.
    let f = scalar(0.5, 1.0);
    let w = f.window().clone();
    let s0 = build_s0(&f, 1, 2).unwrap();
    let target = TargetInverse::new(Target::Linear(f.linear_part().unwrap())).unwrap();
    let settings = EvalSettings { m: 1, tol: 1e-16, max_iterations: 200, domain: 0.1 };
    let x = 0.01;
    let p = conjugacy_eval(&f, &target, &s0, &point(&w, vec![x]), settings).unwrap();
    let reference = conjugacy_iterate(&f, &target, &s0, 1, 80, &point(&w, vec![x])).unwrap();
    assert!((p.value[0] - reference.values()[0]).abs() < 1e-14);
    // Inverse of x - 4x^2 + (64/3)x^3: y + 4y^2 + (32/3)y^3 + O(y^4).
    let series = x + 4.0 * x * x + 32.0 / 3.0 * x.powi(3);
    assert!((p.value[0] - series).abs() < 1e-6);
    assert!(p.increments.windows(2).all(|w| w[1] <= w[0]));
}

#[test]
fn escape_is_reported() {
    let f = scalar(0.5, 1.0);
    let w = f.window().clone();
    let s0 = build_s0(&f, 1, 2).unwrap();
    let target = TargetInverse::new(Target::Linear(f.linear_part().unwrap())).unwrap();
    let settings = EvalSettings { m: 1, tol: 1e-16, max_iterations: 200, domain: 1.0 };
    let err = conjugacy_eval(&f, &target, &s0, &point(&w, vec![0.9]), settings).unwrap_err();
    assert!(matches!(err, Error::DomainEscape { .. }));
}

#[test]
fn resonant_polynomial_target() {
    let w = LatticeWindow::new(1, 0, 2).unwrap();
    let a = BlockLinearMap::uncoupled(&w, &DMatrix::from_diagonal(&DVector::from_vec(vec![0.5, 0.25])));
    let f = PolyJet::with_linear_part(&a, vec![MultiLinearMap::node_local(&w, 2, &[0.0, 0.3, 0.3, 0.0, 1.0, 0.0, 0.0, 0.0]).unwrap()]).unwrap();
    assert!(matches!(build_s0(&f, 1, 2), Err(Error::ResonantOrder { .. })));
    let (s0, h) = build_s0_resonant(&f, 2).unwrap();
    let target = TargetInverse::new(Target::Polynomial(h.clone())).unwrap();
    let settings = EvalSettings { m: 1, tol: 1e-15, max_iterations: 300, domain: 0.1 };
    for x in ball_samples(&w, 0.01, 10, 4) {
        let r = |v: &LatticeVector| point(&w, conjugacy_eval(&f, &target, &s0, v, settings).unwrap().value);
        let lhs = r(&f.eval(&x).unwrap());
        let rhs = h.eval(&r(&x)).unwrap();
        assert!(lhs.sub(&rhs).unwrap().norm() <= 1e-10);
    }
}
