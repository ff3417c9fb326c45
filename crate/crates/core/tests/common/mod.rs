#![allow(dead_code)]

use lattice_sternberg::decay::{make_power_exp_decay, DecayFunction};
use lattice_sternberg::lattice::{LatticeVector, LatticeWindow};
use lattice_sternberg::linear::BlockLinearMap;
use lattice_sternberg::multilinear::MultiLinearMap;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gamma_2_1() -> DecayFunction {
    make_power_exp_decay(2.0, 1.0, 1, 50).unwrap()
}

pub fn scalar_window() -> LatticeWindow {
    LatticeWindow::new(1, 0, 1).unwrap()
}

pub fn random_matrix(rng: &mut ChaCha8Rng, n: usize, scale: f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..=scale))
}

/// Blocks `A_ij = X_ij Γ(i-j)` with random `X_ij`, so `γ(A)` stays bounded.
pub fn random_decaying(rng: &mut ChaCha8Rng, window: &LatticeWindow, gamma: &DecayFunction, scale: f64) -> BlockLinearMap {
    let n = window.node_dim;
    let mut a = BlockLinearMap::zeros(window);
    for i in 0..window.nodes() {
        for j in 0..window.nodes() {
            a.insert_block(i, j, random_matrix(rng, n, scale) * gamma.between(window, i, j));
        }
    }
    a
}

/// Entries `X Π_p Γ(i - j_p)` in node coordinates.
pub fn random_multilinear(rng: &mut ChaCha8Rng, window: &LatticeWindow, gamma: &DecayFunction, arity: usize, scale: f64) -> MultiLinearMap {
    let n = window.node_dim;
    let big = window.size();
    let table = gamma.pair_table(window);
    let s = window.nodes();
    let total = big.pow(arity as u32 + 1);
    let mut data = vec![0.0; total];
    let mut digits = vec![0usize; arity + 1];
    for (flat, v) in data.iter_mut().enumerate() {
        let mut rest = flat;
        for d in (0..=arity).rev() {
            digits[d] = rest % big;
            rest /= big;
        }
        let i = digits[0] / n;
        let w: f64 = digits[1..].iter().map(|&j| table[i * s + j / n]).product();
        *v = rng.random_range(-scale..=scale) * w;
    }
    MultiLinearMap::from_data(window, arity, data).unwrap()
}

pub fn random_vector(rng: &mut ChaCha8Rng, window: &LatticeWindow, scale: f64) -> LatticeVector {
    let v = (0..window.size()).map(|_| rng.random_range(-scale..=scale)).collect();
    LatticeVector::from_values(window, v).unwrap()
}

/// `x <= bound` up to a relative and absolute slack.
pub fn within(x: f64, bound: f64, slack: f64) -> bool {
    x <= bound * (1.0 + slack) + slack
}

use lattice_sternberg::sylvester::{sylvester_apply, SylvesterOperator};
use nalgebra::Complex;

/// Random `V D V^{-1}` with real eigenvalues of modulus in `[0.2, 0.9]`.
pub fn random_diagonalizable(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let v = DMatrix::identity(n, n) + random_matrix(rng, n, 0.4);
        let Some(vi) = v.clone().try_inverse() else { continue };
        let d = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(n, |_, _| {
            let m = rng.random_range(0.2..=0.9);
            if rng.random_bool(0.5) { m } else { -m }
        }));
        return &v * d * vi;
    }
}

/// Matrix of `W ↦ S(W)` in the flat tensor basis, column `c` = `S(e_c)`.
pub fn vectorize(op: &SylvesterOperator, window: &LatticeWindow) -> DMatrix<f64> {
    let big = window.size().pow(op.arity as u32 + 1);
    let mut m = DMatrix::zeros(big, big);
    for c in 0..big {
        let mut data = vec![0.0; big];
        data[c] = 1.0;
        let e = MultiLinearMap::from_data(window, op.arity, data).unwrap();
        let img = sylvester_apply(op, &e).unwrap();
        for (r, v) in img.data().iter().enumerate() {
            m[(r, c)] = *v;
        }
    }
    m
}

/// `B ⊗ (A^T)^{⊗k}` for the row-major flat layout.
pub fn kronecker_oracle(b: &DMatrix<f64>, a: &DMatrix<f64>, k: usize) -> DMatrix<f64> {
    let at = a.transpose();
    let mut m = b.clone();
    for _ in 0..k {
        m = m.kronecker(&at);
    }
    m
}

pub fn hausdorff(a: &[Complex<f64>], b: &[Complex<f64>]) -> f64 {
    let one_way = |x: &[Complex<f64>], y: &[Complex<f64>]| {
        x.iter().map(|p| y.iter().map(|q| (p - q).norm()).fold(f64::INFINITY, f64::min)).fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

/// `{μ λ_1 .. λ_k}` over `μ ∈ spec(B)`, `λ_i ∈ spec(A)`.
pub fn product_set(spec_b: &[Complex<f64>], spec_a: &[Complex<f64>], k: usize) -> Vec<Complex<f64>> {
    let mut out = spec_b.to_vec();
    for _ in 0..k {
        out = out.iter().flat_map(|p| spec_a.iter().map(move |l| p * l)).collect();
    }
    out
}

/// Eigenvalues of a dense matrix by real Schur at a fixed tolerance.
pub fn schur_eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    nalgebra::linalg::Schur::try_new(m.clone(), 1e-15, 100_000)
        .expect("Schur iteration converges")
        .complex_eigenvalues()
        .iter()
        .cloned()
        .collect()
}

/// Roots of `λ^2 - tr λ + det` for a 2x2 block, or the entry of a 1x1 block.
pub fn small_block_eigenvalues(b: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if b.nrows() == 1 {
        return vec![Complex::new(b[(0, 0)], 0.0)];
    }
    let tr = b[(0, 0)] + b[(1, 1)];
    let det = b[(0, 0)] * b[(1, 1)] - b[(0, 1)] * b[(1, 0)];
    let disc = Complex::new(tr * tr - 4.0 * det, 0.0).sqrt();
    vec![(Complex::new(tr, 0.0) + disc) / 2.0, (Complex::new(tr, 0.0) - disc) / 2.0]
}
