//! Sylvester operators `S_{B,A}(W) = B W(A., .., A.)` on k-linear maps,
//! resonance detection and the homological equation
//! `(S_{A^{-1},A} - id) K = rhs`.

use nalgebra::{Complex, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linear::BlockLinearMap;
use crate::multilinear::MultiLinearMap;

type C64 = Complex<f64>;

/// Default tolerance for `|λ_i - Π λ^k|`.
pub const RESONANCE_TOL: f64 = 1e-8;

#[derive(Clone, Debug)]
pub struct SylvesterOperator {
    pub left: BlockLinearMap,
    pub right: BlockLinearMap,
    pub arity: usize,
}

impl SylvesterOperator {
    pub fn new(left: BlockLinearMap, right: BlockLinearMap, arity: usize) -> Result<Self> {
        left.window().ensure_same(right.window())?;
        Ok(SylvesterOperator { left, right, arity })
    }

    /// `S_{A^{-1}, A}` for the homological equation.
    pub fn homological(a: &BlockLinearMap, arity: usize) -> Result<Self> {
        Self::new(a.inverse_dense()?, a.clone(), arity)
    }
}

/// `L_B ∘ R_{1,A} ∘ .. ∘ R_{k,A}` applied to `w`.
pub fn sylvester_apply(op: &SylvesterOperator, w: &MultiLinearMap) -> Result<MultiLinearMap> {
    if w.arity() != op.arity {
        return Err(Error::ArityMismatch { expected: op.arity, got: w.arity() });
    }
    op.left.window().ensure_same(w.window())?;
    let a = MultiLinearMap::from_linear(&op.right);
    let b = MultiLinearMap::from_linear(&op.left);
    let mut out = w.clone();
    for p in (0..op.arity).rev() {
        out = out.substitute_slot(p, &a)?;
    }
    Ok(out.left_dense(b.data()))
}

/// One multiplicative relation `λ_target ≈ Π_{f in factors} λ_f`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceWitness {
    pub order: usize,
    pub target: usize,
    /// Indices into the spectrum, nondecreasing, one per factor.
    pub factors: Vec<usize>,
    pub gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceSet {
    pub min_order: usize,
    pub max_order: usize,
    /// Resonant orders `J`, increasing.
    pub orders: Vec<usize>,
    pub witnesses: Vec<ResonanceWitness>,
    /// Smallest `|λ_i - Π λ|` seen at each order, starting at `min_order`.
    pub min_gaps: Vec<f64>,
}

impl ResonanceSet {
    pub fn contains(&self, order: usize) -> bool {
        self.orders.contains(&order)
    }

    pub fn is_empty(&self) -> bool {
        self.orders.is_empty()
    }
}

/// Collapses values closer than `tol` so products are enumerated once.
fn dedupe(values: &[C64], tol: f64) -> Vec<(usize, C64)> {
    let mut out: Vec<(usize, C64)> = Vec::new();
    for (idx, &v) in values.iter().enumerate() {
        if !out.iter().any(|(_, u)| (u - v).norm() < tol) {
            out.push((idx, v));
        }
    }
    out
}

/// Resonant orders `j ∈ [2, r0]`: `λ_i = λ_{f_1} .. λ_{f_j}` within `tol`.
pub fn detect_resonances(spectrum: &[C64], r0: usize, tol: f64) -> Result<ResonanceSet> {
    for &l in spectrum {
        let modulus = l.norm();
        if !(modulus > 0.0 && modulus < 1.0) {
            return Err(Error::NotContraction { modulus });
        }
    }
    Ok(scan_resonances(spectrum, r0, tol))
}

/// Resonance scan without the contraction precondition.
pub(crate) fn scan_resonances(spectrum: &[C64], r0: usize, tol: f64) -> ResonanceSet {
    let distinct = dedupe(spectrum, tol.max(1e-14));
    let mut set = ResonanceSet { min_order: 2, max_order: r0, orders: Vec::new(), witnesses: Vec::new(), min_gaps: Vec::new() };
    for order in 2..=r0 {
        let mut min_gap = f64::INFINITY;
        let mut found = false;
        let mut idx = vec![0usize; order];
        loop {
            let prod = idx.iter().fold(C64::new(1.0, 0.0), |p, &f| p * distinct[f].1);
            for &(target, l) in &distinct {
                let gap = (l - prod).norm();
                min_gap = min_gap.min(gap);
                if gap < tol {
                    found = true;
                    set.witnesses.push(ResonanceWitness {
                        order,
                        target,
                        factors: idx.iter().map(|&f| distinct[f].0).collect(),
                        gap,
                    });
                }
            }
            // Next nondecreasing index tuple.
            let mut d = order;
            loop {
                if d == 0 {
                    break;
                }
                d -= 1;
                if idx[d] + 1 < distinct.len() {
                    idx[d] += 1;
                    for e in d + 1..order {
                        idx[e] = idx[d];
                    }
                    d = usize::MAX;
                    break;
                }
            }
            if d != usize::MAX {
                break;
            }
        }
        if found {
            set.orders.push(order);
        }
        set.min_gaps.push(min_gap);
    }
    set
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HomologicalMethod {
    #[default]
    Direct,
    Neumann,
}

#[derive(Clone, Debug)]
pub struct HomologicalSolution {
    pub k: MultiLinearMap,
    /// Largest entry of `(S - id) K - rhs`.
    pub residual: f64,
    /// Direct: smallest `|σ_c - t_aa|` met in the triangular sweep, a lower
    /// bound proxy for the distance of 1 from `spec(S)`. Neumann: `1 - q`.
    pub min_gap: f64,
    pub iterations: usize,
}

/// Solves `(S_{A^{-1},A} - id) K = rhs`.
pub fn solve_homological(
    a: &BlockLinearMap,
    rhs: &MultiLinearMap,
    method: HomologicalMethod,
    tol: f64,
) -> Result<HomologicalSolution> {
    a.window().ensure_same(rhs.window())?;
    let op = SylvesterOperator::homological(a, rhs.arity())?;
    if rhs.is_zero() {
        return Ok(HomologicalSolution {
            k: MultiLinearMap::zeros(rhs.window(), rhs.arity())?,
            residual: 0.0,
            min_gap: f64::INFINITY,
            iterations: 0,
        });
    }
    let (k, min_gap, iterations) = match method {
        HomologicalMethod::Direct => {
            let (k, gap) = schur_sweep(a, rhs, tol)?;
            (k, gap, 1)
        }
        HomologicalMethod::Neumann => neumann_sweep(&op, rhs, tol)?,
    };
    let residual = sylvester_apply(&op, &k)?.sub(&k)?.max_abs_diff(rhs);
    Ok(HomologicalSolution { k, residual, min_gap, iterations })
}

fn neumann_sweep(op: &SylvesterOperator, rhs: &MultiLinearMap, tol: f64) -> Result<(MultiLinearMap, f64, usize)> {
    let q = op.left.op_norm() * op.right.op_norm().powi(op.arity as i32);
    if !(q < 1.0) {
        return Err(Error::MethodInapplicable(format!(
            "contraction estimate ||A^-1|| ||A||^{} = {q} >= 1",
            op.arity
        )));
    }
    let mut k = rhs.scaled(-1.0);
    let max_iter = 100_000;
    for it in 1..=max_iter {
        let next = sylvester_apply(op, &k)?.sub(rhs)?;
        let step = next.sub(&k)?.op_norm();
        k = next;
        if step <= tol * (1.0 - q) {
            return Ok((k, 1.0 - q, it));
        }
    }
    Err(Error::NoConvergence { iterations: max_iter, last: q })
}

/// Complex Schur factorization `A = U T U*` with a checked triangular `T`.
pub(crate) fn complex_schur(a: &DMatrix<f64>) -> Result<(DMatrix<C64>, DMatrix<C64>)> {
    let ac = a.map(|v| C64::new(v, 0.0));
    let scale = a.amax().max(1.0);
    let schur = nalgebra::linalg::Schur::try_new(ac, 1e-15, 10_000)
        .ok_or(Error::NoConvergence { iterations: 10_000, last: f64::NAN })?;
    let (u, mut t) = schur.unpack();
    let n = t.nrows();
    for c in 0..n {
        for r in c + 1..n {
            if t[(r, c)].norm() > 1e-10 * scale {
                return Err(Error::NoConvergence { iterations: 10_000, last: t[(r, c)].norm() });
            }
            t[(r, c)] = C64::new(0.0, 0.0);
        }
    }
    Ok((u, t))
}

/// `out[pre, d, post] = Σ_c x[pre, c, post] m[c, d]` on slot `p` of an
/// arity-`k` complex tensor of side `big`.
fn slot_mul(x: &[C64], big: usize, k: usize, p: usize, m: &DMatrix<C64>) -> Vec<C64> {
    let pre_len = big.pow(p as u32 + 1);
    let post_len = big.pow((k - 1 - p) as u32);
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for pre in 0..pre_len {
        for c in 0..big {
            let src = &x[(pre * big + c) * post_len..(pre * big + c + 1) * post_len];
            for d in 0..big {
                let mv = m[(c, d)];
                if mv == C64::new(0.0, 0.0) {
                    continue;
                }
                let dst = &mut out[(pre * big + d) * post_len..(pre * big + d + 1) * post_len];
                for (o, &s) in dst.iter_mut().zip(src) {
                    *o += mv * s;
                }
            }
        }
    }
    out
}

/// `out[a, rest] = Σ_c m[a, c] x[c, rest]`.
fn left_mul(x: &[C64], big: usize, m: &DMatrix<C64>) -> Vec<C64> {
    let rest = x.len() / big;
    let mut out = vec![C64::new(0.0, 0.0); x.len()];
    for a in 0..big {
        for c in 0..big {
            let mv = m[(a, c)];
            if mv == C64::new(0.0, 0.0) {
                continue;
            }
            for (o, &s) in out[a * rest..(a + 1) * rest].iter_mut().zip(&x[c * rest..(c + 1) * rest]) {
                *o += mv * s;
            }
        }
    }
    out
}

/// Direct solve of `K(A., .., A.) - A K = A rhs` in Schur coordinates.
///
/// With `A = U T U*` and `K~ = U* K(U., .., U.)` the equation becomes
/// `K~(T., .., T.) - T K~ = R~`. Since `T` is upper triangular, the columns of
/// `K~` (input multi-indices `c`) can be solved in lexicographic order:
/// `(σ_c - T) K~[:, c] = R~[:, c] - Σ_{c' < c} K~[:, c'] Π_l T[c'_l, c_l]`
/// with `σ_c = Π_l T[c_l, c_l]`.
fn schur_sweep(a: &BlockLinearMap, rhs: &MultiLinearMap, tol: f64) -> Result<(MultiLinearMap, f64)> {
    let k = rhs.arity();
    let big = rhs.dim();
    let (u, t) = complex_schur(&a.to_dense())?;
    let u_star = u.adjoint();

    let ar = rhs.left_linear(a)?;
    let mut r: Vec<C64> = ar.data().iter().map(|&v| C64::new(v, 0.0)).collect();
    r = left_mul(&r, big, &u_star);
    for p in 0..k {
        r = slot_mul(&r, big, k, p, &u);
    }

    let cols = big.pow(k as u32);
    let mut kt = vec![C64::new(0.0, 0.0); big * cols];
    let mut min_gap = f64::INFINITY;
    let mut c = vec![0usize; k];
    let mut cp = vec![0usize; k];
    let mut v = vec![C64::new(0.0, 0.0); big];
    for col in 0..cols {
        let mut rest = col;
        for d in (0..k).rev() {
            c[d] = rest % big;
            rest /= big;
        }
        for a_idx in 0..big {
            v[a_idx] = r[a_idx * cols + col];
        }
        // Odometer over c' with c'_l <= c_l, skipping c' = c.
        cp.iter_mut().for_each(|x| *x = 0);
        loop {
            if cp != c {
                let w = (0..k).fold(C64::new(1.0, 0.0), |acc, l| acc * t[(cp[l], c[l])]);
                if w != C64::new(0.0, 0.0) {
                    let cflat = cp.iter().fold(0, |acc, &x| acc * big + x);
                    for a_idx in 0..big {
                        v[a_idx] -= kt[a_idx * cols + cflat] * w;
                    }
                }
            }
            let mut d = k;
            let mut advanced = false;
            while d > 0 {
                d -= 1;
                if cp[d] < c[d] {
                    cp[d] += 1;
                    advanced = true;
                    break;
                }
                cp[d] = 0;
            }
            if !advanced {
                break;
            }
        }
        let sigma = (0..k).fold(C64::new(1.0, 0.0), |acc, l| acc * t[(c[l], c[l])]);
        for a_idx in (0..big).rev() {
            let diag = sigma - t[(a_idx, a_idx)];
            let gap = diag.norm();
            min_gap = min_gap.min(gap);
            if gap < tol {
                return Err(Error::ResonantOrder { order: k, gap });
            }
            let mut acc = v[a_idx];
            for b in a_idx + 1..big {
                acc += t[(a_idx, b)] * kt[b * cols + col];
            }
            kt[a_idx * cols + col] = acc / diag;
        }
    }

    let mut back = left_mul(&kt, big, &u);
    for p in 0..k {
        back = slot_mul(&back, big, k, p, &u_star);
    }
    let real: Vec<f64> = back.iter().map(|z| z.re).collect();
    Ok((MultiLinearMap::from_data(rhs.window(), k, real)?, min_gap))
}
