//! Polynomial jets at a fixed point: `F(x) = Σ_{k=1}^r C_k x^{⊗k}`.
//!
//! Coefficients are Taylor coefficients, not derivatives: the k-th derivative
//! at the origin is `k! C_k`. Every coefficient is kept symmetric.

use crate::decay::DecayFunction;
use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, LatticeWindow};
use crate::linear::BlockLinearMap;
use crate::multilinear::MultiLinearMap;

#[derive(Clone, Debug, PartialEq)]
pub struct PolyJet {
    window: LatticeWindow,
    coeffs: Vec<MultiLinearMap>,
}

impl PolyJet {
    /// Builds a jet from `C_1..C_r`; `coeffs[k-1]` must have arity `k`.
    pub fn new(window: &LatticeWindow, coeffs: Vec<MultiLinearMap>) -> Result<Self> {
        if coeffs.is_empty() {
            return Err(Error::PreconditionViolated("a jet needs at least a linear part".into()));
        }
        for (idx, c) in coeffs.iter().enumerate() {
            window.ensure_same(c.window())?;
            if c.arity() != idx + 1 {
                return Err(Error::ArityMismatch { expected: idx + 1, got: c.arity() });
            }
        }
        let coeffs = coeffs.into_iter().map(|c| c.symmetrized()).collect();
        Ok(PolyJet { window: window.clone(), coeffs })
    }

    pub fn linear(a: &BlockLinearMap) -> Self {
        PolyJet { window: a.window().clone(), coeffs: vec![MultiLinearMap::from_linear(a)] }
    }

    pub fn identity(window: &LatticeWindow) -> Self {
        Self::linear(&BlockLinearMap::identity(window))
    }

    /// `A x + Σ_k C_k x^{⊗k}` with the given nonlinear coefficients.
    pub fn with_linear_part(a: &BlockLinearMap, nonlinear: Vec<MultiLinearMap>) -> Result<Self> {
        let mut coeffs = vec![MultiLinearMap::from_linear(a)];
        coeffs.extend(nonlinear);
        Self::new(a.window(), coeffs)
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len()
    }

    /// `C_k`, or `None` above the stored degree.
    pub fn coeff(&self, k: usize) -> Option<&MultiLinearMap> {
        if k == 0 {
            None
        } else {
            self.coeffs.get(k - 1)
        }
    }

    pub fn coeffs(&self) -> &[MultiLinearMap] {
        &self.coeffs
    }

    pub fn linear_part(&self) -> Result<BlockLinearMap> {
        self.coeffs[0].to_linear()
    }

    /// Replaces `C_k`, padding intermediate orders with zeros.
    pub fn set_coeff(&mut self, k: usize, c: MultiLinearMap) -> Result<()> {
        if k == 0 || c.arity() != k {
            return Err(Error::ArityMismatch { expected: k, got: c.arity() });
        }
        self.window.ensure_same(c.window())?;
        while self.coeffs.len() < k {
            let next = self.coeffs.len() + 1;
            self.coeffs.push(MultiLinearMap::zeros(&self.window, next)?);
        }
        self.coeffs[k - 1] = c.symmetrized();
        Ok(())
    }

    /// Jet truncated (or zero-padded) to degree `r`.
    pub fn truncated(&self, r: usize) -> Result<Self> {
        let mut out = self.clone();
        out.coeffs.truncate(r.max(1));
        for k in out.coeffs.len() + 1..=r {
            out.coeffs.push(MultiLinearMap::zeros(&self.window, k)?);
        }
        Ok(out)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.window.ensure_same(&other.window)?;
        let r = self.degree().max(other.degree());
        let (a, b) = (self.truncated(r)?, other.truncated(r)?);
        let coeffs = a.coeffs.iter().zip(&b.coeffs).map(|(x, y)| x.sub(y)).collect::<Result<Vec<_>>>()?;
        Ok(PolyJet { window: self.window.clone(), coeffs })
    }

    /// Largest entry of each coefficient `C_1..C_r`.
    pub fn coeff_max_abs(&self) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.max_abs()).collect()
    }

    /// `γ(C_k)` for every order.
    pub fn coeff_gammas(&self, gamma: &DecayFunction) -> Vec<f64> {
        self.coeffs.iter().map(|c| c.ml_gamma(gamma)).collect()
    }

    /// `Σ_k C_k(x, .., x)`.
    pub fn eval(&self, x: &LatticeVector) -> Result<LatticeVector> {
        self.window.ensure_same(x.window())?;
        let mut out = LatticeVector::zeros(&self.window);
        for c in &self.coeffs {
            if c.is_zero() {
                continue;
            }
            out = out.add(&c.apply_diag(x)?)?;
        }
        Ok(out)
    }

    /// Derivative `DF(x)` as a dense map.
    pub fn derivative_at(&self, x: &LatticeVector) -> Result<BlockLinearMap> {
        let mut total = MultiLinearMap::zeros(&self.window, 1)?;
        for (idx, c) in self.coeffs.iter().enumerate() {
            let k = idx + 1;
            if c.is_zero() {
                continue;
            }
            // For symmetric C_k the derivative is k C_k(x, .., x, .).
            let slots: Vec<usize> = (0..k - 1).collect();
            let vs = vec![x; k - 1];
            let lin = if k == 1 { c.clone() } else { c.contract(&slots, &vs)?.scaled(k as f64) };
            total = total.add(&lin)?;
        }
        total.to_linear()
    }
}

/// Nondecreasing lists of `parts` positive integers bounded by `max_part`
/// summing to `total`, with the number of distinct orderings of each.
fn partitions(total: usize, parts: usize, max_part: usize) -> Vec<(Vec<usize>, f64)> {
    fn rec(rest: usize, parts: usize, lo: usize, hi: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if parts == 0 {
            if rest == 0 {
                out.push(cur.clone());
            }
            return;
        }
        for v in lo..=hi.min(rest) {
            if v * parts > rest {
                break;
            }
            cur.push(v);
            rec(rest - v, parts - 1, v, hi, cur, out);
            cur.pop();
        }
    }
    let mut raw = Vec::new();
    rec(total, parts, 1, max_part, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|p| {
            let mut count = factorial(p.len());
            let mut run = 1;
            for w in 1..=p.len() {
                if w < p.len() && p[w] == p[w - 1] {
                    run += 1;
                } else {
                    count /= factorial(run);
                    run = 1;
                }
            }
            (p, count)
        })
        .collect()
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|v| v as f64).product()
}

/// Order-`k` coefficient of `g ∘ f`, skipping `g_k` when `skip_top` is set.
pub(crate) fn composed_order(g: &PolyJet, f: &PolyJet, k: usize, skip_top: bool) -> Result<MultiLinearMap> {
    let mut acc = MultiLinearMap::zeros(&g.window, k)?;
    let top = if skip_top { k - 1 } else { k };
    for j in 1..=top.min(g.degree()) {
        let gj = &g.coeffs[j - 1];
        if gj.is_zero() {
            continue;
        }
        for (parts, count) in partitions(k, j, f.degree()) {
            let bs: Vec<&MultiLinearMap> = parts.iter().map(|&i| &f.coeffs[i - 1]).collect();
            if bs.iter().any(|b| b.is_zero()) {
                continue;
            }
            acc = acc.add(&gj.compose_multi(&bs)?.scaled(count))?;
        }
    }
    Ok(acc.symmetrized())
}

/// Jet of `g ∘ f` truncated to degree `r`.
pub fn jet_compose(g: &PolyJet, f: &PolyJet, r: usize) -> Result<PolyJet> {
    g.window.ensure_same(&f.window)?;
    let coeffs = (1..=r.max(1)).map(|k| composed_order(g, f, k, false)).collect::<Result<Vec<_>>>()?;
    Ok(PolyJet { window: g.window.clone(), coeffs })
}

/// Jet of the local inverse of `f` to degree `r`.
pub fn jet_invert(f: &PolyJet, r: usize) -> Result<PolyJet> {
    let a_inv = f.linear_part()?.inverse_dense()?;
    let mut g = PolyJet::linear(&a_inv);
    for k in 2..=r {
        g.coeffs.push(MultiLinearMap::zeros(&f.window, k)?);
        // (g ∘ f)_k = g_k(f_1, .., f_1) + T_k must vanish.
        let t = composed_order(&g, f, k, true)?;
        let mut gk = t.scaled(-1.0);
        for p in 0..k {
            gk = gk.right_linear(p, &a_inv)?;
        }
        g.coeffs[k - 1] = gk.symmetrized();
    }
    Ok(g)
}

/// Jet of `f^m` to degree `r`.
pub fn jet_iterate(f: &PolyJet, m: usize, r: usize) -> Result<PolyJet> {
    if m == 0 {
        return Err(Error::PreconditionViolated("iteration count must be at least 1".into()));
    }
    let mut acc = f.truncated(r)?;
    for _ in 1..m {
        acc = jet_compose(f, &acc, r)?;
    }
    Ok(acc)
}

pub fn jet_eval(f: &PolyJet, x: &LatticeVector) -> Result<LatticeVector> {
    f.eval(x)
}

/// `T_δ^{-1} ∘ F ∘ T_δ`: the order-k coefficient is scaled by `δ^{k-1}`.
pub fn rescale(f: &PolyJet, delta: f64) -> Result<PolyJet> {
    if !(delta > 0.0) {
        return Err(Error::PreconditionViolated(format!("rescaling factor {delta} must be positive")));
    }
    let coeffs = f.coeffs.iter().enumerate().map(|(idx, c)| c.scaled(delta.powi(idx as i32))).collect();
    Ok(PolyJet { window: f.window.clone(), coeffs })
}
