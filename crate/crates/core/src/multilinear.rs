//! k-linear maps with decay (`L^k_Γ`).
//!
//! A k-linear map on a window of total dimension `N = s n` is stored densely
//! as a flat array of `N^{k+1}` reals. The entry for output coordinate `a`
//! and input coordinates `b_1..b_k` sits at `a N^k + b_1 N^{k-1} + ... + b_k`.
//! Block `(i; j_1..j_k)` collects the `n x n^k` entries whose coordinates lie
//! in the given nodes.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::decay::DecayFunction;
use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, LatticeWindow};
use crate::linear::{BlockLinearMap, NormMode};

/// Largest number of stored entries accepted for a dense tensor.
pub const DENSE_ENTRY_LIMIT: usize = 10_000_000;

#[derive(Clone, Debug, PartialEq)]
pub struct MultiLinearMap {
    window: LatticeWindow,
    arity: usize,
    data: Vec<f64>,
    symmetric: bool,
}

pub(crate) fn entry_count(window: &LatticeWindow, arity: usize) -> Result<usize> {
    let n = window.size();
    let mut total: usize = 1;
    for _ in 0..=arity {
        total = total.checked_mul(n).filter(|&t| t <= DENSE_ENTRY_LIMIT).ok_or(Error::TooLarge {
            entries: (n as f64).powi(arity as i32 + 1),
            limit: DENSE_ENTRY_LIMIT,
        })?;
    }
    Ok(total)
}

impl MultiLinearMap {
    pub fn zeros(window: &LatticeWindow, arity: usize) -> Result<Self> {
        if arity == 0 {
            return Err(Error::ArityMismatch { expected: 1, got: 0 });
        }
        let len = entry_count(window, arity)?;
        Ok(MultiLinearMap { window: window.clone(), arity, data: vec![0.0; len], symmetric: true })
    }

    pub fn from_data(window: &LatticeWindow, arity: usize, data: Vec<f64>) -> Result<Self> {
        let len = entry_count(window, arity)?;
        if data.len() != len || arity == 0 {
            return Err(Error::WindowMismatch(format!(
                "{} entries for arity {arity} on a window of size {}",
                data.len(),
                window.size()
            )));
        }
        Ok(MultiLinearMap { window: window.clone(), arity, data, symmetric: false })
    }

    pub fn from_linear(a: &BlockLinearMap) -> Self {
        let dense = a.to_dense();
        let n = dense.nrows();
        let mut data = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                data[r * n + c] = dense[(r, c)];
            }
        }
        MultiLinearMap { window: a.window().clone(), arity: 1, data, symmetric: false }
    }

    pub fn to_linear(&self) -> Result<BlockLinearMap> {
        if self.arity != 1 {
            return Err(Error::ArityMismatch { expected: 1, got: self.arity });
        }
        let n = self.dim();
        let dense = nalgebra::DMatrix::from_row_slice(n, n, &self.data);
        BlockLinearMap::from_dense(&self.window, &dense)
    }

    pub fn identity(window: &LatticeWindow) -> Self {
        Self::from_linear(&BlockLinearMap::identity(window))
    }

    /// The uncoupled map `W_{i;i..i} = block`, where `block` is an `n x n^k`
    /// row-major array of Taylor coefficients acting on one node.
    pub fn node_local(window: &LatticeWindow, arity: usize, block: &[f64]) -> Result<Self> {
        let n = window.node_dim;
        if block.len() != n.pow(arity as u32 + 1) {
            return Err(Error::WindowMismatch(format!(
                "node block of length {} for n = {n}, arity {arity}",
                block.len()
            )));
        }
        let mut w = Self::zeros(window, arity)?;
        let cols = n.pow(arity as u32);
        for i in 0..window.nodes() {
            for r in 0..n {
                for c in 0..cols {
                    let v = block[r * cols + c];
                    if v == 0.0 {
                        continue;
                    }
                    let mut idx = i * n + r;
                    let mut rest = c;
                    let mut digits = vec![0usize; arity];
                    for d in (0..arity).rev() {
                        digits[d] = rest % n;
                        rest /= n;
                    }
                    for d in digits {
                        idx = idx * w.dim() + i * n + d;
                    }
                    w.data[idx] = v;
                }
            }
        }
        w.symmetric = false;
        Ok(w)
    }

    /// Total dimension `N = s n` of the window.
    pub fn dim(&self) -> usize {
        self.window.size()
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn flat_index(&self, out: usize, inputs: &[usize]) -> usize {
        debug_assert_eq!(inputs.len(), self.arity);
        inputs.iter().fold(out, |acc, &b| acc * self.dim() + b)
    }

    pub fn get(&self, out: usize, inputs: &[usize]) -> f64 {
        self.data[self.flat_index(out, inputs)]
    }

    pub fn set(&mut self, out: usize, inputs: &[usize], value: f64) {
        let idx = self.flat_index(out, inputs);
        self.data[idx] = value;
        self.symmetric = false;
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        MultiLinearMap { data: self.data.iter().map(|v| v * factor).collect(), ..self.clone() }
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Result<Self> {
        self.window.ensure_same(&other.window)?;
        if self.arity != other.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: other.arity });
        }
        Ok(MultiLinearMap {
            window: self.window.clone(),
            arity: self.arity,
            data: self.data.iter().zip(&other.data).map(|(a, b)| a + sign * b).collect(),
            symmetric: self.symmetric && other.symmetric,
        })
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Norms of all blocks `(i; j_1..j_k)`, indexed like a tensor over nodes:
    /// `i s^k + j_1 s^{k-1} + ... + j_k`.
    pub fn block_norms(&self) -> Vec<f64> {
        let n = self.window.node_dim;
        let k = self.arity;
        if n == 1 {
            return self.data.iter().map(|v| v.abs()).collect();
        }
        let s = self.window.nodes();
        let big = self.dim();
        let block_len = n.pow(k as u32 + 1);
        let mut blocks = vec![0.0; self.data.len()];
        let mut digits = vec![0usize; k + 1];
        for (flat, &v) in self.data.iter().enumerate() {
            let mut rest = flat;
            for d in (0..=k).rev() {
                digits[d] = rest % big;
                rest /= big;
            }
            let mut node = 0;
            let mut pos = 0;
            for &g in &digits {
                node = node * s + g / n;
                pos = pos * n + g % n;
            }
            blocks[node * block_len + pos] = v;
        }
        let cols = n.pow(k as u32);
        let norm = self.window.node_norm;
        blocks.chunks(block_len).map(|b| norm.block_norm(b, n, cols, k)).collect()
    }

    /// `sup_i Σ_{j_1..j_k} ||W_{i;j}||`.
    pub fn op_norm(&self) -> f64 {
        let s = self.window.nodes();
        let per_row = s.pow(self.arity as u32);
        self.block_norms().chunks(per_row).map(|row| row.iter().sum::<f64>()).fold(0.0, f64::max)
    }

    /// Exact only for scalar nodes and arity one.
    pub fn op_norm_mode(&self) -> NormMode {
        if self.window.node_dim == 1 && self.arity == 1 {
            NormMode::Exact
        } else {
            NormMode::UpperBound
        }
    }

    /// `γ(ι_p(W))` for every slot `p`.
    pub fn slot_gammas(&self, gamma: &DecayFunction) -> Vec<f64> {
        let s = self.window.nodes();
        let k = self.arity;
        let table = gamma.pair_table(&self.window);
        let mut acc = vec![vec![0.0; s * s]; k];
        let mut digits = vec![0usize; k + 1];
        for (flat, bn) in self.block_norms().into_iter().enumerate() {
            if bn == 0.0 {
                continue;
            }
            let mut rest = flat;
            for d in (0..=k).rev() {
                digits[d] = rest % s;
                rest /= s;
            }
            let i = digits[0];
            for p in 0..k {
                acc[p][i * s + digits[p + 1]] += bn;
            }
        }
        acc.iter()
            .map(|a| a.iter().zip(&table).map(|(v, g)| v / g).fold(0.0, f64::max))
            .collect()
    }

    /// `γ(W) = max_p γ(ι_p(W))`.
    pub fn ml_gamma(&self, gamma: &DecayFunction) -> f64 {
        self.slot_gammas(gamma).into_iter().fold(0.0, f64::max)
    }

    pub fn gamma_norm(&self, gamma: &DecayFunction) -> f64 {
        self.op_norm().max(self.ml_gamma(gamma))
    }

    /// Replaces input slot `p` (0-based) by a tensor `b` of shape `N x N^l`.
    fn substitute_raw(&self, p: usize, b: &[f64], l: usize) -> Self {
        let big = self.dim();
        let k = self.arity;
        let pre_len = big.pow(p as u32 + 1);
        let post_len = big.pow((k - 1 - p) as u32);
        let mid = big.pow(l as u32);
        let mut out = vec![0.0; pre_len * mid * post_len];
        for pre in 0..pre_len {
            for c in 0..big {
                let src = &self.data[(pre * big + c) * post_len..(pre * big + c + 1) * post_len];
                if src.iter().all(|&v| v == 0.0) {
                    continue;
                }
                for d in 0..mid {
                    let bv = b[c * mid + d];
                    if bv == 0.0 {
                        continue;
                    }
                    let dst = &mut out[(pre * mid + d) * post_len..(pre * mid + d + 1) * post_len];
                    for (o, &t) in dst.iter_mut().zip(src) {
                        *o += bv * t;
                    }
                }
            }
        }
        MultiLinearMap { window: self.window.clone(), arity: k - 1 + l, data: out, symmetric: false }
    }

    /// `W(.., B(..), ..)`: slot `p` replaced by the map `b`.
    pub fn substitute_slot(&self, p: usize, b: &MultiLinearMap) -> Result<Self> {
        self.window.ensure_same(&b.window)?;
        if p >= self.arity {
            return Err(Error::SlotOutOfRange { slot: p, arity: self.arity });
        }
        entry_count(&self.window, self.arity - 1 + b.arity)?;
        Ok(self.substitute_raw(p, &b.data, b.arity))
    }

    /// `R_{p,A}`: slot `p` precomposed with a linear map.
    pub fn right_linear(&self, p: usize, a: &BlockLinearMap) -> Result<Self> {
        self.substitute_slot(p, &MultiLinearMap::from_linear(a))
    }

    /// `L_B`: the output multiplied by a linear map.
    pub fn left_linear(&self, b: &BlockLinearMap) -> Result<Self> {
        self.window.ensure_same(b.window())?;
        Ok(self.left_dense(&MultiLinearMap::from_linear(b).data))
    }

    pub(crate) fn left_dense(&self, b: &[f64]) -> Self {
        let big = self.dim();
        let rest = self.data.len() / big;
        let mut out = vec![0.0; self.data.len()];
        for a in 0..big {
            for c in 0..big {
                let bv = b[a * big + c];
                if bv == 0.0 {
                    continue;
                }
                let src = &self.data[c * rest..(c + 1) * rest];
                for (o, &t) in out[a * rest..(a + 1) * rest].iter_mut().zip(src) {
                    *o += bv * t;
                }
            }
        }
        MultiLinearMap { data: out, symmetric: self.symmetric, ..self.clone() }
    }

    /// `A(B_1(..), .., B_k(..))` with arity `l_1 + .. + l_k`.
    pub fn compose_multi(&self, bs: &[&MultiLinearMap]) -> Result<Self> {
        if bs.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: bs.len() });
        }
        for b in bs {
            self.window.ensure_same(&b.window)?;
        }
        entry_count(&self.window, bs.iter().map(|b| b.arity).sum())?;
        let mut out = self.clone();
        for p in (0..self.arity).rev() {
            out = out.substitute_raw(p, &bs[p].data, bs[p].arity);
        }
        Ok(out)
    }

    /// Fixes the given slots to the given vectors; the result has the
    /// remaining slots in their original order.
    pub fn contract(&self, slots: &[usize], vectors: &[&LatticeVector]) -> Result<Self> {
        if slots.len() != vectors.len() {
            return Err(Error::ArityMismatch { expected: slots.len(), got: vectors.len() });
        }
        if slots.len() >= self.arity {
            return Err(Error::ArityMismatch { expected: self.arity - 1, got: slots.len() });
        }
        let mut order: Vec<(usize, &LatticeVector)> = slots.iter().cloned().zip(vectors.iter().cloned()).collect();
        order.sort_by_key(|a| std::cmp::Reverse(a.0));
        for w in order.windows(2) {
            if w[0].0 == w[1].0 {
                return Err(Error::PreconditionViolated(format!("slot {} contracted twice", w[0].0)));
            }
        }
        let mut out = self.clone();
        for (p, v) in order {
            if p >= self.arity {
                return Err(Error::SlotOutOfRange { slot: p, arity: self.arity });
            }
            self.window.ensure_same(v.window())?;
            out = out.substitute_raw(p, v.values(), 0);
        }
        Ok(out)
    }

    /// `W(v_1, .., v_k)`.
    pub fn apply(&self, vectors: &[&LatticeVector]) -> Result<LatticeVector> {
        if vectors.len() != self.arity {
            return Err(Error::ArityMismatch { expected: self.arity, got: vectors.len() });
        }
        let mut cur = self.data.clone();
        let big = self.dim();
        for v in vectors.iter().rev() {
            self.window.ensure_same(v.window())?;
            let x = v.values();
            cur = cur.chunks(big).map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum()).collect();
        }
        LatticeVector::from_values(&self.window, cur)
    }

    /// `W(x, .., x)`.
    pub fn apply_diag(&self, x: &LatticeVector) -> Result<LatticeVector> {
        let vs = vec![x; self.arity];
        self.apply(&vs)
    }

    /// Reorders slots: slot `q` of the result is slot `perm[q]` of `self`.
    pub fn permute_slots(&self, perm: &[usize]) -> Result<Self> {
        let k = self.arity;
        let mut seen = vec![false; k];
        if perm.len() != k || perm.iter().any(|&p| p >= k || std::mem::replace(&mut seen[p], true)) {
            return Err(Error::PreconditionViolated(format!("{perm:?} is not a permutation of {k} slots")));
        }
        let big = self.dim();
        let mut out = vec![0.0; self.data.len()];
        let mut digits = vec![0usize; k];
        for (flat, o) in out.iter_mut().enumerate() {
            let mut rest = flat;
            for d in (0..k).rev() {
                digits[d] = rest % big;
                rest /= big;
            }
            let mut src_digits = vec![0usize; k];
            for q in 0..k {
                src_digits[perm[q]] = digits[q];
            }
            let src = src_digits.iter().fold(rest, |acc, &b| acc * big + b);
            *o = self.data[src];
        }
        Ok(MultiLinearMap { data: out, symmetric: false, ..self.clone() })
    }

    /// Average over all slot permutations.
    pub fn symmetrized(&self) -> Self {
        let k = self.arity;
        if k == 1 || self.symmetric {
            return MultiLinearMap { symmetric: true, ..self.clone() };
        }
        let perms = permutations(k);
        let big = self.dim();
        let scale = 1.0 / perms.len() as f64;
        let mut out = vec![0.0; self.data.len()];
        let mut digits = vec![0usize; k];
        for (flat, o) in out.iter_mut().enumerate() {
            let mut rest = flat;
            for d in (0..k).rev() {
                digits[d] = rest % big;
                rest /= big;
            }
            let mut acc = 0.0;
            for perm in &perms {
                let src = perm.iter().fold(rest, |a, &q| a * big + digits[q]);
                acc += self.data[src];
            }
            *o = acc * scale;
        }
        MultiLinearMap { data: out, symmetric: true, ..self.clone() }
    }

    /// Largest difference between the map and its symmetrization.
    pub fn asymmetry(&self) -> f64 {
        let mut plain = self.clone();
        plain.symmetric = false;
        plain.symmetrized().max_abs_diff(self)
    }

    /// One CSV row per nonzero entry: output node index and component, then
    /// node index and component for each slot, then the value.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let m = self.window.dim;
        let n = self.window.node_dim;
        let k = self.arity;
        let big = self.dim();
        let mut header: Vec<String> = (0..m).map(|d| format!("i{d}")).collect();
        header.push("r".into());
        for p in 1..=k {
            header.extend((0..m).map(|d| format!("j{p}_{d}")));
            header.push(format!("c{p}"));
        }
        header.push("value".into());
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&header)?;
        let mut digits = vec![0usize; k + 1];
        for (flat, &v) in self.data.iter().enumerate() {
            if v == 0.0 {
                continue;
            }
            let mut rest = flat;
            for d in (0..=k).rev() {
                digits[d] = rest % big;
                rest /= big;
            }
            let mut rec = Vec::with_capacity(header.len());
            for &g in &digits {
                rec.extend(self.window.multi_index(g / n).iter().map(|c| c.to_string()));
                rec.push((g % n).to_string());
            }
            rec.push(format!("{v:e}"));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Header written next to tensor CSV dumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TensorHeader {
    pub window: LatticeWindow,
    pub arity: usize,
    pub symmetric: bool,
    pub nonzeros: usize,
}

impl From<&MultiLinearMap> for TensorHeader {
    fn from(w: &MultiLinearMap) -> Self {
        TensorHeader {
            window: w.window.clone(),
            arity: w.arity,
            symmetric: w.symmetric,
            nonzeros: w.data.iter().filter(|&&v| v != 0.0).count(),
        }
    }
}

pub(crate) fn permutations(k: usize) -> Vec<Vec<usize>> {
    if k == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for smaller in permutations(k - 1) {
        for pos in 0..k {
            let mut p = smaller.clone();
            p.insert(pos, k - 1);
            out.push(p);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decay::{make_power_exp_decay, DecayProfile};

    fn setup() -> (LatticeWindow, DecayFunction) {
        (LatticeWindow::new(1, 2, 1).unwrap(), make_power_exp_decay(2.0, 1.0, 1, 20).unwrap())
    }

    #[test]
    fn diagonal_bilinear_gamma() {
        let (w, g) = setup();
        let c = -1.5;
        let t = MultiLinearMap::node_local(&w, 2, &[c]).unwrap();
        assert!((t.ml_gamma(&g) - c.abs() / g.at_origin()).abs() < 1e-12);
        assert_eq!(MultiLinearMap::zeros(&w, 2).unwrap().ml_gamma(&g), 0.0);
    }

    #[test]
    fn diagonal_bilinear_apply() {
        let (w, _) = setup();
        let t = MultiLinearMap::node_local(&w, 2, &[0.7]).unwrap();
        let x = LatticeVector::from_values(&w, vec![1.0, -2.0, 0.5, 3.0, 0.0]).unwrap();
        let y = t.apply(&[&x, &x]).unwrap();
        for i in 0..w.nodes() {
            assert!((y.values()[i] - 0.7 * x.values()[i].powi(2)).abs() < 1e-15);
        }
    }

    #[test]
    fn contraction_with_unit_vector() {
        let (w, g) = setup();
        let c = 2.0;
        let t = MultiLinearMap::node_local(&w, 2, &[c]).unwrap();
        let e = LatticeVector::embed(&w, 3, &[1.0]).unwrap();
        let b = t.contract(&[1], &[&e]).unwrap();
        assert_eq!(b.arity(), 1);
        let lin = b.to_linear().unwrap();
        assert_eq!(lin.block_count(), 1);
        assert_eq!(lin.block(3, 3).unwrap()[(0, 0)], c);
        assert!((b.ml_gamma(&g) - c / g.eval(&[0])).abs() < 1e-12);
    }

    #[test]
    fn full_contraction_is_rejected() {
        let (w, _) = setup();
        let t = MultiLinearMap::zeros(&w, 1).unwrap();
        let x = LatticeVector::zeros(&w);
        assert!(matches!(t.contract(&[0], &[&x]), Err(Error::ArityMismatch { .. })));
        let t2 = MultiLinearMap::zeros(&w, 2).unwrap();
        assert!(matches!(t2.contract(&[2], &[&x]), Err(Error::SlotOutOfRange { .. })));
        assert!(matches!(t2.apply(&[&x]), Err(Error::ArityMismatch { .. })));
    }

    #[test]
    fn identity_substitution_is_neutral() {
        let (w, _) = setup();
        let mut t = MultiLinearMap::zeros(&w, 2).unwrap();
        t.set(1, &[2, 4], 0.3);
        t.set(0, &[0, 1], -1.0);
        let id = MultiLinearMap::identity(&w);
        assert_eq!(t.compose_multi(&[&id, &id]).unwrap().data(), t.data());
    }

    #[test]
    fn arity_one_composition_is_matrix_product() {
        let (w, _) = setup();
        let a = BlockLinearMap::shift(&w, 0, 1).add(&BlockLinearMap::identity(&w).scaled(0.5));
        let b = BlockLinearMap::shift(&w, 0, -1).scaled(2.0);
        let via_ml = MultiLinearMap::from_linear(&a).compose_multi(&[&MultiLinearMap::from_linear(&b)]).unwrap();
        let direct = MultiLinearMap::from_linear(&a.compose(&b).unwrap());
        assert!(via_ml.max_abs_diff(&direct) < 1e-15);
    }

    #[test]
    fn symmetrization_makes_apply_order_free() {
        let (w, _) = setup();
        let mut t = MultiLinearMap::zeros(&w, 3).unwrap();
        t.set(0, &[1, 2, 3], 1.0);
        t.set(4, &[0, 0, 1], -2.0);
        let s = t.symmetrized();
        assert!(s.is_symmetric());
        assert!(s.asymmetry() < 1e-15);
        let x = LatticeVector::from_values(&w, vec![1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        let y = LatticeVector::from_values(&w, vec![-1.0, 0.5, 0.0, 2.0, 1.0]).unwrap();
        let z = LatticeVector::from_values(&w, vec![0.3, 0.1, -0.7, 1.0, 2.0]).unwrap();
        let a = s.apply(&[&x, &y, &z]).unwrap();
        let b = s.apply(&[&z, &x, &y]).unwrap();
        for (p, q) in a.values().iter().zip(b.values()) {
            assert!((p - q).abs() < 1e-13);
        }
    }

    #[test]
    fn permutation_count() {
        assert_eq!(permutations(1).len(), 1);
        assert_eq!(permutations(3).len(), 6);
        assert_eq!(permutations(4).len(), 24);
    }

    #[test]
    fn block_norms_for_vector_nodes() {
        let w = LatticeWindow::new(1, 1, 2).unwrap();
        let t = MultiLinearMap::node_local(&w, 2, &[1.0, -2.0, 0.0, 0.5, 0.0, 0.0, 3.0, 0.0]).unwrap();
        let bn = t.block_norms();
        assert_eq!(bn.len(), 27);
        // Row sums of the node block are 3.5 and 3.
        assert_eq!(bn[0], 3.5);
        assert_eq!(t.op_norm(), 3.5);
    }

    #[test]
    fn too_large_tensors_are_refused() {
        let w = LatticeWindow::new(2, 10, 1).unwrap();
        assert!(matches!(MultiLinearMap::zeros(&w, 3), Err(Error::TooLarge { .. })));
    }

    #[test]
    fn csv_has_one_row_per_nonzero() {
        let (w, _) = setup();
        let t = MultiLinearMap::node_local(&w, 2, &[1.0]).unwrap();
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + w.nodes());
        assert!(text.starts_with("i0,r,j1_0,c1,j2_0,c2,value"));
    }
}
