//! Block linear maps with decay: the Banach algebra `L_Γ`.
//!
//! A map is stored as sparse rows of `n x n` blocks `A_ij`; absent blocks are
//! zero. Norms:
//!
//! * `op_norm(A) = sup_i Σ_j ||A_ij||`, the exact ℓ∞ operator norm for `n = 1`
//!   and an upper bound otherwise;
//! * `γ(A) = sup_{i,j} ||A_ij|| / Γ(i-j)`;
//! * `||A||_Γ = max(op_norm(A), γ(A))`.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decay::DecayFunction;
use crate::error::{Error, Result};
use crate::lattice::{LatticeVector, LatticeWindow, NodeNorm};

/// Whether a reported operator norm is exact or only an upper bound.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormMode {
    Exact,
    UpperBound,
}

#[derive(Clone, Debug)]
pub struct BlockLinearMap {
    window: LatticeWindow,
    rows: Vec<BTreeMap<usize, DMatrix<f64>>>,
    cutoff: f64,
    op_norm: OnceLock<f64>,
}

impl PartialEq for BlockLinearMap {
    fn eq(&self, other: &Self) -> bool {
        self.window == other.window && self.rows == other.rows
    }
}

impl BlockLinearMap {
    pub fn zeros(window: &LatticeWindow) -> Self {
        BlockLinearMap {
            window: window.clone(),
            rows: vec![BTreeMap::new(); window.nodes()],
            cutoff: 0.0,
            op_norm: OnceLock::new(),
        }
    }

    pub fn identity(window: &LatticeWindow) -> Self {
        Self::uncoupled(window, &DMatrix::identity(window.node_dim, window.node_dim))
    }

    /// `A_ij = block δ_ij`.
    pub fn uncoupled(window: &LatticeWindow, block: &DMatrix<f64>) -> Self {
        assert_eq!(block.shape(), (window.node_dim, window.node_dim));
        let mut a = Self::zeros(window);
        for i in 0..window.nodes() {
            a.insert_block(i, i, block.clone());
        }
        a
    }

    /// Shift along lattice axis `axis`: `(Sx)_i = x_{i + step e_axis}`.
    pub fn shift(window: &LatticeWindow, axis: usize, step: i64) -> Self {
        let mut a = Self::zeros(window);
        let id = DMatrix::identity(window.node_dim, window.node_dim);
        for i in 0..window.nodes() {
            let mut idx = window.multi_index(i);
            idx[axis] += step;
            if let Some(j) = window.node_of(&idx) {
                a.insert_block(i, j, id.clone());
            }
        }
        a
    }

    /// Coupling `A_ij = strength Γ(i-j) block` for `i != j`.
    pub fn decay_coupling(window: &LatticeWindow, gamma: &DecayFunction, strength: f64, block: &DMatrix<f64>) -> Self {
        let mut a = Self::zeros(window);
        for i in 0..window.nodes() {
            for j in 0..window.nodes() {
                if i != j {
                    a.insert_block(i, j, block * (strength * gamma.between(window, i, j)));
                }
            }
        }
        a
    }

    /// Coupling to the `2m` nearest neighbours with the given block.
    pub fn nearest_neighbour(window: &LatticeWindow, strength: f64, block: &DMatrix<f64>) -> Self {
        let mut a = Self::zeros(window);
        for axis in 0..window.dim {
            for step in [-1, 1] {
                a = a.add(&Self::shift(window, axis, step).scaled(strength).left_block(block));
            }
        }
        a
    }

    /// Builds from a dense `sn x sn` matrix, keeping nonzero blocks.
    pub fn from_dense(window: &LatticeWindow, dense: &DMatrix<f64>) -> Result<Self> {
        let size = window.size();
        if dense.shape() != (size, size) {
            return Err(Error::WindowMismatch(format!(
                "dense matrix {:?} for window of size {size}",
                dense.shape()
            )));
        }
        let n = window.node_dim;
        let mut a = Self::zeros(window);
        for i in 0..window.nodes() {
            for j in 0..window.nodes() {
                let b = dense.view((i * n, j * n), (n, n)).into_owned();
                a.insert_block(i, j, b);
            }
        }
        Ok(a)
    }

    /// Blocks with norm at or below `cutoff` are dropped on insertion.
    pub fn with_cutoff(mut self, cutoff: f64) -> Self {
        self.cutoff = cutoff;
        self.prune();
        self
    }

    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    fn prune(&mut self) {
        let (nn, cutoff) = (self.window.node_norm, self.cutoff);
        for row in &mut self.rows {
            row.retain(|_, b| matrix_norm(nn, b) > cutoff);
        }
        self.op_norm = OnceLock::new();
    }

    pub fn insert_block(&mut self, i: usize, j: usize, block: DMatrix<f64>) {
        if matrix_norm(self.window.node_norm, &block) > self.cutoff {
            self.rows[i].insert(j, block);
        } else {
            self.rows[i].remove(&j);
        }
        self.op_norm = OnceLock::new();
    }

    pub fn block(&self, i: usize, j: usize) -> Option<&DMatrix<f64>> {
        self.rows[i].get(&j)
    }

    pub fn blocks(&self) -> impl Iterator<Item = (usize, usize, &DMatrix<f64>)> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |(&j, b)| (i, j, b)))
    }

    pub fn block_count(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.window.node_dim;
        let mut out = DMatrix::zeros(self.window.size(), self.window.size());
        for (i, j, b) in self.blocks() {
            out.view_mut((i * n, j * n), (n, n)).copy_from(b);
        }
        out
    }

    pub fn apply(&self, x: &LatticeVector) -> Result<LatticeVector> {
        self.window.ensure_same(x.window())?;
        let n = self.window.node_dim;
        let mut out = LatticeVector::zeros(&self.window);
        for (i, j, b) in self.blocks() {
            let xj = x.project(j);
            let yi = out.node_mut(i);
            for r in 0..n {
                let mut acc = 0.0;
                for c in 0..n {
                    acc += b[(r, c)] * xj[c];
                }
                yi[r] += acc;
            }
        }
        Ok(out)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = Self::zeros(&self.window).with_cutoff(self.cutoff);
        for (i, j, b) in self.blocks() {
            out.insert_block(i, j, b * factor);
        }
        out
    }

    /// Multiplies every block on the left by a fixed `n x n` matrix.
    fn left_block(&self, block: &DMatrix<f64>) -> Self {
        let mut out = Self::zeros(&self.window).with_cutoff(self.cutoff);
        for (i, j, b) in self.blocks() {
            out.insert_block(i, j, block * b);
        }
        out
    }

    pub fn add(&self, other: &Self) -> Self {
        self.combine(other, 1.0)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.combine(other, -1.0)
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        assert!(self.window.same_space(&other.window), "window mismatch in block map sum");
        let mut out = self.clone();
        for (i, j, b) in other.blocks() {
            let sum = match out.rows[i].get(&j) {
                Some(a) => a + b * sign,
                None => b * sign,
            };
            out.insert_block(i, j, sum);
        }
        out
    }

    /// Block product `(AB)_ij = Σ_k A_ik B_kj`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.window.ensure_same(&other.window)?;
        let mut out = Self::zeros(&self.window).with_cutoff(self.cutoff.max(other.cutoff));
        for (i, row) in self.rows.iter().enumerate() {
            let mut acc: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
            for (&k, a) in row {
                for (&j, b) in &other.rows[k] {
                    let p = a * b;
                    acc.entry(j).and_modify(|s| *s += &p).or_insert(p);
                }
            }
            for (j, b) in acc {
                out.insert_block(i, j, b);
            }
        }
        Ok(out)
    }

    /// `sup_i Σ_j ||A_ij||`.
    pub fn op_norm(&self) -> f64 {
        *self.op_norm.get_or_init(|| {
            let nn = self.window.node_norm;
            self.rows
                .iter()
                .map(|row| row.values().map(|b| matrix_norm(nn, b)).sum::<f64>())
                .fold(0.0, f64::max)
        })
    }

    pub fn op_norm_mode(&self) -> NormMode {
        if self.window.node_dim == 1 {
            NormMode::Exact
        } else {
            NormMode::UpperBound
        }
    }

    /// `γ(A) = sup ||A_ij|| Γ(i-j)^{-1}` over stored blocks.
    pub fn gamma(&self, gamma: &DecayFunction) -> f64 {
        let nn = self.window.node_norm;
        self.blocks()
            .map(|(i, j, b)| matrix_norm(nn, b) / gamma.between(&self.window, i, j))
            .fold(0.0, f64::max)
    }

    /// `||A||_Γ = max(||A||, γ(A))`.
    pub fn gamma_norm(&self, gamma: &DecayFunction) -> f64 {
        self.op_norm().max(self.gamma(gamma))
    }

    /// Inverse through a dense LU factorization.
    pub fn inverse_dense(&self) -> Result<Self> {
        let dense = self.to_dense();
        let inv = dense
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::NotInvertible("dense LU factorization failed".into()))?;
        if inv.iter().any(|x| !x.is_finite()) {
            return Err(Error::NotInvertible("inverse has non-finite entries".into()));
        }
        Self::from_dense(&self.window, &inv)
    }

    /// `A^p` by repeated squaring.
    pub fn power(&self, p: usize) -> Result<Self> {
        let mut result = Self::identity(&self.window);
        let mut base = self.clone();
        let mut e = p;
        while e > 0 {
            if e & 1 == 1 {
                result = result.compose(&base)?;
            }
            e >>= 1;
            if e > 0 {
                base = base.compose(&base)?;
            }
        }
        Ok(result)
    }

    /// Largest block-wise difference in the node norm.
    pub fn max_block_diff(&self, other: &Self) -> f64 {
        let d = self.sub(other);
        let nn = self.window.node_norm;
        d.blocks().map(|(_, _, b)| matrix_norm(nn, b)).fold(0.0, f64::max)
    }

    /// Writes the blocks as CSV rows `i_0..i_{m-1}, j_0.., b_r_c...`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let m = self.window.dim;
        let n = self.window.node_dim;
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<String> = (0..m).map(|d| format!("i{d}")).collect();
        header.extend((0..m).map(|d| format!("j{d}")));
        for r in 0..n {
            for c in 0..n {
                header.push(format!("b{r}_{c}"));
            }
        }
        w.write_record(&header)?;
        for (i, j, b) in self.blocks() {
            let mut rec: Vec<String> = self.window.multi_index(i).iter().map(|v| v.to_string()).collect();
            rec.extend(self.window.multi_index(j).iter().map(|v| v.to_string()));
            for r in 0..n {
                for c in 0..n {
                    rec.push(format!("{:e}", b[(r, c)]));
                }
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(window: &LatticeWindow, input: R) -> Result<Self> {
        let m = window.dim;
        let n = window.node_dim;
        let mut rdr = csv::Reader::from_reader(input);
        let mut a = Self::zeros(window);
        for rec in rdr.records() {
            let rec = rec?;
            if rec.len() != 2 * m + n * n {
                return Err(Error::Parse(format!("expected {} columns, got {}", 2 * m + n * n, rec.len())));
            }
            let parse_i = |k: usize| -> Result<i64> {
                rec[k].trim().parse::<i64>().map_err(|e| Error::Parse(format!("index column {k}: {e}")))
            };
            let iv: Vec<i64> = (0..m).map(parse_i).collect::<Result<_>>()?;
            let jv: Vec<i64> = (m..2 * m).map(parse_i).collect::<Result<_>>()?;
            let (i, j) = match (window.node_of(&iv), window.node_of(&jv)) {
                (Some(i), Some(j)) => (i, j),
                _ => return Err(Error::Parse(format!("index {iv:?}/{jv:?} outside the window"))),
            };
            let vals: Vec<f64> = (2 * m..2 * m + n * n)
                .map(|k| rec[k].trim().parse::<f64>().map_err(|e| Error::Parse(format!("entry column {k}: {e}"))))
                .collect::<Result<_>>()?;
            a.insert_block(i, j, DMatrix::from_row_slice(n, n, &vals));
        }
        Ok(a)
    }
}

/// Header written next to block CSV dumps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatrixHeader {
    pub window: LatticeWindow,
    pub n: usize,
    pub arity: usize,
    pub decay: Option<DecayFunction>,
}

pub fn matrix_norm(norm: NodeNorm, b: &DMatrix<f64>) -> f64 {
    // nalgebra stores column-major; block_norm expects row-major.
    let rm: Vec<f64> = b.transpose().iter().cloned().collect();
    norm.block_norm(&rm, b.nrows(), b.ncols(), 1)
}

/// Result of [`neumann_invert`].
#[derive(Clone, Debug)]
pub struct NeumannInverse {
    pub inverse: BlockLinearMap,
    pub terms: usize,
    /// `q = ||M0^{-1}||_Γ ||M1||_Γ`.
    pub contraction: f64,
}

/// Inverse of `M0 + M1` as `Σ_j (-M0^{-1} M1)^j M0^{-1}`.
pub fn neumann_invert(
    m0_inverse: &BlockLinearMap,
    m1: &BlockLinearMap,
    gamma: &DecayFunction,
    tol: f64,
    max_terms: usize,
) -> Result<NeumannInverse> {
    m0_inverse.window().ensure_same(m1.window())?;
    let q = m0_inverse.gamma_norm(gamma) * m1.gamma_norm(gamma);
    if !(q < 1.0) {
        return Err(Error::PreconditionViolated(format!("||M0^-1||_Γ ||M1||_Γ = {q} >= 1")));
    }
    let step = m0_inverse.compose(m1)?.scaled(-1.0);
    let mut term = m0_inverse.clone();
    let mut sum = m0_inverse.clone();
    for k in 1..=max_terms {
        term = step.compose(&term)?;
        let size = term.gamma_norm(gamma);
        sum = sum.add(&term);
        if size < tol {
            return Ok(NeumannInverse { inverse: sum, terms: k + 1, contraction: q });
        }
    }
    if m1.block_count() == 0 {
        return Ok(NeumannInverse { inverse: sum, terms: 1, contraction: q });
    }
    Err(Error::NoConvergence { iterations: max_terms, last: term.gamma_norm(gamma) })
}
