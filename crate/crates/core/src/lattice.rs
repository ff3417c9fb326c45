//! Truncated lattice windows, node norms and lattice vectors.
//!
//! A window is the box `{-L, ..., L}^m` of lattice sites, each carrying a copy
//! of `R^n`. Sites are linearized in row-major order over the multi-index, so
//! the global coordinate of component `c` at node `i` is `i * n + c`.
//! Indices outside the window are absent (zero padding, no wraparound).

use nalgebra::{ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Norm used on each node copy of `R^n`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeNorm {
    /// `max_c |x_c|`, the default.
    #[default]
    Sup,
    /// `sum_c |x_c|`.
    One,
    /// `sqrt(sum_c x_c^2)`.
    Euclidean,
}

impl NodeNorm {
    pub fn vector_norm(self, v: &[f64]) -> f64 {
        match self {
            NodeNorm::Sup => v.iter().fold(0.0, |m, x| m.max(x.abs())),
            NodeNorm::One => v.iter().map(|x| x.abs()).sum(),
            NodeNorm::Euclidean => v.iter().map(|x| x * x).sum::<f64>().sqrt(),
        }
    }

    /// Norm of a (possibly complex) `n x n^k` block, read as a k-linear map
    /// `(R^n)^k -> R^n`.
    ///
    /// For `k = 1` this is the induced operator norm. For `k > 1` it is the
    /// sum rule (Sup, One) or the Frobenius norm (Euclidean), both upper
    /// bounds of the induced multilinear norm that stay submultiplicative
    /// under composition.
    pub fn block_norm<T: ComplexField<RealField = f64>>(
        self,
        block: &[T],
        rows: usize,
        cols: usize,
        arity: usize,
    ) -> f64 {
        debug_assert_eq!(block.len(), rows * cols);
        match self {
            NodeNorm::Sup => (0..rows)
                .map(|r| block[r * cols..(r + 1) * cols].iter().map(|x| x.clone().modulus()).sum::<f64>())
                .fold(0.0, f64::max),
            NodeNorm::One => (0..cols)
                .map(|c| (0..rows).map(|r| block[r * cols + c].clone().modulus()).sum::<f64>())
                .fold(0.0, f64::max),
            NodeNorm::Euclidean => {
                if arity == 1 && rows > 1 {
                    let m = DMatrix::from_row_slice(rows, cols, block);
                    m.singular_values().iter().cloned().fold(0.0, f64::max)
                } else {
                    block.iter().map(|x| x.clone().modulus_squared()).sum::<f64>().sqrt()
                }
            }
        }
    }
}

/// The truncated index set `{-L..L}^m` with `n`-dimensional nodes.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct LatticeWindow {
    pub dim: usize,
    pub radius: usize,
    pub node_dim: usize,
    #[serde(default)]
    pub node_norm: NodeNorm,
}

impl LatticeWindow {
    pub fn new(dim: usize, radius: usize, node_dim: usize) -> Result<Self> {
        if dim == 0 || node_dim == 0 {
            return Err(Error::PreconditionViolated(
                "lattice dimension and node dimension must be positive".into(),
            ));
        }
        Ok(LatticeWindow { dim, radius, node_dim, node_norm: NodeNorm::Sup })
    }

    pub fn with_node_norm(mut self, norm: NodeNorm) -> Self {
        self.node_norm = norm;
        self
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    /// Number of nodes `s = (2L+1)^m`.
    pub fn nodes(&self) -> usize {
        self.side().pow(self.dim as u32)
    }

    /// Total real dimension `s * n`.
    pub fn size(&self) -> usize {
        self.nodes() * self.node_dim
    }

    pub fn multi_index(&self, node: usize) -> Vec<i64> {
        let side = self.side();
        let mut out = vec![0i64; self.dim];
        let mut rest = node;
        for d in (0..self.dim).rev() {
            out[d] = (rest % side) as i64 - self.radius as i64;
            rest /= side;
        }
        out
    }

    pub fn node_of(&self, index: &[i64]) -> Option<usize> {
        if index.len() != self.dim {
            return None;
        }
        let l = self.radius as i64;
        let mut node = 0usize;
        for &c in index {
            if c < -l || c > l {
                return None;
            }
            node = node * self.side() + (c + l) as usize;
        }
        Some(node)
    }

    /// Lattice offset `i - j` between two nodes.
    pub fn offset(&self, i: usize, j: usize) -> Vec<i64> {
        self.multi_index(i)
            .into_iter()
            .zip(self.multi_index(j))
            .map(|(a, b)| a - b)
            .collect()
    }

    /// The node with multi-index zero.
    pub fn center(&self) -> usize {
        self.node_of(&vec![0; self.dim]).expect("origin is always in the window")
    }

    pub fn same_space(&self, other: &LatticeWindow) -> bool {
        self == other
    }

    pub fn ensure_same(&self, other: &LatticeWindow) -> Result<()> {
        if self.same_space(other) {
            Ok(())
        } else {
            Err(Error::WindowMismatch(format!(
                "(m={}, L={}, n={}) vs (m={}, L={}, n={})",
                self.dim, self.radius, self.node_dim, other.dim, other.radius, other.node_dim
            )))
        }
    }

    /// Same lattice with a different radius.
    pub fn resized(&self, radius: usize) -> LatticeWindow {
        LatticeWindow { radius, ..self.clone() }
    }
}

/// A bounded sequence of node vectors, restricted to a window.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeVector {
    window: LatticeWindow,
    values: Vec<f64>,
}

impl LatticeVector {
    pub fn zeros(window: &LatticeWindow) -> Self {
        LatticeVector { window: window.clone(), values: vec![0.0; window.size()] }
    }

    pub fn from_values(window: &LatticeWindow, values: Vec<f64>) -> Result<Self> {
        if values.len() != window.size() {
            return Err(Error::WindowMismatch(format!(
                "vector of length {} for window of size {}",
                values.len(),
                window.size()
            )));
        }
        Ok(LatticeVector { window: window.clone(), values })
    }

    /// `emb_i(u)`: the vector that is `u` at node `i` and zero elsewhere.
    pub fn embed(window: &LatticeWindow, node: usize, u: &[f64]) -> Result<Self> {
        if u.len() != window.node_dim || node >= window.nodes() {
            return Err(Error::PreconditionViolated(format!(
                "cannot embed a length-{} vector at node {node}",
                u.len()
            )));
        }
        let mut v = Self::zeros(window);
        v.node_mut(node).copy_from_slice(u);
        Ok(v)
    }

    /// `proj_i(x)`.
    pub fn project(&self, node: usize) -> &[f64] {
        let n = self.window.node_dim;
        &self.values[node * n..(node + 1) * n]
    }

    pub fn node_mut(&mut self, node: usize) -> &mut [f64] {
        let n = self.window.node_dim;
        &mut self.values[node * n..(node + 1) * n]
    }

    pub fn window(&self) -> &LatticeWindow {
        &self.window
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// `sup_i ||x_i||` with the window's node norm.
    pub fn norm(&self) -> f64 {
        let n = self.window.node_dim;
        self.values
            .chunks(n)
            .map(|c| self.window.node_norm.vector_norm(c))
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        LatticeVector {
            window: self.window.clone(),
            values: self.values.iter().map(|x| x * factor).collect(),
        }
    }

    pub fn sub(&self, other: &LatticeVector) -> Result<Self> {
        self.window.ensure_same(&other.window)?;
        Ok(LatticeVector {
            window: self.window.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    pub fn add(&self, other: &LatticeVector) -> Result<Self> {
        self.window.ensure_same(&other.window)?;
        Ok(LatticeVector {
            window: self.window.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect(),
        })
    }
}
