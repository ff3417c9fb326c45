//! Polynomial normal forms at an attracting (or any hyperbolic) fixed point.
//!
//! Order by order, find `K = id + Σ K_k` and `H = A + Σ_{k∈J} H_k` with
//! `F ∘ K - K ∘ H = o(|x|^r)`. At order `k` the unknowns satisfy
//! `A K_k + G¹_k = H_k + K_k A^{⊗k} + G²_k`, where `G¹_k, G²_k` only involve
//! lower orders. Writing `G_k = G¹_k - G²_k`:
//!
//! * non-resonant `k`: `H_k = 0` and `(S_{A^{-1},A} - id) K_k = A^{-1} G_k`;
//! * resonant `k`: `H_k = G_k`, `K_k = 0`.

use serde::{Deserialize, Serialize};

use crate::decay::DecayFunction;
use crate::error::{Error, Result};
use crate::jets::{composed_order, jet_compose, PolyJet};
use crate::lattice::LatticeVector;
use crate::multilinear::MultiLinearMap;
use crate::spectrum::eigenvalues;
use crate::sylvester::{scan_resonances, solve_homological, HomologicalMethod, ResonanceSet, RESONANCE_TOL};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalFormOptions {
    pub method: HomologicalMethod,
    pub resonance_tol: f64,
}

impl Default for NormalFormOptions {
    fn default() -> Self {
        NormalFormOptions { method: HomologicalMethod::Direct, resonance_tol: RESONANCE_TOL }
    }
}

#[derive(Clone, Debug)]
pub struct NormalFormResult {
    pub k: PolyJet,
    pub h: PolyJet,
    pub resonances: ResonanceSet,
    /// Coefficients of `F ∘ K - K ∘ H` through order `r`.
    pub residual_jet: PolyJet,
    /// `G_k` for `k = 2..r`, as assembled before solving.
    pub g: Vec<MultiLinearMap>,
    /// Residual of each homological solve (zero for resonant orders).
    pub solve_residuals: Vec<f64>,
    pub tol: f64,
}

impl NormalFormResult {
    /// Largest coefficient of the residual jet.
    pub fn max_residual(&self) -> f64 {
        self.residual_jet.coeff_max_abs().into_iter().fold(0.0, f64::max)
    }

    pub fn within_tolerance(&self) -> bool {
        self.max_residual() <= self.tol
    }

    pub fn k_gammas(&self, gamma: &DecayFunction) -> Vec<f64> {
        self.k.coeff_gammas(gamma)
    }

    pub fn h_gammas(&self, gamma: &DecayFunction) -> Vec<f64> {
        self.h.coeff_gammas(gamma)
    }
}

pub fn compute_normal_form(f: &PolyJet, r: usize, tol: f64) -> Result<NormalFormResult> {
    compute_normal_form_with(f, r, tol, NormalFormOptions::default())
}

/// Normal form through order `r`; `tol` is the accepted size of the
/// residual jet coefficients, see [`NormalFormResult::within_tolerance`].
pub fn compute_normal_form_with(f: &PolyJet, r: usize, tol: f64, opts: NormalFormOptions) -> Result<NormalFormResult> {
    if r < 2 {
        return Err(Error::PreconditionViolated(format!("normal form order {r} < 2")));
    }
    let window = f.window().clone();
    let a = f.linear_part()?;
    let a_inv = a.inverse_dense()?;
    let resonances = scan_resonances(&eigenvalues(&a), r, opts.resonance_tol);
    let f = f.truncated(r)?;

    let mut k_jet = PolyJet::identity(&window);
    let mut h_jet = PolyJet::linear(&a);
    let mut gs = Vec::new();
    let mut solve_residuals = Vec::new();
    for order in 2..=r {
        k_jet.set_coeff(order, MultiLinearMap::zeros(&window, order)?)?;
        h_jet.set_coeff(order, MultiLinearMap::zeros(&window, order)?)?;
        let g = composed_order(&f, &k_jet, order, false)?.sub(&composed_order(&k_jet, &h_jet, order, false)?)?;
        if resonances.contains(order) {
            h_jet.set_coeff(order, g.clone())?;
            solve_residuals.push(0.0);
        } else {
            let rhs = g.left_linear(&a_inv)?;
            let sol = solve_homological(&a, &rhs, opts.method, opts.resonance_tol)?;
            k_jet.set_coeff(order, sol.k)?;
            solve_residuals.push(sol.residual);
        }
        gs.push(g);
    }
    let residual_jet = jet_compose(&f, &k_jet, r)?.sub(&jet_compose(&k_jet, &h_jet, r)?)?;
    Ok(NormalFormResult { k: k_jet, h: h_jet, resonances, residual_jet, g: gs, solve_residuals, tol })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScaleRatio {
    pub scale: f64,
    /// `max_x |F(K(x)) - K(H(x))| / |x|^r` over samples rescaled to norm `scale`.
    pub max_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NfResidualReport {
    pub order: usize,
    /// Largest residual coefficient at orders `1..=r`.
    pub jet_residuals: Vec<f64>,
    pub sampled: Vec<ScaleRatio>,
    /// The sampled ratios do not increase as the scale shrinks.
    pub ratios_nonincreasing: bool,
}

/// Jet-level and sampled residual of the conjugacy `F ∘ K = K ∘ H`.
pub fn nf_residual(
    f: &PolyJet,
    k: &PolyJet,
    h: &PolyJet,
    r: usize,
    samples: &[LatticeVector],
    scales: &[f64],
) -> Result<NfResidualReport> {
    let jet = jet_compose(f, k, r)?.sub(&jet_compose(k, h, r)?)?;
    let mut sampled = Vec::new();
    for &scale in scales {
        let mut worst: f64 = 0.0;
        for x in samples {
            let norm = x.norm();
            if norm == 0.0 {
                continue;
            }
            let y = x.scaled(scale / norm);
            let lhs = f.eval(&k.eval(&y)?)?;
            let rhs = k.eval(&h.eval(&y)?)?;
            worst = worst.max(lhs.sub(&rhs)?.norm() / scale.powi(r as i32));
        }
        sampled.push(ScaleRatio { scale, max_ratio: worst });
    }
    let mut by_scale = sampled.clone();
    by_scale.sort_by(|a, b| b.scale.total_cmp(&a.scale));
    let ratios_nonincreasing = by_scale.windows(2).all(|w| w[1].max_ratio <= w[0].max_ratio * (1.0 + 1e-6) + 1e-300);
    Ok(NfResidualReport { order: r, jet_residuals: jet.coeff_max_abs(), sampled, ratios_nonincreasing })
}
