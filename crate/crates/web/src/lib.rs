//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Each export takes plain numbers and returns a JSON string; errors come
//! back as `{"error": ...}` so the page never has to catch exceptions.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use wasm_bindgen::prelude::*;

use lattice_sternberg::decay::{make_power_exp_decay, verify_decay};
use lattice_sternberg::jets::PolyJet;
use lattice_sternberg::lattice::{LatticeVector, LatticeWindow};
use lattice_sternberg::linear::BlockLinearMap;
use lattice_sternberg::multilinear::MultiLinearMap;
use lattice_sternberg::spectrum::{eigenvalues, resolvent_gamma_norm, C64};
use lattice_sternberg::sternberg::{build_s0, conjugacy_eval, linearize, ConjugacyMode, EvalSettings, Target, TargetInverse};

fn to_json<T: Serialize>(result: lattice_sternberg::Result<T>) -> String {
    match result {
        Ok(v) => serde_json::to_string(&v).unwrap_or_else(|e| error_json(&e.to_string())),
        Err(e) => error_json(&e.to_string()),
    }
}

fn error_json(msg: &str) -> String {
    serde_json::json!({ "error": msg }).to_string()
}

#[derive(Serialize)]
pub struct DecayCurve {
    pub r: Vec<f64>,
    pub gamma: Vec<f64>,
    pub amplitude: f64,
    pub certified: bool,
    pub sum_margin: f64,
    pub conv_margin: f64,
}

pub fn decay_curve(alpha: f64, theta: f64, radius: usize) -> lattice_sternberg::Result<DecayCurve> {
    let g = make_power_exp_decay(alpha, theta, 1, radius.max(1))?;
    let rep = verify_decay(&g, radius.max(1));
    let r: Vec<f64> = (0..=radius).map(|k| k as f64).collect();
    let gamma = r.iter().map(|&k| g.radial(k)).collect();
    Ok(DecayCurve { r, gamma, amplitude: g.at_origin(), certified: rep.passed(), sum_margin: rep.sum_margin, conv_margin: rep.conv_margin })
}

#[derive(Serialize)]
pub struct Landscape {
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// `log10 ||(A - λ)^{-1}||_Γ`, row-major with `im` as the row index;
    /// `null` where `A - λ` is numerically singular.
    pub log_norm: Vec<Option<f64>>,
    pub eigenvalues: Vec<(f64, f64)>,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n < 2 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Resolvent landscape of the two-component lattice map
/// `diag(λ1, λ2)` per node plus a `Γ`-profile coupling.
#[allow(clippy::too_many_arguments)]
pub fn landscape(
    lambda1: f64,
    lambda2: f64,
    coupling: f64,
    radius: usize,
    re_range: (f64, f64),
    im_range: (f64, f64),
    nx: usize,
    ny: usize,
) -> lattice_sternberg::Result<Landscape> {
    let g = make_power_exp_decay(2.0, 1.0, 1, 50)?;
    let w = LatticeWindow::new(1, radius, 2)?;
    let a = BlockLinearMap::uncoupled(&w, &DMatrix::from_diagonal(&DVector::from_vec(vec![lambda1, lambda2])))
        .add(&BlockLinearMap::decay_coupling(&w, &g, coupling, &DMatrix::identity(2, 2)));
    let re = linspace(re_range.0, re_range.1, nx);
    let im = linspace(im_range.0, im_range.1, ny);
    let mut log_norm = Vec::with_capacity(nx * ny);
    for &y in &im {
        for &x in &re {
            log_norm.push(resolvent_gamma_norm(&a, C64::new(x, y), &g).ok().map(f64::log10));
        }
    }
    let eigenvalues = eigenvalues(&a).iter().map(|z| (z.re, z.im)).collect();
    Ok(Landscape { re, im, log_norm, eigenvalues })
}

#[derive(Serialize)]
pub struct ConjugacyCurve {
    pub x: Vec<f64>,
    /// `R(x)`, or `null` where the orbit left the evaluation domain.
    pub r: Vec<Option<f64>>,
    /// The quadratic jet `x + K x^2` of `S_0`.
    pub jet: Vec<f64>,
    pub s0_quadratic: f64,
    pub certified_radius: f64,
}

/// `R(x)` for `F(x) = λx + c x^2` on `[-x_max, x_max]`.
pub fn conjugacy_curve(lambda: f64, c: f64, x_max: f64, points: usize) -> lattice_sternberg::Result<ConjugacyCurve> {
    let g = make_power_exp_decay(2.0, 1.0, 1, 50)?;
    let w = LatticeWindow::new(1, 0, 1)?;
    let a = BlockLinearMap::uncoupled(&w, &DMatrix::from_element(1, 1, lambda));
    let f = PolyJet::with_linear_part(&a, vec![MultiLinearMap::node_local(&w, 2, &[c])?])?;
    let (conj, _) = linearize(&f, &g, ConjugacyMode::Perturbative, 1e-15)?;
    // Plot beyond the certified ball with m = 1; points whose orbit grows
    // past the window are dropped.
    let s0 = build_s0(&f, 1, conj.config.r0)?;
    let target = TargetInverse::new(Target::Linear(a))?;
    let settings = EvalSettings { m: 1, tol: 1e-14, max_iterations: 400, domain: 2.0 * x_max.abs().max(1e-12) };
    let k2 = s0.coeff(2).map(|m| m.data()[0]).unwrap_or(0.0);
    let x = linspace(-x_max, x_max, points.max(2));
    let mut r = Vec::with_capacity(x.len());
    for &v in &x {
        let p = LatticeVector::from_values(&w, vec![v])?;
        r.push(conjugacy_eval(&f, &target, &s0, &p, settings).ok().map(|p| p.value[0]));
    }
    let jet = x.iter().map(|&v| v + k2 * v * v).collect();
    Ok(ConjugacyCurve { x, r, jet, s0_quadratic: k2, certified_radius: conj.config.certified_radius() })
}

#[wasm_bindgen]
pub fn decay_profile(alpha: f64, theta: f64, radius: usize) -> String {
    to_json(decay_curve(alpha, theta, radius))
}

#[wasm_bindgen]
#[allow(clippy::too_many_arguments)]
pub fn resolvent_landscape(
    lambda1: f64,
    lambda2: f64,
    coupling: f64,
    radius: usize,
    re_min: f64,
    re_max: f64,
    im_min: f64,
    im_max: f64,
    nx: usize,
    ny: usize,
) -> String {
    to_json(landscape(lambda1, lambda2, coupling, radius, (re_min, re_max), (im_min, im_max), nx, ny))
}

#[wasm_bindgen]
pub fn scalar_conjugacy(lambda: f64, c: f64, x_max: f64, points: usize) -> String {
    to_json(conjugacy_curve(lambda, c, x_max, points))
}
