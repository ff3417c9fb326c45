//! Sternberg linearization of attracting fixed points on lattices.
//!
//! Given `F(x) = A x + O(|x|^2)` with spectrum in the unit disc, the
//! conjugacy `R` with `R ∘ F = M R` (`M = A`) is the limit of
//! `S_N = M^{-mN} S_0 ∘ F^{mN}`, where `S_0` is the inverse of a normal-form
//! change of variables for `F^m` through order `r0`. The parameters `m`, `δ`
//! (the size of the working ball) and the contraction factor of
//! `g ↦ M^{-m} g ∘ F^m` are chosen from computed norms.
//!
//! In the resonant case the target is a polynomial `H` and `M^{-m}` is
//! replaced by `H^{-m}`, evaluated with Newton's method.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::decay::DecayFunction;
use crate::error::{Error, Result};
use crate::jets::{jet_compose, jet_invert, jet_iterate, PolyJet};
use crate::lattice::{LatticeVector, LatticeWindow};
use crate::linear::BlockLinearMap;
use crate::multilinear::MultiLinearMap;
use crate::normal_form::{compute_normal_form_with, NormalFormOptions};
use crate::spectrum::{dense_eigenvalues, gelfand_radius};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConjugacyMode {
    /// `α, β` from the spectra of the diagonal (node) blocks of `A`.
    #[default]
    Perturbative,
    /// `α_Γ^{-1} = r_Γ(A^{-1})`, `β_Γ = r_Γ(A)` from Gelfand estimates.
    Spectral,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SternbergConfig {
    pub alpha: f64,
    pub beta: f64,
    pub nu: f64,
    pub r0: usize,
    pub m: usize,
    pub delta: f64,
    pub eps1: f64,
    pub eps2: f64,
    pub eps3: f64,
    pub gamma0: f64,
    pub mode: ConjugacyMode,
    /// Estimated Lipschitz constant of `g ↦ M^{-m} g ∘ F^m` on the rescaled
    /// map; set by [`calibrate_delta`].
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub contraction_factor: Option<f64>,
}

impl SternbergConfig {
    /// `Γ(0)^{-2} (α^{-1} β^{r0})^m`.
    pub fn base_inequality(&self) -> f64 {
        self.gamma0.powi(-2) * (self.beta.powi(self.r0 as i32) / self.alpha).powi(self.m as i32)
    }

    /// Left side of the inequality with slack `ε1, ε2, ε3`.
    pub fn slack_inequality(&self) -> f64 {
        slack_value(self.alpha, self.beta, self.gamma0, self.r0, self.m, self.eps1, self.eps2, self.eps3)
    }

    /// Radius of the ball on which conjugacy evaluation is certified.
    pub fn certified_radius(&self) -> f64 {
        self.delta / 2.0
    }
}

#[allow(clippy::too_many_arguments)]
fn slack_value(alpha: f64, beta: f64, g0: f64, r0: usize, m: usize, e1: f64, e2: f64, e3: f64) -> f64 {
    let mi = m as i32;
    (1.0 / g0) * (1.0 / alpha + e1).powi(mi) * ((1.0 / g0) * ((beta + e1).powi(mi) + e2).powi(r0 as i32) + e3)
}

/// `ν = log α / log β`, snapped to an integer when within rounding of one.
pub fn nu_of(alpha: f64, beta: f64) -> f64 {
    let nu = alpha.ln() / beta.ln();
    if (nu - nu.round()).abs() < 1e-9 {
        nu.round()
    } else {
        nu
    }
}

/// Largest `m` tried before giving up.
pub const MAX_ITERATE_POWER: usize = 500;

/// Smallest `m` with `Γ(0)^{-2}(α^{-1}β^{r0})^m < 1` and slack `ε`'s found
/// by halving from `0.1`. `δ` starts at 1; see [`calibrate_delta`].
pub fn select_m_delta(alpha: f64, beta: f64, gamma0: f64, r0: Option<usize>) -> Result<SternbergConfig> {
    if !(beta < 1.0) {
        return Err(Error::NotContraction { modulus: beta });
    }
    if !(alpha > 0.0) {
        return Err(Error::NotContraction { modulus: alpha });
    }
    if alpha > beta {
        return Err(Error::PreconditionViolated(format!("alpha = {alpha} exceeds beta = {beta}")));
    }
    if !(gamma0 > 0.0 && gamma0 <= 1.0) {
        return Err(Error::PreconditionViolated(format!("Γ(0) = {gamma0} outside (0, 1]")));
    }
    let nu = nu_of(alpha, beta);
    let r0 = r0.unwrap_or(nu.floor() as usize + 1);
    let per_step = beta.powi(r0 as i32) / alpha;
    if !(per_step < 1.0) {
        return Err(Error::PreconditionViolated(format!("alpha^-1 beta^r0 = {per_step} >= 1 for r0 = {r0}")));
    }
    let mut m = 1;
    while gamma0.powi(-2) * per_step.powi(m as i32) >= 1.0 {
        m += 1;
        if m > MAX_ITERATE_POWER {
            return Err(Error::NoConvergence { iterations: m, last: per_step });
        }
    }
    let mut cfg = SternbergConfig {
        alpha,
        beta,
        nu,
        r0,
        m,
        delta: 1.0,
        eps1: 0.1,
        eps2: 0.1,
        eps3: 0.1,
        gamma0,
        mode: ConjugacyMode::Perturbative,
        contraction_factor: None,
    };
    fit_slack(&mut cfg)?;
    Ok(cfg)
}

fn fit_slack(cfg: &mut SternbergConfig) -> Result<()> {
    let mut eps = 0.1;
    for _ in 0..200 {
        cfg.eps1 = eps;
        cfg.eps2 = eps;
        cfg.eps3 = eps;
        if cfg.slack_inequality() < 1.0 {
            return Ok(());
        }
        eps *= 0.5;
    }
    Err(Error::NoConvergence { iterations: 200, last: cfg.slack_inequality() })
}

/// `(α, β)`: extreme moduli of the node-block spectra of `A`.
pub fn node_spectrum_bounds(a: &BlockLinearMap) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi: f64 = 0.0;
    let n = a.window().node_dim;
    for i in 0..a.window().nodes() {
        let block = a.block(i, i).cloned().unwrap_or_else(|| DMatrix::zeros(n, n));
        for z in dense_eigenvalues(&block) {
            lo = lo.min(z.norm());
            hi = hi.max(z.norm());
        }
    }
    (lo, hi)
}

/// Powers used for Gelfand estimates in spectral mode.
pub const GELFAND_POWER: usize = 1024;

/// `(α_Γ, β_Γ)` with `α_Γ^{-1} ≈ r_Γ(A^{-1})` and `β_Γ ≈ r_Γ(A)`.
pub fn gamma_spectrum_bounds(a: &BlockLinearMap, gamma: &DecayFunction) -> Result<(f64, f64)> {
    let beta = gelfand_radius(a, gamma, GELFAND_POWER)?.estimate;
    let inv = gelfand_radius(&a.inverse_dense()?, gamma, GELFAND_POWER)?.estimate;
    Ok((1.0 / inv, beta))
}

/// Picks `α, β` for the mode, then `m` and the slack constants.
pub fn plan_parameters(f: &PolyJet, gamma: &DecayFunction, mode: ConjugacyMode) -> Result<SternbergConfig> {
    let a = f.linear_part()?;
    let (alpha, beta) = match mode {
        ConjugacyMode::Perturbative => node_spectrum_bounds(&a),
        ConjugacyMode::Spectral => gamma_spectrum_bounds(&a, gamma)?,
    };
    let mut cfg = select_m_delta(alpha, beta, gamma.at_origin(), None)?;
    cfg.mode = mode;
    Ok(cfg)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeltaCalibration {
    pub m: usize,
    pub delta: f64,
    pub factor: f64,
    /// `(δ, factor)` for each δ tried.
    pub trace: Vec<(f64, f64)>,
    /// The initial `m` had to be raised because the factor at `δ = 0` was >= 1.
    pub m_raised: bool,
}

struct IterateNorms {
    inv_gamma: f64,
    fwd_gamma: f64,
    fwd_op: f64,
    /// `k ||C_k(F^m)||_Γ` for `k >= 2`.
    weighted: Vec<f64>,
}

fn iterate_norms(f: &PolyJet, a: &BlockLinearMap, a_inv: &BlockLinearMap, m: usize, degree: usize, gamma: &DecayFunction) -> Result<IterateNorms> {
    let fwd = a.power(m)?;
    let inv = a_inv.power(m)?;
    let weighted = if f.coeffs()[1..].iter().all(|c| c.is_zero()) {
        Vec::new()
    } else {
        let fm = jet_iterate(f, m, degree)?;
        fm.coeffs()[1..].iter().enumerate().map(|(idx, c)| (idx + 2) as f64 * c.gamma_norm(gamma)).collect()
    };
    Ok(IterateNorms { inv_gamma: inv.gamma_norm(gamma), fwd_gamma: fwd.gamma_norm(gamma), fwd_op: fwd.op_norm(), weighted })
}

impl IterateNorms {
    /// `||M^{-m}||_Γ [(||M^m||_Γ + η)(||M^m|| + η)^{r0-1} + η]` with
    /// `η = Σ_k k ||C_k(F^m)||_Γ δ^{k-1}` bounding the nonlinear part of
    /// `D F^m_δ` on the unit ball.
    fn factor(&self, delta: f64, r0: usize) -> f64 {
        let eta: f64 = self.weighted.iter().enumerate().map(|(idx, w)| w * delta.powi(idx as i32 + 1)).sum();
        self.inv_gamma * ((self.fwd_gamma + eta) * (self.fwd_op + eta).powi(r0 as i32 - 1) + eta)
    }
}

/// Halves `δ` from 1 until the estimated contraction factor of
/// `g ↦ M^{-m} g ∘ F^m` on the rescaled map drops below one. If even `δ → 0`
/// leaves the factor at or above one, `m` is raised first.
pub fn calibrate_delta(cfg: &SternbergConfig, f: &PolyJet, gamma: &DecayFunction) -> Result<(SternbergConfig, DeltaCalibration)> {
    let a = f.linear_part()?;
    let a_inv = a.inverse_dense()?;
    let degree = cfg.r0.max(2) + 1;
    let mut m = cfg.m;
    let mut norms = iterate_norms(f, &a, &a_inv, m, degree, gamma)?;
    let mut m_raised = false;
    while norms.factor(0.0, cfg.r0) >= 1.0 {
        m += 1;
        m_raised = true;
        if m > MAX_ITERATE_POWER {
            return Err(Error::NoConvergence { iterations: m, last: norms.factor(0.0, cfg.r0) });
        }
        norms = iterate_norms(f, &a, &a_inv, m, degree, gamma)?;
    }
    let mut delta = 1.0;
    let mut trace = Vec::new();
    loop {
        let factor = norms.factor(delta, cfg.r0);
        trace.push((delta, factor));
        if factor < 1.0 {
            let mut out = cfg.clone();
            out.m = m;
            out.delta = delta;
            out.contraction_factor = Some(factor);
            fit_slack(&mut out)?;
            return Ok((out, DeltaCalibration { m, delta, factor, trace, m_raised }));
        }
        delta *= 0.5;
        if delta < 1e-300 {
            return Err(Error::NoConvergence { iterations: trace.len(), last: factor });
        }
    }
}

/// `S_0 = K^{-1}` where `K` puts `F^m` in (linear) normal form through `r0`.
pub fn build_s0(f: &PolyJet, m: usize, r0: usize) -> Result<PolyJet> {
    build_s0_with(f, m, r0, NormalFormOptions::default())
}

pub fn build_s0_with(f: &PolyJet, m: usize, r0: usize, opts: NormalFormOptions) -> Result<PolyJet> {
    if r0 < 2 {
        return jet_invert(&PolyJet::identity(f.window()), 1);
    }
    let fm = jet_iterate(f, m, r0)?;
    let nf = compute_normal_form_with(&fm, r0, f64::INFINITY, opts)?;
    if let Some(&order) = nf.resonances.orders.first() {
        let gap = nf.resonances.min_gaps.get(order - 2).cloned().unwrap_or(0.0);
        return Err(Error::ResonantOrder { order, gap });
    }
    jet_invert(&nf.k, r0)
}

/// Normal form `H` of `F` through `r0` together with `S_0 = K^{-1}`, for the
/// resonant case.
pub fn build_s0_resonant(f: &PolyJet, r0: usize) -> Result<(PolyJet, PolyJet)> {
    let nf = compute_normal_form_with(f, r0, f64::INFINITY, NormalFormOptions::default())?;
    Ok((jet_invert(&nf.k, r0)?, nf.h))
}

/// Right-hand side of the conjugacy: `R ∘ F = M R` or `R ∘ F = H ∘ R`.
#[derive(Clone, Debug)]
pub enum Target {
    Linear(BlockLinearMap),
    Polynomial(PolyJet),
}

impl Target {
    pub fn apply(&self, x: &LatticeVector) -> Result<LatticeVector> {
        match self {
            Target::Linear(m) => m.apply(x),
            Target::Polynomial(h) => h.eval(x),
        }
    }

    fn linear_part(&self) -> Result<BlockLinearMap> {
        match self {
            Target::Linear(m) => Ok(m.clone()),
            Target::Polynomial(h) => h.linear_part(),
        }
    }

    /// Jet of the m-th inverse iterate through order `r`.
    pub fn inverse_jet(&self, m: usize, r: usize) -> Result<PolyJet> {
        match self {
            Target::Linear(mat) => Ok(PolyJet::linear(&mat.inverse_dense()?.power(m)?)),
            Target::Polynomial(h) => jet_invert(&jet_iterate(h, m, r)?, r),
        }
    }
}

/// Dense inverse of the target's linear part, shared by repeated evaluations.
pub struct TargetInverse {
    target: Target,
    inverse: BlockLinearMap,
    newton_tol: f64,
}

impl TargetInverse {
    pub fn new(target: Target) -> Result<Self> {
        let inverse = target.linear_part()?.inverse_dense()?;
        Ok(TargetInverse { target, inverse, newton_tol: 1e-15 })
    }

    pub fn target(&self) -> &Target {
        &self.target
    }

    /// One application of `M^{-1}` or `H^{-1}`.
    pub fn apply(&self, y: &LatticeVector) -> Result<LatticeVector> {
        match &self.target {
            Target::Linear(_) => self.inverse.apply(y),
            Target::Polynomial(h) => {
                let tol = self.newton_tol * y.norm().max(f64::MIN_POSITIVE);
                newton_invert_poly_with(h, &self.inverse, y, tol, 100)
            }
        }
    }
}

/// Solves `H(x) = y` by Newton's method started at `M^{-1} y`.
pub fn newton_invert_poly(h: &PolyJet, y: &LatticeVector, tol: f64, max_iter: usize) -> Result<LatticeVector> {
    let inv = h.linear_part()?.inverse_dense()?;
    newton_invert_poly_with(h, &inv, y, tol, max_iter)
}

fn newton_invert_poly_with(
    h: &PolyJet,
    linear_inverse: &BlockLinearMap,
    y: &LatticeVector,
    tol: f64,
    max_iter: usize,
) -> Result<LatticeVector> {
    let mut x = linear_inverse.apply(y)?;
    let mut defect = h.eval(&x)?.sub(y)?;
    for _ in 0..max_iter {
        if defect.norm() <= tol {
            return Ok(x);
        }
        let jac = h.derivative_at(&x)?.to_dense();
        let rhs = nalgebra::DVector::from_column_slice(defect.values());
        let step = jac.lu().solve(&rhs).ok_or_else(|| Error::NotInvertible("singular Jacobian in Newton step".into()))?;
        let next: Vec<f64> = x.values().iter().zip(step.iter()).map(|(a, b)| a - b).collect();
        x = LatticeVector::from_values(x.window(), next)?;
        defect = h.eval(&x)?.sub(y)?;
    }
    if defect.norm() <= tol {
        return Ok(x);
    }
    Err(Error::NoConvergence { iterations: max_iter, last: defect.norm() })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyPoint {
    pub value: Vec<f64>,
    pub iterations: usize,
    /// `||S_N(x) - S_{N-1}(x)||` for `N = 1..`.
    pub increments: Vec<f64>,
}

/// Evaluation settings for the pointwise limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalSettings {
    pub m: usize,
    pub tol: f64,
    pub max_iterations: usize,
    /// Orbits of `F` must stay in the ball of this radius.
    pub domain: f64,
}

/// `S_N(x) = T^{-mN} S_0(F^{mN} x)` for increasing `N` until two consecutive
/// values differ by less than `tol`.
pub fn conjugacy_eval(
    f: &PolyJet,
    target: &TargetInverse,
    s0: &PolyJet,
    x: &LatticeVector,
    settings: EvalSettings,
) -> Result<ConjugacyPoint> {
    let mut orbit = x.clone();
    let mut prev = s0.eval(x)?;
    let mut increments = Vec::new();
    let mut step = 0;
    for n in 1..=settings.max_iterations {
        for _ in 0..settings.m {
            orbit = f.eval(&orbit)?;
            step += 1;
            let norm = orbit.norm();
            if !(norm <= settings.domain) {
                return Err(Error::DomainEscape { step, norm });
            }
        }
        let mut value = s0.eval(&orbit)?;
        for _ in 0..settings.m * n {
            value = target.apply(&value)?;
        }
        let inc = value.sub(&prev)?.norm();
        increments.push(inc);
        prev = value;
        if inc < settings.tol {
            return Ok(ConjugacyPoint { value: prev.into_values(), iterations: n, increments });
        }
    }
    Err(Error::NoConvergence { iterations: settings.max_iterations, last: *increments.last().unwrap_or(&f64::NAN) })
}

/// `S_n(x)` for a fixed `n`, without a stopping rule.
pub fn conjugacy_iterate(f: &PolyJet, target: &TargetInverse, s0: &PolyJet, m: usize, n: usize, x: &LatticeVector) -> Result<LatticeVector> {
    let mut orbit = x.clone();
    for _ in 0..m * n {
        orbit = f.eval(&orbit)?;
    }
    let mut value = s0.eval(&orbit)?;
    for _ in 0..m * n {
        value = target.apply(&value)?;
    }
    Ok(value)
}

/// Jet of `T^{-m} S_0 ∘ F^m - S_0` through `r0`; zero when `S_0` is a valid
/// starting point for the iteration.
pub fn s0_defect(f: &PolyJet, target: &Target, s0: &PolyJet, m: usize, r0: usize) -> Result<PolyJet> {
    let fm = jet_iterate(f, m, r0)?;
    let inv = target.inverse_jet(m, r0)?;
    jet_compose(&inv, &jet_compose(s0, &fm, r0)?, r0)?.sub(&s0.truncated(r0)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjugacyReport {
    pub samples: usize,
    pub sup_residual: f64,
    pub mean_residual: f64,
    pub max_iterations: usize,
    /// Increments of the slowest sample.
    pub increments: Vec<f64>,
    /// Largest ratio of consecutive increments above the rounding floor.
    pub max_increment_ratio: f64,
    pub contraction_factor: Option<f64>,
    pub geometric: bool,
    /// `max |jet(S_1) - jet(S_0)|` per order `1..=r0`.
    pub jet_agreement: Vec<f64>,
    /// `γ(D^k R(0))` for `k = 2..=r0`.
    pub derivative_gammas: Vec<f64>,
    pub certified_radius: f64,
    pub m: usize,
    pub r0: usize,
    /// `||R(F(x)) - T(R(x))||` per sample.
    pub sample_residuals: Vec<f64>,
    pub sample_iterations: Vec<usize>,
}

/// Everything needed to evaluate the conjugacy of one map.
pub struct Conjugacy {
    pub f: PolyJet,
    pub s0: PolyJet,
    pub target: TargetInverse,
    pub config: SternbergConfig,
    pub settings: EvalSettings,
}

impl Conjugacy {
    pub fn eval(&self, x: &LatticeVector) -> Result<ConjugacyPoint> {
        conjugacy_eval(&self.f, &self.target, &self.s0, x, self.settings)
    }

    /// Jet of `R`, i.e. of `S_1 = T^{-m} S_0 ∘ F^m`, through `r0`.
    pub fn jet(&self) -> Result<PolyJet> {
        let r0 = self.config.r0.max(1);
        let fm = jet_iterate(&self.f, self.config.m, r0)?;
        let inv = self.target.target().inverse_jet(self.config.m, r0)?;
        jet_compose(&inv, &jet_compose(&self.s0, &fm, r0)?, r0)
    }
}

/// Builds `S_0` and the evaluation settings for a linear target `M = A`.
pub fn linearize(f: &PolyJet, gamma: &DecayFunction, mode: ConjugacyMode, tol: f64) -> Result<(Conjugacy, DeltaCalibration)> {
    let planned = plan_parameters(f, gamma, mode)?;
    let (config, calibration) = calibrate_delta(&planned, f, gamma)?;
    let s0 = build_s0(f, config.m, config.r0)?;
    let target = TargetInverse::new(Target::Linear(f.linear_part()?))?;
    let settings = EvalSettings { m: config.m, tol, max_iterations: 200, domain: config.delta };
    Ok((Conjugacy { f: f.clone(), s0, target, config, settings }, calibration))
}

/// Residual and convergence diagnostics of `R ∘ F = T ∘ R` over samples.
pub fn conjugacy_residual(conj: &Conjugacy, samples: &[LatticeVector], gamma: &DecayFunction) -> Result<ConjugacyReport> {
    let mut sup: f64 = 0.0;
    let mut total = 0.0;
    let mut max_iterations = 0;
    let mut increments = Vec::new();
    let mut max_ratio: f64 = 0.0;
    let floor = 1e3 * f64::EPSILON;
    let mut sample_residuals = Vec::with_capacity(samples.len());
    let mut sample_iterations = Vec::with_capacity(samples.len());
    for x in samples {
        let rx = conj.eval(x)?;
        let fx = conj.f.eval(x)?;
        let rfx = conj.eval(&fx)?;
        let rx_vec = LatticeVector::from_values(x.window(), rx.value.clone())?;
        let lhs = LatticeVector::from_values(x.window(), rfx.value)?;
        let res = lhs.sub(&conj.target.target().apply(&rx_vec)?)?.norm();
        sup = sup.max(res);
        total += res;
        sample_residuals.push(res);
        sample_iterations.push(rx.iterations);
        let scale = x.norm().max(f64::MIN_POSITIVE);
        for w in rx.increments.windows(2) {
            if w[1] > floor * scale && w[0] > 0.0 {
                max_ratio = max_ratio.max(w[1] / w[0]);
            }
        }
        if rx.iterations >= max_iterations {
            max_iterations = rx.iterations;
            increments = rx.increments;
        }
    }
    let contraction_factor = conj.config.contraction_factor;
    let geometric = max_ratio < 1.0 && contraction_factor.is_none_or(|q| max_ratio <= q);
    let jet_r = conj.jet()?;
    let jet_agreement = jet_r.sub(&conj.s0.truncated(conj.config.r0.max(1))?)?.coeff_max_abs();
    let derivative_gammas = derivative_gammas(&jet_r, gamma);
    Ok(ConjugacyReport {
        samples: samples.len(),
        sup_residual: sup,
        mean_residual: if samples.is_empty() { 0.0 } else { total / samples.len() as f64 },
        max_iterations,
        increments,
        max_increment_ratio: max_ratio,
        contraction_factor,
        geometric,
        jet_agreement,
        derivative_gammas,
        certified_radius: conj.config.certified_radius(),
        m: conj.config.m,
        r0: conj.config.r0,
        sample_residuals,
        sample_iterations,
    })
}

/// `γ(D^k J(0)) = k! γ(C_k)` for `k = 2..=degree`.
pub fn derivative_gammas(jet: &PolyJet, gamma: &DecayFunction) -> Vec<f64> {
    let mut fact = 1.0;
    let mut out = Vec::new();
    for (idx, c) in jet.coeffs().iter().enumerate() {
        fact *= (idx + 1) as f64;
        if idx >= 1 {
            out.push(fact * c.ml_gamma(gamma));
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PersistenceReport {
    pub radii: Vec<usize>,
    /// `γ(K_2)` of the normal-form change of variables on each window.
    pub k2_gamma: Vec<f64>,
    /// `γ(D^2 R(0))` on each window.
    pub d2r_gamma: Vec<f64>,
    pub k2_relative_change: f64,
    pub d2r_relative_change: f64,
}

/// Compares second-order decay constants of the conjugacy across windows.
pub fn decay_persistence<B>(build: B, radii: &[usize], gamma: &DecayFunction, m: usize) -> Result<PersistenceReport>
where
    B: Fn(usize) -> Result<PolyJet>,
{
    let mut k2 = Vec::new();
    let mut d2r = Vec::new();
    for &l in radii {
        let f = build(l)?;
        let fm = jet_iterate(&f, m, 2)?;
        let nf = compute_normal_form_with(&fm, 2, f64::INFINITY, NormalFormOptions::default())?;
        k2.push(nf.k.coeff(2).map(|c| c.ml_gamma(gamma)).unwrap_or(0.0));
        let s0 = jet_invert(&nf.k, 2)?;
        let inv = PolyJet::linear(&f.linear_part()?.inverse_dense()?.power(m)?);
        let r = jet_compose(&inv, &jet_compose(&s0, &fm, 2)?, 2)?;
        d2r.push(derivative_gammas(&r, gamma)[0]);
    }
    let rel = |v: &[f64]| {
        let lo = v.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = v.iter().cloned().fold(0.0, f64::max);
        if hi == 0.0 {
            0.0
        } else {
            (hi - lo) / hi
        }
    };
    Ok(PersistenceReport {
        radii: radii.to_vec(),
        k2_relative_change: rel(&k2),
        d2r_relative_change: rel(&d2r),
        k2_gamma: k2,
        d2r_gamma: d2r,
    })
}

/// The window-local quadratic lattice map `F_i = λ x_i + c x_i^2` plus a
/// linear coupling `ε Σ_{j≠i} Γ(i-j) x_j`, used as a standard fixture.
pub fn coupled_quadratic(window: &LatticeWindow, lambda: f64, c: f64, coupling: f64, gamma: &DecayFunction) -> Result<PolyJet> {
    let n = window.node_dim;
    let a = BlockLinearMap::uncoupled(window, &(DMatrix::identity(n, n) * lambda))
        .add(&BlockLinearMap::decay_coupling(window, gamma, coupling, &DMatrix::identity(n, n)));
    let mut block = vec![0.0; n * n * n];
    for r in 0..n {
        block[r * n * n + r * n + r] = c;
    }
    PolyJet::with_linear_part(&a, vec![MultiLinearMap::node_local(window, 2, &block)?])
}
