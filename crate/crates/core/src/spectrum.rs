//! Γ-spectrum numerics on truncated lattices.
//!
//! On a finite window the Γ-spectrum of an operator is just its matrix
//! spectrum. The Γ-structure is read off from two diagnostics instead: the
//! Γ-norm of the resolvent `(A - λ)^{-1}` (a pseudospectrum-style landscape)
//! and how that norm behaves as the window grows.

use nalgebra::linalg::Schur;
use nalgebra::{Complex, ComplexField, DMatrix};
use serde::{Deserialize, Serialize};

use crate::decay::DecayFunction;
use crate::error::{Error, Result};
use crate::lattice::LatticeWindow;
use crate::linear::BlockLinearMap;

pub type C64 = Complex<f64>;

/// Condition number above which `A - λ` counts as singular.
pub const SINGULAR_CONDITION: f64 = 1e14;

/// Eigenvalues of the truncated matrix, sorted by real then imaginary part.
pub fn eigenvalues(a: &BlockLinearMap) -> Vec<C64> {
    let mut ev = dense_eigenvalues(&a.to_dense());
    ev.sort_by(|x, y| x.re.total_cmp(&y.re).then(x.im.total_cmp(&y.im)));
    ev
}

/// Eigenvalues of a dense real matrix via real Schur. The QR iteration can
/// stall at machine precision on highly repeated spectra, so the relative
/// deflation tolerance is relaxed step by step with a bounded iteration count.
pub fn dense_eigenvalues(m: &DMatrix<f64>) -> Vec<C64> {
    for eps in [1e-15, 1e-14, 1e-13, 1e-12, 1e-10] {
        if let Some(s) = Schur::try_new(m.clone(), eps, 10_000) {
            return s.complex_eigenvalues().iter().cloned().collect();
        }
    }
    vec![C64::new(f64::NAN, f64::NAN); m.nrows()]
}

/// `(op_norm, γ)` of a dense (possibly complex) matrix on a window.
pub fn dense_norms<T: ComplexField<RealField = f64>>(
    window: &LatticeWindow,
    m: &DMatrix<T>,
    gamma: &DecayFunction,
) -> (f64, f64) {
    let n = window.node_dim;
    let s = window.nodes();
    let mut block = Vec::with_capacity(n * n);
    let mut op: f64 = 0.0;
    let mut g: f64 = 0.0;
    for i in 0..s {
        let mut row_sum = 0.0;
        for j in 0..s {
            block.clear();
            for r in 0..n {
                for c in 0..n {
                    block.push(m[(i * n + r, j * n + c)].clone());
                }
            }
            let bn = window.node_norm.block_norm(&block, n, n, 1);
            if bn == 0.0 {
                continue;
            }
            row_sum += bn;
            g = g.max(bn / gamma.between(window, i, j));
        }
        op = op.max(row_sum);
    }
    (op, g)
}

fn complexify(a: &BlockLinearMap) -> DMatrix<C64> {
    a.to_dense().map(|v| C64::new(v, 0.0))
}

fn one_norm(m: &DMatrix<C64>) -> f64 {
    (0..m.ncols()).map(|c| m.column(c).iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// `(A - λ)^{-1}` by dense LU, refusing ill-conditioned shifts.
pub fn resolvent(a: &BlockLinearMap, lambda: C64) -> Result<DMatrix<C64>> {
    let mut m = complexify(a);
    for d in 0..m.nrows() {
        m[(d, d)] -= lambda;
    }
    let norm = one_norm(&m);
    let inv = m.lu().try_inverse().ok_or(Error::Singular { condition: f64::INFINITY })?;
    let condition = norm * one_norm(&inv);
    if !condition.is_finite() || condition > SINGULAR_CONDITION {
        return Err(Error::Singular { condition });
    }
    Ok(inv)
}

/// `||(A - λ)^{-1}||_Γ`.
pub fn resolvent_gamma_norm(a: &BlockLinearMap, lambda: C64, gamma: &DecayFunction) -> Result<f64> {
    let inv = resolvent(a, lambda)?;
    let (op, g) = dense_norms(a.window(), &inv, gamma);
    Ok(op.max(g))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeClass {
    Resolvent,
    Spectrum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeSample {
    pub re: f64,
    pub im: f64,
    /// Resolvent Γ-norm per window radius; `None` where singular.
    pub norms: Vec<Option<f64>>,
    pub class: ProbeClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GelfandEstimate {
    pub powers: Vec<usize>,
    /// `||A^N||_Γ^{1/N}` for each power.
    pub values: Vec<f64>,
    pub running_inf: Vec<f64>,
    pub estimate: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralReport {
    pub windows: Vec<usize>,
    pub threshold: f64,
    pub samples: Vec<ProbeSample>,
    /// Eigenvalues of the truncated operator on the largest window.
    pub eigenvalues: Vec<(f64, f64)>,
    /// Every eigenvalue on every window is classified as spectrum.
    pub inclusion_holds: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gelfand: Option<GelfandEstimate>,
}

impl SpectralReport {
    pub fn spectrum_candidates(&self) -> impl Iterator<Item = &ProbeSample> {
        self.samples.iter().filter(|s| s.class == ProbeClass::Spectrum)
    }

    /// CSV rows `re, im, norm (largest window), class`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["re", "im", "gamma_norm", "class"])?;
        for s in &self.samples {
            let norm = s.norms.last().cloned().flatten().map(|v| format!("{v:e}")).unwrap_or_else(|| "inf".into());
            let class = match s.class {
                ProbeClass::Resolvent => "resolvent",
                ProbeClass::Spectrum => "spectrum",
            };
            w.write_record([format!("{:e}", s.re), format!("{:e}", s.im), norm, class.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }
}

fn classify(norms: &[Option<f64>], threshold: f64) -> ProbeClass {
    if norms.iter().all(|v| matches!(v, Some(x) if *x <= threshold)) {
        ProbeClass::Resolvent
    } else {
        ProbeClass::Spectrum
    }
}

/// Classifies each grid point by its resolvent Γ-norm across window radii.
///
/// `build` produces the operator on a window of the requested radius. A
/// point is a resolvent candidate when the norm stays at or below
/// `threshold` on every window; otherwise it is a Γ-spectrum candidate.
pub fn gamma_spectrum_probe<B>(
    build: B,
    gamma: &DecayFunction,
    grid: &[C64],
    threshold: f64,
    windows: &[usize],
) -> Result<SpectralReport>
where
    B: Fn(usize) -> Result<BlockLinearMap>,
{
    if windows.is_empty() {
        return Err(Error::PreconditionViolated("probe needs at least one window radius".into()));
    }
    let ops = windows.iter().map(|&l| build(l)).collect::<Result<Vec<_>>>()?;
    let norm_at = |op: &BlockLinearMap, z: C64| match resolvent_gamma_norm(op, z, gamma) {
        Ok(v) => Ok(Some(v)),
        Err(Error::Singular { .. }) => Ok(None),
        Err(e) => Err(e),
    };
    let mut samples = Vec::with_capacity(grid.len());
    for &z in grid {
        let norms = ops.iter().map(|op| norm_at(op, z)).collect::<Result<Vec<_>>>()?;
        let class = classify(&norms, threshold);
        samples.push(ProbeSample { re: z.re, im: z.im, norms, class });
    }
    let mut inclusion_holds = true;
    for op in &ops {
        for mu in eigenvalues(op) {
            let norms = ops.iter().map(|o| norm_at(o, mu)).collect::<Result<Vec<_>>>()?;
            if classify(&norms, threshold) == ProbeClass::Resolvent {
                inclusion_holds = false;
            }
        }
    }
    let eigen = eigenvalues(ops.last().expect("nonempty")).iter().map(|z| (z.re, z.im)).collect();
    Ok(SpectralReport {
        windows: windows.to_vec(),
        threshold,
        samples,
        eigenvalues: eigen,
        inclusion_holds,
        gelfand: None,
    })
}

/// Running infimum of `||A^N||_Γ^{1/N}` over `N = 1, 2, 4, ..` up to `n_max`.
pub fn gelfand_radius(a: &BlockLinearMap, gamma: &DecayFunction, n_max: usize) -> Result<GelfandEstimate> {
    if n_max < 2 {
        return Err(Error::PreconditionViolated(format!("n_max = {n_max} < 2")));
    }
    // `power` holds `A^n e^{-log_scale}`, renormalized after each squaring.
    let mut power = a.clone();
    let mut log_scale = 0.0;
    let mut n = 1usize;
    let mut est = GelfandEstimate { powers: Vec::new(), values: Vec::new(), running_inf: Vec::new(), estimate: f64::INFINITY };
    loop {
        let norm = power.gamma_norm(gamma);
        if !norm.is_finite() {
            return Err(Error::Overflow { power: n });
        }
        let value = if norm == 0.0 { 0.0 } else { ((norm.ln() + log_scale) / n as f64).exp() };
        est.estimate = est.estimate.min(value);
        est.powers.push(n);
        est.values.push(value);
        est.running_inf.push(est.estimate);
        if 2 * n > n_max {
            break;
        }
        if norm > 0.0 {
            power = power.scaled(1.0 / norm);
            log_scale += norm.ln();
        }
        power = power.compose(&power)?;
        log_scale *= 2.0;
        n *= 2;
    }
    Ok(est)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Circle {
    pub center: (f64, f64),
    pub radius: f64,
}

impl Circle {
    pub fn new(center: f64, radius: f64) -> Self {
        Circle { center: (center, 0.0), radius }
    }

    fn point(&self, phi: f64) -> (C64, C64) {
        let e = C64::new(phi.cos(), phi.sin()) * self.radius;
        (C64::new(self.center.0, self.center.1) + e, e)
    }
}

#[derive(Clone, Debug)]
pub struct SpectralProjection {
    pub projection: BlockLinearMap,
    pub nodes: usize,
    /// `||P_{2N} - P_N||_Γ` at the accepted node count.
    pub quadrature_change: f64,
    pub idempotency_defect: f64,
    pub commutator_defect: f64,
    /// Largest imaginary entry discarded when taking the real part.
    pub imaginary_residue: f64,
}

/// Largest node count tried before giving up.
pub const MAX_QUADRATURE_NODES: usize = 1 << 14;

/// Riesz projection `(1/2πi) ∮ (z - A)^{-1} dz` by the trapezoid rule on a
/// circle, doubling the node count until two consecutive rules agree to
/// `1e-8` in Γ-norm. `margin` is the smallest allowed distance between the
/// circle and the truncated spectrum.
pub fn spectral_projection(
    a: &BlockLinearMap,
    gamma: &DecayFunction,
    contour: Circle,
    quad_points: usize,
    margin: f64,
) -> Result<SpectralProjection> {
    let c = C64::new(contour.center.0, contour.center.1);
    let distance = eigenvalues(a)
        .iter()
        .map(|mu| ((mu - c).norm() - contour.radius).abs())
        .fold(f64::INFINITY, f64::min);
    if distance < margin {
        return Err(Error::ContourTooClose { distance, margin });
    }
    let window = a.window();
    let size = window.size();
    let tol = 1e-8;

    // Sum of r e^{iφ} (z - A)^{-1} over the nodes φ_q = 2π (q + offset) / n.
    let node_sum = |n: usize, odd_only: bool| -> Result<DMatrix<C64>> {
        let mut acc = DMatrix::from_element(size, size, C64::new(0.0, 0.0));
        let (count, step, start) = if odd_only { (n / 2, 2, 1) } else { (n, 1, 0) };
        for q in 0..count {
            let phi = 2.0 * std::f64::consts::PI * (start + q * step) as f64 / n as f64;
            let (z, e) = contour.point(phi);
            // (z - A)^{-1} = -(A - z)^{-1}
            acc -= resolvent(a, z)? * e;
        }
        Ok(acc)
    };

    let mut n = quad_points.max(4);
    let mut sum = node_sum(n, false)?;
    let mut p = sum.clone() / C64::new(n as f64, 0.0);
    loop {
        if 2 * n > MAX_QUADRATURE_NODES {
            let (op, g) = dense_norms(window, &p, gamma);
            return Err(Error::QuadratureStalled { nodes: n, last: op.max(g) });
        }
        let n2 = 2 * n;
        sum += node_sum(n2, true)?;
        let p2 = sum.clone() / C64::new(n2 as f64, 0.0);
        let (op, g) = dense_norms(window, &(&p2 - &p), gamma);
        let change = op.max(g);
        p = p2;
        n = n2;
        if change < tol {
            let imaginary_residue = p.iter().map(|z| z.im.abs()).fold(0.0, f64::max);
            let projection = BlockLinearMap::from_dense(window, &p.map(|z| z.re))?;
            let pp = projection.compose(&projection)?;
            let idempotency_defect = pp.sub(&projection).gamma_norm(gamma);
            let commutator_defect = a.compose(&projection)?.sub(&projection.compose(a)?).gamma_norm(gamma);
            return Ok(SpectralProjection {
                projection,
                nodes: n,
                quadrature_change: change,
                idempotency_defect,
                commutator_defect,
                imaginary_residue,
            });
        }
    }
}

/// The banded Toeplitz operator `A = Σ_l a_l S^l` with `(Sx)_i = x_{i+1}`,
/// i.e. `A_ij = a_{j-i}`, on a one-dimensional scalar window.
pub fn band_matrix(coeffs: &[f64], window: &LatticeWindow) -> Result<BlockLinearMap> {
    check_scalar_line(window)?;
    let mut a = BlockLinearMap::zeros(window);
    let s = window.nodes();
    for i in 0..s {
        for (l, &c) in coeffs.iter().enumerate() {
            if i + l < s && c != 0.0 {
                a.insert_block(i, i + l, DMatrix::from_element(1, 1, c));
            }
        }
    }
    Ok(a)
}

fn check_scalar_line(window: &LatticeWindow) -> Result<()> {
    if window.dim != 1 || window.node_dim != 1 {
        return Err(Error::PreconditionViolated("band matrices live on a one-dimensional scalar lattice".into()));
    }
    Ok(())
}

/// Coefficients `b_0, b_1, ..` of the inverse of `Σ a_l S^l`, from
/// `a_0 b_k + a_1 b_{k-1} + .. + a_r b_{k-r} = δ_{k0}` with `b_{<0} = 0`.
pub fn band_inverse_coefficients(coeffs: &[f64], count: usize) -> Result<Vec<f64>> {
    let a0 = *coeffs.first().ok_or(Error::ZeroLeadingCoefficient)?;
    if a0 == 0.0 {
        return Err(Error::ZeroLeadingCoefficient);
    }
    let mut b = Vec::with_capacity(count);
    for k in 0..count {
        let mut acc = if k == 0 { 1.0 } else { 0.0 };
        for (l, &a) in coeffs.iter().enumerate().skip(1) {
            if l <= k {
                acc -= a * b[k - l];
            }
        }
        b.push(acc / a0);
    }
    Ok(b)
}

/// Inverse of [`band_matrix`] on the window: `B_ij = b_{j-i}` for `j >= i`.
pub fn band_matrix_inverse_oracle(coeffs: &[f64], window: &LatticeWindow) -> Result<BlockLinearMap> {
    check_scalar_line(window)?;
    let s = window.nodes();
    let b = band_inverse_coefficients(coeffs, s)?;
    let mut out = BlockLinearMap::zeros(window);
    for i in 0..s {
        for j in i..s {
            if b[j - i] != 0.0 {
                out.insert_block(i, j, DMatrix::from_element(1, 1, b[j - i]));
            }
        }
    }
    Ok(out)
}
