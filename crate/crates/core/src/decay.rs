//! Decay functions on `Z^m`.
//!
//! A decay function `Γ` is positive, has total mass at most one, and is
//! sub-multiplicative under convolution:
//! `Σ_k Γ(i-k) Γ(k-j) <= Γ(i-j)`. The power-exponential family
//! `Γ(0) = a`, `Γ(j) = a |j|^{-α} e^{-θ|j|}` satisfies both properties for
//! `α > m`, `θ >= 0` and a small enough amplitude `a`; [`make_power_exp_decay`]
//! finds the largest such `a` that can be certified on a finite window.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::LatticeWindow;

/// Norm used for `|j|` on lattice offsets.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IndexNorm {
    #[default]
    Euclidean,
    Sup,
}

impl IndexNorm {
    pub fn eval(self, offset: &[i64]) -> f64 {
        match self {
            IndexNorm::Euclidean => offset.iter().map(|&c| (c * c) as f64).sum::<f64>().sqrt(),
            IndexNorm::Sup => offset.iter().map(|c| c.unsigned_abs()).max().unwrap_or(0) as f64,
        }
    }
}

/// Anything that can be checked against the decay-function axioms.
///
/// Implementors must be radially nonincreasing in `|j|_∞`, i.e.
/// `Γ(j) <= radial_bound(|j|_∞)` with `radial_bound` nonincreasing, so that
/// the tail and truncation bounds stay sound.
pub trait DecayProfile {
    fn dim(&self) -> usize;
    fn eval(&self, offset: &[i64]) -> f64;
    /// Upper bound for `Γ(j)` over all `j` with `|j|_∞ >= r`.
    fn radial_bound(&self, r: usize) -> f64;
    /// Upper bound for `Σ_{|k|_∞ > L} Γ(k)`; nonincreasing in `L`.
    fn tail_bound(&self, radius: usize) -> f64;
}

/// Certified power-exponential decay function.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFunction {
    pub dim: usize,
    pub alpha: f64,
    pub theta: f64,
    pub amplitude: f64,
    #[serde(default)]
    pub index_norm: IndexNorm,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub certificate: Option<VerificationReport>,
}

/// Number of shells summed exactly before switching to the integral bound.
const EXACT_TAIL_SHELLS: usize = 32;

impl DecayFunction {
    /// Unverified profile with a given amplitude. Use [`make_power_exp_decay`]
    /// or [`verify_decay`] to obtain a certificate.
    pub fn with_amplitude(dim: usize, alpha: f64, theta: f64, amplitude: f64) -> Result<Self> {
        if alpha <= dim as f64 {
            return Err(Error::NotSummable { alpha, dim });
        }
        if theta < 0.0 || !(amplitude > 0.0) {
            return Err(Error::PreconditionViolated(format!(
                "need theta >= 0 and a > 0 (theta = {theta}, a = {amplitude})"
            )));
        }
        Ok(DecayFunction {
            dim,
            alpha,
            theta,
            amplitude,
            index_norm: IndexNorm::Euclidean,
            certificate: None,
        })
    }

    pub fn with_index_norm(mut self, norm: IndexNorm) -> Self {
        self.index_norm = norm;
        self.certificate = None;
        self
    }

    /// `Γ(0)`.
    pub fn at_origin(&self) -> f64 {
        self.amplitude
    }

    /// Γ as a function of the scalar distance `|j|`.
    pub fn radial(&self, r: f64) -> f64 {
        if r == 0.0 {
            self.amplitude
        } else {
            self.amplitude * r.powf(-self.alpha) * (-self.theta * r).exp()
        }
    }

    /// `Γ(i - j)` for two nodes of a window.
    pub fn between(&self, window: &LatticeWindow, i: usize, j: usize) -> f64 {
        self.eval(&window.offset(i, j))
    }

    /// Table of `Γ(i - j)` for all node pairs, row-major `s x s`.
    pub fn pair_table(&self, window: &LatticeWindow) -> Vec<f64> {
        let s = window.nodes();
        let idx: Vec<Vec<i64>> = (0..s).map(|i| window.multi_index(i)).collect();
        let mut out = vec![0.0; s * s];
        let mut off = vec![0i64; window.dim];
        for i in 0..s {
            for j in 0..s {
                for d in 0..window.dim {
                    off[d] = idx[i][d] - idx[j][d];
                }
                out[i * s + j] = self.eval(&off);
            }
        }
        out
    }

    fn shell_sum(&self, r: usize) -> f64 {
        let mut total = 0.0;
        for_each_in_box(self.dim, r, |k| {
            if k.iter().any(|c| c.unsigned_abs() as usize == r) {
                total += self.eval(k);
            }
        });
        total
    }

    /// `∫_{x0}^∞ x^{m-1-α} e^{-θx} dx`, bounded above.
    fn tail_integral(&self, x0: f64) -> f64 {
        let p = self.dim as f64 - 1.0 - self.alpha;
        let power_only = x0.powf(p + 1.0) / (-p - 1.0);
        if self.theta > 0.0 {
            let exp_only = x0.powf(p) * (-self.theta * x0).exp() / self.theta;
            power_only.min(exp_only)
        } else {
            power_only
        }
    }
}

impl DecayProfile for DecayFunction {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, offset: &[i64]) -> f64 {
        self.radial(self.index_norm.eval(offset))
    }

    fn radial_bound(&self, r: usize) -> f64 {
        // |j|_2 >= |j|_∞ and the profile is nonincreasing in the distance.
        self.radial(r as f64)
    }

    fn tail_bound(&self, radius: usize) -> f64 {
        let exact: f64 = (radius + 1..=radius + EXACT_TAIL_SHELLS).map(|r| self.shell_sum(r)).sum();
        // A shell |k|_∞ = r has at most 2m(2r+1)^{m-1} <= 2m 3^{m-1} r^{m-1} points.
        let m = self.dim as f64;
        let shell_const = 2.0 * m * 3f64.powf(m - 1.0) * self.amplitude;
        exact + shell_const * self.tail_integral((radius + EXACT_TAIL_SHELLS) as f64)
    }
}

/// `Γ(j) = C e^{-θ|j|}`: summable but never a decay function.
#[derive(Clone, Debug)]
pub struct ExponentialProfile {
    pub dim: usize,
    pub scale: f64,
    pub theta: f64,
    pub index_norm: IndexNorm,
}

impl ExponentialProfile {
    /// Chooses `C` so that the sum over all of `Z` equals `target` (m = 1).
    pub fn normalized_1d(theta: f64, target: f64) -> Self {
        let q = (-theta).exp();
        let total_unit = (1.0 + q) / (1.0 - q);
        ExponentialProfile { dim: 1, scale: target / total_unit, theta, index_norm: IndexNorm::Euclidean }
    }
}

impl DecayProfile for ExponentialProfile {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, offset: &[i64]) -> f64 {
        self.scale * (-self.theta * self.index_norm.eval(offset)).exp()
    }

    fn radial_bound(&self, r: usize) -> f64 {
        self.scale * (-self.theta * r as f64).exp()
    }

    fn tail_bound(&self, radius: usize) -> f64 {
        // Σ_{r>L} 2m(2r+1)^{m-1} C q^r, summed until the terms are negligible.
        let m = self.dim as f64;
        let q = (-self.theta).exp();
        let mut total = 0.0;
        let mut r = radius + 1;
        loop {
            let term = 2.0 * m * (2.0 * r as f64 + 1.0).powf(m - 1.0) * self.scale * q.powi(r as i32);
            total += term;
            if term < total * 1e-18 || r > radius + 100_000 {
                break;
            }
            r += 1;
        }
        total * (1.0 + 1e-12)
    }
}

/// Another profile multiplied by a positive constant.
#[derive(Clone, Debug)]
pub struct ScaledProfile<P> {
    pub inner: P,
    pub factor: f64,
}

impl<P: DecayProfile> DecayProfile for ScaledProfile<P> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn eval(&self, offset: &[i64]) -> f64 {
        self.factor * self.inner.eval(offset)
    }
    fn radial_bound(&self, r: usize) -> f64 {
        self.factor * self.inner.radial_bound(r)
    }
    fn tail_bound(&self, radius: usize) -> f64 {
        self.factor * self.inner.tail_bound(radius)
    }
}

/// Outcome of checking both decay-function properties on a window.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub alpha: Option<f64>,
    pub theta: Option<f64>,
    pub a: Option<f64>,
    pub window_l: usize,
    /// `1 - (Σ_window Γ + tail)`; nonnegative iff summability holds.
    pub sum_margin: f64,
    /// `min_d 1 - conv(d)/Γ(d)` over window differences `d`.
    pub conv_margin: f64,
    /// A window pair `(i, j)` realizing the worst convolution margin.
    pub worst_pair: (Vec<i64>, Vec<i64>),
    pub positive: bool,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.positive && self.sum_margin >= 0.0 && self.conv_margin >= 0.0
    }
}

fn for_each_in_box(dim: usize, radius: usize, mut f: impl FnMut(&[i64])) {
    let r = radius as i64;
    let mut k = vec![-r; dim];
    loop {
        f(&k);
        let mut d = dim;
        loop {
            if d == 0 {
                return;
            }
            d -= 1;
            if k[d] < r {
                k[d] += 1;
                break;
            }
            k[d] = -r;
        }
    }
}

/// Values of a profile over a box, stored densely for fast lookups.
struct BoxTable {
    dim: usize,
    radius: i64,
    side: usize,
    values: Vec<f64>,
}

impl BoxTable {
    fn new<P: DecayProfile + ?Sized>(profile: &P, radius: usize) -> Self {
        let dim = profile.dim();
        let mut values = Vec::with_capacity((2 * radius + 1).pow(dim as u32));
        for_each_in_box(dim, radius, |k| values.push(profile.eval(k)));
        BoxTable { dim, radius: radius as i64, side: 2 * radius + 1, values }
    }

    fn get(&self, k: &[i64]) -> f64 {
        let mut idx = 0usize;
        for &c in &k[..self.dim] {
            idx = idx * self.side + (c + self.radius) as usize;
        }
        self.values[idx]
    }
}

/// Convolution data for a profile on a window, independent of scaling.
struct ConvolutionSurvey {
    window_sum: f64,
    tail: f64,
    /// (difference d, Γ(d), Σ_k Γ(d-k)Γ(k) plus truncation remainder)
    entries: Vec<(Vec<i64>, f64, f64)>,
}

fn survey<P: DecayProfile + ?Sized>(profile: &P, window_l: usize) -> ConvolutionSurvey {
    let dim = profile.dim();
    let mut window_sum = 0.0;
    for_each_in_box(dim, window_l, |k| window_sum += profile.eval(k));
    let tail = profile.tail_bound(window_l);

    // Differences of window pairs range over the box of radius 2L. The full
    // lattice sum over k dominates the window-restricted one; it is taken over
    // the box of radius R = 3L plus a bound for |k|_∞ > R, where
    // |d - k|_∞ >= R + 1 - 2L.
    let diff_r = 2 * window_l;
    let sum_r = 3 * window_l;
    let table = BoxTable::new(profile, diff_r + sum_r);
    let remainder = profile.radial_bound(sum_r + 1 - diff_r) * profile.tail_bound(sum_r);
    let mut entries = Vec::new();
    let mut dk = vec![0i64; dim];
    for_each_in_box(dim, diff_r, |d| {
        // Γ is even, so d and -d give the same sum; keep the lexicographically
        // nonnegative representative.
        if d.iter().find(|&&c| c != 0).is_some_and(|&c| c < 0) {
            return;
        }
        let mut conv = 0.0;
        for_each_in_box(dim, sum_r, |k| {
            for t in 0..dim {
                dk[t] = d[t] - k[t];
            }
            conv += table.get(&dk) * table.get(k);
        });
        entries.push((d.to_vec(), table.get(d), conv + remainder));
    });
    ConvolutionSurvey { window_sum, tail, entries }
}

fn pair_for_difference(d: &[i64]) -> (Vec<i64>, Vec<i64>) {
    // i = ceil(d/2), j = i - d both lie in {-L..L} when |d|_∞ <= 2L.
    let i: Vec<i64> = d.iter().map(|&c| (c + c.rem_euclid(2)) / 2).collect();
    let j: Vec<i64> = i.iter().zip(d).map(|(a, b)| a - b).collect();
    (i, j)
}

fn report_from_survey(s: &ConvolutionSurvey, window_l: usize, scale: f64) -> VerificationReport {
    let sum_margin = 1.0 - scale * (s.window_sum + s.tail);
    let mut conv_margin = f64::INFINITY;
    let mut worst = vec![0; s.entries.first().map_or(1, |e| e.0.len())];
    let mut positive = true;
    for (d, g, conv) in &s.entries {
        let g = scale * g;
        if !(g > 0.0) {
            positive = false;
            continue;
        }
        let margin = 1.0 - scale * scale * conv / g;
        if margin < conv_margin {
            conv_margin = margin;
            worst = d.clone();
        }
    }
    VerificationReport {
        alpha: None,
        theta: None,
        a: None,
        window_l,
        sum_margin,
        conv_margin,
        worst_pair: pair_for_difference(&worst),
        positive,
    }
}

/// Checks both decay-function properties of `profile` on the window of
/// radius `window_l`. Failures are reported through the margins, never raised.
pub fn verify_decay<P: DecayProfile + ?Sized>(profile: &P, window_l: usize) -> VerificationReport {
    report_from_survey(&survey(profile, window_l), window_l, 1.0)
}

/// Largest certifiable amplitude for the power-exponential family.
pub fn make_power_exp_decay(alpha: f64, theta: f64, dim: usize, verify_window_l: usize) -> Result<DecayFunction> {
    make_power_exp_decay_with_norm(alpha, theta, dim, verify_window_l, IndexNorm::Euclidean)
}

pub fn make_power_exp_decay_with_norm(
    alpha: f64,
    theta: f64,
    dim: usize,
    verify_window_l: usize,
    index_norm: IndexNorm,
) -> Result<DecayFunction> {
    if alpha <= dim as f64 {
        return Err(Error::NotSummable { alpha, dim });
    }
    if verify_window_l < 8 {
        return Err(Error::PreconditionViolated(format!(
            "verification window radius {verify_window_l} < 8"
        )));
    }
    let unit = DecayFunction::with_amplitude(dim, alpha, theta, 1.0)?.with_index_norm(index_norm);
    // Both properties are monotone in the amplitude: summability scales like
    // a, the convolution inequality like a^2 on the left and a on the right.
    let data = survey(&unit, verify_window_l);
    let passes = |a: f64| report_from_survey(&data, verify_window_l, a).passed();

    let mut hi = None;
    for t in 0..=60 {
        let a = 0.5f64.powi(t);
        if passes(a) {
            hi = Some((a, 2.0 * a));
            break;
        }
    }
    let (mut lo, mut up) = hi.ok_or(Error::NoValidAmplitude)?;
    if lo == 1.0 {
        up = 1.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + up);
        if passes(mid) {
            lo = mid;
        } else {
            up = mid;
        }
    }

    let mut amplitude = lo * (1.0 - 1e-12);
    for _ in 0..8 {
        let candidate = DecayFunction { amplitude, ..unit.clone() };
        let mut report = verify_decay(&candidate, verify_window_l);
        if report.passed() {
            report.alpha = Some(alpha);
            report.theta = Some(theta);
            report.a = Some(amplitude);
            return Ok(DecayFunction { certificate: Some(report), ..candidate });
        }
        amplitude *= 1.0 - 1e-9;
    }
    Err(Error::NoValidAmplitude)
}

/// Upper bound for `Σ_{|k|_∞ > L} Γ(k)`.
pub fn decay_tail(gamma: &DecayFunction, radius: usize) -> f64 {
    gamma.tail_bound(radius)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gamma_2_1() -> DecayFunction {
        make_power_exp_decay(2.0, 1.0, 1, 50).unwrap()
    }

    #[test]
    fn rejects_non_summable_exponent() {
        assert_eq!(
            make_power_exp_decay(0.5, 0.0, 1, 50).unwrap_err(),
            Error::NotSummable { alpha: 0.5, dim: 1 }
        );
        assert!(matches!(make_power_exp_decay(2.0, 0.0, 2, 20), Err(Error::NotSummable { .. })));
    }

    #[test]
    fn small_verification_window_is_rejected() {
        assert!(matches!(make_power_exp_decay(2.0, 1.0, 1, 4), Err(Error::PreconditionViolated(_))));
    }

    #[test]
    fn certificate_is_attached() {
        let g = gamma_2_1();
        let cert = g.certificate.as_ref().unwrap();
        assert!(cert.passed());
        assert_eq!(cert.a, Some(g.amplitude));
        assert!(g.amplitude > 0.0 && g.amplitude < 1.0);
    }

    #[test]
    fn amplitude_is_nearly_maximal() {
        let g = gamma_2_1();
        let bigger = DecayFunction { amplitude: g.amplitude * 1.001, certificate: None, ..g.clone() };
        assert!(!verify_decay(&bigger, 50).passed());
    }

    #[test]
    fn forced_mass_breaks_summability() {
        let g = gamma_2_1();
        let mut window_sum = 0.0;
        for k in -50i64..=50 {
            window_sum += g.eval(&[k]);
        }
        let scaled = ScaledProfile { inner: g, factor: 2.0 / window_sum + 1e-3 };
        let r = verify_decay(&scaled, 50);
        assert!(r.sum_margin < 0.0);
        assert!(!r.passed());
    }

    #[test]
    fn tail_is_strictly_decreasing() {
        let g = gamma_2_1();
        let tails: Vec<f64> = [5, 10, 20, 40].iter().map(|&l| decay_tail(&g, l)).collect();
        assert!(tails.windows(2).all(|w| w[1] < w[0]), "{tails:?}");
        assert!(decay_tail(&g, 0) <= 1.0 - g.at_origin());
    }

    #[test]
    fn profile_is_even_and_radially_nonincreasing() {
        let g = make_power_exp_decay(3.0, 0.0, 2, 20).unwrap();
        for a in -6i64..=6 {
            for b in -6i64..=6 {
                assert_eq!(g.eval(&[a, b]), g.eval(&[-a, b]));
                assert_eq!(g.eval(&[a, b]), g.eval(&[a, -b]));
            }
        }
        for r in 0..30 {
            assert!(g.radial(r as f64 + 1.0) <= g.radial(r as f64));
        }
    }

    #[test]
    fn sup_index_norm_is_available() {
        let g = make_power_exp_decay_with_norm(3.0, 0.0, 2, 10, IndexNorm::Sup).unwrap();
        assert_eq!(g.eval(&[2, 1]), g.eval(&[2, 0]));
        assert!(g.certificate.unwrap().passed());
    }

    #[test]
    fn worst_pair_lies_in_the_window() {
        let g = gamma_2_1();
        let r = verify_decay(&g, 50);
        let (i, j) = &r.worst_pair;
        assert!(i[0].abs() <= 50 && j[0].abs() <= 50);
    }
}
