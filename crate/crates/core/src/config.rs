//! Experiment configuration files (JSON) and construction of the objects
//! they describe.

use std::path::Path;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::decay::{make_power_exp_decay_with_norm, verify_decay, DecayFunction, IndexNorm};
use crate::error::{Error, Result};
use crate::jets::PolyJet;
use crate::lattice::{LatticeWindow, NodeNorm};
use crate::linear::BlockLinearMap;
use crate::multilinear::MultiLinearMap;
use crate::sternberg::ConjugacyMode;
use crate::sylvester::HomologicalMethod;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Decay,
    Norms,
    Spectrum,
    Nf,
    Conj,
}

impl Stage {
    pub const ALL: [Stage; 5] = [Stage::Decay, Stage::Norms, Stage::Spectrum, Stage::Nf, Stage::Conj];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Decay => "decay",
            Stage::Norms => "norms",
            Stage::Spectrum => "spectrum",
            Stage::Nf => "nf",
            Stage::Conj => "conj",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub decay: DecayConfig,
    pub window: WindowConfig,
    pub map: MapConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default)]
    pub spectrum: SpectrumConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecayConfig {
    pub alpha: f64,
    pub theta: f64,
    #[serde(default = "default_verify_window")]
    pub verify_window: usize,
    #[serde(default)]
    pub index_norm: IndexNorm,
    /// Fixed `Γ(0)`; when absent the largest certifiable amplitude is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub amplitude: Option<f64>,
}

fn default_verify_window() -> usize {
    50
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowConfig {
    #[serde(default = "one")]
    pub dim: usize,
    pub radius: usize,
    #[serde(default = "one")]
    pub node_dim: usize,
    #[serde(default)]
    pub node_norm: NodeNorm,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MapConfig {
    pub linear: LinearConfig,
    #[serde(default)]
    pub polynomial: Vec<PolynomialTerm>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinearConfig {
    /// The node block `𝔞`, as rows.
    pub uncoupled: Vec<Vec<f64>>,
    #[serde(default)]
    pub couplings: Vec<CouplingConfig>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingProfile {
    /// Weight `Γ(i - j)` for every `j != i`.
    #[default]
    Gamma,
    /// Weight 1 for the `2m` nearest neighbours.
    NearestNeighbour,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingConfig {
    pub strength: f64,
    #[serde(default)]
    pub profile: CouplingProfile,
    /// Coupling block as rows; identity when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub block: Option<Vec<Vec<f64>>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialTerm {
    pub order: usize,
    /// Taylor coefficients on one node, `n x n^order` row-major.
    pub node_local: Vec<f64>,
    /// Adds `strength w(i-j) b(x_j, ..., x_j)` to node `i` for `j != i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coupling: Option<PolynomialCoupling>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolynomialCoupling {
    pub strength: f64,
    #[serde(default)]
    pub profile: CouplingProfile,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetKind {
    /// `R ∘ F = A R`; requires non-resonance through `r0`.
    #[default]
    Linear,
    /// `R ∘ F = H ∘ R` with `H` the normal form of `F`.
    NormalForm,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: ConjugacyMode,
    pub target: TargetKind,
    pub method: HomologicalMethod,
    /// Normal-form order; defaults to `max(r0, 2)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub order: Option<usize>,
    /// Stopping tolerance for the pointwise limit.
    pub eval_tolerance: f64,
    pub nf_tolerance: f64,
    pub residual_tolerance: f64,
    pub jet_tolerance: f64,
    pub max_iterations: usize,
    pub samples: usize,
    pub seed: u64,
    pub stages: Vec<Stage>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: ConjugacyMode::Perturbative,
            target: TargetKind::Linear,
            method: HomologicalMethod::Direct,
            order: None,
            eval_tolerance: 1e-15,
            nf_tolerance: 1e-8,
            residual_tolerance: 1e-6,
            jet_tolerance: 1e-8,
            max_iterations: 200,
            samples: 100,
            seed: 0,
            stages: Stage::ALL.to_vec(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpectrumConfig {
    pub re: [f64; 2],
    pub im: [f64; 2],
    pub points: [usize; 2],
    pub threshold: f64,
    /// Window radii for the probe; `[radius / 2, radius]` when empty.
    pub windows: Vec<usize>,
    pub gelfand_power: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub projection: Option<ProjectionConfig>,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        SpectrumConfig {
            re: [-1.2, 1.2],
            im: [-1.2, 1.2],
            points: [25, 25],
            threshold: 1e6,
            windows: Vec::new(),
            gelfand_power: 128,
            projection: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProjectionConfig {
    pub center: f64,
    pub radius: f64,
    #[serde(default = "default_quad_points")]
    pub quad_points: usize,
    #[serde(default = "default_margin")]
    pub margin: f64,
}

fn default_quad_points() -> usize {
    64
}

fn default_margin() -> f64 {
    1e-3
}

/// Reads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path.as_ref()).map_err(|e| Error::Io(format!("{}: {e}", path.as_ref().display())))?;
    parse_config(&text)
}

/// Parses and validates configuration text, collecting every schema problem.
pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    let value: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
    let mut problems = Vec::new();
    check_shape(&value, &mut problems);
    if !problems.is_empty() {
        return Err(Error::Schema(problems));
    }
    let cfg: ExperimentConfig = serde_json::from_value(value).map_err(|e| Error::Schema(vec![e.to_string()]))?;
    cfg.validate()?;
    Ok(cfg)
}

fn check_shape(v: &Value, problems: &mut Vec<String>) {
    let Some(root) = v.as_object() else {
        problems.push("top level must be an object".into());
        return;
    };
    let mut need = |obj: Option<&Value>, section: &str, keys: &[&str], numeric: bool| match obj.and_then(Value::as_object) {
        None => problems.push(format!("missing section `{section}`")),
        Some(o) => {
            for k in keys {
                match o.get(*k) {
                    None => problems.push(format!("missing `{section}.{k}`")),
                    Some(x) if numeric && !x.is_number() => problems.push(format!("`{section}.{k}` must be a number")),
                    _ => {}
                }
            }
        }
    };
    need(root.get("decay"), "decay", &["alpha", "theta"], true);
    need(root.get("window"), "window", &["radius"], true);
    need(root.get("map"), "map", &["linear"], false);
    if let Some(map) = root.get("map") {
        need(map.get("linear"), "map.linear", &["uncoupled"], false);
    }
}

fn rows_to_matrix(rows: &[Vec<f64>], n: usize, what: &str, problems: &mut Vec<String>) -> Option<DMatrix<f64>> {
    if rows.len() != n || rows.iter().any(|r| r.len() != n) {
        problems.push(format!("{what} must be {n} x {n}"));
        return None;
    }
    Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

impl ExperimentConfig {
    /// Semantic checks that serde cannot express.
    pub fn validate(&self) -> Result<()> {
        let mut p = Vec::new();
        let n = self.window.node_dim;
        if self.window.dim == 0 {
            p.push("window.dim must be positive".into());
        }
        if n == 0 {
            p.push("window.node_dim must be positive".into());
        }
        if !(self.decay.alpha > self.window.dim as f64) {
            p.push(format!("decay.alpha = {} must exceed the lattice dimension {}", self.decay.alpha, self.window.dim));
        }
        if !(self.decay.theta >= 0.0) {
            p.push("decay.theta must be nonnegative".into());
        }
        if self.decay.verify_window < 8 {
            p.push("decay.verify_window must be at least 8".into());
        }
        if let Some(a) = self.decay.amplitude {
            if !(a > 0.0) {
                p.push("decay.amplitude must be positive".into());
            }
        }
        if n > 0 {
            rows_to_matrix(&self.map.linear.uncoupled, n, "map.linear.uncoupled", &mut p);
            for (i, c) in self.map.linear.couplings.iter().enumerate() {
                if let Some(b) = &c.block {
                    rows_to_matrix(b, n, &format!("map.linear.couplings[{i}].block"), &mut p);
                }
            }
            for (i, t) in self.map.polynomial.iter().enumerate() {
                if t.order < 2 {
                    p.push(format!("map.polynomial[{i}].order must be at least 2"));
                } else if t.node_local.len() != n.pow(t.order as u32 + 1) {
                    p.push(format!("map.polynomial[{i}].node_local must have n^(order+1) = {} entries", n.pow(t.order as u32 + 1)));
                }
            }
        }
        if self.run.stages.is_empty() {
            p.push("run.stages must not be empty".into());
        }
        if self.run.order.is_some_and(|r| r < 2) {
            p.push("run.order must be at least 2".into());
        }
        for (name, v) in [
            ("run.eval_tolerance", self.run.eval_tolerance),
            ("run.nf_tolerance", self.run.nf_tolerance),
            ("run.residual_tolerance", self.run.residual_tolerance),
            ("run.jet_tolerance", self.run.jet_tolerance),
        ] {
            if !(v > 0.0) {
                p.push(format!("{name} must be positive"));
            }
        }
        if self.spectrum.points.contains(&0) {
            p.push("spectrum.points must be positive".into());
        }
        if p.is_empty() {
            Ok(())
        } else {
            Err(Error::Schema(p))
        }
    }

    /// The lattice window, with the radius scaled by `window_scale`.
    pub fn window(&self, window_scale: f64) -> Result<LatticeWindow> {
        let radius = (self.window.radius as f64 * window_scale).round();
        if !(radius >= 0.0) {
            return Err(Error::Schema(vec![format!("window scale {window_scale} gives radius {radius}")]));
        }
        Ok(LatticeWindow::new(self.window.dim, radius as usize, self.window.node_dim)?.with_node_norm(self.window.node_norm))
    }

    /// The decay function, certified on the verification window.
    pub fn decay_function(&self) -> Result<DecayFunction> {
        let d = &self.decay;
        match d.amplitude {
            None => make_power_exp_decay_with_norm(d.alpha, d.theta, self.window.dim, d.verify_window, d.index_norm),
            Some(a) => {
                let g = DecayFunction::with_amplitude(self.window.dim, d.alpha, d.theta, a)?.with_index_norm(d.index_norm);
                let report = verify_decay(&g, d.verify_window);
                if !report.passed() {
                    return Err(Error::PreconditionViolated(format!(
                        "amplitude {a} is not a decay function (sum margin {:.3e}, convolution margin {:.3e})",
                        report.sum_margin, report.conv_margin
                    )));
                }
                Ok(DecayFunction { certificate: Some(report), ..g })
            }
        }
    }

    /// The linear part `A` on a window.
    pub fn linear_map(&self, window: &LatticeWindow, gamma: &DecayFunction) -> BlockLinearMap {
        let n = window.node_dim;
        let block = |rows: &[Vec<f64>]| DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        let mut a = BlockLinearMap::uncoupled(window, &block(&self.map.linear.uncoupled));
        for c in &self.map.linear.couplings {
            let b = c.block.as_deref().map(block).unwrap_or_else(|| DMatrix::identity(n, n));
            let term = match c.profile {
                CouplingProfile::Gamma => BlockLinearMap::decay_coupling(window, gamma, c.strength, &b),
                CouplingProfile::NearestNeighbour => BlockLinearMap::nearest_neighbour(window, c.strength, &b),
            };
            a = a.add(&term);
        }
        a
    }

    /// The map `F` as a polynomial jet on a window.
    pub fn map_jet(&self, window: &LatticeWindow, gamma: &DecayFunction) -> Result<PolyJet> {
        let a = self.linear_map(window, gamma);
        let degree = self.map.polynomial.iter().map(|t| t.order).max().unwrap_or(1);
        let mut coeffs: Vec<MultiLinearMap> = (2..=degree).map(|k| MultiLinearMap::zeros(window, k)).collect::<Result<_>>()?;
        for t in &self.map.polynomial {
            let mut term = MultiLinearMap::node_local(window, t.order, &t.node_local)?;
            if let Some(c) = &t.coupling {
                term = term.add(&coupled_term(window, gamma, t, c)?)?;
            }
            let slot = &mut coeffs[t.order - 2];
            *slot = slot.add(&term)?;
        }
        PolyJet::with_linear_part(&a, coeffs)
    }
}

fn coupled_term(window: &LatticeWindow, gamma: &DecayFunction, t: &PolynomialTerm, c: &PolynomialCoupling) -> Result<MultiLinearMap> {
    let n = window.node_dim;
    let k = t.order;
    let cols = n.pow(k as u32);
    let mut w = MultiLinearMap::zeros(window, k)?;
    let mut inputs = vec![0usize; k];
    for i in 0..window.nodes() {
        for j in 0..window.nodes() {
            if i == j {
                continue;
            }
            let weight = match c.profile {
                CouplingProfile::Gamma => gamma.between(window, i, j),
                CouplingProfile::NearestNeighbour => {
                    let off = window.offset(i, j);
                    if off.iter().map(|v| v.abs()).sum::<i64>() == 1 {
                        1.0
                    } else {
                        0.0
                    }
                }
            };
            if weight == 0.0 {
                continue;
            }
            for r in 0..n {
                for col in 0..cols {
                    let v = t.node_local[r * cols + col];
                    if v == 0.0 {
                        continue;
                    }
                    let mut rest = col;
                    for d in (0..k).rev() {
                        inputs[d] = j * n + rest % n;
                        rest /= n;
                    }
                    w.set(i * n + r, &inputs, c.strength * weight * v);
                }
            }
        }
    }
    Ok(w)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SCALAR: &str = r#"{
        "decay": {"alpha": 2.0, "theta": 1.0},
        "window": {"radius": 0},
        "map": {"linear": {"uncoupled": [[0.5]]}, "polynomial": [{"order": 2, "node_local": [1.0]}]}
    }"#;

    #[test]
    fn minimal_config_parses() {
        let cfg = parse_config(SCALAR).unwrap();
        assert_eq!(cfg.run.samples, 100);
        assert_eq!(cfg.run.stages.len(), 5);
        let back = parse_config(&serde_json::to_string(&cfg).unwrap()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn missing_fields_are_aggregated() {
        let err = parse_config(r#"{"decay": {"theta": 1.0}, "map": {"linear": {}}}"#).unwrap_err();
        match err {
            Error::Schema(list) => {
                assert!(list.iter().any(|s| s.contains("decay.alpha")));
                assert!(list.iter().any(|s| s.contains("window")));
                assert!(list.iter().any(|s| s.contains("uncoupled")));
            }
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(parse_config("{"), Err(Error::Parse(_))));
    }

    #[test]
    fn semantic_problems() {
        let bad = SCALAR.replace("[[0.5]]", "[[0.5, 0.1]]").replace("\"alpha\": 2.0", "\"alpha\": 0.5");
        match parse_config(&bad).unwrap_err() {
            Error::Schema(list) => assert_eq!(list.len(), 2, "{list:?}"),
            e => panic!("unexpected {e:?}"),
        }
    }
}
