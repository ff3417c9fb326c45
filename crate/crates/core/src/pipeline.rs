//! Stage orchestration for batch runs: each stage writes `report_<stage>.json`
//! plus CSV dumps into the output directory.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::config::{ExperimentConfig, Stage, TargetKind};
use crate::decay::{verify_decay, DecayFunction, DecayProfile};
use crate::error::{Error, Result};
use crate::jets::PolyJet;
use crate::lattice::{LatticeVector, LatticeWindow};
use crate::normal_form::{compute_normal_form_with, nf_residual, NormalFormOptions};
use crate::spectrum::{gamma_spectrum_probe, gelfand_radius, spectral_projection, Circle, C64};
use crate::sternberg::{
    build_s0, build_s0_resonant, calibrate_delta, conjugacy_residual, decay_persistence, plan_parameters, Conjugacy,
    EvalSettings, Target, TargetInverse,
};

#[derive(Clone, Debug)]
pub struct RunOptions {
    /// Stages to run; the config's list when `None`.
    pub stages: Option<Vec<Stage>>,
    pub out_dir: PathBuf,
    pub window_scale: f64,
    pub seed_override: Option<u64>,
}

impl RunOptions {
    pub fn new(out_dir: impl Into<PathBuf>) -> Self {
        RunOptions { stages: None, out_dir: out_dir.into(), window_scale: 1.0, seed_override: None }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StageStatus {
    Ok,
    /// Ran to completion but a check did not hold.
    Failed,
    Error,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub limit: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &str, value: f64, limit: f64) -> Self {
        Check { name: name.into(), value, limit, passed: value <= limit }
    }

    fn holds(name: &str, ok: bool) -> Self {
        Check { name: name.into(), value: if ok { 1.0 } else { 0.0 }, limit: 1.0, passed: ok }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErrorInfo {
    pub kind: String,
    pub message: String,
    pub exit_code: i32,
}

impl From<&Error> for ErrorInfo {
    fn from(e: &Error) -> Self {
        ErrorInfo { kind: e.kind().into(), message: e.to_string(), exit_code: e.exit_code() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageReport {
    pub stage: Stage,
    pub status: StageStatus,
    pub checks: Vec<Check>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<ErrorInfo>,
    pub result: Value,
    /// CSV files written next to the report.
    pub artifacts: Vec<String>,
}

impl StageReport {
    pub fn exit_code(&self) -> i32 {
        match self.status {
            StageStatus::Ok => 0,
            StageStatus::Failed => 4,
            StageStatus::Error => self.error.as_ref().map_or(4, |e| e.exit_code),
        }
    }
}

#[derive(Clone, Debug)]
pub struct PipelineOutcome {
    pub reports: Vec<StageReport>,
    /// Exit code of the first stage that did not pass, or 0.
    pub exit_code: i32,
}

struct StageOutput {
    result: Value,
    checks: Vec<Check>,
    artifacts: Vec<String>,
}

struct Context<'a> {
    cfg: &'a ExperimentConfig,
    window: LatticeWindow,
    gamma: DecayFunction,
    f: PolyJet,
    seed: u64,
    out_dir: &'a Path,
}

/// Runs the requested stages in order. Stage failures are recorded in their
/// reports; only I/O problems with the output directory are returned as errors.
pub fn run_pipeline(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<PipelineOutcome> {
    std::fs::create_dir_all(&opts.out_dir)?;
    let mut stages = opts.stages.clone().unwrap_or_else(|| cfg.run.stages.clone());
    stages.sort();
    stages.dedup();

    let ctx = cfg.window(opts.window_scale).and_then(|window| {
        let gamma = cfg.decay_function()?;
        let f = cfg.map_jet(&window, &gamma)?;
        Ok(Context { cfg, window, gamma, f, seed: opts.seed_override.unwrap_or(cfg.run.seed), out_dir: &opts.out_dir })
    });

    let mut reports = Vec::new();
    for stage in stages {
        let outcome = match &ctx {
            Ok(ctx) => run_stage(ctx, stage),
            Err(e) => Err(e.clone()),
        };
        let report = match outcome {
            Ok(out) => {
                let passed = out.checks.iter().all(|c| c.passed);
                StageReport {
                    stage,
                    status: if passed { StageStatus::Ok } else { StageStatus::Failed },
                    checks: out.checks,
                    error: None,
                    result: out.result,
                    artifacts: out.artifacts,
                }
            }
            Err(e) => StageReport {
                stage,
                status: StageStatus::Error,
                checks: Vec::new(),
                error: Some(ErrorInfo::from(&e)),
                result: Value::Null,
                artifacts: Vec::new(),
            },
        };
        write_json(&opts.out_dir.join(format!("report_{}.json", stage.name())), &report)?;
        reports.push(report);
    }
    let exit_code = reports.iter().map(StageReport::exit_code).find(|&c| c != 0).unwrap_or(0);
    Ok(PipelineOutcome { reports, exit_code })
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text)?;
    Ok(())
}

fn run_stage(ctx: &Context, stage: Stage) -> Result<StageOutput> {
    match stage {
        Stage::Decay => decay_stage(ctx),
        Stage::Norms => norms_stage(ctx),
        Stage::Spectrum => spectrum_stage(ctx),
        Stage::Nf => nf_stage(ctx),
        Stage::Conj => conj_stage(ctx),
    }
}

fn to_value<T: Serialize>(v: &T) -> Result<Value> {
    serde_json::to_value(v).map_err(|e| Error::Io(e.to_string()))
}

fn csv_file(ctx: &Context, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(ctx.out_dir.join(name))?))
}

fn decay_stage(ctx: &Context) -> Result<StageOutput> {
    let l = ctx.cfg.decay.verify_window;
    let report = verify_decay(&ctx.gamma, l);
    let mut w = csv::Writer::from_writer(csv_file(ctx, "decay_profile.csv")?);
    w.write_record(["distance", "gamma"])?;
    for r in 0..=l {
        w.write_record([r.to_string(), format!("{:e}", ctx.gamma.radial(r as f64))])?;
    }
    w.flush()?;
    let result = serde_json::json!({
        "decay": to_value(&ctx.gamma)?,
        "verification": to_value(&report)?,
        "tail_beyond_window": ctx.gamma.tail_bound(ctx.window.radius),
    });
    Ok(StageOutput {
        result,
        checks: vec![
            Check { name: "summability_margin".into(), value: report.sum_margin, limit: 0.0, passed: report.sum_margin >= 0.0 },
            Check { name: "convolution_margin".into(), value: report.conv_margin, limit: 0.0, passed: report.conv_margin >= 0.0 },
        ],
        artifacts: vec!["decay_profile.csv".into()],
    })
}

#[derive(Serialize)]
struct LinearNorms {
    op_norm: f64,
    op_norm_mode: crate::linear::NormMode,
    gamma: f64,
    gamma_norm: f64,
}

#[derive(Serialize)]
struct TensorNorms {
    order: usize,
    op_norm: f64,
    op_norm_mode: crate::linear::NormMode,
    gamma: f64,
    gamma_norm: f64,
}

fn norms_stage(ctx: &Context) -> Result<StageOutput> {
    let a = ctx.f.linear_part()?;
    let lin = |m: &crate::linear::BlockLinearMap| LinearNorms {
        op_norm: m.op_norm(),
        op_norm_mode: m.op_norm_mode(),
        gamma: m.gamma(&ctx.gamma),
        gamma_norm: m.gamma_norm(&ctx.gamma),
    };
    let a_norms = lin(&a);
    let inverse = a.inverse_dense().ok().map(|inv| lin(&inv));
    let mut artifacts = vec!["linear_part.csv".to_string()];
    a.write_csv(csv_file(ctx, "linear_part.csv")?)?;
    let mut tensors = Vec::new();
    for (idx, c) in ctx.f.coeffs()[1..].iter().enumerate() {
        let order = idx + 2;
        tensors.push(TensorNorms {
            order,
            op_norm: c.op_norm(),
            op_norm_mode: c.op_norm_mode(),
            gamma: c.ml_gamma(&ctx.gamma),
            gamma_norm: c.gamma_norm(&ctx.gamma),
        });
        let name = format!("tensor_order_{order}.csv");
        c.write_csv(csv_file(ctx, &name)?)?;
        artifacts.push(name);
    }
    let finite = a_norms.gamma_norm.is_finite() && tensors.iter().all(|t| t.gamma_norm.is_finite());
    let result = serde_json::json!({
        "window": to_value(&ctx.window)?,
        "linear": to_value(&a_norms)?,
        "inverse": to_value(&inverse)?,
        "tensors": to_value(&tensors)?,
    });
    Ok(StageOutput { result, checks: vec![Check::holds("norms_finite", finite)], artifacts })
}

fn linspace(range: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (range[0] + range[1])];
    }
    (0..n).map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64).collect()
}

fn spectrum_stage(ctx: &Context) -> Result<StageOutput> {
    let sc = &ctx.cfg.spectrum;
    let a = ctx.f.linear_part()?;
    let radius = ctx.window.radius;
    let windows = if sc.windows.is_empty() {
        let mut w = vec![radius / 2, radius];
        w.dedup();
        w
    } else {
        sc.windows.clone()
    };
    let mut grid = Vec::new();
    for im in linspace(sc.im, sc.points[1]) {
        for re in linspace(sc.re, sc.points[0]) {
            grid.push(C64::new(re, im));
        }
    }
    let build = |l: usize| Ok(ctx.cfg.linear_map(&ctx.window.resized(l), &ctx.gamma));
    let mut probe = gamma_spectrum_probe(build, &ctx.gamma, &grid, sc.threshold, &windows)?;
    let gelfand = gelfand_radius(&a, &ctx.gamma, sc.gelfand_power)?;
    let spectral_radius = probe.eigenvalues.iter().map(|&(re, im)| re.hypot(im)).fold(0.0, f64::max);
    probe.gelfand = Some(gelfand.clone());
    probe.write_csv(csv_file(ctx, "spectrum_probe.csv")?)?;

    let mut checks = vec![Check::holds("eigenvalues_in_probe_spectrum", probe.inclusion_holds)];
    let projection = match &sc.projection {
        None => Value::Null,
        Some(pc) => {
            let p = spectral_projection(&a, &ctx.gamma, Circle::new(pc.center, pc.radius), pc.quad_points, pc.margin)?;
            checks.push(Check::at_most("projection_idempotency", p.idempotency_defect, 1e-8));
            checks.push(Check::at_most("projection_commutator", p.commutator_defect, 1e-8));
            serde_json::json!({
                "nodes": p.nodes,
                "quadrature_change": p.quadrature_change,
                "idempotency_defect": p.idempotency_defect,
                "commutator_defect": p.commutator_defect,
                "imaginary_residue": p.imaginary_residue,
                "rank": p.projection.to_dense().trace().round(),
            })
        }
    };
    let result = serde_json::json!({
        "windows": windows,
        "threshold": sc.threshold,
        "eigenvalues": probe.eigenvalues,
        "spectral_radius": spectral_radius,
        "gelfand": to_value(&gelfand)?,
        "inclusion_holds": probe.inclusion_holds,
        "spectrum_candidates": probe.spectrum_candidates().count(),
        "grid_points": probe.samples.len(),
        "projection": projection,
    });
    Ok(StageOutput { result, checks, artifacts: vec!["spectrum_probe.csv".into()] })
}

fn nf_order(ctx: &Context) -> Result<usize> {
    match ctx.cfg.run.order {
        Some(r) => Ok(r),
        None => Ok(plan_parameters(&ctx.f, &ctx.gamma, ctx.cfg.run.mode)?.r0.max(2)),
    }
}

fn unit_samples(window: &LatticeWindow, count: usize, radius: f64, seed: u64) -> Result<Vec<LatticeVector>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let values: Vec<f64> = (0..window.size()).map(|_| rng.random_range(-1.0..=1.0)).collect();
        let v = LatticeVector::from_values(window, values)?;
        let norm = v.norm();
        let target = radius * rng.random_range(0.0..=1.0f64);
        out.push(if norm > 0.0 { v.scaled(target / norm) } else { v });
    }
    Ok(out)
}

fn nf_stage(ctx: &Context) -> Result<StageOutput> {
    let r = nf_order(ctx)?;
    let opts = NormalFormOptions { method: ctx.cfg.run.method, ..NormalFormOptions::default() };
    let nf = compute_normal_form_with(&ctx.f, r, ctx.cfg.run.nf_tolerance, opts)?;
    let samples = unit_samples(&ctx.window, ctx.cfg.run.samples.min(20), 1.0, ctx.seed)?;
    let sampled = nf_residual(&ctx.f, &nf.k, &nf.h, r, &samples, &[1e-1, 1e-2, 1e-3])?;
    let mut artifacts = Vec::new();
    for order in 2..=r {
        for (label, jet) in [("K", &nf.k), ("H", &nf.h)] {
            if let Some(c) = jet.coeff(order) {
                let name = format!("nf_{label}_{order}.csv");
                c.write_csv(csv_file(ctx, &name)?)?;
                artifacts.push(name);
            }
        }
    }
    let result = serde_json::json!({
        "order": r,
        "resonances": to_value(&nf.resonances)?,
        "k_gammas": nf.k_gammas(&ctx.gamma),
        "h_gammas": nf.h_gammas(&ctx.gamma),
        "residual_by_order": nf.residual_jet.coeff_max_abs(),
        "solve_residuals": nf.solve_residuals,
        "sampled_residual": to_value(&sampled)?,
    });
    Ok(StageOutput {
        result,
        checks: vec![Check::at_most("nf_residual", nf.max_residual(), ctx.cfg.run.nf_tolerance)],
        artifacts,
    })
}

fn conj_stage(ctx: &Context) -> Result<StageOutput> {
    let run = &ctx.cfg.run;
    let planned = plan_parameters(&ctx.f, &ctx.gamma, run.mode)?;
    let (config, calibration) = calibrate_delta(&planned, &ctx.f, &ctx.gamma)?;
    let (s0, target) = match run.target {
        TargetKind::Linear => (build_s0(&ctx.f, config.m, config.r0)?, Target::Linear(ctx.f.linear_part()?)),
        TargetKind::NormalForm => {
            let (s0, h) = build_s0_resonant(&ctx.f, config.r0.max(2))?;
            (s0, Target::Polynomial(h))
        }
    };
    let settings = EvalSettings { m: config.m, tol: run.eval_tolerance, max_iterations: run.max_iterations, domain: config.delta };
    let conj = Conjugacy { f: ctx.f.clone(), s0, target: TargetInverse::new(target)?, config: config.clone(), settings };
    let samples = unit_samples(&ctx.window, run.samples, config.certified_radius(), ctx.seed)?;
    let report = conjugacy_residual(&conj, &samples, &ctx.gamma)?;

    let persistence = if run.target == TargetKind::Linear && ctx.window.radius >= 2 {
        let radii = [ctx.window.radius / 2, ctx.window.radius];
        let build = |l: usize| ctx.cfg.map_jet(&ctx.window.resized(l), &ctx.gamma);
        Some(decay_persistence(build, &radii, &ctx.gamma, config.m)?)
    } else {
        None
    };

    let mut w = csv::Writer::from_writer(csv_file(ctx, "conj_samples.csv")?);
    w.write_record(["sample", "norm", "residual", "iterations"])?;
    for (i, x) in samples.iter().enumerate() {
        w.write_record([
            i.to_string(),
            format!("{:e}", x.norm()),
            format!("{:e}", report.sample_residuals[i]),
            report.sample_iterations[i].to_string(),
        ])?;
    }
    w.flush()?;

    let jet_err = report.jet_agreement.iter().cloned().fold(0.0, f64::max);
    let checks = vec![
        Check::at_most("conjugacy_residual", report.sup_residual, run.residual_tolerance),
        Check::holds("increments_geometric", report.geometric),
        Check::at_most("jet_agreement", jet_err, run.jet_tolerance),
    ];
    let result = serde_json::json!({
        "target": to_value(&run.target)?,
        "parameters": to_value(&config)?,
        "calibration": to_value(&calibration)?,
        "report": to_value(&report)?,
        "persistence": to_value(&persistence)?,
    });
    Ok(StageOutput { result, checks, artifacts: vec!["conj_samples.csv".into()] })
}
