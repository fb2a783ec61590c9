//! Command-line front end: configuration, orchestration and artifacts.

pub mod config;

use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use serde::Serialize;
use urnlab::oracle::{
    compensated_martingale_check, evolution_identity_check, exact_conditional_variance_check, martingale_mean_deviation,
};
use urnlab::scaling::{predict, LawPrediction, LimitKind};
use urnlab::spectral::{classify, Family, StructureClass};
use urnlab::urn::{simulate, SimulationRequest};
use urnlab::verify::{run_ensemble, EnsembleReport, VerifyError};

pub use config::{parse_config, ConfigError, ExperimentPlan, Overrides};

/// Horizon of the exact checks run by `oracle-check`.
pub const ORACLE_STEPS: u64 = 8;
pub const ORACLE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Pass = 0,
    Fail = 1,
    Unsupported = 2,
    Usage = 3,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Classify,
    Predict,
    OracleCheck,
    Simulate,
    Verify,
    All,
}

/// Test-only knobs.
#[derive(Debug, Clone, Copy)]
pub struct Hooks {
    /// Multiplies every predicted variance and mixture coefficient.
    pub variance_scale: f64,
}

impl Default for Hooks {
    fn default() -> Self {
        Self { variance_scale: 1.0 }
    }
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    label: &'a str,
    vector: &'a [f64],
    normalization: String,
    normalization_at_horizon: f64,
    limit: &'a LimitKind,
    unverified: bool,
}

#[derive(Serialize)]
struct ClassificationArtifact<'a> {
    replacement: &'a [Vec<f64>],
    initial: &'a [f64],
    horizon: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    class: Option<&'a StructureClass>,
    predictions: Vec<PredictionRow<'a>>,
}

#[derive(Serialize)]
struct OracleRow {
    check: String,
    steps: u64,
    deviation: f64,
    pass: bool,
}

#[derive(Serialize)]
struct VerdictRow<'a> {
    label: &'a str,
    limit: &'a LimitKind,
    normalization: String,
    pass: bool,
    detail: &'a str,
    unverified: bool,
    terminal_mean: f64,
    terminal_variance: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    ks_d: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ks_p: Option<f64>,
    dropped: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    median_tail_fluctuation: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    constant_deviation: Option<f64>,
    sample_file: String,
}

#[derive(Serialize)]
struct Summary<'a> {
    family: Family,
    horizon: u64,
    ensemble: usize,
    seed: u64,
    checkpoints: &'a [u64],
    predictions: Vec<PredictionRow<'a>>,
    verdicts: Vec<VerdictRow<'a>>,
    all_pass: bool,
}

fn rows<'a>(predictions: &'a [LawPrediction], horizon: u64) -> Vec<PredictionRow<'a>> {
    predictions
        .iter()
        .map(|p| PredictionRow {
            label: &p.label,
            vector: &p.vector,
            normalization: p.normalization.to_string(),
            normalization_at_horizon: p.normalization.eval(horizon),
            limit: &p.limit,
            unverified: p.unverified,
        })
        .collect()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

/// Empty cell for non-finite values.
fn cell(x: f64) -> String {
    if x.is_finite() {
        format!("{x}")
    } else {
        String::new()
    }
}

fn scale_variance(predictions: &mut [LawPrediction], factor: f64) {
    for p in predictions {
        match &mut p.limit {
            LimitKind::Normal { variance } => *variance *= factor,
            LimitKind::NormalMixture { coefficient } => *coefficient *= factor,
            _ => {}
        }
    }
}

struct Classified {
    class: Option<StructureClass>,
    error: Option<String>,
    predictions: Vec<LawPrediction>,
}

fn classify_plan(plan: &ExperimentPlan) -> Classified {
    match classify(&plan.spec) {
        Ok(class) => {
            let predictions = predict(&class, plan.spec.initial()).unwrap_or_default();
            Classified { class: Some(class), error: None, predictions }
        }
        Err(e) => Classified { class: None, error: Some(e.to_string()), predictions: vec![] },
    }
}

fn write_classification(plan: &ExperimentPlan, c: &Classified) -> Result<()> {
    let artifact = ClassificationArtifact {
        replacement: &plan.replacement,
        initial: &plan.initial,
        horizon: plan.horizon,
        error: c.error.clone(),
        class: c.class.as_ref(),
        predictions: rows(&c.predictions, plan.horizon),
    };
    write_json(&plan.output.join("classification.json"), &artifact)
}

fn print_table(out: &mut dyn Write, c: &Classified, horizon: u64) -> Result<()> {
    match &c.class {
        Some(class) => {
            writeln!(out, "family: {:?}", class.family)?;
            for (name, v) in [("s", class.s), ("lambda", class.lambda), ("beta", class.beta)] {
                if let Some(v) = v {
                    writeln!(out, "{name}: {v}")?;
                }
            }
            for note in &class.notes {
                writeln!(out, "note: {note}")?;
            }
        }
        None => writeln!(out, "error: {}", c.error.as_deref().unwrap_or("unknown"))?,
    }
    for p in &c.predictions {
        writeln!(
            out,
            "{:<4} {:<24} {:<22} at N={horizon}: {:.6e}  {:?}{}",
            p.label,
            format!("{:?}", p.vector),
            p.normalization.to_string(),
            p.normalization.eval(horizon),
            p.limit,
            if p.unverified { "  [unverified]" } else { "" }
        )?;
    }
    Ok(())
}

fn oracle_rows(plan: &ExperimentPlan, class: &StructureClass) -> Vec<OracleRow> {
    let mut out = Vec::new();
    let mut push = |check: String, steps: u64, deviation: Option<f64>| {
        if let Some(deviation) = deviation {
            out.push(OracleRow { check, steps, deviation, pass: deviation < ORACLE_TOL });
        }
    };
    for e in &class.eigenpairs {
        let d = martingale_mean_deviation(&plan.spec, &e.vector, e.value, ORACLE_STEPS).ok();
        push(format!("mean identity {}", e.label), ORACLE_STEPS, d);
    }
    push(
        "conditional second moment".into(),
        ORACLE_STEPS,
        exact_conditional_variance_check(&plan.spec, class, ORACLE_STEPS).ok(),
    );
    push(
        "compensated martingale".into(),
        ORACLE_STEPS,
        compensated_martingale_check(&plan.spec, class, ORACLE_STEPS, None).ok(),
    );
    push("evolution identity".into(), ORACLE_STEPS, evolution_identity_check(&plan.spec, class, ORACLE_STEPS).ok());
    out
}

fn write_samples(plan: &ExperimentPlan, report: &EnsembleReport) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for p in &report.predictions {
        let name = format!("samples_{}.csv", p.prediction.label);
        let path = plan.output.join(&name);
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
        w.write_record(["trajectory_id", "checkpoint_n", "raw_value", "normalized_value", "z_value", "U_hat"])?;
        let last = report.checkpoints.len() - 1;
        for (m, raw) in p.raw.iter().enumerate() {
            for (c, &n) in report.checkpoints.iter().enumerate() {
                let normalized = raw[c] / p.prediction.normalization.eval(n);
                let (z, u) = if c == last {
                    let z = p.z.as_ref().and_then(|z| z[m]).map(cell).unwrap_or_default();
                    let mixing = matches!(p.prediction.limit, LimitKind::NormalMixture { .. });
                    let u = if mixing {
                        report.u_hat.as_ref().map(|u| cell(u[m])).unwrap_or_default()
                    } else {
                        String::new()
                    };
                    (z, u)
                } else {
                    (String::new(), String::new())
                };
                w.write_record([m.to_string(), n.to_string(), cell(raw[c]), cell(normalized), z, u])?;
            }
        }
        w.flush()?;
        names.push(name);
    }
    Ok(names)
}

fn verify_plan(
    plan: &ExperimentPlan,
    class: &StructureClass,
    predictions: &[LawPrediction],
    out: &mut dyn Write,
) -> Result<Status> {
    let report = match run_ensemble(&plan.spec, class, predictions, &plan.ensemble_config()) {
        Ok(r) => r,
        Err(e @ (VerifyError::HorizonTooSmall(_) | VerifyError::EnsembleTooSmall(_) | VerifyError::Cap { .. })) => {
            writeln!(out, "error: {e}")?;
            return Ok(Status::Usage);
        }
        Err(e) => return Err(e.into()),
    };
    let files = write_samples(plan, &report)?;
    let verdicts: Vec<VerdictRow> = report
        .predictions
        .iter()
        .zip(&files)
        .map(|(p, file)| VerdictRow {
            label: &p.prediction.label,
            limit: &p.prediction.limit,
            normalization: p.prediction.normalization.to_string(),
            pass: p.verdict.pass,
            detail: &p.verdict.detail,
            unverified: p.prediction.unverified,
            terminal_mean: p.terminal_mean,
            terminal_variance: p.terminal_variance,
            ks_d: p.ks.map(|k| k.d),
            ks_p: p.ks.map(|k| k.p),
            dropped: p.dropped,
            median_tail_fluctuation: p.diagnostics.as_ref().map(|d| d.median_tail_fluctuation),
            constant_deviation: p.constant_deviation,
            sample_file: file.clone(),
        })
        .collect();

    let mut text = String::new();
    for v in &verdicts {
        let flag = if v.unverified { " [unverified]" } else { "" };
        text += &format!(
            "{} {} {} at {}{}: {}\n",
            if v.pass { "PASS" } else { "FAIL" },
            v.label,
            v.limit.name(),
            v.normalization,
            flag,
            v.detail
        );
    }
    fs::write(plan.output.join("verdicts.txt"), &text)?;
    out.write_all(text.as_bytes())?;

    let summary = Summary {
        family: class.family,
        horizon: report.horizon,
        ensemble: report.ensemble,
        seed: report.seed,
        checkpoints: &report.checkpoints,
        predictions: rows(predictions, plan.horizon),
        all_pass: report.all_pass(),
        verdicts,
    };
    write_json(&plan.output.join("summary.json"), &summary)?;
    Ok(if report.all_pass() { Status::Pass } else { Status::Fail })
}

/// Runs `command` against `plan`, writing artifacts into `plan.output` and
/// a human-readable log into `out`.
pub fn run(command: Command, plan: &ExperimentPlan, hooks: Hooks, out: &mut dyn Write) -> Result<Status> {
    fs::create_dir_all(&plan.output).with_context(|| format!("creating {}", plan.output.display()))?;
    let mut c = classify_plan(plan);
    scale_variance(&mut c.predictions, hooks.variance_scale);
    write_classification(plan, &c)?;

    let class = match &c.class {
        Some(class) if class.family != Family::Unsupported => class.clone(),
        _ => {
            print_table(out, &c, plan.horizon)?;
            return Ok(Status::Unsupported);
        }
    };

    if let Some(wanted) = &plan.predictions {
        for (i, label) in wanted.iter().enumerate() {
            if !c.predictions.iter().any(|p| &p.label == label) {
                writeln!(out, "error: run.predictions[{i}]: no prediction labelled '{label}'")?;
                return Ok(Status::Usage);
            }
        }
        c.predictions.retain(|p| wanted.contains(&p.label));
    }

    match command {
        Command::Classify | Command::Predict => {
            print_table(out, &c, plan.horizon)?;
            Ok(Status::Pass)
        }
        Command::OracleCheck => oracle_check(plan, &class, out),
        Command::Simulate => {
            simulate_one(plan, &c.predictions)?;
            writeln!(out, "wrote trajectory.csv")?;
            Ok(Status::Pass)
        }
        Command::Verify => verify_plan(plan, &class, &c.predictions, out),
        Command::All => {
            print_table(out, &c, plan.horizon)?;
            let oracle = oracle_check(plan, &class, out)?;
            simulate_one(plan, &c.predictions)?;
            let verified = verify_plan(plan, &class, &c.predictions, out)?;
            Ok(if oracle == Status::Pass { verified } else { Status::Fail })
        }
    }
}

fn oracle_check(plan: &ExperimentPlan, class: &StructureClass, out: &mut dyn Write) -> Result<Status> {
    let rows = oracle_rows(plan, class);
    for r in &rows {
        writeln!(out, "{} {} (n <= {}): {:.3e}", if r.pass { "PASS" } else { "FAIL" }, r.check, r.steps, r.deviation)?;
    }
    write_json(&plan.output.join("oracle.json"), &rows)?;
    Ok(if rows.iter().all(|r| r.pass) { Status::Pass } else { Status::Fail })
}

/// Stream 0 of the plan's seed: composition and prediction tracks at each
/// checkpoint.
fn simulate_one(plan: &ExperimentPlan, predictions: &[LawPrediction]) -> Result<()> {
    let cfg = plan.ensemble_config();
    let req = SimulationRequest {
        horizon: plan.horizon,
        seed: plan.seed,
        stream: 0,
        checkpoints: cfg.grid(),
        track_vectors: predictions.iter().map(|p| p.vector.clone()).collect(),
    };
    let t = simulate(&plan.spec, &req)?;
    let path = plan.output.join("trajectory.csv");
    let mut w = csv::Writer::from_path(&path).with_context(|| format!("writing {}", path.display()))?;
    let mut header = vec!["checkpoint_n".to_string()];
    header.extend((0..plan.spec.k()).map(|i| format!("color_{i}")));
    header.extend(predictions.iter().map(|p| format!("track_{}", p.label)));
    w.write_record(&header)?;
    for (c, &n) in t.checkpoints.iter().enumerate() {
        let mut row = vec![n.to_string()];
        row.extend(t.states[c].iter().map(|&x| cell(x)));
        row.extend(t.tracks.iter().map(|tr| cell(tr[c])));
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}
