//! Monte Carlo verification of predicted limit laws.
//!
//! An ensemble of `M` trajectories runs on streams `0..M` of one seed. Each
//! prediction's track is recorded at the checkpoints, normalized, and tested
//! according to its limit kind. Trajectories are generated in parallel and
//! folded in stream order, so a report depends only on its inputs.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::oracle::jordan_chain;
use crate::scaling::{LawPrediction, LimitKind, Normalization};
use crate::spectral::{Family, StructureClass};
use crate::stats::{self, KsResult, StatsError};
use crate::urn::{dot, geometric_checkpoints, simulate, ReplacementSpec, SimError, SimulationRequest, Trajectory};

pub const MIN_HORIZON: u64 = 1_000;
pub const MIN_ENSEMBLE: usize = 100;
pub const DEFAULT_CAP: u64 = 10_000_000_000;
pub const DEFAULT_PER_OCTAVE: u32 = 8;
/// `U` estimates below this are dropped before mixture studentization.
pub const U_FLOOR: f64 = 1e-12;
/// KS thresholds are `factor / sqrt(M)`.
pub const NORMAL_KS_FACTOR: f64 = 3.0;
pub const MIXTURE_KS_FACTOR: f64 = 5.0;
/// Median tail fluctuation must stay below this fraction of the median
/// terminal magnitude.
pub const TAIL_FRACTION: f64 = 0.05;
pub const MIN_RELATIVE_VARIANCE: f64 = 1e-6;
pub const MASS_TOL: f64 = 1e-9;
pub const CONSTANT_TOL: f64 = 1e-12;
pub const DIRICHLET_VARIANCE_TOL: f64 = 0.05;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VerifyError {
    #[error("horizon {0} is below the minimum {MIN_HORIZON}")]
    HorizonTooSmall(u64),
    #[error("ensemble {0} is below the minimum {MIN_ENSEMBLE}")]
    EnsembleTooSmall(usize),
    #[error("horizon x ensemble = {product} exceeds the cap {cap}")]
    Cap { product: u128, cap: u64 },
    #[error("class {0:?} has no mixing variable")]
    NoMixing(Family),
    #[error("prediction '{0}' has zero predicted variance")]
    DegenerateVariance(String),
    #[error("prediction '{0}' is not a normal or normal-mixture law")]
    NotGaussian(String),
    #[error("prediction vector '{label}' has length {len}, expected {k}")]
    VectorLength { label: String, len: usize, k: usize },
    #[error("thread pool: {0}")]
    Pool(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleConfig {
    pub horizon: u64,
    pub ensemble: usize,
    pub seed: u64,
    /// Explicit checkpoints; geometric with `per_octave` when absent.
    pub checkpoints: Option<Vec<u64>>,
    pub per_octave: u32,
    pub cap: u64,
    /// Worker count; rayon's default when absent. Never affects results.
    pub threads: Option<usize>,
}

impl EnsembleConfig {
    pub fn new(horizon: u64, ensemble: usize, seed: u64) -> Self {
        Self {
            horizon,
            ensemble,
            seed,
            checkpoints: None,
            per_octave: DEFAULT_PER_OCTAVE,
            cap: DEFAULT_CAP,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.horizon < MIN_HORIZON {
            return Err(VerifyError::HorizonTooSmall(self.horizon));
        }
        if self.ensemble < MIN_ENSEMBLE {
            return Err(VerifyError::EnsembleTooSmall(self.ensemble));
        }
        let product = self.horizon as u128 * self.ensemble as u128;
        if product > self.cap as u128 {
            return Err(VerifyError::Cap { product, cap: self.cap });
        }
        Ok(())
    }

    /// Checkpoint grid, always ending at the horizon.
    pub fn grid(&self) -> Vec<u64> {
        match &self.checkpoints {
            Some(c) => {
                let mut c: Vec<u64> = c.iter().copied().filter(|&n| n <= self.horizon).collect();
                c.sort_unstable();
                c.dedup();
                if c.last() != Some(&self.horizon) {
                    c.push(self.horizon);
                }
                c
            }
            None => geometric_checkpoints(self.horizon, self.per_octave),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsDiagnostics {
    /// Per trajectory, `max |x(n) - x(N)|` over checkpoints `n >= N/4`.
    pub tail_fluctuation: Vec<f64>,
    pub median_tail_fluctuation: f64,
    pub median_abs_terminal: f64,
    pub terminal_variance: f64,
    pub all_positive: bool,
    /// Median over trajectories of `|C_n g / (n^a log n) - C_N h / N^a|`
    /// at each checkpoint, for Jordan chains `R g = h + a g`.
    pub co_convergence_gap: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictionReport {
    pub prediction: LawPrediction,
    /// `raw[m][c]`: track of trajectory `m` at checkpoint `c`.
    pub raw: Vec<Vec<f64>>,
    /// Normalized terminal values, one per trajectory.
    pub terminal: Vec<f64>,
    /// Studentized terminal values, aligned with trajectories; `None` for
    /// dropped entries and for non-Gaussian laws.
    pub z: Option<Vec<Option<f64>>>,
    pub dropped: usize,
    pub ks: Option<KsResult>,
    pub diagnostics: Option<AsDiagnostics>,
    /// Largest deviation of a constant track from its predicted value.
    pub constant_deviation: Option<f64>,
    pub terminal_mean: f64,
    pub terminal_variance: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleReport {
    pub horizon: u64,
    pub ensemble: usize,
    pub seed: u64,
    pub checkpoints: Vec<u64>,
    pub u_hat: Option<Vec<f64>>,
    pub predictions: Vec<PredictionReport>,
    #[serde(skip)]
    pub runtime_secs: f64,
}

impl EnsembleReport {
    pub fn all_pass(&self) -> bool {
        self.predictions.iter().all(|p| p.verdict.pass)
    }

    pub fn get(&self, label: &str) -> Option<&PredictionReport> {
        self.predictions.iter().find(|p| p.prediction.label == label)
    }
}

/// `U_hat = (mixing vector . C_N) / N^s`.
pub fn estimate_u(trajectory: &Trajectory, class: &StructureClass) -> Result<f64, VerifyError> {
    let (v, s) = match (&class.mixing_vector, class.s) {
        (Some(v), Some(s)) => (v, s),
        _ => return Err(VerifyError::NoMixing(class.family)),
    };
    Ok(trajectory.final_dot(v) / (trajectory.horizon as f64).powf(s))
}

/// Normal(sigma^2): `x / sigma`. NormalMixture(c U): `x_i / sqrt(c U_i)`,
/// with entries whose `U_i < U_FLOOR` dropped. Returns the aligned sample and
/// the drop count.
pub fn studentize(
    sample: &[f64],
    prediction: &LawPrediction,
    u_hats: Option<&[f64]>,
) -> Result<(Vec<Option<f64>>, usize), VerifyError> {
    let label = prediction.label.clone();
    match prediction.limit {
        LimitKind::Normal { variance } => {
            if !(variance > 0.0) {
                return Err(VerifyError::DegenerateVariance(label));
            }
            let sd = variance.sqrt();
            Ok((sample.iter().map(|x| Some(x / sd)).collect(), 0))
        }
        LimitKind::NormalMixture { coefficient } => {
            if !(coefficient > 0.0) {
                return Err(VerifyError::DegenerateVariance(label));
            }
            let u = u_hats.ok_or(VerifyError::NoMixing(Family::Unsupported))?;
            let mut dropped = 0;
            let z = sample
                .iter()
                .zip(u)
                .map(|(x, &u)| {
                    if u < U_FLOOR {
                        dropped += 1;
                        None
                    } else {
                        Some(x / (coefficient * u).sqrt())
                    }
                })
                .collect();
            Ok((z, dropped))
        }
        _ => Err(VerifyError::NotGaussian(label)),
    }
}

/// Tail fluctuation, terminal spread and positivity of normalized tracks
/// `normalized[m][c]` on `checkpoints`.
pub fn as_convergence_diag(checkpoints: &[u64], normalized: &[Vec<f64>]) -> AsDiagnostics {
    let horizon = *checkpoints.last().unwrap();
    let tail_start = checkpoints.iter().position(|&n| 4 * n >= horizon).unwrap();
    let tail_fluctuation: Vec<f64> = normalized
        .iter()
        .map(|x| {
            let last = *x.last().unwrap();
            x[tail_start..].iter().fold(0.0f64, |m, v| m.max((v - last).abs()))
        })
        .collect();
    let terminal: Vec<f64> = normalized.iter().map(|x| *x.last().unwrap()).collect();
    let abs: Vec<f64> = terminal.iter().map(|x| x.abs()).collect();
    AsDiagnostics {
        median_tail_fluctuation: stats::median(&tail_fluctuation),
        tail_fluctuation,
        median_abs_terminal: stats::median(&abs),
        terminal_variance: stats::variance(&terminal),
        all_positive: terminal.iter().all(|&x| x > 0.0),
        co_convergence_gap: None,
    }
}

/// Median gap between `g_raw(n) / (n^a log n)` and the terminal estimate
/// `h_raw(N) / N^a` at every checkpoint (NaN below `n = 2`).
pub fn co_convergence_gap(checkpoints: &[u64], g_raw: &[Vec<f64>], h_raw: &[Vec<f64>], a: f64) -> Vec<f64> {
    let horizon = *checkpoints.last().unwrap();
    let target: Vec<f64> = h_raw.iter().map(|h| h.last().unwrap() / Normalization::Power(a).eval(horizon)).collect();
    checkpoints
        .iter()
        .enumerate()
        .map(|(c, &n)| {
            let norm = Normalization::PowerLog(a).eval(n);
            if !norm.is_finite() || norm <= 0.0 {
                return f64::NAN;
            }
            let gaps: Vec<f64> = g_raw.iter().zip(&target).map(|(g, t)| (g[c] / norm - t).abs()).collect();
            stats::median(&gaps)
        })
        .collect()
}

fn normalize(raw: &[f64], norms: &[f64]) -> Vec<f64> {
    raw.iter().zip(norms).map(|(x, n)| x / n).collect()
}

fn judge(
    prediction: &LawPrediction,
    report: &mut PredictionReport,
    normalized: &[Vec<f64>],
    checkpoints: &[u64],
    ensemble: usize,
) {
    let m = ensemble as f64;
    report.verdict = match &prediction.limit {
        LimitKind::Normal { .. } | LimitKind::NormalMixture { .. } => {
            let factor =
                if matches!(prediction.limit, LimitKind::Normal { .. }) { NORMAL_KS_FACTOR } else { MIXTURE_KS_FACTOR };
            let threshold = factor / m.sqrt();
            match report.ks {
                Some(ks) => Verdict {
                    pass: ks.d < threshold,
                    detail: format!(
                        "KS D = {:.5} (threshold {:.5}), p = {:.4}, dropped {}",
                        ks.d, threshold, ks.p, report.dropped
                    ),
                },
                None => Verdict { pass: false, detail: "too few studentized values for KS".into() },
            }
        }
        LimitKind::DeterministicConstant { value } => {
            let dev = normalized.iter().flatten().fold(0.0f64, |d, x| d.max((x - value).abs()));
            report.constant_deviation = Some(dev);
            Verdict { pass: dev <= MASS_TOL, detail: format!("max |x - {value}| = {dev:.3e} (tolerance {MASS_TOL:e})") }
        }
        LimitKind::ExactlyConstantTrack { value } => {
            let dev = report.raw.iter().flatten().fold(0.0f64, |d, x| d.max((x - value).abs()));
            let horizon = *checkpoints.last().unwrap() as f64;
            let scale = prediction.vector.iter().fold(0.0f64, |a, x| a.max(x.abs()));
            let tol = CONSTANT_TOL * (1.0f64).max((horizon + 1.0) * scale);
            report.constant_deviation = Some(dev);
            Verdict { pass: dev <= tol, detail: format!("max |C_n.v - {value}| = {dev:.3e} (tolerance {tol:.1e})") }
        }
        LimitKind::AsRandomVariable { positive, mean, variance, .. } => {
            let diag = report.diagnostics.as_ref().unwrap();
            let mut failures = Vec::new();
            let mut detail = format!(
                "median tail fluctuation {:.4e} vs {:.2} x median |terminal| {:.4e}; terminal variance {:.4e}",
                diag.median_tail_fluctuation, TAIL_FRACTION, diag.median_abs_terminal, diag.terminal_variance
            );
            if let (Some(mu), Some(var)) = (mean, variance) {
                // Exact moments are known: test them instead of the tail.
                let se = (report.terminal_variance / m).sqrt();
                if (report.terminal_mean - mu).abs() > 3.0 * se {
                    failures.push("mean");
                }
                let kurt_se = (2.0 / (m - 1.0)).sqrt();
                let tol = DIRICHLET_VARIANCE_TOL.max(4.0 * kurt_se);
                if (report.terminal_variance / var - 1.0).abs() > tol {
                    failures.push("variance");
                }
                detail = format!(
                    "mean {:.5} vs {mu:.5} (3 se = {:.5}); variance {:.5} vs {var:.5} (tolerance {:.1}%)",
                    report.terminal_mean,
                    3.0 * se,
                    report.terminal_variance,
                    tol * 100.0
                );
            } else if !(diag.median_tail_fluctuation < TAIL_FRACTION * diag.median_abs_terminal) {
                failures.push("tail fluctuation");
            }
            let scale = diag.median_abs_terminal.max(f64::MIN_POSITIVE);
            if !(diag.terminal_variance / (scale * scale) > MIN_RELATIVE_VARIANCE) {
                failures.push("degenerate limit");
            }
            if *positive && !diag.all_positive {
                failures.push("positivity");
            }
            if !failures.is_empty() {
                detail = format!("{detail}; failed: {}", failures.join(", "));
            }
            Verdict { pass: failures.is_empty(), detail }
        }
    };
}

/// Runs the ensemble and evaluates every prediction.
pub fn run_ensemble(
    spec: &ReplacementSpec,
    class: &StructureClass,
    predictions: &[LawPrediction],
    cfg: &EnsembleConfig,
) -> Result<EnsembleReport, VerifyError> {
    cfg.validate()?;
    let start = Instant::now();
    for p in predictions {
        if p.vector.len() != spec.k() {
            return Err(VerifyError::VectorLength { label: p.label.clone(), len: p.vector.len(), k: spec.k() });
        }
    }
    let checkpoints = cfg.grid();
    let needs_u = predictions.iter().any(|p| matches!(p.limit, LimitKind::NormalMixture { .. }));
    if needs_u && class.mixing_vector.is_none() {
        return Err(VerifyError::NoMixing(class.family));
    }
    // Jordan chain partner for the co-convergence gap.
    let chain = jordan_chain(class).ok().filter(|(g, _, _)| {
        predictions.iter().any(|p| {
            p.vector == *g
                && matches!(p.normalization, Normalization::PowerLog(_))
                && matches!(p.limit, LimitKind::AsRandomVariable { .. })
        })
    });

    let mut track_vectors: Vec<Vec<f64>> = predictions.iter().map(|p| p.vector.clone()).collect();
    if let Some((_, h, _)) = &chain {
        track_vectors.push(h.clone());
    }
    let simulate_one = |stream: u64| -> Result<(Vec<Vec<f64>>, Option<f64>), VerifyError> {
        let req = SimulationRequest {
            horizon: cfg.horizon,
            seed: cfg.seed,
            stream,
            checkpoints: checkpoints.clone(),
            track_vectors: track_vectors.clone(),
        };
        let mut t = simulate(spec, &req)?;
        let u = if needs_u { Some(estimate_u(&t, class)?) } else { None };
        Ok((std::mem::take(&mut t.tracks), u))
    };

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cfg.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().map_err(|e| VerifyError::Pool(e.to_string()))?;
    let runs: Vec<(Vec<Vec<f64>>, Option<f64>)> =
        pool.install(|| (0..cfg.ensemble as u64).into_par_iter().map(simulate_one).collect::<Result<Vec<_>, _>>())?;

    let u_hat: Option<Vec<f64>> = if needs_u { Some(runs.iter().map(|r| r.1.unwrap()).collect()) } else { None };
    let mut reports = Vec::with_capacity(predictions.len());
    for (i, p) in predictions.iter().enumerate() {
        let raw: Vec<Vec<f64>> = runs.iter().map(|r| r.0[i].clone()).collect();
        let norms: Vec<f64> = checkpoints.iter().map(|&n| p.normalization.eval(n)).collect();
        let normalized: Vec<Vec<f64>> = raw.iter().map(|x| normalize(x, &norms)).collect();
        let terminal: Vec<f64> = normalized.iter().map(|x| *x.last().unwrap()).collect();
        let mut report = PredictionReport {
            prediction: p.clone(),
            terminal_mean: stats::mean(&terminal),
            terminal_variance: stats::variance(&terminal),
            raw,
            terminal,
            z: None,
            dropped: 0,
            ks: None,
            diagnostics: None,
            constant_deviation: None,
            verdict: Verdict { pass: false, detail: String::new() },
        };
        match p.limit {
            LimitKind::Normal { .. } | LimitKind::NormalMixture { .. } => {
                let (z, dropped) = studentize(&report.terminal, p, u_hat.as_deref())?;
                let kept: Vec<f64> = z.iter().flatten().copied().collect();
                report.ks = stats::ks_standard_normal(&kept).ok();
                report.z = Some(z);
                report.dropped = dropped;
            }
            LimitKind::AsRandomVariable { .. } => {
                let mut diag = as_convergence_diag(&checkpoints, &normalized);
                if let Some((g, _, a)) = &chain {
                    if p.vector == *g {
                        let h_raw: Vec<Vec<f64>> = runs.iter().map(|r| r.0[predictions.len()].clone()).collect();
                        diag.co_convergence_gap = Some(co_convergence_gap(&checkpoints, &report.raw, &h_raw, *a));
                    }
                }
                report.diagnostics = Some(diag);
            }
            _ => {}
        }
        judge(p, &mut report, &normalized, &checkpoints, cfg.ensemble);
        reports.push(report);
    }

    Ok(EnsembleReport {
        horizon: cfg.horizon,
        ensemble: cfg.ensemble,
        seed: cfg.seed,
        checkpoints,
        u_hat,
        predictions: reports,
        runtime_secs: start.elapsed().as_secs_f64(),
    })
}

/// Per-trajectory inner products with `v` of the final compositions;
/// convenience for ad hoc ensembles outside `run_ensemble`.
pub fn terminal_dots(spec: &ReplacementSpec, v: &[f64], cfg: &EnsembleConfig) -> Result<Vec<f64>, VerifyError> {
    cfg.validate()?;
    (0..cfg.ensemble as u64)
        .into_par_iter()
        .map(|stream| {
            let req = SimulationRequest {
                horizon: cfg.horizon,
                seed: cfg.seed,
                stream,
                checkpoints: vec![cfg.horizon],
                track_vectors: vec![],
            };
            Ok(dot(&simulate(spec, &req)?.final_counts, v))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scaling::predict;
    use crate::spectral::classify;

    fn spec(rows: &[&[f64]], c0: &[f64]) -> ReplacementSpec {
        let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
        ReplacementSpec::new(&rows, c0).unwrap()
    }

    fn law(limit: LimitKind) -> LawPrediction {
        LawPrediction {
            label: "x".into(),
            vector: vec![1.0, 0.0],
            normalization: Normalization::SqrtN,
            limit,
            unverified: false,
        }
    }

    #[test]
    fn studentize_arithmetic() {
        let (z, d) = studentize(&[2.0], &law(LimitKind::Normal { variance: 4.0 }), None).unwrap();
        assert_eq!((z, d), (vec![Some(1.0)], 0));
        let (z, d) =
            studentize(&[1.0, 1.0], &law(LimitKind::NormalMixture { coefficient: 2.0 }), Some(&[0.5, 0.0])).unwrap();
        assert_eq!((z, d), (vec![Some(1.0), None], 1));
        assert!(matches!(
            studentize(&[1.0], &law(LimitKind::Normal { variance: 0.0 }), None),
            Err(VerifyError::DegenerateVariance(_))
        ));
        assert!(matches!(
            studentize(&[1.0], &law(LimitKind::DeterministicConstant { value: 1.0 }), None),
            Err(VerifyError::NotGaussian(_))
        ));
    }

    #[test]
    fn estimate_u_arithmetic() {
        let r = spec(&[&[0.45, 0.05, 0.5], &[0.1, 0.4, 0.5], &[0.0, 0.0, 1.0]], &[0.3, 0.2, 0.5]);
        let mut class = classify(&r).unwrap();
        class.s = Some(0.5);
        let t = Trajectory {
            seed: 0,
            stream: 0,
            horizon: 10_000,
            checkpoints: vec![10_000],
            states: vec![],
            tracks: vec![],
            final_counts: vec![60.0, 40.0, 9901.0],
        };
        assert!((estimate_u(&t, &class).unwrap() - 1.0).abs() < 1e-15);
        let tri = spec(&[&[0.6, 0.4], &[0.0, 1.0]], &[0.5, 0.5]);
        assert!(matches!(estimate_u(&t, &classify(&tri).unwrap()), Err(VerifyError::NoMixing(_))));
    }

    #[test]
    fn diag_on_flat_tracks() {
        let cps = vec![1, 10, 100, 400, 1000];
        let d = as_convergence_diag(&cps, &[vec![5.0, 2.0, 1.0, 1.0, 1.0], vec![0.0, 3.0, 1.0, 2.0, 2.0]]);
        assert_eq!(d.tail_fluctuation, vec![0.0, 0.0]);
        assert!(d.all_positive);
        assert_eq!(d.median_abs_terminal, 1.5);
    }

    #[test]
    fn guards() {
        let mut cfg = EnsembleConfig::new(999, 100, 1);
        assert_eq!(cfg.validate(), Err(VerifyError::HorizonTooSmall(999)));
        cfg.horizon = 1000;
        cfg.ensemble = 99;
        assert_eq!(cfg.validate(), Err(VerifyError::EnsembleTooSmall(99)));
        cfg.ensemble = 100;
        cfg.cap = 50_000;
        assert!(matches!(cfg.validate(), Err(VerifyError::Cap { .. })));
        cfg.checkpoints = Some(vec![500, 10, 10, 5000]);
        assert_eq!(cfg.grid(), vec![10, 500, 1000]);
    }

    #[test]
    fn identity_mean_and_mass() {
        let r = spec(&[&[1.0, 0.0], &[0.0, 1.0]], &[0.5, 0.5]);
        let class = classify(&r).unwrap();
        let preds = predict(&class, r.initial()).unwrap();
        let mut cfg = EnsembleConfig::new(1000, 100, 7);
        cfg.per_octave = 2;
        let report = run_ensemble(&r, &class, &preds, &cfg).unwrap();
        let e0 = report.get("e0").unwrap();
        let se = (e0.terminal_variance / 100.0).sqrt();
        assert!((e0.terminal_mean - 0.5).abs() < 3.0 * se);
        assert!(report.get("one").unwrap().verdict.pass);
        assert_eq!(report.get("one").unwrap().constant_deviation, Some(0.0));
    }

    #[test]
    fn report_is_thread_count_invariant() {
        let r = spec(&[&[0.6, 0.4], &[0.0, 1.0]], &[0.5, 0.5]);
        let class = classify(&r).unwrap();
        let preds = predict(&class, r.initial()).unwrap();
        let mut cfg = EnsembleConfig::new(2000, 100, 11);
        cfg.threads = Some(1);
        let a = run_ensemble(&r, &class, &preds, &cfg).unwrap();
        cfg.threads = Some(3);
        let b = run_ensemble(&r, &class, &preds, &cfg).unwrap();
        assert_eq!(a.predictions, b.predictions);
        assert!(a.get("xi").unwrap().diagnostics.as_ref().unwrap().all_positive);
    }
}
