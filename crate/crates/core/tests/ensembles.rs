use rand::Rng;

use urnlab::scaling::{predict, LimitKind};
use urnlab::spectral::classify;
use urnlab::stats::{self, ks_standard_normal, ks_two_sample};
use urnlab::urn::{stream_rng, ReplacementSpec};
use urnlab::verify::{run_ensemble, terminal_dots, EnsembleConfig, EnsembleReport};

fn spec(rows: &[&[f64]], c0: &[f64]) -> ReplacementSpec {
    let rows: Vec<Vec<f64>> = rows.iter().map(|r| r.to_vec()).collect();
    ReplacementSpec::new(&rows, c0).unwrap()
}

fn run(r: &ReplacementSpec, horizon: u64, m: usize, seed: u64) -> EnsembleReport {
    let class = classify(r).unwrap();
    let preds = predict(&class, r.initial()).unwrap();
    run_ensemble(r, &class, &preds, &EnsembleConfig::new(horizon, m, seed)).unwrap()
}

#[test]
fn same_seed_same_report() {
    let r = spec(&[&[0.7, 0.3], &[0.4, 0.6]], &[0.5, 0.5]);
    let (a, b) = (run(&r, 2_000, 200, 9), run(&r, 2_000, 200, 9));
    assert_eq!(a.predictions, b.predictions);
    assert_ne!(run(&r, 2_000, 200, 10).predictions, a.predictions);
}

#[test]
fn mass_track_has_no_fluctuation() {
    let r = spec(&[&[0.625, 0.375], &[0.0, 1.0]], &[0.5, 0.5]);
    let report = run(&r, 5_000, 100, 1);
    let one = report.get("one").unwrap();
    assert_eq!(one.constant_deviation, Some(0.0));
    assert!(one.verdict.pass);
}

#[test]
fn triangular_limit_is_positive_and_random() {
    let r = spec(&[&[0.6, 0.4], &[0.0, 1.0]], &[0.5, 0.5]);
    let report = run(&r, 20_000, 100, 2);
    let xi = report.get("xi").unwrap();
    let d = xi.diagnostics.as_ref().unwrap();
    assert!(d.all_positive);
    assert!(d.terminal_variance > 1e-6);
}

#[test]
fn limit_depends_on_initial_state() {
    let a = run(&spec(&[&[0.6, 0.4], &[0.0, 1.0]], &[0.5, 0.5]), 10_000, 400, 3);
    let b = run(&spec(&[&[0.6, 0.4], &[0.0, 1.0]], &[0.9, 0.1]), 10_000, 400, 4);
    let (xa, xb) = (a.get("xi").unwrap(), b.get("xi").unwrap());
    let se = (xa.terminal_variance / 400.0 + xb.terminal_variance / 400.0).sqrt();
    assert!((xa.terminal_mean - xb.terminal_mean).abs() > 3.0 * se);
}

#[test]
fn mixing_variable_depends_on_initial_state() {
    let rows: &[&[f64]] = &[&[0.325, 0.175, 0.5], &[0.175, 0.325, 0.5], &[0.0, 0.0, 1.0]];
    let a = run(&spec(rows, &[0.25, 0.25, 0.5]), 10_000, 400, 5);
    let b = run(&spec(rows, &[0.45, 0.45, 0.1]), 10_000, 400, 6);
    let (ua, ub) = (a.u_hat.unwrap(), b.u_hat.unwrap());
    assert!(stats::variance(&ua) > 0.0);
    let se = (stats::variance(&ua) / 400.0 + stats::variance(&ub) / 400.0).sqrt();
    assert!((stats::mean(&ua) - stats::mean(&ub)).abs() > 3.0 * se);
}

#[test]
fn collapsing_two_dominant_colors_gives_triangular_law() {
    let three = spec(&[&[0.6, 0.3, 0.1], &[0.0, 0.75, 0.25], &[0.0, 0.25, 0.75]], &[0.5, 0.25, 0.25]);
    let two = spec(&[&[0.6, 0.4], &[0.0, 1.0]], &[0.5, 0.5]);
    let n = 10_000u64;
    let mut cfg = EnsembleConfig::new(n, 1_000, 7);
    let w3 = terminal_dots(&three, &[1.0, 0.0, 0.0], &cfg).unwrap();
    cfg.seed = 8;
    let w2 = terminal_dots(&two, &[1.0, 0.0], &cfg).unwrap();
    let scale = (n as f64).powf(0.6);
    let a: Vec<f64> = w3.iter().map(|w| w / scale).collect();
    let b: Vec<f64> = w2.iter().map(|w| w / scale).collect();
    assert!(ks_two_sample(&a, &b).unwrap().p > 0.01);
}

#[test]
fn ks_rejects_uniform_sample() {
    let mut rng = stream_rng(0, 0);
    let sample: Vec<f64> = (0..10_000).map(|_| rng.gen_range(-3.0..3.0)).collect();
    assert!(ks_standard_normal(&sample).unwrap().p < 0.01);
}

#[test]
fn wrong_variance_fails_verdict() {
    let r = spec(&[&[0.7, 0.3], &[0.4, 0.6]], &[4.0 / 7.0, 3.0 / 7.0]);
    let class = classify(&r).unwrap();
    let mut preds = predict(&class, r.initial()).unwrap();
    let cfg = EnsembleConfig::new(10_000, 1_000, 12);
    assert!(run_ensemble(&r, &class, &preds, &cfg).unwrap().get("xi").unwrap().verdict.pass);
    for p in &mut preds {
        if let LimitKind::Normal { variance } = &mut p.limit {
            *variance *= 2.0;
        }
    }
    assert!(!run_ensemble(&r, &class, &preds, &cfg).unwrap().get("xi").unwrap().verdict.pass);
}
