use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn urnlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_urnlab")).args(args).output().unwrap()
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let path = dir.join("config.toml");
    fs::write(&path, body).unwrap();
    path
}

const TWO_COLOR: &str =
    "[model]\nreplacement = [[0.7, 0.3], [0.4, 0.6]]\ninitial = [0.5714285714285714, 0.42857142857142855]\n";

fn run_in(dir: &Path, body: &str, extra: &[&str]) -> Output {
    let config = write_config(dir, body);
    let out = dir.join("out");
    let mut args = vec![extra[0], "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend(&extra[1..]);
    urnlab(&args)
}

#[test]
fn demo_config_passes_at_default_scale() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = urnlab(&[
        "verify",
        "--config",
        repo_config("two_color.toml").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let verdicts = fs::read_to_string(out.join("verdicts.txt")).unwrap();
    assert_eq!(verdicts.lines().count(), 2);
    assert!(verdicts.lines().all(|l| l.starts_with("PASS")));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["all_pass"], true);
    assert_eq!(summary["family"], "TwoIrreducible");
}

#[test]
fn sample_files_have_the_documented_columns() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(dir.path(), TWO_COLOR, &["verify", "--horizon", "2000", "--ensemble", "100"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("out/samples_xi.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "trajectory_id,checkpoint_n,raw_value,normalized_value,z_value,U_hat");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    let terminal: Vec<_> = rows.iter().filter(|r| r[1] == "2000").collect();
    assert_eq!(terminal.len(), 100);
    assert!(terminal.iter().all(|r| !r[4].is_empty() && r[5].is_empty()));
    assert!(rows.iter().filter(|r| r[1] != "2000").all(|r| r[4].is_empty()));
}

#[test]
fn mixture_samples_carry_u_hat() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[model]\nreplacement = [[0.325, 0.175, 0.5], [0.175, 0.325, 0.5], [0.0, 0.0, 1.0]]\ninitial = [0.25, 0.25, 0.5]\n[run]\npredictions = [\"xi\"]\n";
    let o = run_in(dir.path(), body, &["verify", "--horizon", "2000", "--ensemble", "100"]);
    assert!(o.status.code() == Some(0) || o.status.code() == Some(1));
    let text = fs::read_to_string(dir.path().join("out/samples_xi.csv")).unwrap();
    let terminal: Vec<Vec<&str>> =
        text.lines().skip(1).map(|l| l.split(',').collect::<Vec<&str>>()).filter(|r| r[1] == "2000").collect();
    assert!(terminal.iter().all(|r| r[5].parse::<f64>().unwrap() > 0.0));
    assert!(!dir.path().join("out/samples_u.csv").exists());
}

#[test]
fn unsupported_matrix_exits_2_with_classification() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[model]\nreplacement = [[0.5, 0.25, 0.25], [0.25, 0.5, 0.25], [0.25, 0.25, 0.5]]\ninitial = [0.5, 0.25, 0.25]\n";
    let o = run_in(dir.path(), body, &["all", "--horizon", "2000", "--ensemble", "100"]);
    assert_eq!(o.status.code(), Some(2));
    let c: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("out/classification.json")).unwrap()).unwrap();
    assert_eq!(c["class"]["family"], "Unsupported");
    assert_eq!(c["predictions"].as_array().unwrap().len(), 0);
    assert!(!dir.path().join("out/verdicts.txt").exists());
}

#[test]
fn degenerate_start_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let body =
        "[model]\nreplacement = [[0.45, 0.05, 0.5], [0.1, 0.4, 0.5], [0.0, 0.0, 1.0]]\ninitial = [0.0, 0.0, 1.0]\n";
    let o = run_in(dir.path(), body, &["classify"]);
    assert_eq!(o.status.code(), Some(2));
    let c = fs::read_to_string(dir.path().join("out/classification.json")).unwrap();
    assert!(c.contains("no mass on the non-dominant colors"));
}

#[test]
fn injected_variance_fails() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_in(
        dir.path(),
        TWO_COLOR,
        &["verify", "--horizon", "10000", "--ensemble", "1000", "--inject-variance-scale", "2.0"],
    );
    assert_eq!(o.status.code(), Some(1));
    let verdicts = fs::read_to_string(dir.path().join("out/verdicts.txt")).unwrap();
    assert!(verdicts.lines().any(|l| l.starts_with("FAIL xi")));
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let o =
        run_in(dir.path(), "[model]\nreplacement = [[1.1, -0.1], [0.0, 1.0]]\ninitial = [0.5, 0.5]\n", &["classify"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("model.replacement[0][1]"));

    let o = run_in(dir.path(), TWO_COLOR, &["verify", "--horizon", "1000000000", "--ensemble", "1000000"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("resource cap"));

    let body = format!("{TWO_COLOR}[run]\npredictions = [\"nope\"]\n");
    let o = run_in(dir.path(), &body, &["verify", "--horizon", "2000", "--ensemble", "100"]);
    assert_eq!(o.status.code(), Some(3));

    assert_eq!(urnlab(&["classify"]).status.code(), Some(3));
    assert_eq!(urnlab(&["frobnicate"]).status.code(), Some(3));
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_bit_identical_across_worker_counts() {
    let dir = tempfile::tempdir().unwrap();
    let body = "[model]\nreplacement = [[0.325, 0.175, 0.5], [0.175, 0.325, 0.5], [0.0, 0.0, 1.0]]\ninitial = [0.25, 0.25, 0.5]\n";
    let mut snaps = Vec::new();
    for threads in [1, 3] {
        let sub = dir.path().join(format!("t{threads}"));
        fs::create_dir(&sub).unwrap();
        let o = run_in(
            &sub,
            &format!("{body}[run]\nthreads = {threads}\n"),
            &["all", "--horizon", "3000", "--ensemble", "200"],
        );
        assert!(matches!(o.status.code(), Some(0) | Some(1)));
        snaps.push(snapshot(&sub.join("out")));
    }
    assert_eq!(snaps[0], snaps[1]);
    assert!(snaps[0].iter().any(|(name, _)| name == "summary.json"));
}

#[test]
fn committed_configs_parse() {
    for name in ["two_color.toml", "three_color.toml", "four_color.toml"] {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("out");
        let o = urnlab(&["predict", "--config", repo_config(name).to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}");
    }
}
