use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_monotone-sdi"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(format!("{name}.toml"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

const BUNDLED: [&str; 8] = [
    "identity",
    "strongly_monotone_linear",
    "skew_rotation",
    "abs_value",
    "hinge",
    "hinge_off",
    "line_restricted",
    "affine_cone",
];

#[test]
fn bundled_scenarios_validate() {
    for name in BUNDLED {
        let path = scenario(name);
        let o = run(&["validate", "--scenario", path.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{name}: {}", stderr(&o));
        assert!(stdout(&o).starts_with(&format!("{name}: valid")));
    }
}

#[test]
fn line_restricted_runs_clean_with_oracle_row() {
    let out = tempfile::tempdir().unwrap();
    let path = scenario("line_restricted");
    let o = run(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--paths",
        "64",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = stdout(&o);
    assert!(table.lines().any(|l| l.starts_with("exact_oracle") && l.contains("rms t=10")), "{table}");
    assert!(table.contains("paths 64"));
    for f in ["manifest", "ensemble.csv", "concentration.csv", "checks.csv", "paths/path_0.csv"] {
        assert!(out.path().join("report").join(f).is_file(), "{f}");
    }

    // re-reading the report reproduces the table without simulating
    let o2 = run(&["report", "--in", out.path().to_str().unwrap()]);
    assert_eq!(o2.status.code(), Some(0));
    assert_eq!(stdout(&o2), table);
}

#[test]
fn corrupted_scenario_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    let text = fs::read_to_string(scenario("identity")).unwrap().replace("dim = 1", "dim = = 1");
    fs::write(&bad, text).unwrap();
    let o = run(&["run", "--scenario", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("parse error at line"), "{}", stderr(&o));

    let o = run(&["validate", "--scenario", dir.path().join("missing.toml").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));

    let invalid = dir.path().join("invalid.toml");
    let text = fs::read_to_string(scenario("identity")).unwrap().replace("p = 1.0", "p = 0.4");
    fs::write(&invalid, text).unwrap();
    let o = run(&["validate", "--scenario", invalid.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("`noise.p`: requires p > 1/2"), "{}", stderr(&o));
}

#[test]
fn zero_slack_on_a_noisy_run_is_a_violation() {
    let dir = tempfile::tempdir().unwrap();
    let tight = dir.path().join("tight.toml");
    let text = fs::read_to_string(scenario("identity"))
        .unwrap()
        .replace("[checks.strong_rate]", "[checks.strong_rate]\nslack = 0.0")
        .replace("sigma0 = 0.5", "sigma0 = 2.0");
    fs::write(&tight, text).unwrap();
    let out = dir.path().join("out");
    let o = run(&["run", "--scenario", tight.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2), "{}{}", stdout(&o), stderr(&o));
    assert!(stdout(&o).contains("VIOLATED"));
    // the stored report keeps the verdict
    let o = run(&["report", "--in", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn report_plot_data_and_missing_manifest() {
    let out = tempfile::tempdir().unwrap();
    let path = scenario("skew_rotation");
    let o = run(&[
        "run",
        "--scenario",
        path.to_str().unwrap(),
        "--paths",
        "32",
        "--out",
        out.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let o = run(&["report", "--in", out.path().to_str().unwrap(), "--plot-data"]);
    assert_eq!(o.status.code(), Some(0));
    let text = fs::read_to_string(out.path().join("report/plot/ergodic_gap_function.csv")).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("t,value"));
    let ts: Vec<f64> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(ts.len() > 10);
    assert!(ts.windows(2).all(|w| w[1] > w[0]));

    let empty = tempfile::tempdir().unwrap();
    let o = run(&["report", "--in", empty.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("no manifest"));
}

#[test]
fn command_line_overrides_file_values() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("s.toml");
    let text = fs::read_to_string(scenario("identity"))
        .unwrap()
        .replace("n_paths = 256", "n_paths = 40")
        .replace("master_seed = 1", "master_seed = 9");
    fs::write(&file, text).unwrap();
    let manifest = |out: &Path| -> serde_json::Value {
        serde_json::from_str(&fs::read_to_string(out.join("report/manifest")).unwrap()).unwrap()
    };

    let a = dir.path().join("a");
    let o = run(&["run", "--scenario", file.to_str().unwrap(), "--out", a.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(manifest(&a)["n_paths"], 40);
    assert_eq!(manifest(&a)["master_seed"], 9);

    let b = dir.path().join("b");
    let o = run(&[
        "run",
        "--scenario",
        file.to_str().unwrap(),
        "--out",
        b.to_str().unwrap(),
        "--paths",
        "20",
        "--seed",
        "3",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(manifest(&b)["n_paths"], 20);
    assert_eq!(manifest(&b)["master_seed"], 3);
    assert_ne!(manifest(&a)["digest"], manifest(&b)["digest"]);
}

#[test]
fn worker_count_does_not_change_the_report() {
    let path = scenario("abs_value");
    let mut reports = Vec::new();
    // one output directory, since it is part of the digest in the manifest
    let out = tempfile::tempdir().unwrap();
    for threads in ["1", "2", "8"] {
        let o = bin()
            .env("MONOTONE_SDI_THREADS", threads)
            .args(["run", "--scenario", path.to_str().unwrap(), "--paths", "64"])
            .args(["--out", out.path().to_str().unwrap()])
            .output()
            .unwrap();
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let files: Vec<String> = ["ensemble.csv", "checks.csv", "concentration.csv", "paths/path_0.csv", "manifest"]
            .iter()
            .map(|f| fs::read_to_string(out.path().join("report").join(f)).unwrap())
            .collect();
        reports.push(files);
    }
    assert!(reports[0] == reports[1] && reports[0] == reports[2]);

    let o = bin()
        .env("MONOTONE_SDI_THREADS", "lots")
        .args(["run", "--scenario", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["run"]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}
