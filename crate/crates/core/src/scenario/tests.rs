use super::*;
use crate::noise::Schedule;
use proptest::prelude::*;

const MINIMAL: &str = r#"
[operator]
kind = "identity"
dim = 1

[noise]
schedule = "zero"
"#;

fn validation(text: &str) -> (String, String) {
    match parse_scenario(text) {
        Err(Error::Validation { field, rule }) => (field, rule),
        other => panic!("expected a validation error, got {other:?}"),
    }
}

#[test]
fn minimal_scenario_gets_defaults() {
    let s = parse_scenario(MINIMAL).unwrap();
    let integ = &s.experiment.integrator;
    assert_eq!(integ.grid().h(), 1.0 / 128.0);
    assert_eq!(integ.grid().t_end(), 20.0);
    assert_eq!(integ.grid().steps(), 2560);
    assert!(integ.noise().is_zero());
    assert_eq!(integ.tikhonov(), TikhonovSchedule::PowerEps { eps0: 1.0, q: 0.5 });
    assert_eq!(s.thin, 8);
    assert_eq!(s.ensemble.n_paths, 256);
    assert_eq!(s.ensemble.master_seed, 0);
    assert_eq!(s.ensemble.retain_paths, 8);
    assert_eq!(s.experiment.x0.as_slice(), &[1.0]);
    assert_eq!(s.experiment.context.metrics(), &[MetricKind::DistSqToZeroSet]);
    assert!(s.checks.is_empty());
    assert_eq!(s.name, "scenario");
    assert_eq!(s.digest.len(), 64);

    let noise = NoiseRecord::default();
    assert_eq!((noise.schedule, noise.sigma0, noise.p), (ScheduleKind::PowerDecay, 0.5, 1.0));
    let s = parse_scenario("[operator]\nkind = \"identity\"\ndim = 2\n").unwrap();
    assert_eq!(
        s.experiment.integrator.noise().schedule(),
        Schedule::PowerDecay { sigma0: 0.5, p: 1.0 }
    );
}

#[test]
fn hypothesis_violations_are_named() {
    let text = r#"
[operator]
kind = "identity"
dim = 1
[noise]
p = 0.4
[tikhonov]
kind = "off"
[checks.strong_rate]
"#;
    assert_eq!(validation(text), ("noise.p".into(), "requires p > 1/2".into()));

    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[tikhonov]\nq = 1.2\n";
    assert_eq!(validation(text), ("tikhonov.q".into(), "requires 0 < q < 1".into()));

    // the default Tikhonov schedule is on, which the rate checks exclude
    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[checks.strong_rate]\n";
    assert_eq!(validation(text).0, "tikhonov.kind");

    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[tikhonov]\nkind = \"off\"\n[checks.tikhonov]\n";
    assert_eq!(validation(text).0, "tikhonov.kind");

    let text = "[operator]\nkind = \"linear\"\nq = [[0.0, -1.0], [1.0, 0.0]]\n[tikhonov]\nkind = \"off\"\n[checks.strong_rate]\n";
    assert_eq!(validation(text).0, "checks.strong_rate");

    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[noise]\nschedule = \"constant\"\n[tikhonov]\nkind = \"off\"\n[checks.ergodic_value]\n";
    assert_eq!(validation(text).0, "noise.schedule");

    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[grid]\nh = 0.1\nT = 0.5\n";
    assert_eq!(validation(text), ("grid.T".into(), "requires T >= 10 h".into()));

    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[grid]\nh = 1e-9\n";
    assert_eq!(validation(text).0, "grid.h");

    let text = "[operator]\nkind = \"linear\"\nq = [[1.0, 0.0], [0.0]]\n";
    assert_eq!(validation(text), ("operator.q".into(), "rows must have equal length".into()));

    let text = "[operator]\nkind = \"linear\"\nq = [[-1.0]]\n";
    assert_eq!(validation(text).0, "operator");

    let text = "[operator]\nkind = \"scaled\"\nfactor = 2.0\n[operator.inner]\nkind = \"linear\"\nq = [[1.0]]\nb = [1.0, 2.0]\n";
    assert_eq!(validation(text), ("operator.inner.b".into(), "must have 1 entries".into()));

    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[ensemble]\nn_paths = 0\n";
    assert_eq!(validation(text).0, "ensemble.n_paths");

    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[[metrics]]\nkind = \"value_gap\"\n[[metrics]]\nkind = \"dist_sq_to_point\"\npoint = [1.0, 2.0]\n";
    assert_eq!(validation(text).0, "metrics[1].point");

    let text = "[operator]\nkind = \"linear\"\nq = [[0.0, -1.0], [1.0, 0.0]]\n[[metrics]]\nkind = \"value_gap\"\n";
    assert_eq!(validation(text).0, "metrics.value_gap");
}

#[test]
fn parse_errors_carry_positions() {
    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[grid]\nh = = 2\n";
    match parse_scenario(text) {
        Err(Error::Parse { line, col, .. }) => {
            assert_eq!(line, 5);
            assert!(col >= 1);
        }
        other => panic!("{other:?}"),
    }
    // unknown keys are rejected where they occur
    let text = "[operator]\nkind = \"identity\"\ndim = 1\n[grid]\nstep = 0.1\n";
    match parse_scenario(text) {
        Err(Error::Parse { line, message, .. }) => {
            assert_eq!(line, 5);
            assert!(message.contains("step"), "{message}");
        }
        other => panic!("{other:?}"),
    }
    assert!(matches!(parse_scenario(""), Err(Error::Parse { .. })));
    assert!(matches!(
        parse_scenario("[operator]\nkind = \"hexagon\"\n"),
        Err(Error::Parse { line: 1, .. } | Error::Parse { line: 2, .. })
    ));
    assert_eq!(line_col("ab\ncd", 4), (2, 2));
    assert_eq!(line_col("é\nx", 1), (1, 1));
}

#[test]
fn initial_condition_presets() {
    let base = "[operator]\nkind = \"linear\"\nq = [[2.0, 1.0], [-1.0, 1.0]]\nb = [-1.0, 1.0]\n";
    let star = parse_scenario(&format!("x0 = \"zero_set_point\"\n{base}")).unwrap().experiment.x0;
    let q = Matrix::from_row_slice(2, 2, &[2.0, 1.0, -1.0, 1.0]);
    assert!((q * &star + Vector::from_vec(vec![-1.0, 1.0])).norm() < 1e-12);

    for preset in ["offset:[1, -0.5]", "offset:1,-0.5"] {
        let x0 = parse_scenario(&format!("x0 = \"{preset}\"\n{base}")).unwrap().experiment.x0;
        assert!((x0 - &star - Vector::from_vec(vec![1.0, -0.5])).norm() < 1e-15);
    }
    let x0 = parse_scenario(&format!("x0 = [3, 4]\n{base}")).unwrap().experiment.x0;
    assert_eq!(x0.as_slice(), &[3.0, 4.0]);

    for bad in ["\"offset:1\"", "\"middle\"", "[1.0]", "\"offset:a,b\""] {
        assert_eq!(validation(&format!("x0 = {bad}\n{base}")).0, "x0");
    }

    let line = "[operator]\nkind = \"restricted_quadratic\"\nh = [[1.0, 0.0], [0.0, 0.0]]\nc = [[0.0, 1.0]]\nd = [0.0]\n";
    assert_eq!(validation(&format!("x0 = [1.0, 1.0]\n{line}")), ("x0".into(), "must lie in the closure of dom A".into()));
    let s = parse_scenario(line).unwrap();
    assert_eq!(s.experiment.x0.as_slice(), &[1.0, 0.0]);

    let point_domain = "[operator]\nkind = \"sum\"\nq = [[0.0]]\nb = [1.0]\nc = [[1.0]]\nd = [0.0]\n";
    assert!(parse_scenario(point_domain).is_ok());
    let empty = "x0 = \"zero_set_point\"\n[operator]\nkind = \"linear\"\nq = [[0.0]]\nb = [1.0]\n";
    assert_eq!(validation(empty).0, "x0");
}

#[test]
fn digest_tracks_content() {
    let a = parse_scenario(MINIMAL).unwrap().digest;
    let explicit = format!("{MINIMAL}sigma0 = 0.5\n[grid]\nT = 20\nh = 0.0078125\n");
    assert_eq!(parse_scenario(&explicit).unwrap().digest, a);
    let changed = format!("{MINIMAL}[grid]\nT = 10\n");
    assert_ne!(parse_scenario(&changed).unwrap().digest, a);
    let seeded = parse_scenario_with(
        MINIMAL,
        &Overrides {
            master_seed: Some(9),
            ..Default::default()
        },
    )
    .unwrap();
    assert_ne!(seeded.digest, a);

    let lo = |v: &str| {
        let text = format!(
            "[operator]\nkind = \"separable_plq\"\n[[operator.coords]]\nkind = \"custom\"\nlo = {v}\npieces = [[1.0, 0.0, 0.0]]\n"
        );
        parse_scenario(&text).map(|s| s.digest)
    };
    assert_ne!(lo("-inf").unwrap(), lo("-5.0").unwrap());

    let file = ScenarioFile::from_toml(MINIMAL).unwrap();
    let again = ScenarioFile::from_toml(&file.to_canonical_toml()).unwrap();
    assert_eq!(again, file);
}

#[test]
fn override_precedence() {
    // defaults < file < command line
    let file_text = format!("{MINIMAL}[ensemble]\nn_paths = 100\nmaster_seed = 5\n");
    assert_eq!(parse_scenario(MINIMAL).unwrap().ensemble.n_paths, 256);
    let from_file = parse_scenario(&file_text).unwrap();
    assert_eq!((from_file.ensemble.n_paths, from_file.ensemble.master_seed), (100, 5));
    let o = Overrides {
        master_seed: Some(7),
        n_paths: Some(50),
        output_dir: Some("elsewhere".into()),
    };
    let cli = parse_scenario_with(&file_text, &o).unwrap();
    assert_eq!((cli.ensemble.n_paths, cli.ensemble.master_seed), (50, 7));
    assert_eq!(cli.output_dir, Some(PathBuf::from("elsewhere")));
    // retain_paths is clamped by validation, not silently
    let o = Overrides {
        n_paths: Some(4),
        ..Default::default()
    };
    assert!(matches!(
        parse_scenario_with(MINIMAL, &o),
        Err(Error::Validation { field, .. }) if field == "ensemble.retain_paths"
    ));
}

#[test]
fn checks_pull_in_their_metrics() {
    let text = r#"
name = "quad"
[operator]
kind = "linear"
q = [[1.0]]
[tikhonov]
kind = "off"
[checks.strong_rate]
slack = 0.0
[checks.ergodic_value]
[checks.concentration]
times = [5.0, 10.0]
[checks.gap_slope]
K = { kind = "ball" }
window = [5.0, 20.0]
[checks.exact_oracle]
"#;
    let s = parse_scenario(text).unwrap();
    assert_eq!(s.name, "quad");
    let names: Vec<&str> = s.checks.iter().map(|c| c.name()).collect();
    assert_eq!(names, ["strong_rate", "ergodic_value", "concentration", "gap_slope", "exact_oracle"]);
    let metrics: Vec<&str> = s.experiment.context.metrics().iter().map(|m| m.name()).collect();
    for m in [
        "dist_sq_to_point",
        "ergodic_value_gap",
        "ergodic_dist_sq_to_point",
        "aux_delta",
        "ergodic_gap_function",
        "exact_error_sq",
    ] {
        assert!(metrics.contains(&m), "{m} missing from {metrics:?}");
    }
    assert!(matches!(s.checks[0], CheckSpec::StrongRate { slack } if slack == 0.0));

    let bad_window = text.replace("window = [5.0, 20.0]", "window = [5.0, 40.0]");
    assert_eq!(validation(&bad_window).0, "checks.gap_slope.window");
    let bad_times = text.replace("times = [5.0, 10.0]", "times = [0.0]");
    assert_eq!(validation(&bad_times).0, "checks.concentration.times");
}

#[test]
fn operator_records_cover_the_catalog() {
    let cases = [
        "kind = \"identity\"\ndim = 3",
        "kind = \"linear\"\nq = [[1.0, 0.0], [0.0, 2.0]]\nb = [0.5, 0.0]",
        "kind = \"separable_plq\"\ncoords = [{ kind = \"abs\" }, { kind = \"hinge\", radius = 2.0 }, { kind = \"quadratic\", a = 1.0 }, { kind = \"indicator\", lo = -1.0, hi = 1.0 }]",
        "kind = \"affine_normal_cone\"\nc = [[1.0, 1.0]]\nd = [1.0]",
        "kind = \"sum\"\nq = [[1.0, 0.0], [0.0, 1.0]]\nc = [[1.0, 1.0]]\nd = [1.0]",
        "kind = \"shifted\"\nshift = [1.0]\ninner = { kind = \"identity\", dim = 1 }",
        "kind = \"scaled\"\nfactor = 0.5\ninner = { kind = \"separable_plq\", coords = [{ kind = \"abs\" }] }",
        "kind = \"separable_plq\"\ncoords = [{ kind = \"hinge\" }]\nerror_bound = { p = 1.0, gamma = 1.0, level = 1.0 }",
    ];
    let dims = [3, 2, 4, 2, 2, 1, 1, 1];
    for (body, d) in cases.iter().zip(dims) {
        let s = parse_scenario(&format!("[operator]\n{body}\n")).unwrap_or_else(|e| panic!("{body}: {e}"));
        assert_eq!(s.experiment.integrator.op().dim(), d);
    }
    let text = "[operator]\nkind = \"affine_normal_cone\"\nc = [[1.0, 1.0]]\nd = [1.0]\nerror_bound = { p = 1.0, gamma = 1.0, level = 1.0 }\n";
    assert!(matches!(parse_scenario(text), Err(Error::Parse { .. })));
}

const FUZZ_BASE: &str = r#"
x0 = [1.5, -0.5]
[operator]
kind = "linear"
q = [[1.0, 0.0], [0.0, 2.0]]
b = [0.0, 0.0]
[noise]
schedule = "power_decay"
sigma0 = 0.5
p = 1.0
[tikhonov]
kind = "off"
[grid]
T = 2.0
h = 0.0625
thin = 2
[ensemble]
n_paths = 16
master_seed = 3
retain_paths = 2
[[metrics]]
kind = "ergodic_gap_function"
region = { kind = "box", lo = [-1.0, -1.0], hi = [1.0, 1.0] }
n_grid = 5
[checks.strong_rate]
slack = 3.0
[checks.concentration]
eps_levels = [1.0, 2.0]
times = [1.0, 2.0]
"#;

fn number_literal() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("0".to_string()),
        Just("-1".to_string()),
        Just("0.0".to_string()),
        Just("-0.5".to_string()),
        Just("1e308".to_string()),
        Just("-1e-300".to_string()),
        Just("inf".to_string()),
        Just("-inf".to_string()),
        Just("nan".to_string()),
        Just("\"x\"".to_string()),
        Just("[]".to_string()),
        Just("9223372036854775807".to_string()),
        (-1e3f64..1e3).prop_map(|v| format!("{v:?}")),
        (0u32..40).prop_map(|v| v.to_string()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn arbitrary_text_never_panics(text in "\\PC{0,200}") {
        let _ = parse_scenario(&text);
    }

    #[test]
    fn mutated_values_never_panic(slot in 0usize..64, lit in number_literal()) {
        // replace the value of one `key = value` line
        let mut lines: Vec<String> = FUZZ_BASE.lines().map(String::from).collect();
        let idx: Vec<usize> = (0..lines.len()).filter(|&i| lines[i].contains(" = ")).collect();
        let i = idx[slot % idx.len()];
        let key = lines[i].split(" = ").next().unwrap().to_string();
        lines[i] = format!("{key} = {lit}");
        let _ = parse_scenario(&lines.join("\n"));
    }

    #[test]
    fn truncated_files_never_panic(cut in 0usize..600) {
        let cut = cut.min(FUZZ_BASE.len());
        let _ = parse_scenario(&FUZZ_BASE[..cut]);
    }
}

#[test]
fn fuzz_base_is_valid() {
    parse_scenario(FUZZ_BASE).unwrap();
}
