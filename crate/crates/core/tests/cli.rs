use std::path::Path;
use std::process::{Command, Output};

fn heatgauge(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_heatgauge"))
        .args(args)
        .env_remove("HEATGAUGE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn report(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn list_names_every_suite() {
    let out = heatgauge(&["list"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    for name in heatgauge::verifier::suite_names() {
        assert!(text.lines().any(|l| l == name), "{name} missing");
    }
}

#[test]
fn finite_sweep_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for d in [&a, &b] {
        let out = heatgauge(&["run", "--suite", "finite-sweep", "--seed", "7", "--out", d.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    let ja = std::fs::read(a.join("report.json")).unwrap();
    assert_eq!(ja, std::fs::read(b.join("report.json")).unwrap());
    assert_eq!(std::fs::read(a.join("report.csv")).unwrap(), std::fs::read(b.join("report.csv")).unwrap());
    let v = report(&a);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["suites"][0]["config"]["seed"], 7);
}

#[test]
fn hypercontractivity_reports_the_gaussian_equality_case() {
    let dir = tempfile::tempdir().unwrap();
    let out = heatgauge(&[
        "run",
        "--suite",
        "hypercontractivity",
        "--geometry",
        "euclidean:1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let v = report(dir.path());
    let rows = v["suites"][0]["rows"].as_array().unwrap();
    let eq = rows
        .iter()
        .find(|r| {
            r["function"].as_str().unwrap().starts_with("exp(") && r["expectation"] == "holds" && r["claim"] == "hypercontractivity"
        })
        .expect("equality row");
    let (lhs, rhs) = (eq["lhs"].as_f64().unwrap(), eq["rhs"].as_f64().unwrap());
    assert!((lhs - rhs).abs() <= 1e-10 * rhs, "{lhs} vs {rhs}");
    assert!(rows.iter().any(|r| r["expectation"] == "violated" && r["verdict"] == "FAIL"));
}

#[test]
fn cd_check_prints_the_witness() {
    let out = heatgauge(&["cd-check"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().any(|l| l.starts_with("z ")));
    assert!(text.contains("cd-check"));
}

#[test]
fn plot_data_emits_csv() {
    let out = heatgauge(&["plot-data", "--suite", "pointwise-bound", "--geometry", "euclidean:1"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("suite,claim,geometry,function,x,lhs,rhs,verdict"));
    assert!(lines.count() >= 40);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out_arg = out_dir.to_str().unwrap();

    let bad_field = dir.path().join("bad.json");
    std::fs::write(&bad_field, r#"{"suite": "finite-sweep", "sede": 3}"#).unwrap();
    let out = heatgauge(&["run", "--config", bad_field.to_str().unwrap(), "--out", out_arg]);
    assert_eq!(code(&out), 2);
    let msg = String::from_utf8_lossy(&out.stderr);
    assert!(msg.contains("sede") && msg.contains("line 1"), "{msg}");

    let zero_horizon = dir.path().join("t.json");
    std::fs::write(&zero_horizon, "{\n  \"suite\": \"pointwise-bound\",\n  \"times\": {\"T\": 0}\n}").unwrap();
    let out = heatgauge(&["run", "--config", zero_horizon.to_str().unwrap(), "--out", out_arg]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stderr).contains("times.T"));

    assert_eq!(code(&heatgauge(&["run", "--suite", "no-such-suite", "--out", out_arg])), 2);
    assert_eq!(code(&heatgauge(&["run", "--suite", "cd-check", "--geometry", "euclidean:1", "--out", out_arg])), 2);
    assert_eq!(code(&heatgauge(&["run", "--suite", "finite-sweep", "--geometry", "sphere", "--out", out_arg])), 2);
    assert_eq!(code(&heatgauge(&["run", "--out", out_arg])), 2);
    let missing = dir.path().join("missing.json");
    assert_eq!(code(&heatgauge(&["run", "--config", missing.to_str().unwrap(), "--out", out_arg])), 2);

    let bad_p = dir.path().join("p.json");
    std::fs::write(&bad_p, r#"[{"suite": "norm-monotonicity", "geometry": "euclidean:1", "p": 0.5}]"#).unwrap();
    assert_eq!(code(&heatgauge(&["run", "--config", bad_p.to_str().unwrap(), "--out", out_arg])), 2);

    let out = Command::new(env!("CARGO_BIN_EXE_heatgauge"))
        .args(["run", "--suite", "finite-sweep", "--out", out_arg])
        .env("HEATGAUGE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(code(&out), 2);
    assert!(!out_dir.join("report.json").exists());
}

#[test]
fn runtime_errors_exit_with_three() {
    let dir = tempfile::tempdir().unwrap();
    // The output directory cannot be created below a regular file.
    let file = dir.path().join("file");
    std::fs::write(&file, "x").unwrap();
    let out = heatgauge(&["run", "--suite", "finite-sweep", "--out", file.join("sub").to_str().unwrap()]);
    assert_eq!(code(&out), 3);

    // A function outside the class a suite needs is reported with the claim id.
    let cfg = dir.path().join("generic.json");
    std::fs::write(&cfg, r#"{"suite": "harmonic-fixed-point", "geometry": "euclidean:1", "functions": ["ball(1)"]}"#)
        .unwrap();
    let out = heatgauge(&["run", "--config", cfg.to_str().unwrap(), "--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 3);
    assert!(String::from_utf8_lossy(&out.stderr).contains("[harmonic-fixed-point]"));
}
