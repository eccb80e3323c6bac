use std::fs;
use std::process::{Command, Output};

fn mee(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mee")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn estimate_without_alpha_is_a_usage_error() {
    let o = mee(&["estimate", "--data", "whatever.csv"]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("--alpha") && err.contains("Usage"), "{err}");
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let o = mee(&["rates", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn help_exits_cleanly() {
    let o = mee(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
    for sub in ["simulate", "estimate", "experiment", "oracle", "rates"] {
        assert!(stdout(&o).contains(sub));
    }
}

#[test]
fn simulate_is_deterministic() {
    let a = mee(&["simulate", "--seed", "7", "--n", "300"]);
    let b = mee(&["simulate", "--seed", "7", "--n", "300"]);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    let c = mee(&["simulate", "--seed", "8", "--n", "300"]);
    assert_ne!(a.stdout, c.stdout);
    let text = stdout(&a);
    assert!(text.starts_with("x_1,x_2,y_1,"));
    assert_eq!(text.lines().count(), 301);
}

#[test]
fn oracle_prints_independence_root() {
    let o = mee(&[
        "oracle",
        "--copula",
        "independence",
        "--d",
        "2",
        "--gamma",
        "0.5",
        "--n",
        "2000",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("Θ* (analytic) = (0.5, 1)"), "{text}");
}

#[test]
fn estimate_round_trip_writes_json() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let out = dir.path().join("result.json");
    let o = mee(&[
        "simulate",
        "--seed",
        "3",
        "--n",
        "3000",
        "--copula",
        "clayton",
        "--theta",
        "1",
        "--covariate",
        "constant",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0));
    let o = mee(&[
        "estimate",
        "--data",
        data.to_str().unwrap(),
        "--alpha",
        "0.995",
        "--kn",
        "150",
        "--metric",
        "sup",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["k_n"], 150);
    assert_eq!(v["expectile"].as_array().unwrap().len(), 2);
}

#[test]
fn runtime_failures_exit_with_two() {
    let o = mee(&["estimate", "--data", "/nonexistent/data.csv", "--alpha", "0.99"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("/nonexistent/data.csv"));
}

#[test]
fn malformed_dataset_names_the_location() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("bad.csv");
    fs::write(&data, "x_1,x_2,y_1\n1,2,0\n1,abc,0\n").unwrap();
    let o = mee(&["estimate", "--data", data.to_str().unwrap(), "--alpha", "0.99"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn experiment_writes_one_row_per_replication() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    fs::write(
        &cfg,
        r#"{"model": {"margins": [{"kind": "lomax", "scale": 1.0}, {"kind": "lomax", "scale": 1.0}],
            "gamma": {"intercept": 0.5}, "copula": {"family": "comonotone"},
            "covariate": {"kind": "constant", "grid_size": 20}},
            "sizes": [500, 1000], "replications": 2, "master_seed": 1}"#,
    )
    .unwrap();
    let run = |threads: &str| {
        Command::new(env!("CARGO_BIN_EXE_mee"))
            .args(["experiment", "--config", cfg.to_str().unwrap()])
            .env("MEE_THREADS", threads)
            .output()
            .unwrap()
    };
    let o = run("1");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    assert!(text.lines().next().unwrap().starts_with("n,rep,seed,gamma_hat"));
}

#[test]
fn rates_reports_the_plan() {
    let o = mee(&[
        "rates",
        "--n",
        "10000",
        "--alpha-n",
        "0.99",
        "--psi",
        "1",
        "--kn",
        "10000",
        "--gamma",
        "0.5",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    // k_n = ⌈nψ̂⌉ selects the ball branch: min(γ (1-α_n)^{-γ}, (nψ̂)^{1/2}) = min(5, 100)
    assert!((v["combined"].as_f64().unwrap() - 5.0).abs() < 1e-9);
    assert!((v["ball_component"].as_f64().unwrap() - 100.0).abs() < 1e-9);
}
