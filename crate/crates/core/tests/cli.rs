use std::process::Command;

fn procure(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_procure")).args(args).output().expect("binary runs")
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(procure(&["--help"]).status.code(), Some(0));
    assert_eq!(procure(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(procure(&["experiment", "--replications", "0"]).status.code(), Some(1));
    assert_eq!(procure(&["run-auction", "--mechanism", "vcg"]).status.code(), Some(1));
}

#[test]
fn example2_prints_reference_values() {
    let out = procure(&["reproduce", "example2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("0.4140"));
    assert!(text.contains("0.7408"));
}

#[test]
fn run_auction_emits_outcome() {
    let dir = tempfile::tempdir().unwrap();
    let env = dir.path().join("env.json");
    std::fs::write(
        &env,
        r#"{"task": {"value": 4.0, "deadline": 1.0},
            "providers": [
              {"duration": {"kind": "exponential", "params": {"rate": 1.0}},
               "cost_model": {"kind": "uniform", "params": {"lo": 0.0, "hi": 1.0}}, "true_cost": 0.2},
              {"duration": {"kind": "exponential", "params": {"rate": 1.0}},
               "cost_model": {"kind": "uniform", "params": {"lo": 0.0, "hi": 1.0}}}
            ]}"#,
    )
    .unwrap();
    let out_file = dir.path().join("out.json");
    let out = procure(&[
        "run-auction",
        "--env",
        env.to_str().unwrap(),
        "--bids",
        "0.2,0.2",
        "--mechanism",
        "bm2",
        "--out",
        out_file.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out_file).unwrap()).unwrap();
    let paid = v["outcome"]["payments"]["payments"][0][1].as_f64().unwrap();
    assert!((paid - 0.465).abs() < 0.005);

    let bad = procure(&["run-auction", "--env", env.to_str().unwrap(), "--bids", "0.2,1.5"]);
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn verify_rejects_unverifiable_mechanisms() {
    assert_eq!(procure(&["verify", "--mechanism", "bm4", "--suite", "quick"]).status.code(), Some(1));
    assert_eq!(procure(&["verify", "--mechanism", "bm2", "--suite", "quick"]).status.code(), Some(0));
}

#[test]
fn experiment_writes_tables() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.json");
    std::fs::write(&config, r#"{"replications": 5, "n_min": 2, "n_max": 3, "seed": 3}"#).unwrap();
    let out = dir.path().join("out");
    let args = [
        "experiment",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--setting",
        "2,3",
        "--replications",
        "2",
        "--mechanism",
        "wgpa,bm1",
    ];
    let status = procure(&args);
    assert_eq!(status.status.code(), Some(0), "{}", String::from_utf8_lossy(&status.stderr));
    for f in ["setting2.csv", "setting3.csv", "results.jsonl", "summary.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let csv = std::fs::read_to_string(out.join("setting2.csv")).unwrap();
    // Header plus two replications of two mechanisms.
    assert_eq!(csv.lines().count(), 5);
    let first = std::fs::read(out.join("results.jsonl")).unwrap();
    procure(&args);
    assert_eq!(std::fs::read(out.join("results.jsonl")).unwrap(), first);
}
