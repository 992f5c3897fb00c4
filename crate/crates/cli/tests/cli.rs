use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn smbparse(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_smbparse"))
        .args(args)
        .current_dir(cwd)
        .env_remove("SMBPARSE_WORKERS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn write(dir: &Path, name: &str, text: &str) {
    fs::write(dir.join(name), text).unwrap();
}

const M1_GROWING: &str = r#"{
  "schema_version": 1,
  "model": "builtin:M1",
  "n_grid": [1000, 10000, 100000],
  "seeds": [7],
  "experiments": [
    {"kind": "convergence", "parser": {"family": "growing", "schedule": "sqrt"}, "mode": "as", "tolerance": 0.02},
    {"kind": "perturbation", "parser": {"family": "growing", "schedule": "sqrt"},
     "plan": {"kind": "trim", "left": 0, "right": 1}, "tolerance": 0.02}
  ]
}"#;

#[test]
fn verify_suites_pass() {
    let dir = tempfile::tempdir().unwrap();
    for suite in ["martingale", "parsing", "measures"] {
        let o = smbparse(&["verify", "--suite", suite], dir.path());
        assert_eq!(code(&o), 0, "{suite}: {}", String::from_utf8_lossy(&o.stdout));
        assert!(String::from_utf8_lossy(&o.stdout).contains("0 failed"));
    }
    let o = smbparse(&["verify", "--suite", "martingale", "--csv", "v.csv"], dir.path());
    assert_eq!(code(&o), 0);
    let csv = fs::read_to_string(dir.path().join("v.csv")).unwrap();
    assert!(csv.starts_with("check_name,model_id,parameters,residual,bound,pass\n"));
}

#[test]
fn corrupted_model_is_an_invariant_failure() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "bad.json",
        r#"{"alphabet_size": 2, "variant": "markov", "transition": [[0.71, 0.3], [0.2, 0.8]], "initial": [0.4, 0.6]}"#,
    );
    let o = smbparse(&["verify", "--suite", "all", "--model", "bad.json"], dir.path());
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stdout).contains("FAIL"));
    let o = smbparse(&["verify", "--model", "missing.json"], dir.path());
    assert_eq!(code(&o), 4);
}

#[test]
fn simulate_is_deterministic_and_reportable() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.json", M1_GROWING);
    let a = smbparse(&["simulate", "--config", "cfg.json", "--out", "a", "--workers", "1"], dir.path());
    assert_eq!(code(&a), 0, "{}", String::from_utf8_lossy(&a.stderr));
    let b = smbparse(&["simulate", "--config", "cfg.json", "--out", "b", "--workers", "3"], dir.path());
    assert_eq!(code(&b), 0);
    let csv_a = fs::read(dir.path().join("a/results.csv")).unwrap();
    assert_eq!(csv_a, fs::read(dir.path().join("b/results.csv")).unwrap());
    assert!(!csv_a.contains(&b'\r'));
    let text = String::from_utf8(csv_a).unwrap();
    assert!(text.starts_with(
        "N,seed,parser_family,parser_params,blockwise_info[estimate],smb_info[estimate],residual[estimate],c_over_N[estimate],target[oracle],deviation[estimate]\n"
    ));
    assert_eq!(text.lines().count(), 7);
    assert!(text.contains("schedule=sqrt;perturbation=trim(0,1)"));

    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["pass"], true);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("a/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["config_sha256"], summary["config_sha256"]);
    assert!(manifest["rng_algorithm"].as_str().unwrap().contains("ChaCha8"));

    let r = smbparse(&["report", "a"], dir.path());
    assert_eq!(code(&r), 0);
    let plots: Vec<_> = fs::read_dir(dir.path().join("a/plots")).unwrap().collect();
    assert_eq!(plots.len(), 2);
}

#[test]
fn worker_count_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "cfg.json", M1_GROWING);
    let o = Command::new(env!("CARGO_BIN_EXE_smbparse"))
        .args(["simulate", "--config", "cfg.json", "--out", "env"])
        .current_dir(dir.path())
        .env("SMBPARSE_WORKERS", "2")
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let manifest: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("env/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["workers"], 2);
}

#[test]
fn counterexample_report_has_two_series() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "cfg.json",
        r#"{
          "schema_version": 1,
          "model": "builtin:H1",
          "n_grid": {"geometric": {"start": 1000, "stop": 100000, "per_decade": 2, "both_parities": true}},
          "seeds": [11],
          "experiments": [{"kind": "counterexample", "k": 4, "epsilon_schedule": [0.1, 0.05], "tolerance": {"relative": 0.02}}]
        }"#,
    );
    assert_eq!(code(&smbparse(&["simulate", "--config", "cfg.json", "--out", "run"], dir.path())), 0);
    let summary: serde_json::Value = serde_json::from_slice(&fs::read(dir.path().join("run/summary.json")).unwrap()).unwrap();
    let e = &summary["experiments"][0];
    assert!(e["oracle"]["fixed_limit"].is_number() && e["oracle"]["split_limit"].is_number());
    assert!(e["statistics"]["even_avg"].is_number() && e["statistics"]["odd_avg"].is_number());
    assert_eq!(code(&smbparse(&["report", "run"], dir.path())), 0);
    let plot = fs::read_dir(dir.path().join("run/plots")).unwrap().next().unwrap().unwrap().path();
    let text = fs::read_to_string(plot).unwrap();
    assert!(text.starts_with("series\tN\testimate\toracle_even\toracle_odd\n"));
    assert!(text.lines().any(|l| l.starts_with("even\t")) && text.lines().any(|l| l.starts_with("odd\t")));
}

#[test]
fn precondition_and_input_failures() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "gap.json",
        r#"{"schema_version": 1, "model": "builtin:M1", "n_grid": [1000, 1001, 2000, 2001], "seeds": [1],
            "experiments": [{"kind": "counterexample", "k": 4, "epsilon_schedule": [0.05], "tolerance": {"absolute": 0.01}}]}"#,
    );
    let o = smbparse(&["simulate", "--config", "gap.json", "--out", "x"], dir.path());
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stderr).contains("gap"));

    write(dir.path(), "bad.json", &M1_GROWING.replace("\"seeds\"", "\"sedes\": [1], \"seeds\""));
    let o = smbparse(&["simulate", "--config", "bad.json"], dir.path());
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stderr).contains("sedes"));

    fs::create_dir(dir.path().join("empty")).unwrap();
    assert_eq!(code(&smbparse(&["report", "empty"], dir.path())), 4);
    assert_eq!(code(&smbparse(&["simulate", "--config", "nope.json"], dir.path())), 4);
}
