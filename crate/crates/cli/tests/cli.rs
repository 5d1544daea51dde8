use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nlperi::grid::io::read_field;
use nlperi::grid::GridVectorField;
use nlperi_cli::config::ExperimentConfig;
use nlperi_cli::experiments::{run, run_verify, solve_with};
use nlperi_cli::report::Report;

fn nlperi(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut c = Command::new(env!("CARGO_BIN_EXE_nlperi"));
    c.args(args).env_remove("NLPERI_THREADS");
    for (k, v) in envs {
        c.env(k, v);
    }
    c.output().expect("binary runs")
}

fn small() -> ExperimentConfig {
    ExperimentConfig { n: 16, kmax: 3, ..ExperimentConfig::default() }
}

fn report(path: &Path) -> Report {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn defaults_output_is_a_valid_config() {
    let o = nlperi(&["defaults"], &[]);
    assert!(o.status.success());
    let cfg = ExperimentConfig::from_toml(&String::from_utf8(o.stdout).unwrap()).unwrap();
    assert_eq!(cfg, ExperimentConfig::default());
}

#[test]
fn solve_writes_fields_that_read_back() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = nlperi(&["solve", "--n", "16", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("PASS cg_residual") && stdout.contains("PASS weak_residual"));

    let r = report(&out.join("solve.json"));
    assert_eq!(r.schema_version, 1);
    assert_eq!(r.files.len(), 4);
    assert!(r.passed());
    let (hdr, u) = read_field::<f64>(&out.join("u.field")).unwrap();
    assert_eq!(hdr.n, 16);
    assert_eq!(u.n(), 16);
    let (_, ds) = read_field::<f64>(&out.join("ds.field")).unwrap();
    let (_, up) = read_field::<f64>(&out.join("upsilon.field")).unwrap();
    assert!(ds.values().iter().zip(up.values()).all(|(a, b)| a <= b));
    assert!(fs::read_to_string(out.join("convergence.csv")).unwrap().lines().count() > 1);

    // the binary and the library agree, and the file holds the same field
    let cfg = ExperimentConfig { n: 16, experiment: "solve".into(), ..ExperimentConfig::default() };
    let lib = run("solve", &cfg, None, None).unwrap();
    assert_eq!(lib.data, r.data);
    assert_eq!(lib.config_hash, r.config_hash);
    assert!((u.l2_norm() - r.data["u_l2"].as_f64().unwrap()).abs() < 1e-12);
}

#[test]
fn zero_load_gives_zero_outputs() {
    let cfg = small();
    let r = solve_with(&cfg, &GridVectorField::zeros(16, 2), None).unwrap();
    assert_eq!(r.data["u_l2"].as_f64().unwrap(), 0.0);
    assert_eq!(r.data["iterations"].as_u64().unwrap(), 0);
}

#[test]
fn verify_selects_one_group() {
    let r = run_verify(&small(), Some("horizon_split")).unwrap();
    assert_eq!(r.checks.len(), 1);
    assert_eq!(r.checks[0].name, "horizon_split");
    assert!(r.passed());

    let dir = tempfile::tempdir().unwrap();
    let o = nlperi(&["verify", "--check", "local_limit", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(report(&dir.path().join("verify.json")).checks.len(), 2);
}

#[test]
fn unknown_check_and_bad_config_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    assert!(run_verify(&small(), Some("nope")).is_err());
    let o = nlperi(&["verify", "--check", "nope", "--out", d], &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("unknown check"));
    assert_eq!(nlperi(&["solve", "--n", "24", "--out", d], &[]).status.code(), Some(2));
    assert_eq!(nlperi(&["korn", "--check", "korn", "--out", d], &[]).status.code(), Some(2));
    let bad = dir.path().join("bad.toml");
    fs::write(&bad, "no_such_key = 3\n").unwrap();
    assert_eq!(nlperi(&["solve", "--config", bad.to_str().unwrap(), "--out", d], &[]).status.code(), Some(2));
    assert_eq!(nlperi(&["solve", "--out", d], &[("NLPERI_THREADS", "zero")]).status.code(), Some(2));
}

#[test]
fn failing_literal_checks_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = nlperi(&["verify", "--check", "stein", "--out", dir.path().to_str().unwrap()], &[]);
    assert_eq!(o.status.code(), Some(1));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.contains("FAIL stein_summation_minus_two"));
    assert!(stdout.contains("PASS stein_summation_plus_four"));
}

#[test]
fn config_file_prefix_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, "s = 0.3\nhorizon_list = [0.2, 0.1]\n[output]\nprefix = \"a_\"\n").unwrap();
    let out = dir.path().join("o");
    let o = nlperi(&["local-limit", "--config", cfg.to_str().unwrap(), "--s", "0.6", "--out", out.to_str().unwrap()], &[]);
    assert!(o.status.success());
    let r = report(&out.join("a_local-limit.json"));
    assert!(out.join("a_local_limit.csv").exists());
    let expect = ExperimentConfig { s: 0.6, horizon_list: vec![0.2, 0.1], experiment: "local-limit".into(), ..ExperimentConfig::default() };
    assert_eq!(r.config_hash, expect.hash());
}

#[test]
fn same_config_same_json_any_thread_count() {
    let a = run("solve", &small(), None, None).unwrap().to_json();
    let b = run("solve", &small(), None, None).unwrap().to_json();
    assert_eq!(a, b);

    let dir = tempfile::tempdir().unwrap();
    let (o1, o2) = (dir.path().join("1"), dir.path().join("2"));
    for (o, threads) in [(&o1, "1"), (&o2, "3")] {
        let out = nlperi(&["gfunction", "--n", "16", "--out", o.to_str().unwrap()], &[("NLPERI_THREADS", threads)]);
        assert!(out.status.code().is_some_and(|c| c < 2));
    }
    let strip = |o: &Path| {
        let mut r = report(&o.join("gfunction.json"));
        r.files.clear();
        r.to_json()
    };
    assert_eq!(strip(&o1), strip(&o2));
    assert_eq!(fs::read(o1.join("g1.field")).unwrap(), fs::read(o2.join("g1.field")).unwrap());
}
