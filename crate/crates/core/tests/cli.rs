use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ds-bandits"))
        .args(args)
        .env_remove("DS_BANDITS_WORKERS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn small_config(dir: &std::path::Path) -> std::path::PathBuf {
    let mut config = ds_bandits::presets::gaussian_mixture();
    config.horizon = 500;
    config.replications = 12;
    config.out = None;
    let path = dir.join("config.json");
    std::fs::write(&path, config.to_json()).unwrap();
    path
}

#[test]
fn run_writes_identical_csv_for_any_worker_count() {
    let dir = tempfile::tempdir().unwrap();
    let config = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let out = cli(&["run", "--config", config.to_str().unwrap(), "--workers", "1", "--out", a.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let table = stdout(&out);
    assert!(table.contains("5% quantile") && table.contains("95% quantile") && table.contains("±"));
    assert!(table.contains("RDS sqrt_log"));
    let env_run = Command::new(env!("CARGO_BIN_EXE_ds-bandits"))
        .args(["run", "--config", config.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("DS_BANDITS_WORKERS", "3")
        .output()
        .unwrap();
    assert!(env_run.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let summaries = ds_bandits::harness::read_csv(&a).unwrap();
    assert_eq!(summaries.len(), 5);
    assert!(summaries.iter().all(|s| s.final_row().unwrap().checkpoint == 500));

    let reseeded = dir.path().join("c.csv");
    cli(&["run", "--config", config.to_str().unwrap(), "--seed", "9", "--out", reseeded.to_str().unwrap()]);
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&reseeded).unwrap());
}

#[test]
fn run_exit_codes() {
    let out = cli(&["run"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("--config"));

    assert_eq!(cli(&["run", "--config", "/nonexistent/config.json"]).status.code(), Some(1));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"instance\": [], \"policies\": [], \"horizon\": 1, \"replications\": 1}").unwrap();
    let out = cli(&["run", "--config", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("instance"));

    let config = small_config(dir.path());
    let under_file = config.join("x.csv");
    let out = cli(&["run", "--config", config.to_str().unwrap(), "--out", under_file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bcp_command() {
    let out = cli(&["bcp", "--points", "0,1", "--mu", "0.5"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("exact        0.5\n"));

    let out = cli(&["bcp", "--points", "0,0,2", "--mu", "0.5"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.contains("--draws"), "{text}");
    assert!(text.contains("lower bound  0.513417"));

    let out = cli(&["bcp", "--points", "0,0,2", "--mu", "0.5", "--draws", "200000", "--seed", "1"]);
    let text = stdout(&out);
    let mc: f64 = text
        .lines()
        .find(|l| l.starts_with("monte carlo"))
        .and_then(|l| l.split_whitespace().nth(2))
        .unwrap()
        .parse()
        .unwrap();
    assert!((mc - 0.5625).abs() < 0.005, "{mc}");

    assert_eq!(cli(&["bcp", "--points", "-1,-2", "--mu", "-1.5"]).status.code(), Some(0));
}

#[test]
fn kinf_command() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("curve.csv");
    let out = cli(&[
        "kinf", "--family", "bernoulli", "--params", "0.2", "--mu", "0.5", "--sizes", "10,100,1000", "--reps", "20",
        "--out", path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout(&out).contains("slope"));
    let csv = std::fs::read_to_string(&path).unwrap();
    assert!(csv.starts_with("n,mean_log_kinf,stderr\n"));
    assert_eq!(csv.lines().count(), 4);

    let out = cli(&["kinf", "--family", "gauss", "--params", "2,1", "--mu", "3", "--sizes", "10,100,1000", "--reps", "10"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("n,mean_log_kinf,stderr\n"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("slope"));

    let out = cli(&["kinf", "--family", "exp", "--params", "0.5", "--mu", "1", "--sizes", "10", "--reps", "2"]);
    assert_eq!(out.status.code(), Some(2));
    let out = cli(&["kinf", "--family", "gauss", "--params", "2", "--mu", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn check_quantile_command() {
    let out = cli(&["check-quantile", "--family", "gauss", "--params", "0,1", "--mu", "1", "--alpha", "0.05", "--rho", "1"]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert!(text.starts_with("rho,kinf_truncated,kinf_family,holds\n"));
    assert!(text.trim_end().ends_with("true"), "{text}");

    let out = cli(&[
        "check-quantile", "--family", "exp", "--params", "0.5", "--mu", "3", "--alpha", "0.05", "--rho-sweep", "1:30:30",
    ]);
    assert!(out.status.success());
    let rows: Vec<(f64, bool)> = stdout(&out)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[3] == "true")
        })
        .collect();
    assert_eq!(rows.len(), 30);
    assert!(rows.windows(2).all(|w| w[1].0 <= w[0].0 + 1e-12));
    assert!(!rows[0].1 && rows[29].1);

    assert_eq!(cli(&["check-quantile", "--family", "exp", "--params", "0.5", "--mu", "3", "--alpha", "0.05"]).status.code(), Some(2));
    assert_eq!(
        cli(&["check-quantile", "--family", "bernoulli", "--params", "0.2", "--mu", "0.5", "--alpha", "0.05", "--rho", "1"]).status.code(),
        Some(2)
    );
}

#[test]
fn presets_command() {
    let out = cli(&["presets"]);
    assert!(out.status.success());
    for name in ["gaussian_mixture", "bds_uniform", "robustness", "kinf", "yield_like"] {
        assert!(stdout(&out).contains(name));
    }
    let out = cli(&["presets", "bds_uniform"]);
    let config: ds_bandits::harness::ExperimentConfig = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(config.policies.len(), 4);
    let out = cli(&["presets", "kinf"]);
    assert_eq!(stdout(&out).lines().count(), 3);
    assert!(stdout(&out).contains("--family exp"));
    assert_eq!(cli(&["presets", "nope"]).status.code(), Some(2));
}
