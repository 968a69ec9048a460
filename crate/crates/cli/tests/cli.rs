use std::path::PathBuf;
use std::process::{Command, Output};

fn hmimo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hmimo"))
        .args(args)
        .env("HMIMO_THREADS", "2")
        .output()
        .unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hmimo-cli-{name}-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

const SMALL: &str = r#"experiment = "snr-sweep"
n_trials = 100
modes = ["full", "none"]

[array]
layout = "grid"
spacing_wavelengths = 0.5

[users]
mode = "equal"
gain = 1.0

[sweep]
variable = "snr_db"
values = [0, 10]
"#;

#[test]
fn run_writes_the_csv() {
    let dir = scratch("run");
    let cfg = dir.join("small.toml");
    std::fs::write(&cfg, format!("output_dir = {:?}\n{SMALL}", dir.display().to_string())).unwrap();
    let out = hmimo(&["run", cfg.to_str().unwrap(), "--unit", "bits"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("bits"));
    let csv = std::fs::read_to_string(dir.join("snr-sweep.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("experiment,seed,mode,M,K,snr_db,x_name,x_value,analytic_nats,mc_mean_nats,mc_ci95,solver_t_star")
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let fields: Vec<&str> = row.split(',').collect();
        assert_eq!(fields.len(), 12);
        assert!(fields[0].starts_with("snr-sweep@"));
        assert_eq!(fields[1], "1");
        assert!(!fields[8].is_empty() && fields[11].is_empty());
    }
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn misspelled_keys_are_rejected() {
    let dir = scratch("typo");
    let cfg = dir.join("typo.toml");
    std::fs::write(&cfg, SMALL.replace("n_trials", "n_trails")).unwrap();
    let out = hmimo(&["run", cfg.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("n_trails"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn describe_known_and_unknown() {
    let out = hmimo(&["describe", "csi-error"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("experiment = \"csi-error\""));
    assert!(!hmimo(&["describe", "fig-9"]).status.success());
}

#[test]
fn validate_reports_every_check() {
    let dir = scratch("validate");
    let out = hmimo(&["validate", "--output-dir", dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    let report = std::fs::read_to_string(dir.join("validate.txt")).unwrap();
    assert_eq!(report.lines().filter(|l| l.starts_with("PASS")).count(), 6);
    std::fs::remove_dir_all(&dir).unwrap();
}
