use std::path::Path;
use std::process::{Command, Output};

fn meshlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_meshlab")).args(args).output().expect("binary runs")
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const STUDY: &str = r#"
problem = "trig"
m = 2.0
mu1 = 0
h_sequence = [0.2, 0.1, 0.05]

[kernel]
family = "matern"
nu = 6.5
shape = 2.5
"#;

#[test]
fn predict_prints_table_cells() {
    let out = meshlab(&["predict", "--m", "3", "--m-tilde", "7", "--mu1", "1", "--n", "2"]);
    assert!(out.status.success());
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "2");
    let out = meshlab(&["predict", "--m", "2", "--m-tilde", "6", "--mu1", "1", "--n", "2"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "None");
}

#[test]
fn predict_without_inputs_is_usage_error() {
    assert_eq!(meshlab(&["predict"]).status.code(), Some(2));
}

#[test]
fn unknown_subcommand_is_usage_error() {
    assert_eq!(meshlab(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn convergence_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "study.toml", STUDY);
    let out_dir = dir.path().join("out");
    let out = meshlab(&["convergence", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--quiet"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    for f in ["report.json", "errors.csv", "rates.csv"] {
        assert!(out_dir.join(f).exists(), "{f}");
    }
    let rates = std::fs::read_to_string(out_dir.join("rates.csv")).unwrap();
    assert!(rates.starts_with("norm,fitted,stderr,predicted,verdict"));
}

#[test]
fn seed_flag_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let body = STUDY.replace("problem = \"trig\"", "problem = \"trig\"\nstrategy = \"halton\"");
    let cfg = write(dir.path(), "study.toml", &body);
    let run = |sub: &str, seed: &str| {
        let o = dir.path().join(sub);
        let out = meshlab(&["convergence", "--config", &cfg, "--out", o.to_str().unwrap(), "--seed", seed, "--quiet"]);
        assert!(out.status.code().is_some());
        std::fs::read(o.join("report.json")).unwrap()
    };
    assert_eq!(run("a", "7"), run("b", "7"));
}

#[test]
fn inadmissible_config_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &STUDY.replace("mu1 = 0", "mu1 = 2"));
    let out = meshlab(&["convergence", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("None"));
    let cfg = write(dir.path(), "typo.toml", &format!("shape_typo = 1\n{STUDY}"));
    assert_eq!(meshlab(&["solve", "--config", &cfg]).status.code(), Some(2));
}

#[test]
fn solve_reports_errors() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "study.toml", STUDY);
    let out = meshlab(&["solve", "--config", &cfg, "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("error W^{2,2}"));
    assert!(dir.path().join("solve.json").exists());
}

#[test]
fn verifiers_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let frac = write(dir.path(), "frac.toml", "gradient = [1.0]\nepsilons = [0.5]\nradii = [1.0, 0.5, 0.25]\n");
    let o = dir.path().join("frac");
    let out = meshlab(&["verify-fractional", "--config", &frac, "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    assert!(o.join("report.json").exists());

    let samp = write(
        dir.path(),
        "samp.toml",
        "function = \"trig\"\nfills = [0.1, 0.05, 0.025]\n[[trials]]\nr = 2.0\nmu = 0\nl = 1.0\n",
    );
    let o = dir.path().join("samp");
    let out = meshlab(&["verify-sampling", "--config", &samp, "--out", o.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(o.join("sampling.csv")).unwrap();
    assert!(csv.starts_with("d,lhs,term1,term2,c_emp\n"));
    assert_eq!(csv.lines().count(), 4);
}
