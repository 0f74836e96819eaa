use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use nelson_lab::config::BUNDLED;
use nelson_lab::{run_scenario, ExperimentId, ScenarioConfig};

fn lab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nelson-lab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn bundled_text(name: &str) -> String {
    BUNDLED
        .iter()
        .find(|(n, _)| *n == name)
        .expect("bundled")
        .1
        .to_string()
}

fn write_scenario(dir: &Path, text: &str) -> String {
    let p = dir.join("scenario.toml");
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn bundled_scenarios_parse_and_validate() {
    for (name, _) in BUNDLED {
        let cfg = ScenarioConfig::bundled(name).unwrap();
        cfg.validate().unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(cfg.name, *name);
    }
}

#[test]
fn missing_sigma_is_a_config_error_naming_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let text: String = bundled_text("variable-1d")
        .lines()
        .filter(|l| !l.starts_with("sigma"))
        .map(|l| format!("{l}\n"))
        .collect();
    let path = write_scenario(dir.path(), &text);
    let o = lab(&[
        "--scenario",
        &path,
        "--out",
        dir.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sigma"), "{}", stderr(&o));
}

#[test]
fn unknown_field_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = bundled_text("variable-1d").replacen("sigma = 0.25", "sigma = 0.25\nsgima = 1.0", 1);
    let path = write_scenario(dir.path(), &text);
    let o = lab(&["--scenario", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sgima"));
}

#[test]
fn kappa_above_the_aliasing_cap_is_rejected_before_compute() {
    let dir = tempfile::tempdir().unwrap();
    let text = bundled_text("variable-1d").replace(
        "kappa_ladder = [1.0, 1.5, 2.0, 3.0]",
        "kappa_ladder = [1.0, 400.0]",
    );
    let path = write_scenario(dir.path(), &text);
    let out = dir.path().join("out");
    let o = lab(&["--scenario", &path, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("aliasing cap"), "{}", stderr(&o));
    assert!(!out.join("summary.csv").exists());
}

#[test]
fn experiment_in_the_wrong_dimension_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let text = bundled_text("variable-1d")
        .replace("\"symbol-order\"]", "\"symbol-order\", \"nelson-log\"]");
    let path = write_scenario(dir.path(), &text);
    let o = lab(&["--scenario", &path]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dim = 3"), "{}", stderr(&o));
}

#[test]
fn unknown_experiment_id_and_scenario_are_config_errors() {
    assert_eq!(
        lab(&["--scenario", "variable-1d", "--only", "nope"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        lab(&["--scenario", "no-such-scenario"]).status.code(),
        Some(2)
    );
}

#[test]
fn list_names_every_experiment() {
    let o = lab(&["--list"]);
    assert!(o.status.success());
    let text = String::from_utf8_lossy(&o.stdout);
    for id in ExperimentId::ALL {
        assert!(text.contains(id.as_str()));
    }
    for (name, _) in BUNDLED {
        assert!(text.contains(name));
    }
}

fn read_outputs(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .map(|p| {
            (
                p.file_name().unwrap().to_string_lossy().into_owned(),
                fs::read(&p).unwrap(),
            )
        })
        .collect();
    files.sort();
    files
}

#[test]
fn reruns_are_byte_identical_and_nested_output_dirs_are_created() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a/deeper");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        let o = lab(&[
            "--scenario",
            "variable-1d",
            "--only",
            "beta-identity",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let fa = read_outputs(&a);
    assert_eq!(fa, read_outputs(&b));
    let names: Vec<&str> = fa.iter().map(|(n, _)| n.as_str()).collect();
    assert_eq!(
        names,
        [
            "beta-identity__residuals.csv",
            "manifest.json",
            "summary.csv"
        ]
    );
}

#[test]
fn manifest_records_convention_tolerances_and_checksum() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&[
        "--scenario",
        "variable-1d",
        "--only",
        "beta-identity",
        "--seed",
        "7",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success());
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert!(m["fourier_convention"]
        .as_str()
        .unwrap()
        .contains("(2 pi)^(-d/2)"));
    assert_eq!(m["seed"], 7);
    assert_eq!(m["config"]["seed"], 7);
    assert_eq!(m["tolerances"]["beta_identity_relative"], 1e-9);
    assert_eq!(m["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["outcomes"][0]["id"], "beta-identity");
    let csv = fs::read_to_string(dir.path().join("beta-identity__residuals.csv")).unwrap();
    assert!(csv.starts_with("experiment,kappa,absolute,relative,sup_beta\n"));
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn assertion_failure_exits_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let o = lab(&[
        "--scenario",
        "massless-floor-1d",
        "--only",
        "sandwich-bounds",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    let summary = fs::read_to_string(dir.path().join("summary.csv")).unwrap();
    assert!(summary.contains("sandwich-bounds,4,false"));
}

#[test]
fn thread_count_does_not_change_results() {
    let mut cfg = ScenarioConfig::bundled("variable-1d").unwrap();
    cfg.threads = 1;
    let one = run_scenario(&cfg, &[ExperimentId::BetaIdentity]).unwrap();
    cfg.threads = 3;
    let three = run_scenario(&cfg, &[ExperimentId::BetaIdentity]).unwrap();
    let rows = |r: &nelson_lab::RunResult| format!("{:?}", r.outcomes[0].tables[0].rows);
    assert_eq!(rows(&one), rows(&three));
    assert_eq!(one.outcomes[0].metrics, three.outcomes[0].metrics);
}
