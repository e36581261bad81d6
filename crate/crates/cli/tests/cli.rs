use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use vemsf::experiment::ExperimentReport;
use vemsf::mesh::read_mesh_json;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_vem-sf"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("vem-sf-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("VEMSF_THREADS").output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

/// CSV with the `seconds` column blanked.
fn without_seconds(path: &Path) -> String {
    let csv = std::fs::read_to_string(path).unwrap();
    let col = csv.lines().next().unwrap().split(',').position(|c| c == "seconds").unwrap();
    csv.lines()
        .map(|l| {
            let mut f: Vec<&str> = l.split(',').collect();
            f[col] = "";
            f.join(",")
        })
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn mesh_subcommand_writes_loadable_json() {
    let dir = scratch("mesh");
    let out = dir.join("m.json");
    let o = run(&["mesh", "--family", "nonconvex-poly", "--n", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let m = read_mesh_json(&out).unwrap();
    assert_eq!(m.num_cells(), 9);
}

#[test]
fn local_spectrum_run_writes_csv_and_json() {
    let dir = scratch("spectrum");
    let o = run(&[
        "run", "--experiment", "local-spectrum", "--method", "SFNCVEM,CVEM", "--k", "3", "--out",
        dir.to_str().unwrap(), "--threads", "1",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.join("local-spectrum.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 2);
    let report = ExperimentReport::from_json(&std::fs::read_to_string(dir.join("local-spectrum.json")).unwrap()).unwrap();
    assert!(report.records.iter().all(|r| r.n_zero == Some(1)));
    assert_eq!(report.environment.zero_threshold, 1e-8);
}

#[test]
fn config_file_matches_flags_and_flags_override_it() {
    let dir = scratch("config");
    let cfg = dir.join("cfg.json");
    std::fs::write(
        &cfg,
        format!(
            r#"{{"experiment": "convergence", "method": ["SFCVEM"], "k": [1], "mesh": "uniform-quads",
                "levels": 2, "alpha": 2.0, "base-divisions": 2, "threads": 1, "out": "{}"}}"#,
            dir.join("a").display()
        ),
    )
    .unwrap();
    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = run(&[
        "run", "--experiment", "convergence", "--method", "SFCVEM", "--k", "1", "--mesh", "uniform-quads",
        "--levels", "2", "--alpha", "2", "--base-divisions", "2", "--threads", "1", "--format", "csv", "--out",
        dir.join("b").to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let a = without_seconds(&dir.join("a/convergence.csv"));
    assert_eq!(a, without_seconds(&dir.join("b/convergence.csv")));
    assert_eq!(a.lines().count(), 3);

    let o = run(&["run", "--config", cfg.to_str().unwrap(), "--levels", "3", "--format", "csv"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read_to_string(dir.join("a/convergence.csv")).unwrap().lines().count(), 4);
}

#[test]
fn single_threaded_runs_are_reproducible() {
    let dir = scratch("determinism");
    for sub in ["x", "y"] {
        let o = run(&[
            "run", "--experiment", "convergence", "--method", "SFNCVEM,NCVEM", "--k", "2", "--levels", "2",
            "--base-divisions", "2", "--threads", "1", "--out", dir.join(sub).to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(
        without_seconds(&dir.join("x/convergence.csv")),
        without_seconds(&dir.join("y/convergence.csv"))
    );
}

#[test]
fn oversized_runs_are_refused_with_an_estimate() {
    let dir = scratch("refuse");
    let o = run(&["run", "--experiment", "convergence", "--levels", "12", "--out", dir.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("estimated"), "{}", stderr(&o));
    assert!(!dir.join("convergence.csv").exists());
}

#[test]
fn threads_fall_back_to_the_environment() {
    let dir = scratch("env");
    let o = bin()
        .args(["run", "--experiment", "local-spectrum", "--method", "SFNCVEM", "--k", "1", "--format", "json", "--out"])
        .arg(&dir)
        .env("VEMSF_THREADS", "1")
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", stderr(&o));
    let report = ExperimentReport::from_json(&std::fs::read_to_string(dir.join("local-spectrum.json")).unwrap()).unwrap();
    assert_eq!(report.config.threads, Some(1));
    assert!(!report.environment.parallel);
}

#[test]
fn invalid_arguments_fail() {
    let dir = scratch("invalid");
    let d = dir.to_str().unwrap();
    assert!(!run(&["run", "--method", "FOO", "--out", d]).status.success());
    assert!(!run(&["run", "--experiment", "spectra", "--out", d]).status.success());
    let o = run(&["run", "--experiment", "convergence", "--levels", "1", "--out", d]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("levels"), "{}", stderr(&o));
    assert!(!run(&["run", "--k", "11", "--out", d]).status.success());
}
