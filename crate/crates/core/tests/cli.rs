use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use clonal_evolve::model::ScenarioDocument;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_clonal-evolve"));
    cmd.env_remove("CLONAL_EVOLVE_THREADS");
    cmd
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

const SMALL: [&str; 4] = ["--n-age", "61", "--n-len", "26"];

fn small(args: &[&str]) -> Vec<String> {
    args.iter().chain(SMALL.iter()).map(|s| s.to_string()).collect()
}

fn run_small(args: &[&str], out: &Path) -> Output {
    let owned = small(args);
    let refs: Vec<&str> = owned.iter().map(String::as_str).collect();
    run(&refs, out)
}

fn names(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    v.sort();
    v
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn example_two_writes_the_full_artifact_set() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("ex2");
    let o = run_small(&["example", "--id", "2"], &out);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let files = names(&out);
    for f in ["manifest.json", "totals.csv", "spectrum.json", "bound_curves.csv", "snapshot_0.000.csv", "snapshot_20.000.csv"] {
        assert!(files.contains(&f.to_string()), "{f} missing from {files:?}");
    }
    assert!(!files.contains(&"steady.json".to_string()));

    let totals = fs::read_to_string(out.join("totals.csv")).unwrap();
    let header = totals.lines().next().unwrap();
    assert_eq!(header, "time,total,band_0,band_1,band_2,band_3");

    let spectrum = json(&out.join("spectrum.json"));
    for key in ["radius", "lambda_star", "bounds", "irreducible", "iterations", "converged", "eigenvector"] {
        assert!(spectrum.get(key).is_some(), "{key}");
    }
    assert_eq!(spectrum["bounds"].as_array().unwrap().len(), 4);
    assert!(spectrum["lambda_star"].as_f64().unwrap() > 0.0);
    assert_eq!(spectrum["eigenvector"].as_array().unwrap().len(), 26);

    let manifest = json(&out.join("manifest.json"));
    assert_eq!(manifest["command"], "example");
    assert!(manifest["files"].as_array().unwrap().len() >= 4);
    // The manifest's scenario reproduces the run.
    let doc: ScenarioDocument = serde_json::from_value(manifest["scenario"].clone()).unwrap();
    assert_eq!(doc.grid.n_age, 61);
    doc.build().unwrap();

    let curves = fs::read_to_string(out.join("bound_curves.csv")).unwrap();
    assert!(curves.starts_with("l,mother,daughter\n"));
    assert_eq!(curves.lines().count(), 27);
}

#[test]
fn example_three_adds_the_steady_state() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run_small(&["example", "--id", "3"], tmp.path());
    assert!(o.status.success());
    let steady = json(&tmp.path().join("steady.json"));
    assert_eq!(steady["equilibria"]["kind"], "unique");
    let p = steady["P_star"].as_f64().unwrap();
    let lambda = steady["lambda_star"].as_f64().unwrap();
    assert!((p - lambda / 1e-5).abs() < 1e-6 * p);
    assert!(tmp.path().join("profile.csv").exists());
}

#[test]
fn subcommands_accept_scenario_documents() {
    let tmp = tempfile::tempdir().unwrap();
    let doc = ScenarioDocument::example(1, 61, 26).unwrap();
    let path = tmp.path().join("scenario.json");
    fs::write(&path, doc.to_json()).unwrap();
    let path = path.to_str().unwrap();
    for (cmd, file) in [
        ("simulate", "totals.csv"),
        ("spectrum", "spectrum.json"),
        ("steady", "steady.json"),
        ("bounds", "bound_check.csv"),
    ] {
        let out = tmp.path().join(cmd);
        let o = run(&[cmd, "--scenario", path], &out);
        assert!(o.status.success(), "{cmd}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(out.join(file).exists(), "{cmd}");
        assert!(out.join("manifest.json").exists());
    }
    let check = fs::read_to_string(tmp.path().join("bounds/bound_check.csv")).unwrap();
    assert!(check.starts_with("time,band,simulated,bound,ratio\n"));
    let steady = json(&tmp.path().join("steady/steady.json"));
    assert_eq!(steady["equilibria"]["kind"], "extinction-only");
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    assert!(run_small(&["example", "--id", "3"], &a).status.success());
    let threaded = bin()
        .env("CLONAL_EVOLVE_THREADS", "3")
        .args(small(&["example", "--id", "3"]))
        .arg("--out")
        .arg(&b)
        .status()
        .unwrap();
    assert!(threaded.success());
    let files = names(&a);
    assert_eq!(files, names(&b));
    for f in files.iter().filter(|f| *f != "manifest.json") {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
}

#[test]
fn existing_outputs_are_protected() {
    let tmp = tempfile::tempdir().unwrap();
    assert!(run_small(&["spectrum", "--id", "1"], tmp.path()).status.success());
    let before = fs::read(tmp.path().join("spectrum.json")).unwrap();
    let o = run_small(&["spectrum", "--id", "2"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("--overwrite"));
    assert_eq!(fs::read(tmp.path().join("spectrum.json")).unwrap(), before);
    let o = run_small(&["spectrum", "--id", "2", "--overwrite"], tmp.path());
    assert!(o.status.success());
    assert_ne!(fs::read(tmp.path().join("spectrum.json")).unwrap(), before);
}

#[test]
fn usage_and_input_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
    assert_eq!(bin().args(["simulate", "--help"]).output().unwrap().status.code(), Some(0));
    assert_eq!(bin().arg("frobnicate").output().unwrap().status.code(), Some(1));
    let o = run(&["simulate", "--scenario", "/nonexistent/scenario.json"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["simulate"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["example", "--id", "4"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, "{\"grid\": 3}").unwrap();
    let o = run(&["simulate", "--scenario", bad.to_str().unwrap()], &tmp.path().join("x"));
    assert_eq!(o.status.code(), Some(1));
    let o = bin()
        .env("CLONAL_EVOLVE_THREADS", "many")
        .args(small(&["example", "--id", "1"]))
        .arg("--out")
        .arg(tmp.path().join("y"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn numerical_failures_exit_two() {
    let tmp = tempfile::tempdir().unwrap();
    let mut doc: serde_json::Value =
        serde_json::from_str(&ScenarioDocument::example(2, 61, 26).unwrap().to_json()).unwrap();
    // Newborn-on-newborn division this strong has no nonnegative boundary solution.
    doc["beta"] = serde_json::json!({"kind": "constant", "value": 1e4});
    let path = tmp.path().join("unstable.json");
    fs::write(&path, doc.to_string()).unwrap();
    let o = run(&["simulate", "--scenario", path.to_str().unwrap()], &tmp.path().join("out"));
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
}
