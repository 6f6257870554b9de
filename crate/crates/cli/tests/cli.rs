use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn case(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../cases").join(name)
}

fn frrd(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_frrd")).arg("--output-dir").arg(out).args(args).output().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn run_writes_report_and_tables() {
    let dir = tempfile::tempdir().unwrap();
    let out = frrd(dir.path(), &["run", case("linear_exact.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("report.json"));
    for key in ["case", "levels", "defects", "orders", "violations", "timing"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    for key in ["eq5", "eq6", "eq21", "eq27", "eq32", "eq44", "tadmor_max"] {
        assert!(report["defects"].get(key).is_some(), "missing {key}");
    }
    let elements = std::fs::read_to_string(dir.path().join("elements.csv")).unwrap();
    assert_eq!(elements.lines().count(), 33);
    let levels = std::fs::read_to_string(dir.path().join("levels.csv")).unwrap();
    assert_eq!(levels.lines().count(), 2);
}

#[test]
fn reports_are_identical_across_runs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for d in [&a, &b] {
        let out = frrd(d.path(), &["--seed", "3", "run", case("burgers_hex.json").to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    let strip = |d: &Path| {
        let mut v = read_json(&d.join("report.json"));
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(strip(a.path()), strip(b.path()));
    assert_eq!(
        std::fs::read(a.path().join("elements.csv")).unwrap(),
        std::fs::read(b.path().join("elements.csv")).unwrap()
    );
}

#[test]
fn verify_runs_every_suite() {
    let dir = tempfile::tempdir().unwrap();
    let out = frrd(dir.path(), &["verify", case("two_triangles_st.json").to_str().unwrap(), "--suite", "all"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("PASS") && !stdout.contains("FAIL"));
    for suite in ["conservation", "correction-admissibility", "entropy-cs", "entropy-st", "tadmor", "identities"] {
        let report = read_json(&dir.path().join(format!("verify_{suite}.json")));
        assert!(report["checks"].as_array().is_some_and(|c| !c.is_empty()), "{suite}");
    }
}

#[test]
fn impossible_tolerances_exit_with_violation() {
    let dir = tempfile::tempdir().unwrap();
    let out = frrd(dir.path(), &["--tol-scale", "1e-40", "verify", case("two_triangles_st.json").to_str().unwrap(), "--suite", "conservation"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_inputs_fail() {
    let dir = tempfile::tempdir().unwrap();
    let out = frrd(dir.path(), &["run", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(1));
    let out = frrd(dir.path(), &["verify", case("linear_exact.json").to_str().unwrap(), "--suite", "nope"]);
    assert_ne!(out.status.code(), Some(0));
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{\"case\": 1}").unwrap();
    let out = frrd(dir.path(), &["run", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}
