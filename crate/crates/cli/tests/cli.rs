use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn repo_config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn zfalg(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_zfalg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn check(config: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["check", "--config", config.to_str().unwrap()];
    args.extend_from_slice(extra);
    zfalg(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn bulk_config_passes() {
    let o = check(&repo_config("bulk.json"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let text = stdout(&o);
    assert!(text.contains("[axioms] pass"));
    assert!(text.contains("[rtt] pass"));
}

#[test]
fn printed_normalization_exits_one_with_witness() {
    let o = check(&fixture("printed.json"), &["--report", "json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let checks = &v["suites"][0]["checks"];
    let unit = checks
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["check"] == "unitarity")
        .unwrap();
    assert_eq!(unit["pass"], false);
    assert_eq!(unit["witness"]["sample"], "(1, 2, 3)");
}

#[test]
fn missing_reflection_exits_two() {
    let o = check(&fixture("missing-reflection.json"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("reflection"));
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(check(&fixture("broken.json"), &[]).status.code(), Some(2));
    assert_eq!(check(&fixture("nope.json"), &[]).status.code(), Some(2));
    let o = check(&repo_config("bulk.json"), &["--suite", "unknown"]);
    assert_eq!(o.status.code(), Some(2));
    let o = check(
        &repo_config("bulk.json"),
        &["--mode", "exact", "--tol", "1e-3"],
    );
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(zfalg(&["check"]).status.code(), Some(2));
}

#[test]
fn empty_suites_exit_zero() {
    let o = check(&fixture("empty.json"), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("no suites requested"));
}

#[test]
fn suite_override_and_float_mode() {
    let o = check(
        &repo_config("bulk.json"),
        &[
            "--suite", "axioms", "--mode", "float", "--tol", "1e-9", "--report", "json",
        ],
    );
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["suites"].as_array().unwrap().len(), 1);
    assert_eq!(v["mode"], "float (tol 1e-9)");
}

#[test]
fn custom_rmatrix_file() {
    let o = check(&fixture("custom.json"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
}

#[test]
fn json_report_is_deterministic_and_written_to_out() {
    let dir = std::env::temp_dir().join(format!("zfalg-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let (a, b) = (dir.join("a.json"), dir.join("b.json"));
    for p in [&a, &b] {
        let o = check(
            &repo_config("bulk.json"),
            &["--report", "json", "--out", p.to_str().unwrap()],
        );
        assert_eq!(o.status.code(), Some(0));
        assert!(o.stdout.is_empty());
    }
    let (ta, tb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let report = zfalg::suite::SuiteReport::from_json(std::str::from_utf8(&ta).unwrap()).unwrap();
    assert!(report.pass);
    std::fs::remove_dir_all(&dir).unwrap();
}
