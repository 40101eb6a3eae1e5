use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const SMALL: &str = r#"
paths = 2
[sim]
n = 64
dt = 0.01
t_final = 1.0
"#;

fn felab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_felab")).args(args).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.toml");
    std::fs::write(&p, text).unwrap();
    p
}

fn read_report(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

fn schema() -> jsonschema::Validator {
    let text = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../docs/report.schema.json")).unwrap();
    jsonschema::validator_for(&serde_json::from_str(&text).unwrap()).unwrap()
}

fn assert_valid(report: &Value) {
    let v = schema();
    let errors: Vec<String> = v.iter_errors(report).map(|e| format!("{e} at {}", e.instance_path)).collect();
    assert!(errors.is_empty(), "schema violations: {errors:#?}");
}

fn run(kind: &str, config: &str, extra: &[&str]) -> (Output, tempfile::TempDir) {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), config);
    let out = dir.path().join("out");
    let mut args = vec![kind, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    (felab(&args), dir)
}

#[test]
fn passing_run_exits_zero_and_writes_valid_report() {
    let (o, dir) = run("smoothing", SMALL, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let out = dir.path().join("out");
    let report = read_report(&out);
    assert_valid(&report);
    assert_eq!(report["experiment"], "smoothing");
    assert_eq!(report["all_pass"], true);
    for s in report["series"].as_array().unwrap() {
        let f = out.join(s["csv"].as_str().unwrap());
        let text = std::fs::read_to_string(f).unwrap();
        assert!(text.starts_with("t,trajectory_id,value\n"));
    }
    for p in report["plots"].as_array().unwrap() {
        assert!(out.join(p.as_str().unwrap()).exists());
    }
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.contains("PASS"));
}

#[test]
fn failing_verdict_exits_one_and_still_emits() {
    let (o, dir) = run("inequalities", "[sim]\nn = 64\n", &[]);
    assert_eq!(o.status.code(), Some(1));
    let out = dir.path().join("out");
    let report = read_report(&out);
    assert_valid(&report);
    assert_eq!(report["all_pass"], false);
    let failed: Vec<&str> = report["verdicts"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|v| v["pass"] == false)
        .map(|v| v["name"].as_str().unwrap())
        .collect();
    assert_eq!(failed, ["fp-scalar-sweep"]);
    for t in report["tables"].as_array().unwrap() {
        assert!(out.join(t.as_str().unwrap()).exists());
    }
}

#[test]
fn configuration_errors_exit_two() {
    let (o, _d) = run("smoothing", "[sim]\nbogus = 1\n", &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("bogus"));

    let (o, _d) = run("smoothing", "experiment = \"exp-moment\"\n", &[]);
    assert_eq!(o.status.code(), Some(2));

    let (o, _d) = run("smoothing", "[sim]\nn = 32\n[forcing]\nkind = \"ball\"\nn_force = 20\n", &[]);
    assert_eq!(o.status.code(), Some(2));

    let o = felab(&["smoothing", "--config", "/nonexistent/felab.toml"]);
    assert_eq!(o.status.code(), Some(2));

    let o = felab(&["no-such-experiment", "--config", "x.toml"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn overrides_are_echoed_in_config() {
    let (o, dir) = run("smoothing", SMALL, &["--seed", "42", "--paths", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = read_report(&dir.path().join("out"));
    assert_eq!(r["config"]["seed"], 42);
    assert_eq!(r["config"]["paths"], 3);
    assert_eq!(r["config"]["profile"], "desk");
    assert_eq!(r["config"]["schedule"]["m"], 1.0);

    let (_, dir) = run("inequalities", "[sim]\nn = 64\n", &["--profile", "large"]);
    let r = read_report(&dir.path().join("out"));
    assert_eq!(r["config"]["profile"], "large");
    assert_eq!(r["config"]["sim"]["dt"], 5e-4);
    assert_eq!(r["config"]["sim"]["n"], 64);
}

fn csvs(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut v: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "csv"))
        .map(|p| (PathBuf::from(p.file_name().unwrap()), std::fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_deterministic_per_seed() {
    let (_, a) = run("moment-growth", SMALL, &["--seed", "7"]);
    let (_, b) = run("moment-growth", SMALL, &["--seed", "7"]);
    let (_, c) = run("moment-growth", SMALL, &["--seed", "8"]);
    let (ca, cb, cc) = (csvs(&a.path().join("out")), csvs(&b.path().join("out")), csvs(&c.path().join("out")));
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
    assert_ne!(ca, cc);
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let one = format!("threads = 1\n{SMALL}");
    let three = format!("threads = 3\n{SMALL}");
    let (_, a) = run("cont-dependence", &one, &[]);
    let (_, b) = run("cont-dependence", &three, &[]);
    let (ca, cb) = (csvs(&a.path().join("out")), csvs(&b.path().join("out")));
    assert!(!ca.is_empty());
    assert_eq!(ca, cb);
}
