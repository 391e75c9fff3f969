use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_ecqt");

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn short_simulate() -> String {
    fs::read_to_string(fixture("simulate_phase_ii.json"))
        .unwrap()
        .replace("\"horizon\": 900.0", "\"horizon\": 30.0")
        .replace("\"classify\": {\"late_fraction\": 0.05}", "\"classify\": {\"late_fraction\": 0.5}")
}

/// Run the binary inside `cwd`; returns (exit code, stdout).
fn run(cwd: &Path, verb: &str, config: &str, extra: &[&str]) -> (i32, String) {
    let cfg = cwd.join(format!("{verb}.json"));
    fs::write(&cfg, config).unwrap();
    let out = Command::new(BIN)
        .current_dir(cwd)
        .arg(verb)
        .arg("--config")
        .arg(&cfg)
        .args(extra)
        .output()
        .unwrap();
    (out.status.code().unwrap(), String::from_utf8(out.stdout).unwrap())
}

fn listing(dir: &Path) -> Vec<String> {
    let mut v: Vec<String> = fs::read_dir(dir).unwrap().map(|e| e.unwrap().file_name().to_string_lossy().into_owned()).collect();
    v.sort();
    v
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_simulate();
    let (c1, s1) = run(tmp.path(), "simulate", &cfg, &["--out", "a"]);
    let (c2, s2) = run(tmp.path(), "simulate", &cfg, &["--out", "b"]);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(s1, s2);
    for f in listing(&tmp.path().join("a")) {
        assert_eq!(fs::read(tmp.path().join("a").join(&f)).unwrap(), fs::read(tmp.path().join("b").join(&f)).unwrap(), "{f}");
    }
}

#[test]
fn outputs_stay_inside_the_output_directory() {
    let tmp = tempfile::tempdir().unwrap();
    for (verb, cfg) in [
        ("simulate", short_simulate()),
        ("oracle", fs::read_to_string(fixture("oracle_localization.json")).unwrap()),
        ("reformulate", fs::read_to_string(fixture("reformulate_sigma3.json")).unwrap()),
    ] {
        let (code, _) = run(tmp.path(), verb, &cfg, &["--out", &format!("out/{verb}")]);
        assert_eq!(code, 0, "{verb}");
    }
    assert_eq!(listing(tmp.path()), ["oracle.json", "out", "reformulate.json", "simulate.json"]);
    assert_eq!(listing(&tmp.path().join("out")), ["oracle", "reformulate", "simulate"]);
}

#[test]
fn formats_select_the_trajectory_file() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = short_simulate();
    for (fmt, file) in [("csv", "trajectory.csv"), ("json", "trajectory.json"), ("bin", "history.bin")] {
        let (code, _) = run(tmp.path(), "simulate", &cfg, &["--out", fmt, "--format", fmt]);
        assert_eq!(code, 0);
        assert!(tmp.path().join(fmt).join(file).exists(), "{fmt}");
    }
}

#[test]
fn binary_histories_feed_the_classifier() {
    let tmp = tempfile::tempdir().unwrap();
    let (code, _) = run(tmp.path(), "simulate", &short_simulate(), &["--out", "sim", "--format", "bin"]);
    assert_eq!(code, 0);
    let cls = r#"{"verb":"classify","history":"sim/history.bin","distance":3.0,"late_fraction":0.5}"#;
    let (code, stdout) = run(tmp.path(), "classify", cls, &["--out", "cls"]);
    assert_eq!(code, 0, "{stdout}");
    let summary: Value = serde_json::from_str(&stdout).unwrap();
    assert!(summary.get("label").is_some());
}

#[test]
fn exit_codes_separate_failure_kinds() {
    let tmp = tempfile::tempdir().unwrap();
    let base = short_simulate();
    assert_eq!(run(tmp.path(), "simulate", "{ not json", &[]).0, 2);
    assert_eq!(run(tmp.path(), "simulate", &base.replace("\"a\":3.0", "\"a\":3.005"), &[]).0, 2);
    assert_eq!(run(tmp.path(), "oracle", &base, &[]).0, 2);
    let budget = base.replace("\"dt\": 0.01,", "\"dt\": 0.01, \"max_steps\": 100,");
    assert_eq!(run(tmp.path(), "simulate", &budget, &[]).0, 4);
    let aligned = fs::read_to_string(fixture("reformulate_sigma3.json")).unwrap().replace("[0, 0, 0, 1]", "[0, 0, 0, 0]");
    assert_eq!(run(tmp.path(), "reformulate", &aligned, &["--out", "r"]).0, 3);
}

#[test]
fn summaries_carry_provenance() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fs::read_to_string(fixture("oracle_localization.json")).unwrap();
    let (code, stdout) = run(tmp.path(), "oracle", &cfg, &["--out", "o", "--seed", "7"]);
    assert_eq!(code, 0);
    let s: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(s["seed"], 7);
    assert_eq!(s["verb"], "oracle");
    assert_eq!(s["version"], env!("CARGO_PKG_VERSION"));
    let on_disk: Value = serde_json::from_slice(&fs::read(tmp.path().join("o/summary.json")).unwrap()).unwrap();
    assert_eq!(on_disk, s);
}

#[test]
fn golden_digests() {
    let tmp = tempfile::tempdir().unwrap();
    let (_, stdout) = run(tmp.path(), "simulate", &short_simulate(), &["--out", "g"]);
    let s: Value = serde_json::from_str(&stdout).unwrap();
    println!("config {} trajectory {}", s["config_digest"], s["trajectory_digest"]);
    assert_eq!(s["config_digest"], GOLDEN_CONFIG);
    assert_eq!(s["trajectory_digest"], GOLDEN_TRAJECTORY);
}

const GOLDEN_CONFIG: &str = "c9d7fe9ed296a002bec2a5e5a3260fa16e8a96304af048816220a21d0ba6ed20";
// Pins the x86_64 + libm build; regenerate deliberately when numerics change.
const GOLDEN_TRAJECTORY: &str = "cbd64913f0efc5977bb1f9b34d2255b0ff1a3dbdb2c71523e781ad6bb98452e0";
