use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use refsde_core::path::read_path_csv;
use refsde_core::{oracle_halfline, StepPath};
use serde_json::Value;
use tempfile::TempDir;

fn refsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_refsde")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stderr_record(o: &Output) -> Value {
    serde_json::from_slice(o.stderr.trim_ascii())
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stderr)))
}

fn read_json(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (
                e.file_name().to_string_lossy().into_owned(),
                fs::read(e.path()).unwrap(),
            )
        })
        .collect()
}

const JUMP_BOX: &str = r#"
horizon = 1.0
seed = 5
paths = 120

[domain]
anchor = [0.5, 0.5]
[domain.shape]
type = "box"
lo = [0.0, 0.0]
hi = [1.0, 1.0]

[driver.h]
type = "constant"
x0 = [0.5, 0.5]
[[driver.z]]
type = "brownian"
sigma = [[0.5, 0.0], [0.0, 0.5]]
[[driver.z]]
type = "compound_poisson"
intensity = 2.0
jumps = { type = "normal", mean = [0.0, 0.0], std = [0.3, 0.3] }

[coefficient]
type = "sine"
matrix = [[1.0, 0.0], [0.0, 1.0]]
level = 1.0
amplitude = 0.5
frequency = 2.0

[sweep]
n = [10.0, 100.0]
mesh = [0.125, 0.03125]
times = [0.5, 1.0]
"#;

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("exp.toml");
    fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn three_jump_skorokhod_matches_closed_form() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("s");
    let o = refsde(&["skorokhod", "--builtin", "three-jump", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let x = read_path_csv(fs::File::open(out.join("x.csv")).unwrap()).unwrap();
    let k = read_path_csv(fs::File::open(out.join("k.csv")).unwrap()).unwrap();
    let y = StepPath::scalar(vec![0.0, 0.5, 0.8], vec![0.0, -1.0, 1.0], 1.0).unwrap();
    let oracle = oracle_halfline(&y).unwrap();
    assert_eq!(x, oracle.x);
    assert_eq!(k, oracle.k);
    let summary: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(summary["summary"]["acceptance"], Value::Bool(true));
}

#[test]
fn three_jump_penalty_sweep_passes_its_checks() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("p");
    let o = refsde(&["penalize", "--builtin", "three-jump", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = read_json(&out.join("penalize.json"));
    let rows = rep["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 5 * 4);
    assert!(rows.iter().all(|r| r["pass"] == Value::Bool(true)));
    let last_jump = rows.iter().rev().find(|r| r["statistic"] == "jump_error").unwrap();
    assert!(last_jump["value"].as_f64().unwrap() < 1e-3);
    assert!(out.join("penalized_4.csv").exists());
}

#[test]
fn replay_is_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), JUMP_BOX);
    for kind in ["simulate", "converge"] {
        let a = tmp.path().join(format!("{kind}_a"));
        let b = tmp.path().join(format!("{kind}_b"));
        for dir in [&a, &b] {
            let o = refsde(&[kind, "--config", &cfg, "--out", dir.to_str().unwrap()]);
            assert_eq!(code(&o), 0, "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        }
        let (da, db) = (dir_bytes(&a), dir_bytes(&b));
        assert!(da.len() >= 3, "{kind}: {:?}", da.keys());
        assert_eq!(da, db, "{kind}");
    }
}

#[test]
fn seed_changes_outputs() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), JUMP_BOX);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    refsde(&["simulate", "--config", &cfg, "--out", a.to_str().unwrap()]);
    refsde(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "6",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_ne!(
        fs::read(a.join("simulate.csv")).unwrap(),
        fs::read(b.join("simulate.csv")).unwrap()
    );
}

#[test]
fn every_artifact_names_its_config_hash() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), JUMP_BOX);
    let out = tmp.path().join("o");
    let o = refsde(&["simulate", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let manifest = read_json(&out.join("manifest.json"));
    let hash = manifest["config_hash"].as_str().unwrap().to_string();
    assert_eq!(hash.len(), 64);
    let listed: Vec<&str> = manifest["artifacts"]
        .as_array()
        .unwrap()
        .iter()
        .map(|a| a["file"].as_str().unwrap())
        .collect();
    for name in dir_bytes(&out).keys().filter(|n| *n != "manifest.json") {
        assert!(listed.contains(&name.as_str()), "{name} missing from manifest");
        let text = fs::read_to_string(out.join(name)).unwrap();
        if name.ends_with(".csv") {
            assert_eq!(text.lines().next().unwrap(), format!("# config_hash={hash}"), "{name}");
        } else {
            assert_eq!(
                read_json(&out.join(name))["config_hash"],
                Value::String(hash.clone()),
                "{name}"
            );
        }
    }
    assert_eq!(manifest["seed"], 5);
    assert!(manifest["versions"]["refsde-core"].is_string());
}

#[test]
fn flags_override_file_values_and_file_overrides_defaults() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), JUMP_BOX);
    let out = tmp.path().join("o");
    let o = refsde(&[
        "simulate",
        "--config",
        &cfg,
        "--seed",
        "9",
        "--out",
        out.to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert_eq!(code(&o), 0);
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["seed"], 9);
    assert_eq!(manifest["paths"], 120);
    assert_eq!(manifest["config"]["formats"], serde_json::json!(["json"]));
    // Unset in the file, so the default applies.
    assert_eq!(manifest["config"]["max_failure_rate"], 0.0);
    assert!(!out.join("simulate.csv").exists());
    assert!(out.join("simulate.json").exists());
}

#[test]
fn empty_sweep_is_a_validation_error() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), &JUMP_BOX.replace("n = [10.0, 100.0]", "n = []"));
    let o = refsde(&[
        "simulate",
        "--config",
        &cfg,
        "--out",
        tmp.path().join("o").to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 1);
    let rec = stderr_record(&o);
    assert_eq!(rec["error"], "validation");
    assert_eq!(rec["field"], "sweep.n");
}

#[test]
fn malformed_inputs_are_validation_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("o");
    let out = out.to_str().unwrap();
    let bad_key = write_config(tmp.path(), &format!("{JUMP_BOX}\nbogus = 1\n"));
    assert_eq!(code(&refsde(&["simulate", "--config", &bad_key, "--out", out])), 1);

    let outside = write_config(tmp.path(), &JUMP_BOX.replace("x0 = [0.5, 0.5]", "x0 = [2.0, 0.5]"));
    let o = refsde(&["simulate", "--config", &outside, "--out", out]);
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_record(&o)["field"], "driver");

    let o = refsde(&["simulate", "--builtin", "three-jump", "--out", out]);
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_record(&o)["field"], "builtin");

    let o = refsde(&["simulate", "--builtin", "reflected-bm", "--config", &bad_key]);
    assert_eq!(code(&o), 1);
    assert_eq!(stderr_record(&o)["field"], "arguments");

    assert_eq!(code(&refsde(&["--help"])), 0);
}

#[test]
fn driver_file_is_read_relative_to_the_config() {
    let tmp = TempDir::new().unwrap();
    fs::write(tmp.path().join("y.csv"), "# horizon=1\nt,x_1\n0,0\n0.3,-1\n0.6,-0.5\n").unwrap();
    let cfg = write_config(tmp.path(), "driver_file = \"y.csv\"\n");
    let out = tmp.path().join("o");
    let o = refsde(&[
        "skorokhod",
        "--config",
        &cfg,
        "--out",
        out.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let x = read_path_csv(fs::File::open(out.join("x.csv")).unwrap()).unwrap();
    assert_eq!(x.values().map(|v| v[0]).collect::<Vec<_>>(), vec![0.0, 0.0, 0.5]);
}

#[test]
fn projection_failures_are_counted_and_trip_the_threshold() {
    // A wedge of half-angle 1e-4: alternating projections need far more
    // cycles than the iteration cap to reach the apex.
    let (s, c) = (1e-4f64.sin(), 1e-4f64.cos());
    let text = format!(
        r#"
driver_file = "y.csv"
[domain]
anchor = [1.0, 0.0]
[domain.shape]
type = "polyhedron"
faces = [{{ normal = [{s}, {c}], offset = 0.0 }}, {{ normal = [{s}, {m}], offset = 0.0 }}]
"#,
        m = -c
    );
    let tmp = TempDir::new().unwrap();
    let cfg_file = write_config(tmp.path(), &text);
    fs::write(tmp.path().join("y.csv"), "# horizon=1\nt,x_1,x_2\n0,1,0\n0.5,-10,3\n").unwrap();
    let out = tmp.path().join("o");
    let o = refsde(&["skorokhod", "--config", &cfg_file, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stdout));
    let manifest = read_json(&out.join("manifest.json"));
    assert_eq!(manifest["summary"]["failures"], 1);
    assert!(manifest["summary"]["failed_paths"][0]["message"]
        .as_str()
        .unwrap()
        .contains("did not converge"));
}

#[test]
fn reflected_bm_benchmark_reports_acceptance() {
    // 100 paths cannot meet the benchmark's KS limit, so the run must report
    // a failed acceptance check with exit code 3.
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("c");
    let o = refsde(&[
        "converge",
        "--builtin",
        "reflected-bm",
        "--paths",
        "100",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let rep = read_json(&out.join("converge.json"));
    let rows = rep["rows"].as_array().unwrap();
    let checked: Vec<&Value> = rows.iter().filter(|r| !r["threshold"].is_null()).collect();
    assert_eq!(checked.len(), 2);
    assert!(checked.iter().all(|r| r["n"] == 4096.0));
    assert_eq!(rep["strong"]["strictly_decreasing"], Value::Bool(true));
    let csv = fs::read_to_string(out.join("converge.csv")).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "n,mesh,t,M,statistic,value,threshold,pass");
}
