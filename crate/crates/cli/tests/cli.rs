//! End-to-end tests of the `gradplay` binary: exit codes, artifact shapes,
//! schema conformance, and byte-level determinism.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gradplay"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).env_remove("GRADPLAY_OUT").output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn schema_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(name)
}

/// Minimal structural validator for the draft-07 subset the shipped schemas
/// use: type / enum / properties / required / items / anyOf / $ref into
/// #/definitions.
fn validate(value: &Value, schema: &Value, root: &Value, path: &str) {
    if let Some(reference) = schema.get("$ref").and_then(Value::as_str) {
        let name = reference.trim_start_matches("#/definitions/");
        let target = &root["definitions"][name];
        assert!(!target.is_null(), "{path}: unresolved $ref {reference}");
        return validate(value, target, root, path);
    }
    if let Some(variants) = schema.get("anyOf").and_then(Value::as_array) {
        let ok = variants.iter().any(|v| {
            std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| {
                validate(value, v, root, path)
            }))
            .is_ok()
        });
        assert!(ok, "{path}: no anyOf variant matched {value}");
        return;
    }
    if let Some(ty) = schema.get("type") {
        let allowed: Vec<&str> = match ty {
            Value::String(s) => vec![s.as_str()],
            Value::Array(a) => a.iter().filter_map(Value::as_str).collect(),
            _ => panic!("{path}: bad schema type"),
        };
        let actual = match value {
            Value::Null => "null",
            Value::Bool(_) => "boolean",
            Value::Number(_) => "number",
            Value::String(_) => "string",
            Value::Array(_) => "array",
            Value::Object(_) => "object",
        };
        assert!(allowed.contains(&actual), "{path}: type {actual} not in {allowed:?} ({value})");
        if actual == "null" {
            return;
        }
    }
    if let Some(allowed) = schema.get("enum").and_then(Value::as_array) {
        assert!(allowed.contains(value), "{path}: {value} not in enum {allowed:?}");
    }
    if let Some(required) = schema.get("required").and_then(Value::as_array) {
        for key in required.iter().filter_map(Value::as_str) {
            assert!(value.get(key).is_some(), "{path}: missing required field {key}");
        }
    }
    if let Some(props) = schema.get("properties").and_then(Value::as_object) {
        for (key, sub) in props {
            if let Some(v) = value.get(key) {
                validate(v, sub, root, &format!("{path}.{key}"));
            }
        }
    }
    if let Some(items) = schema.get("items") {
        if let Some(arr) = value.as_array() {
            if let Some(min) = schema.get("minItems").and_then(Value::as_u64) {
                assert!(arr.len() as u64 >= min, "{path}: fewer than {min} items");
            }
            if let Some(max) = schema.get("maxItems").and_then(Value::as_u64) {
                assert!(arr.len() as u64 <= max, "{path}: more than {max} items");
            }
            for (i, v) in arr.iter().enumerate() {
                validate(v, items, root, &format!("{path}[{i}]"));
            }
        }
    }
}

fn assert_schema(value: &Value, schema_file: &str) {
    let text = std::fs::read_to_string(schema_path(schema_file)).expect("schema readable");
    let schema: Value = serde_json::from_str(&text).expect("schema is JSON");
    validate(value, &schema, &schema, schema_file);
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .expect("csv readable")
        .lines()
        .skip(1)
        .map(|line| line.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn analyze_example1_stable_non_nash() {
    let out = run(&["analyze", "--preset", "example1", "--param", "b=2"]);
    let report = stdout_json(&out);
    assert_schema(&report, "report.schema.json");
    assert_eq!(report["is_stable"], Value::Bool(true));
    assert_eq!(report["is_differential_nash"], Value::Bool(false));
    assert_eq!(report["structure"], "zero_sum");
}

#[test]
fn analyze_example2_unstable_nash() {
    let out = run(&["analyze", "--preset", "example2", "--param", "p=4"]);
    let report = stdout_json(&out);
    assert_schema(&report, "report.schema.json");
    assert_eq!(report["is_stable"], Value::Bool(false));
    assert_eq!(report["is_differential_nash"], Value::Bool(true));
    assert_eq!(report["structure"], "potential");
}

#[test]
fn analyze_example4_instability_certificate() {
    let out = run(&["analyze", "--preset", "example4"]);
    let report = stdout_json(&out);
    assert_schema(&report, "report.schema.json");
    let cert = report["certificates"]
        .as_array()
        .unwrap()
        .iter()
        .find(|c| c["name"] == "instability")
        .expect("instability certificate present");
    assert_eq!(cert["holds"], Value::Bool(true));
    assert_eq!(report["is_stable"], Value::Bool(false));
}

#[test]
fn analyze_non_fixed_point_exits_3() {
    let out = run(&["analyze", "--preset", "example2", "--point", "1,0,0,0"]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "this is not json").unwrap();
    let out = run(&["analyze", "--game", bad.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["analyze", "--preset", "example9"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["analyze"]);
    assert_eq!(out.status.code(), Some(2));

    let out = run(&["analyze", "--preset", "example1", "--param", "q=1"]);
    assert_eq!(out.status.code(), Some(2));

    // clap usage errors share the input-error code
    let out = run(&["analyze", "--preset", "example1", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_4() {
    // constant nonzero gradient field: the Newton system is singular
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("flat.json");
    std::fs::write(
        &file,
        r#"{ "d1": 1, "d2": 1, "Q1": [[0,0],[0,0]], "Q2": [[0,0],[0,0]], "b1": [1,0], "b2": [0,1] }"#,
    )
    .unwrap();
    let out = run(&["analyze", "--game", file.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn game_file_matches_equivalent_preset() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("game.json");
    std::fs::write(&file, r#"{ "preset": "example1", "b": 2.0 }"#).unwrap();
    let from_file = stdout_json(&run(&["analyze", "--game", file.to_str().unwrap()]));
    let from_preset = stdout_json(&run(&["analyze", "--preset", "example1", "--param", "b=2"]));
    assert_eq!(from_file, from_preset);
}

#[test]
fn qnr_row_counts_and_box_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "qnr", "--preset", "example1", "--param", "b=2", "-n", "1", "--seed", "7",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let box_json = stdout_json(&out);
    assert_schema(&box_json, "box.schema.json");
    let rows = csv_rows(&dir.path().join("qnr.csv"));
    assert_eq!(rows.iter().filter(|r| r[0] == "qnr").count(), 2);
    assert_eq!(rows.iter().filter(|r| r[0] == "nr").count(), 1);

    let manifest: Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap())
            .unwrap();
    assert_schema(&manifest, "manifest.schema.json");
}

#[test]
fn qnr_full_cloud_stays_in_zero_sum_box() {
    // at b = 2 the enclosure is Re in [-12, 2], |Im| <= 4
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "qnr", "--preset", "example1", "--param", "b=2", "-n", "5000", "--seed", "7",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let box_json = stdout_json(&out);
    assert!(box_json["re_min"].as_f64().unwrap() >= -12.0 - 1e-9);
    assert!(box_json["re_max"].as_f64().unwrap() <= 2.0 + 1e-9);
    assert!(box_json["im_max"].as_f64().unwrap() <= 4.0 + 1e-9);
    let rows = csv_rows(&dir.path().join("qnr.csv"));
    assert_eq!(rows.iter().filter(|r| r[0] == "qnr").count(), 10_000);
}

#[test]
fn qnr_potential_cloud_is_real() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "qnr", "--preset", "example2", "--param", "p=1", "-n", "500", "--seed", "3",
        "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success());
    for row in csv_rows(&dir.path().join("qnr.csv")) {
        if row[0] == "qnr" {
            let im: f64 = row[2].parse().unwrap();
            assert!(im.abs() <= 1e-10, "non-real point {row:?}");
        }
    }
}

#[test]
fn simulate_zero_steps_emits_initial_row_only() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate", "--preset", "example5", "--steps", "0",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let summary = stdout_json(&out);
    assert_schema(&summary, "summary.schema.json");
    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0][0], "0");
}

#[test]
fn simulate_rate_separation_converges_faster() {
    let dir_fast = tempfile::tempdir().unwrap();
    let fast = stdout_json(&run(&[
        "simulate", "--preset", "example5", "--param", "eps=0.9", "--tau", "28",
        "--gamma1", "1e-3", "--steps", "5000", "--out", dir_fast.path().to_str().unwrap(),
    ]));
    let dir_slow = tempfile::tempdir().unwrap();
    let slow = stdout_json(&run(&[
        "simulate", "--preset", "example5", "--param", "eps=0.9", "--tau", "1",
        "--gamma1", "1e-3", "--steps", "5000", "--out", dir_slow.path().to_str().unwrap(),
    ]));
    assert_eq!(fast["terminated"], "converged");
    let fast_norm = fast["final_norm"].as_f64().unwrap();
    let slow_norm = slow["final_norm"].as_f64().unwrap();
    assert!(fast_norm < slow_norm, "fast {fast_norm} vs slow {slow_norm}");

    // norm column decays overall in the fast run
    let rows = csv_rows(&dir_fast.path().join("trajectory.csv"));
    let first: f64 = rows.first().unwrap().last().unwrap().parse().unwrap();
    let last: f64 = rows.last().unwrap().last().unwrap().parse().unwrap();
    assert!(last < 1e-5 && first > 1.0);
}

#[test]
fn simulate_continuous_mode_runs() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate", "--preset", "example1", "--param", "b=2", "--mode", "continuous",
        "--t-end", "10", "--dt", "0.01", "--out", dir.path().to_str().unwrap(),
    ]);
    let summary = stdout_json(&out);
    assert_schema(&summary, "summary.schema.json");
    let rows = csv_rows(&dir.path().join("trajectory.csv"));
    assert_eq!(rows.len(), 1001);
    // header carries one column per action coordinate plus t and norm
    let header = std::fs::read_to_string(dir.path().join("trajectory.csv"))
        .unwrap()
        .lines()
        .next()
        .unwrap()
        .to_string();
    assert_eq!(header, "t,x1,x2,y1,y2,norm");
}

#[test]
fn sweep_best_tau_and_csv_shape() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep", "--preset", "example5", "--param", "eps=0.9", "--gamma1", "1e-3",
        "--tau-lo", "1", "--tau-hi", "100", "-n", "200",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let best = stdout_json(&out);
    assert_schema(&best, "best.schema.json");
    let best_tau = best["best_tau"].as_f64().unwrap();
    assert!((26.0..=30.0).contains(&best_tau), "best_tau {best_tau}");

    let rows = csv_rows(&dir.path().join("sweep.csv"));
    assert_eq!(rows.len(), 200);
    for row in &rows {
        assert_eq!(row.len(), 2 + 2 * 4); // tau, rho, four eigenvalue pairs
    }
    let taus: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert_eq!(taus[0], 1.0);
    assert_eq!(taus[199], 100.0);
    assert!(taus.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn sweep_mostly_potential_gains_little() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "sweep", "--preset", "example5", "--param", "eps=0.1", "--gamma1", "1e-3",
        "--tau-lo", "1", "--tau-hi", "100", "-n", "100",
        "--out", dir.path().to_str().unwrap(),
    ]);
    let best = stdout_json(&out);
    let rows = csv_rows(&dir.path().join("sweep.csv"));
    let rho_at_one: f64 = rows[0][1].parse().unwrap();
    let best_rho = best["best_rho"].as_f64().unwrap();
    let improvement = (rho_at_one - best_rho) / (1.0 - rho_at_one);
    assert!(improvement.abs() < 0.05, "improvement {improvement}");
}

#[test]
fn sweep_invalid_bracket_exits_2() {
    let out = run(&["sweep", "--preset", "example5", "--tau-lo", "5", "--tau-hi", "5"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["sweep", "--preset", "example5", "--tau-lo", "-1", "--tau-hi", "5"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn reruns_are_byte_identical() {
    let run_into = |dir: &Path| {
        let out = run(&[
            "qnr", "--preset", "example5", "--param", "eps=0.9", "-n", "200", "--seed", "42",
            "--out", dir.to_str().unwrap(),
        ]);
        assert!(out.status.success());
    };
    // identical invocation (same manifest): every artifact byte-identical
    let dir_a = tempfile::tempdir().unwrap();
    run_into(dir_a.path());
    let first: Vec<Vec<u8>> = ["qnr.csv", "box.json", "manifest.json"]
        .iter()
        .map(|name| std::fs::read(dir_a.path().join(name)).unwrap())
        .collect();
    run_into(dir_a.path());
    for (name, before) in ["qnr.csv", "box.json", "manifest.json"].iter().zip(&first) {
        let after = std::fs::read(dir_a.path().join(name)).unwrap();
        assert_eq!(before, &after, "{name} differs between identical runs");
    }
    // a different destination changes out_dir in the manifest but no data
    let dir_b = tempfile::tempdir().unwrap();
    run_into(dir_b.path());
    for name in ["qnr.csv", "box.json"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs across destinations");
    }

    let report_a = run(&["analyze", "--preset", "example4"]).stdout;
    let report_b = run(&["analyze", "--preset", "example4"]).stdout;
    assert_eq!(report_a, report_b);
}

#[test]
fn env_var_sets_default_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["qnr", "--preset", "example1", "-n", "10", "--seed", "1"])
        .env("GRADPLAY_OUT", dir.path())
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("qnr.csv").exists());
    assert!(dir.path().join("manifest.json").exists());
}
