use std::fs;
use std::path::PathBuf;
use std::process::{Command, Output};

use jsonschema::JSONSchema;
use serde_json::Value;

fn fbmclt(args: &[&str]) -> Output {
    fbmclt_env(args, &[])
}

/// Runs the binary with a clean `FBMCLT_*` environment plus `env`.
fn fbmclt_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_fbmclt"));
    for (k, _) in std::env::vars() {
        if k.starts_with("FBMCLT_") {
            cmd.env_remove(k);
        }
    }
    cmd.args(args).envs(env.iter().copied()).output().expect("binary runs")
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn schema_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../schemas")
}

fn load_schema(name: &str) -> Value {
    let text = fs::read_to_string(schema_dir().join(format!("{name}.v1.json"))).expect("schema file");
    serde_json::from_str(&text).expect("schema parses")
}

fn assert_valid(name: &str, instance: &Value) {
    let mc = load_schema("mc_report");
    let schema = load_schema(name);
    let compiled = JSONSchema::options()
        .with_document("urn:fbmclt:schema:mc_report.v1".to_owned(), mc)
        .compile(&schema)
        .expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(instance) {
        Ok(()) => Vec::new(),
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    assert!(msgs.is_empty(), "{name} report invalid: {msgs:#?}");
}

#[test]
fn help_exits_zero() {
    let out = fbmclt(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("Usage"), "{text}");
    for sub in ["sigma", "oracle", "simulate", "clt", "lemma41", "contraction", "windings"] {
        assert!(text.contains(sub), "help lists {sub}");
    }
}

#[test]
fn hurst_outside_interval_is_rejected() {
    let out = fbmclt(&["sigma", "--H", "0.4"]);
    assert_eq!(out.status.code(), Some(3));
    let err = stderr(&out);
    assert!(err.contains("(1/2, 1)"), "{err}");
    assert!(err.contains("error[domain]"), "{err}");
    assert!(out.stdout.is_empty());
}

#[test]
fn sigma_json_fields() {
    let v = stdout_json(&fbmclt(&["sigma", "--H", "0.75", "--tol", "1e-8", "--format", "json"]));
    for key in ["value", "error", "n_evals", "method"] {
        assert!(v.get(key).is_some(), "missing {key} in {v}");
    }
    // Closed form at H = 3/4.
    assert!((v["value"].as_f64().unwrap() - 1.125).abs() < 1e-7, "{v}");
    assert_valid("quad_result", &v);
}

#[test]
fn usage_errors_exit_two() {
    for args in [&["frobnicate"][..], &["sigma", "--bogus", "1"][..], &[][..]] {
        let out = fbmclt(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn bad_values_are_configuration_errors() {
    for args in [
        &["sigma", "--tol", "tight"][..],
        &["sigma", "--format", "xml"][..],
        &["simulate", "--reps", "0"][..],
        &["simulate", "--scheme", "midpoint"][..],
        &["sigma", "--threads", "0"][..],
    ] {
        let out = fbmclt(args);
        assert_eq!(out.status.code(), Some(4), "{args:?}: {}", stderr(&out));
        assert!(stderr(&out).contains("error[configuration]"), "{args:?}");
    }
}

#[test]
fn unwritable_output_is_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("missing").join("report.json");
    let out = fbmclt(&["sigma", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(8), "{}", stderr(&out));
    assert!(stderr(&out).contains("error[io]"));
}

#[test]
fn output_file_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.path().join(name);
        let out = fbmclt(&[
            "simulate", "--k", "100,1000", "--t", "0.5,1", "--reps", "40", "--seed", "11", "--threads", threads,
            "--output", path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", stderr(&out));
        assert!(!out.stdout.is_empty(), "summary goes to stdout");
        fs::read(path).unwrap()
    };
    let a = run("a.json", "1");
    let b = run("b.json", "1");
    let c = run("c.json", "3");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let v: Value = serde_json::from_slice(&a).unwrap();
    assert_valid("mc_report", &v);
    assert_eq!(v["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn every_report_matches_its_schema() {
    let cheap = ["--samples", "20000", "--seed", "3"];
    let cases: [(&str, Vec<&str>); 5] = [
        ("quad_result", vec!["oracle", "--k", "100", "--s", "0.5", "--t", "1"]),
        ("clt_report", vec!["clt", "--k", "30,100,300", "--reps", "40"]),
        ("lemma41", vec!["lemma41", "--k", "100,1000"]),
        ("contraction", vec!["contraction", "--k", "100,1000"]),
        ("winding_report", vec!["windings", "--t", "100", "--reps", "40"]),
    ];
    for (schema, mut args) in cases {
        args.extend(cheap);
        let v = stdout_json(&fbmclt(&args));
        assert_valid(schema, &v);
        assert_eq!(v["schema"], format!("fbmclt.{schema}.v1"), "{args:?}");
    }
    let v = stdout_json(&fbmclt(&["sigma", "--q", "3", "--samples", "20000"]));
    assert_valid("quad_result", &v);
    assert_eq!(v["method"], "simplex_mc");
}

#[test]
fn csv_format() {
    let out = fbmclt(&["sigma", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "value,error,n_evals,method");
    assert_eq!(lines.len(), 2);
    assert!(lines[1].starts_with("1.12"), "{}", lines[1]);

    let out = fbmclt(&["lemma41", "--k", "100,1000", "--samples", "10000", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows[0], "T,value,error,n_evals,method");
    assert_eq!(rows.len(), 3);
    assert!(rows[1].starts_with("100,"));
}

#[test]
fn precedence_flag_over_env_over_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.conf");
    fs::write(&cfg, "# sigma at H = 0.6\nH = 0.6\nformat = csv\n").unwrap();
    let cfg = cfg.to_str().unwrap();
    let value = |out: Output| -> f64 {
        assert!(out.status.success(), "{}", stderr(&out));
        let text = String::from_utf8(out.stdout).unwrap();
        text.lines().nth(1).unwrap().split(',').next().unwrap().parse().unwrap()
    };
    let from_config = value(fbmclt(&["sigma", "--config", cfg]));
    let from_env = value(fbmclt_env(&["sigma", "--config", cfg], &[("FBMCLT_H", "0.75")]));
    let from_flag = value(fbmclt_env(&["sigma", "--config", cfg, "--H", "0.9"], &[("FBMCLT_H", "0.75")]));
    let direct = |h: &str| value(fbmclt(&["sigma", "--H", h, "--format", "csv"]));
    assert_eq!(from_config, direct("0.6"));
    assert_eq!(from_env, direct("0.75"));
    assert_eq!(from_flag, direct("0.9"));

    fs::write(dir.path().join("bad.conf"), "hurst = 0.6\n").unwrap();
    let out = fbmclt(&["sigma", "--config", dir.path().join("bad.conf").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(4));
}
