use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_operad-forge")).args(args).output().expect("binary runs")
}

fn report(args: &[&str]) -> (i32, Value) {
    let out = run(args);
    let code = out.status.code().unwrap();
    let v = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    (code, v)
}

fn tmp(name: &str, text: &str) -> std::path::PathBuf {
    let p = std::env::temp_dir().join(format!("operad_forge_{}_{name}", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn koszul_presets() {
    let (code, v) = report(&["koszul", "--preset", "com", "--dim-v", "1", "--max-arity", "4"]);
    assert_eq!(code, 0);
    assert_eq!(v["schema"], 1);
    assert_eq!(v["exact"], true);
    assert_eq!(v["payload"]["arities"].as_array().unwrap().len(), 4);
    let (code, v) = report(&["koszul", "--preset", "com", "--max-arity", "1"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["koszul"], true);
}

#[test]
fn presentation_files() {
    let good = tmp(
        "lie.json",
        r#"{"name":"mylie","generators":[{"name":"b","degree":0,"symmetry":"antisymmetric"}],"relations":[[1,-1,1]]}"#,
    );
    let (code, v) = report(&["koszul", "--file", good.to_str().unwrap(), "--max-arity", "3"]);
    assert_eq!(code, 0, "{v}");
    let (code, v) = report(&["quaddual", "--file", good.to_str().unwrap()]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["expected"], Value::Null);
    assert_eq!(v["payload"]["koszul_dual"]["dims"]["3"]["0"], 1);

    let bad = tmp("bad.json", r#"{"name":"x","generators":[]"#);
    assert_eq!(run(&["koszul", "--file", bad.to_str().unwrap()]).status.code(), Some(1));
    let wrong_len = tmp(
        "short.json",
        r#"{"name":"x","generators":[{"name":"m","degree":0,"symmetry":"symmetric"}],"relations":[[1,2]]}"#,
    );
    assert_eq!(run(&["koszul", "--file", wrong_len.to_str().unwrap()]).status.code(), Some(1));
    assert_eq!(run(&["koszul", "--file", "/nonexistent/p.json"]).status.code(), Some(1));
    // not closed under S₃
    let skew = tmp(
        "skew.json",
        r#"{"name":"x","generators":[{"name":"b","degree":0,"symmetry":"antisymmetric"}],"relations":[[1,1,1]]}"#,
    );
    assert_eq!(run(&["koszul", "--file", skew.to_str().unwrap()]).status.code(), Some(1));
    for p in [good, bad, wrong_len, skew] {
        let _ = std::fs::remove_file(p);
    }
}

#[test]
fn double_dual_through_files() {
    let (_, v) = report(&["quaddual", "--preset", "lie"]);
    let dual = tmp("dual.json", &v["payload"]["koszul_dual"]["presentation"].to_string());
    let (code, w) = report(&["quaddual", "--file", dual.to_str().unwrap()]);
    assert_eq!(code, 0);
    // the dual of com is lie again: Lie(3) has dimension 2
    assert_eq!(w["payload"]["koszul_dual"]["dims"]["3"]["0"], 2);
    let _ = std::fs::remove_file(dual);
}

#[test]
fn hochschild_tables() {
    let (code, v) = report(&["hochschild", "--vars", "2", "--degree", "4", "--max-arity", "2", "--weights", "-2..0"]);
    assert_eq!(code, 0);
    let entries = v["payload"]["table"]["entries"].as_array().unwrap();
    let e = entries.iter().find(|e| e["arity"] == 2 && e["weight"] == -2).unwrap();
    assert_eq!(e["dim"], 1);
    let (code, v) = report(&["hochschild", "--max-arity", "0", "--weights", "0..2"]);
    assert_eq!(code, 0);
    let entries = v["payload"]["table"]["entries"].as_array().unwrap();
    assert!(entries.iter().all(|e| e["arity"] == 0 && e["dim"] == 1));
}

#[test]
fn usage_errors_exit_one() {
    for args in [
        &["hochschild", "--weights", "3..1"][..],
        &["hochschild", "--weights", "a..b"],
        &["hochschild", "--vars", "4"],
        &["hochschild", "--vars", "0"],
        &["formality", "--arity", "5"],
        &["koszul", "--preset", "com", "--file", "x.json"],
        &["koszul"],
        &["nonsense"],
    ] {
        assert_eq!(run(args).status.code(), Some(1), "{args:?}");
    }
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn caps_can_be_lifted() {
    assert_eq!(run(&["hochschild", "--degree", "9", "--max-arity", "0", "--weights", "0..0"]).status.code(), Some(1));
    let (code, _) = report(&["--no-caps", "hochschild", "--degree", "9", "--max-arity", "0", "--weights", "0..0"]);
    assert_eq!(code, 0);
}

#[test]
fn binfty_runs() {
    let (code, v) = report(&["binfty", "--mu-only"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["samples"].as_array().unwrap().len(), 1);
    for seed in ["1", "2"] {
        let (code, v) = report(&["binfty", "--degree", "4", "--samples", "1", "--seed", seed]);
        assert_eq!(code, 0, "{v}");
        assert_eq!(v["params"]["seed"], seed.parse::<u64>().unwrap());
    }
}

#[test]
fn formality_runs() {
    let (code, v) = report(&["formality", "--vars", "1", "--weight", "2", "--arity", "3", "--order", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["intrinsic_formality"]["verdict"], "holds");
    assert_eq!(v["payload"]["theta"]["verified"], true);
    assert_eq!(v["payload"]["theta"]["identity"], false);

    let (code, v) = report(&["formality", "--no-perturbation"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["theta"]["identity"], true);

    let (code, v) = report(&["formality", "--vars", "1", "--arity", "2"]);
    assert_eq!(code, 0);
    assert_eq!(v["payload"]["intrinsic_formality"]["verdict"], "inconclusive-at-bounds");

    let out = run(&["formality", "--obstruction-stage", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("stage 1"));
}

#[test]
fn thread_cap_is_honoured() {
    let out = Command::new(env!("CARGO_BIN_EXE_operad-forge"))
        .env("OPERAD_FORGE_THREADS", "1")
        .args(["koszul", "--preset", "lie"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_operad-forge"))
        .env("OPERAD_FORGE_THREADS", "many")
        .args(["koszul", "--preset", "lie"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn reports_are_deterministic() {
    let strip = |o: Output| {
        let mut v: Value = serde_json::from_slice(&o.stdout).unwrap();
        v.as_object_mut().unwrap().remove("elapsed_ms");
        v.to_string()
    };
    let args = ["formality", "--seed", "13", "--arity", "4", "--deltas", "-1..1"];
    assert_eq!(strip(run(&args)), strip(run(&args)));
}
