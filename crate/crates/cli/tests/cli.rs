use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn btlh(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_btlh")).current_dir(dir).args(args).output().expect("binary runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = btlh(dir, args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn zero_corpus_gives_empty_report() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["norm", "--count", "0", "--out", "o"]);
    let v = json(&tmp.path().join("o/norm.json"));
    assert_eq!(v["result"].as_array().unwrap().len(), 0);
    ok(tmp.path(), &["equivalence", "--count", "0", "--out", "e"]);
    let v = json(&tmp.path().join("e/equivalence.json"));
    assert!(v["result"]["rows"].as_array().unwrap().is_empty());
    assert!(v["result"]["ratios"].as_array().unwrap().is_empty());
}

#[test]
fn one_value_per_variant() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["norm", "--space", "bt-b", "--count", "1", "--resolution", "7", "--out", "o"]);
    let v = json(&tmp.path().join("o/norm.json"));
    let rows = v["result"].as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let variants: Vec<u64> = rows.iter().map(|r| r["variant"].as_u64().unwrap()).collect();
    assert_eq!(variants, vec![1, 2, 3, 4, 5]);
    assert!(rows.iter().all(|r| r["value"].as_f64().unwrap() > 0.0));
}

#[test]
fn reruns_are_byte_identical() {
    let tmp = TempDir::new().unwrap();
    let args = |out: &'static str| -> Vec<&'static str> {
        vec![
            "equivalence",
            "--count",
            "3",
            "--seed",
            "11",
            "--resolution",
            "7",
            "--variant",
            "1",
            "--variant",
            "5",
            "--out",
            out,
        ]
    };
    ok(tmp.path(), &args("a"));
    ok(tmp.path(), &args("a2"));
    let a = fs::read_to_string(tmp.path().join("a/equivalence.csv")).unwrap();
    let b = fs::read_to_string(tmp.path().join("a2/equivalence.csv")).unwrap();
    // the out key differs; everything after the preamble must not
    let body = |s: &str| s.lines().skip(2).collect::<Vec<_>>().join("\n");
    assert_eq!(body(&a), body(&b));
    ok(tmp.path(), &args("a"));
    let again = fs::read(tmp.path().join("a/equivalence.csv")).unwrap();
    assert_eq!(again, a.as_bytes());
    let j1 = fs::read(tmp.path().join("a/equivalence.json")).unwrap();
    ok(tmp.path(), &args("a"));
    assert_eq!(fs::read(tmp.path().join("a/equivalence.json")).unwrap(), j1);
}

#[test]
fn outputs_embed_config_and_version() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["norm", "--count", "1", "--seed", "4", "--out", "o"]);
    let csv = fs::read_to_string(tmp.path().join("o/norm.csv")).unwrap();
    let mut lines = csv.lines();
    assert!(lines.next().unwrap().starts_with("# btlh "));
    let cfg: Value = serde_json::from_str(lines.next().unwrap().strip_prefix("# config ").unwrap()).unwrap();
    assert_eq!(cfg["corpus"]["seed"], 4);
    let v = json(&tmp.path().join("o/norm.json"));
    assert_eq!(v["config"], cfg);
    assert!(v["version"].is_string());
}

#[test]
fn duplicated_field_gives_identical_rows() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["gen-corpus", "--count", "1", "--resolution", "7", "--out", "c"]);
    let f = "c/corpus/field_0000.bin";
    ok(
        tmp.path(),
        &[
            "equivalence",
            "--resolution",
            "7",
            "--field",
            f,
            "--field",
            f,
            "--variant",
            "1",
            "--variant",
            "4",
            "--out",
            "o",
        ],
    );
    let v = json(&tmp.path().join("o/equivalence.json"));
    let rows = v["result"]["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0]["value"], rows[2]["value"]);
    assert_eq!(rows[1]["value"], rows[3]["value"]);
    assert_eq!(v["result"]["ratios"][0]["spread"].as_f64().unwrap(), 1.0);
}

#[test]
fn corpus_files_match_generated_members() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["gen-corpus", "--count", "2", "--seed", "3", "--out", "c"]);
    ok(tmp.path(), &["norm", "--count", "2", "--seed", "3", "--variant", "5", "--json", "--out", "a"]);
    ok(
        tmp.path(),
        &[
            "norm",
            "--field",
            "c/corpus/field_0000.bin",
            "--field",
            "c/corpus/field_0001.bin",
            "--variant",
            "5",
            "--json",
            "--out",
            "b",
        ],
    );
    let a = json(&tmp.path().join("a/norm.json"));
    let b = json(&tmp.path().join("b/norm.json"));
    assert_eq!(a["result"], b["result"]);
    assert!(!tmp.path().join("a/norm.csv").exists());
}

#[test]
fn empty_set_capacity_is_zero() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["capacity", "--resolution", "4", "--d", "0.7", "--out", "o"]);
    let v = json(&tmp.path().join("o/capacity.json"));
    assert_eq!(v["result"]["bracket"]["lower"].as_f64().unwrap(), 0.0);
    assert_eq!(v["result"]["bracket"]["upper"].as_f64().unwrap(), 0.0);
    ok(tmp.path(), &["capacity", "--resolution", "4", "--d", "0", "--cells", "5", "--out", "z"]);
    let v = json(&tmp.path().join("z/capacity.json"));
    assert_eq!(v["result"]["bracket"]["lower"].as_f64().unwrap(), 1.0);
    assert_eq!(v["result"]["bracket"]["upper"].as_f64().unwrap(), 1.0);
}

#[test]
fn identity_probe_has_ratio_one() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["group-check", "--space", "g-p", "--resolution", "7", "--count", "2", "--r", "1", "--out", "o"]);
    let v = json(&tmp.path().join("o/group-check.json"));
    let p = &v["result"]["probes"][0];
    assert_eq!(p["probe"]["r"].as_f64().unwrap(), 1.0);
    assert_eq!(p["empirical_ratio"].as_f64().unwrap(), 1.0);
}

#[test]
fn haar_fails_high_smoothness() {
    let tmp = TempDir::new().unwrap();
    ok(tmp.path(), &["wavelet-audit", "--wavelet", "haar", "--s", "1.5", "--out", "o"]);
    let v = json(&tmp.path().join("o/wavelet-audit.json"));
    assert_eq!(v["result"]["verdict"], "fail");
    assert!(v["result"]["caveat"].as_str().unwrap().starts_with("measured-proxy"));
    ok(tmp.path(), &["wavelet-audit", "--wavelet", "bior3.11", "--out", "p"]);
    assert_eq!(json(&tmp.path().join("p/wavelet-audit.json"))["result"]["verdict"], "pass");
}

#[test]
fn config_file_with_flag_override() {
    let tmp = TempDir::new().unwrap();
    fs::write(
        tmp.path().join("run.json"),
        r#"{"space": "bt-b", "variants": [4], "corpus": {"count": 1, "seed": 9}, "grid": {"resolution": 7}}"#,
    )
    .unwrap();
    ok(tmp.path(), &["norm", "--config", "run.json", "--seed", "10", "--out", "o"]);
    let v = json(&tmp.path().join("o/norm.json"));
    assert_eq!(v["config"]["corpus"]["seed"], 10);
    assert_eq!(v["config"]["corpus"]["count"], 1);
    assert_eq!(v["config"]["space"], "bt-b");
    assert_eq!(v["result"].as_array().unwrap().len(), 1);
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let code = |args: &[&str]| btlh(tmp.path(), args).status.code().unwrap();
    assert_eq!(code(&["norm", "--space", "bt-b", "--variant", "6", "--out", "o"]), 2);
    assert_eq!(code(&["wavelet-audit", "--wavelet", "db99", "--out", "o"]), 2);
    assert_eq!(code(&["norm", "--p", "-1", "--out", "o"]), 2);
    fs::write(tmp.path().join("fine.json"), r#"{"scales": {"j_min": 0, "j_max": 5, "m": 2}}"#).unwrap();
    assert_eq!(code(&["group-check", "--config", "fine.json", "--space", "g-p", "--resolution", "7", "--out", "o"]), 3);
    assert_eq!(code(&["norm", "--config", "missing.json", "--out", "o"]), 1);
    let out = btlh(tmp.path(), &["norm", "--space", "bt-b", "--variant", "6", "--out", "o"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("invariant violation"));
}
