use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn sepctl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sepctl")).args(args).output().expect("spawn sepctl")
}

fn json_of(out: &Output) -> Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("json on stdout")
}

fn path(dir: &TempDir, name: &str) -> String {
    dir.path().join(name).to_str().unwrap().to_string()
}

#[test]
fn bounds_p1_reference_value() {
    let v = json_of(&sepctl(&["bounds", "p1", "--n", "50", "--m", "1e9", "--eps", "0.2"]));
    let value = v["value"].as_f64().unwrap();
    assert!((0.995..=0.9965).contains(&value), "{value}");
}

#[test]
fn bounds_domain_error_exits_2() {
    let out = sepctl(&["bounds", "p1", "--n", "50", "--m", "1e9", "--eps", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("eps"));
    let out = sepctl(&["bounds", "pm", "--n", "50", "--m", "1000"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bounds_capacity() {
    let v = json_of(&sepctl(&["bounds", "capacity", "--n", "50", "--eps", "0.2", "--p", "0.996"]));
    let m_max = v["m_max"].as_f64().unwrap();
    assert!((m_max / 9.88e8 - 1.0).abs() < 1e-3, "{m_max}");
}

#[test]
fn bounds_other_kinds_run() {
    for args in [
        vec!["bounds", "p1max", "--n", "20", "--m", "1e4"],
        vec!["bounds", "pm", "--n", "50", "--m", "1000", "--eps", "0.2"],
        vec!["bounds", "pm-union", "--n", "50", "--m", "1000"],
        vec!["bounds", "two-neuron", "--n", "30", "--m", "1e4", "--eps", "0.2"],
        vec!["bounds", "capacity-all", "--n", "50", "--eps", "0.2", "--q", "0.99"],
    ] {
        let v = json_of(&sepctl(&args));
        assert!(v.is_object(), "{args:?}");
    }
}

#[test]
fn sample_is_reproducible_and_bin_matches_csv() {
    let dir = TempDir::new().unwrap();
    let (a, b, c) = (path(&dir, "a.csv"), path(&dir, "b.csv"), path(&dir, "c.bin"));
    for (out, fmt) in [(&a, "csv"), (&b, "csv"), (&c, "bin")] {
        let o = sepctl(&["sample", "--dist", "ball", "--n", "4", "--m", "1e2", "--seed", "9", "--format", fmt, "--out", out]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let csv = stochsep::io::read_matrix(&a, stochsep::io::MatrixFormat::Csv).unwrap();
    let bin = stochsep::io::read_matrix(&c, stochsep::io::MatrixFormat::Bin).unwrap();
    assert_eq!(csv, bin);
    assert_eq!((csv.rows(), csv.cols()), (100, 4));
    let e = sepctl(&["sample", "--dist", "ellipsoid", "--axes", "3,1", "--m", "5"]);
    assert!(e.status.success());
    assert_eq!(String::from_utf8_lossy(&e.stdout).lines().count(), 5);
}

fn write_config(dir: &TempDir) -> String {
    let cfg = path(dir, "cfg.json");
    std::fs::write(
        &cfg,
        r#"{"distributions":["ball","cube"],"n_list":[3,8],"m":300,"repeats":4,"seed":11}"#,
    )
    .unwrap();
    cfg
}

#[test]
fn mc_is_thread_count_invariant() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(&dir);
    let (r1, r4) = (path(&dir, "r1.json"), path(&dir, "r4.json"));
    assert!(sepctl(&["mc", "--config", &cfg, "--threads", "1", "--out", &r1]).status.success());
    assert!(sepctl(&["mc", "--config", &cfg, "--threads", "4", "--out", &r4]).status.success());
    assert_eq!(std::fs::read(&r1).unwrap(), std::fs::read(&r4).unwrap());
    assert!(Path::new(&format!("{r1}.timing.json")).exists());
    let report: Value = serde_json::from_slice(&std::fs::read(&r1).unwrap()).unwrap();
    let cells = report["cells"].as_array().unwrap();
    assert_eq!(cells.len(), 4);
    for c in cells {
        assert_eq!(c["f1_values"].as_array().unwrap().len(), 4);
        assert_eq!(c.get("theory_ball").is_some(), c["distribution"] == "ball");
    }
}

#[test]
fn mc_rejects_bad_config() {
    let dir = TempDir::new().unwrap();
    let cfg = path(&dir, "bad.json");
    std::fs::write(&cfg, r#"{"distributions":["ball"],"n_list":[3],"m":300,"repeats":0,"seed":1}"#).unwrap();
    assert_eq!(sepctl(&["mc", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(sepctl(&["mc", "--config", &path(&dir, "missing.json")]).status.code(), Some(1));
}

#[test]
fn census_and_pca() {
    let dir = TempDir::new().unwrap();
    let x = path(&dir, "x.csv");
    std::fs::write(&x, "# two antipodal points\n1,0\n-1,0\n").unwrap();
    let v = json_of(&sepctl(&["census", "--in", &x, "--per-point"]));
    assert_eq!(v["separable_count"], 2);
    assert_eq!(v["f1"], 2.0);
    assert_eq!(v["per_point"], serde_json::json!([true, true]));
    let v = json_of(&sepctl(&["pca", "--in", &x]));
    assert_eq!(v["eigenvalues"].as_array().unwrap().len(), 2);
    assert_eq!(v["kaiser"], 1);
}

#[test]
fn ragged_csv_reports_line() {
    let dir = TempDir::new().unwrap();
    let x = path(&dir, "x.csv");
    std::fs::write(&x, "1,2\n3,4\n5\n").unwrap();
    let out = sepctl(&["census", "--in", &x]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":3:"));
}

#[test]
fn train_apply_eval_round_trip() {
    let dir = TempDir::new().unwrap();
    let (tp, fp, model) = (path(&dir, "tp.csv"), path(&dir, "fp.csv"), path(&dir, "model.json"));
    assert!(sepctl(&["sample", "--dist", "gaussian", "--n", "6", "--m", "400", "--seed", "3", "--out", &tp])
        .status
        .success());
    std::fs::write(&fp, "4,4,0,0,0,0\n0,0,-5,0,1,0\n").unwrap();
    for kind in ["spherical-cap", "fisher-single", "fisher-multi", "two-neuron"] {
        let o = sepctl(&[
            "train", "--kind", kind, "--positives", &tp, "--trash", &fp, "--rule", "fixed", "--whiten", "--out", &model,
        ]);
        assert!(o.status.success(), "{kind}: {}", String::from_utf8_lossy(&o.stderr));
        let flags = sepctl(&["apply", "--model", &model, "--in", &fp]);
        assert_eq!(String::from_utf8_lossy(&flags.stdout), "true\ntrue\n", "{kind}");
    }
    let labeled = path(&dir, "labeled.csv");
    let mut text = String::new();
    for line in std::fs::read_to_string(&tp).unwrap().lines() {
        text.push_str(&format!("{line},positive\n"));
    }
    for line in std::fs::read_to_string(&fp).unwrap().lines() {
        text.push_str(&format!("{line},trash\n"));
    }
    std::fs::write(&labeled, text).unwrap();
    let v = json_of(&sepctl(&["eval", "--model", &model, "--data", &labeled]));
    assert_eq!(v["fp_removed"], 2);
    assert_eq!(v["tp_total"], 400);
}

#[test]
fn svm_train_reports_accuracy() {
    let dir = TempDir::new().unwrap();
    let (tp, fp) = (path(&dir, "tp.csv"), path(&dir, "fp.csv"));
    std::fs::write(&tp, "-2,0.1\n-2.2,-0.3\n-1.8,0\n").unwrap();
    std::fs::write(&fp, "2,0\n2.1,0.2\n").unwrap();
    let v = json_of(&sepctl(&["train", "--kind", "svm", "--positives", &tp, "--trash", &fp, "--rule", "fixed", "--seed", "5"]));
    assert_eq!(v["kind"], "svm_baseline");
    assert_eq!(v["metadata"]["training_accuracy"], 1.0);
}

#[test]
fn apply_empty_cascade_flags_nothing() {
    let dir = TempDir::new().unwrap();
    let (model, x) = (path(&dir, "m.json"), path(&dir, "x.csv"));
    std::fs::write(
        &model,
        r#"{"kind":"cascade","whitening":{"mean":[0,0],"basis":[[1,0],[0,1]],"scale":[1,1]},"cascade":{"clauses":[]},"metadata":{}}"#,
    )
    .unwrap();
    std::fs::write(&x, "1,2\n3,4\n0,0\n").unwrap();
    let out = sepctl(&["apply", "--model", &model, "--in", &x]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8_lossy(&out.stdout), "false\nfalse\nfalse\n");
}

#[test]
fn spherical_cap_flags_training_query() {
    let dir = TempDir::new().unwrap();
    let (tp, q, model) = (path(&dir, "tp.csv"), path(&dir, "q.csv"), path(&dir, "m.json"));
    assert!(sepctl(&["sample", "--dist", "ball", "--n", "10", "--m", "200", "--out", &tp]).status.success());
    let first = std::fs::read_to_string(&tp).unwrap().lines().next().unwrap().to_string();
    std::fs::write(&q, format!("{first}\n")).unwrap();
    assert!(sepctl(&["train", "--kind", "spherical-cap", "--positives", &tp, "--trash", &q, "--out", &model])
        .status
        .success());
    let out = sepctl(&["apply", "--model", &model, "--in", &q]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "true\n");
}
