use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn regionboot(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regionboot"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn pvalue_of(report: &Value, method: &str) -> Option<f64> {
    report["report"]["values"]
        .as_array()
        .unwrap()
        .iter()
        .find(|v| v["method"] == method)
        .and_then(|v| v["pvalue"].as_f64())
}

#[test]
fn pvalue_cone_column() {
    let dir = tempfile::tempdir().unwrap();
    let out = regionboot(dir.path(), &["pvalue", "--region", "cone", "--y", "0.71,1.63", "--method", "all", "--backend", "quad"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert!(stdout.contains("dau"));
    let report = read_json(&dir.path().join("pvalue.json"));
    for (method, expected, tol) in [("bp", 0.020, 5e-4), ("mcb", 0.069, 5e-4), ("dbp", 0.061, 1e-3), ("dau", 0.069, 3e-3)] {
        let p = pvalue_of(&report, method).unwrap();
        assert!((p - expected).abs() < tol, "{method}: {p}");
    }
    assert!(pvalue_of(&report, "pv_oracle").is_none());
    assert_eq!(report["config"]["backend"], "quad");
    assert_eq!(report["config"]["mode"], "taylor");
}

#[test]
fn pvalue_json_region_and_vertex() {
    let dir = tempfile::tempdir().unwrap();
    let out = regionboot(
        dir.path(),
        &["pvalue", "--region", r#"{"kind":"efron","h0":0.1}"#, "--y", "3.18,0.20", "--method", "dau", "--out", "dau.json"],
    );
    assert!(out.status.success());
    let p = pvalue_of(&read_json(&dir.path().join("dau.json")), "dau").unwrap();
    assert!((p - 0.037).abs() < 3e-3, "{p}");

    let out = regionboot(dir.path(), &["pvalue", "--y", "0,0", "--region", "cone", "--method", "signed_lr", "--out", "v.json"]);
    assert!(out.status.success());
    let p = pvalue_of(&read_json(&dir.path().join("v.json")), "signed_lr").unwrap();
    assert!((p - 0.5).abs() < 1e-12);
}

#[test]
fn argument_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        vec!["table", "2", "--methods", ""],
        vec!["table", "3"],
        vec!["pvalue", "--region", "nope", "--y", "1,2"],
        vec!["pvalue", "--region", "cone"],
        vec!["pvalue", "--region", "cone", "--y", "1,2,3"],
        vec!["pvalue", "--region", "cone", "--y", "1,2", "--scales", "1:0.5:3"],
        vec!["pvalue", "--region", "cone", "--y", "1,2", "--method", "au4"],
        vec!["pvalue", "--region", "cone", "--y", "1,2", "--alpha", "1.5"],
    ] {
        let out = regionboot(dir.path(), &args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}

#[test]
fn engine_errors_exit_three_and_name_the_operation() {
    let dir = tempfile::tempdir().unwrap();
    let out = regionboot(
        dir.path(),
        &["curve", "--kind", "dbp", "--region", r#"{"kind":"sphere","radius":1.0}"#, "--y", "0,0"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dbp_curve"));
}

#[test]
fn thread_variable_is_validated() {
    let dir = tempfile::tempdir().unwrap();
    let run = |value: &str| {
        Command::new(env!("CARGO_BIN_EXE_regionboot"))
            .args(["oracle", "--lambda0", "1", "--gamma", "0,0,0,0"])
            .env("REGIONBOOT_THREADS", value)
            .current_dir(dir.path())
            .output()
            .unwrap()
    };
    assert_eq!(run("many").status.code(), Some(2));
    assert!(run("1").status.success());
    assert!(run("0").status.success());
}

#[test]
fn table_two_rows_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = regionboot(dir.path(), &["table", "2", "--methods", "bp,mcb", "--u-list", "0,3", "--out-dir", "t"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("t/table2.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "method,u,alpha,prob,scheme,percent");
    assert!(lines[1].starts_with("mcb,0.0,0.05,") && lines[1].ends_with(",quad,5.000"));
    assert!(lines[3].starts_with("bp,0.0,") && lines[3].ends_with(",13.39"));
    assert!(lines[4].ends_with(",5.027"));
    let side = read_json(&dir.path().join("t/table2.json"));
    assert_eq!(side["config"]["table"], 2);
    assert_eq!(side["config"]["lab"]["v_tol"], 1e-10);
    assert!(side["git_revision"].is_string());
    assert_eq!(side["rows"].as_array().unwrap().len(), 4);
}

#[test]
fn table_one_lr_row() {
    let dir = tempfile::tempdir().unwrap();
    let out = regionboot(dir.path(), &["table", "1", "--methods", "lr,signed_lr,confset,mcb"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(dir.path().join("table1.csv")).unwrap();
    let records: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(records.len(), 16);
    let row = |method: &str| -> Vec<f64> {
        records.iter().filter(|r| &r[3] == method && !r[4].is_empty()).map(|r| r[4].parse::<f64>().unwrap()).collect()
    };
    let lr = row("lr");
    let signed = row("signed_lr");
    let shown: Vec<String> = lr[..3].iter().map(|p| format!("{:.1}", 100.0 * p)).collect();
    assert_eq!(shown, ["6.4", "7.5", "7.7"]);
    for (a, b) in lr.iter().zip(&signed) {
        assert!((a - 2.0 * b).abs() < 1e-12);
    }
    assert_eq!(row("mcb").len(), 2);
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    for sub in ["a", "b"] {
        let out = regionboot(
            dir.path(),
            &["table", "2", "--methods", "signed_lr", "--scheme", "mc", "--draws", "3000", "--seed", "11", "--u-list", "0,1", "--out-dir", sub],
        );
        assert!(out.status.success());
        let out = regionboot(
            dir.path(),
            &["pvalue", "--region", "cone", "--y", "0.71,1.63", "--method", "bp,au2", "--backend", "mc", "--reps", "4000", "--seed", "5", "--out-dir", sub],
        );
        assert!(out.status.success());
    }
    for file in ["table2.csv", "table2.json", "pvalue.json"] {
        let a = std::fs::read(dir.path().join("a").join(file)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(file)).unwrap();
        let strip = |bytes: Vec<u8>| String::from_utf8(bytes).unwrap().replace("\"out_dir\": \"a\"", "").replace("\"out_dir\": \"b\"", "");
        assert_eq!(strip(a), strip(b), "{file}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.json"),
        r#"{"region":"cone","y":[0.71,1.63],"methods":["bp","au2"],"backend":"mc","reps":3000,"seed":3,"out_dir":"cfg"}"#,
    )
    .unwrap();
    let out = regionboot(dir.path(), &["pvalue", "--config", "run.json", "--seed", "4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report = read_json(&dir.path().join("cfg/pvalue.json"));
    assert_eq!(report["config"]["seed"], 4);
    assert_eq!(report["config"]["reps"], 3000);
    assert_eq!(report["config"]["mode"], "fit");
    assert_eq!(report["report"]["values"].as_array().unwrap().len(), 2);
}

#[test]
fn oracle_zero_curvature() {
    let dir = tempfile::tempdir().unwrap();
    let out = regionboot(dir.path(), &["oracle", "--lambda0", "1.85", "--gamma", "0,0,0,0"]);
    assert!(out.status.success());
    let v = read_json(&dir.path().join("oracle.json"));
    let expected = v["values"]["pv"].as_f64().unwrap();
    assert!((expected - 0.032157).abs() < 1e-5);
    for key in ["bp", "nbp", "au", "dbp", "dau"] {
        assert!((v["values"][key].as_f64().unwrap() - expected).abs() < 1e-15, "{key}");
    }
    assert!((v["rejection"]["bp"].as_f64().unwrap() - 0.05).abs() < 1e-12);

    let out = regionboot(dir.path(), &["oracle", "--region", r#"{"kind":"efron","h0":0.1}"#, "--y", "0.71,1.63", "--out", "geo.json"]);
    assert!(out.status.success());
    let v = read_json(&dir.path().join("geo.json"));
    assert!((v["summary"]["beta0"].as_f64().unwrap() - 1.85).abs() < 5e-3);
}

#[test]
fn curve_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let flat = r#"{"kind":"jet","jet":{"q":1,"h0":0,"h1":[0],"h2":[[0]],"h3":[[[0]]],"h4":[[[[0]]]]}}"#;
    let out = regionboot(dir.path(), &["curve", "--region", flat, "--y", "0,1.2", "--scales", "0.5:1.5:5"]);
    assert!(out.status.success());
    let mut rdr = csv::Reader::from_path(dir.path().join("bp_curve.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["sigma2", "z", "se", "kind"]);
    for r in rdr.records() {
        let r = r.unwrap();
        assert!((r[1].parse::<f64>().unwrap() - 1.2).abs() < 1e-9);
    }
    let fit = read_json(&dir.path().join("bp_curve_fit.json"));
    assert_eq!(fit["fit"]["coeffs"].as_array().unwrap().len(), 3);

    let out = regionboot(dir.path(), &["curve", "--kind", "dbp", "--region", "cone", "--y", "0.71,1.63"]);
    assert!(out.status.success());
    let fit = read_json(&dir.path().join("dbp_curve_fit.json"));
    assert!((fit["z_at_one"].as_f64().unwrap() - 1.54).abs() < 0.02);
    assert!((fit["extrapolations"][0][1]["z"].as_f64().unwrap() - 1.48).abs() < 0.02);
}
