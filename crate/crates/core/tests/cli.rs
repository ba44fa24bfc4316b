//! End-to-end checks of the command-line front end.

use std::process::Command;

use student_refine::cli::{run, sig15};
use student_refine::survival::{max_error_scan_with, ScanOptions};
use student_refine::{ApproxOrder, DegreesOfFreedom};

fn run_lib(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("student-refine").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_student-refine"))
}

#[test]
fn scan_csv_round_trips() {
    let nus = [16.0, 50.0, 300.0];
    let (code, out, err) = run_lib(&["scan", "--nu-list", "16,50,300", "--order", "2", "--grid", "401"]);
    assert_eq!(code, 0, "{err}");

    let mut reader = csv::Reader::from_reader(out.as_bytes());
    let header: Vec<String> = reader.headers().unwrap().iter().map(String::from).collect();
    assert_eq!(header, ["nu", "order", "max_error", "argmax_a", "grid_points"]);

    let opts = ScanOptions { grid_points: 401, ..ScanOptions::default() };
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), nus.len());
    for (row, nu) in rows.iter().zip(nus) {
        let rep = max_error_scan_with(DegreesOfFreedom::new(nu).unwrap(), ApproxOrder::Two, &opts).unwrap();
        let at15 = |x: f64| sig15(x).parse::<f64>().unwrap();
        let parsed = |i: usize| row[i].parse::<f64>().unwrap();
        assert_eq!(parsed(0).to_bits(), at15(rep.nu.get()).to_bits());
        assert_eq!(&row[1], "2");
        assert_eq!(parsed(2).to_bits(), at15(rep.max_error).to_bits());
        assert_eq!(parsed(3).to_bits(), at15(rep.argmax_a).to_bits());
        assert_eq!(row[4].parse::<usize>().unwrap(), rep.grid_points);
    }
}

#[test]
fn scan_json_is_array_in_input_order() {
    let (code, out, _) = run_lib(&["--format", "json", "scan", "--nu-list", "300,16,50", "--order", "0", "--grid", "201"]);
    assert_eq!(code, 0);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let nus: Vec<f64> = v.as_array().unwrap().iter().map(|r| r["nu"].as_f64().unwrap()).collect();
    assert_eq!(nus, [300.0, 16.0, 50.0]);
}

#[test]
fn output_is_deterministic() {
    let args = ["scan", "--nu-list", "16,32,64,128", "--order", "3"];
    let first = binary().args(args).output().unwrap();
    let second = binary().args(args).output().unwrap();
    assert!(first.status.success());
    assert!(!first.stdout.is_empty());
    assert_eq!(first.stdout, second.stdout);
}

#[test]
fn binary_exit_codes() {
    let ok = binary().args(["sf", "--nu", "3", "--a", "1.7320508075688772", "--exact"]).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stdout).contains("0.090845056"));

    let usage = binary().args(["scan", "--order", "1"]).output().unwrap();
    assert_eq!(usage.status.code(), Some(2));
    assert!(!usage.stderr.is_empty());

    let domain = binary().args(["pdf", "--nu", "1.5", "--x", "0"]).output().unwrap();
    assert_eq!(domain.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&domain.stderr).contains("nu"));
}

#[test]
fn numerical_failure_exit_code() {
    // order-3 errors at this nu all sit below the noise floor
    let (code, out, err) = run_lib(&["slopes", "--order", "3", "--nu-list", "1e5,2e5,4e5,8e5", "--grid", "201"]);
    assert_eq!(code, 1, "{out}");
    assert!(err.contains("slope fit"), "{err}");
}

#[test]
fn writes_to_output_file() {
    let path = std::env::temp_dir().join(format!("student-refine-cli-{}.json", std::process::id()));
    let path_str = path.to_str().unwrap();
    let (code, out, _) = run_lib(&["--format", "json", "--output", path_str, "constants"]);
    assert_eq!(code, 0);
    assert!(out.is_empty());
    let written = std::fs::read_to_string(&path).unwrap();
    std::fs::remove_file(&path).unwrap();
    let v: serde_json::Value = serde_json::from_str(&written).unwrap();
    assert_eq!(v.as_array().unwrap().len(), 4);
    assert_eq!(v[0]["reference"], "0.137647");
}

#[test]
fn every_subcommand_runs() {
    let cases: [&[&str]; 7] = [
        &["pdf", "--nu", "4", "--x", "0"],
        &["sf", "--nu", "30", "--a", "-1.2", "--order", "3"],
        &["ratio", "--nu", "200", "--x", "1.5", "--order", "2"],
        &["quantile", "--nu", "30", "--alpha", "0.025", "--invert-order", "3"],
        &["constants"],
        &["scan", "--nu-list", "40", "--order", "1", "--full-window"],
        &["slopes", "--order", "0", "--nu-list", "16,32,64,128", "--grid", "301"],
    ];
    for args in cases {
        for format in ["csv", "json"] {
            let mut full = vec!["--format", format];
            full.extend_from_slice(args);
            let (code, out, err) = run_lib(&full);
            assert_eq!(code, 0, "{args:?}: {err}");
            assert!(!out.is_empty());
        }
    }
    let (_, out, _) = run_lib(&["pdf", "--nu", "4", "--x", "0"]);
    assert_eq!(out.lines().nth(1), Some("4,0,0.375"));
}
