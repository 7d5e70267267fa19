use std::path::Path;

use lbmbench::cli::{append_csv, read_csv, run, RunRecord, CSV_COLUMNS, EXIT_CONFIG, EXIT_OK, EXIT_VERIFICATION};

fn lbm(args: &[&str]) -> i32 {
    run(std::iter::once("lbmbench").chain(args.iter().copied()))
}

fn bench_to(path: &Path, format: &str) -> i32 {
    let p = path.to_str().unwrap();
    lbm(&[
        "bench", "--kernel", "list-aa-pv-soa", "--geometry", "channel", "--dims", "20x12x12", "--iterations", "4",
        "--threads", "2", "--out", p, "--format", format,
    ])
}

#[test]
fn csv_appends_under_one_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("runs.csv");
    assert_eq!(bench_to(&path, "csv"), EXIT_OK);
    assert_eq!(bench_to(&path, "csv"), EXIT_OK);
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert_eq!(lines[0], CSV_COLUMNS.join(","));
    let recs = read_csv(&path).unwrap();
    assert_eq!(recs.len(), 2);
    let r = &recs[0];
    assert_eq!((r.kernel.as_str(), r.nx, r.n_fluid, r.threads), ("list-aa-pv-soa", 20, 2000, 2));
    assert!((r.bl_theoretical - (304.0 + 38.0 * 3.0 / 10.0)).abs() < 1e-12);
    assert!((r.v_fraction.unwrap() - 0.8).abs() < 1e-15);
    assert_eq!(r.pmax_mflups, None);
}

#[test]
fn csv_refuses_foreign_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("other.csv");
    std::fs::write(&path, "a,b\n1,2\n").unwrap();
    assert_eq!(bench_to(&path, "csv"), EXIT_CONFIG);
}

#[test]
fn json_and_csv_carry_the_same_fields() {
    let dir = tempfile::tempdir().unwrap();
    let (csv, json) = (dir.path().join("r.csv"), dir.path().join("r.jsonl"));
    assert_eq!(bench_to(&csv, "csv"), EXIT_OK);
    assert_eq!(bench_to(&json, "json"), EXIT_OK);
    let from_json: RunRecord = serde_json::from_str(std::fs::read_to_string(&json).unwrap().trim()).unwrap();
    let value = serde_json::to_value(&from_json).unwrap();
    let keys: Vec<&str> = value.as_object().unwrap().keys().map(String::as_str).collect();
    let mut expected = CSV_COLUMNS.to_vec();
    expected.sort();
    let mut keys = keys;
    keys.sort();
    assert_eq!(keys, expected);
    let again = dir.path().join("again.csv");
    append_csv(&again, std::slice::from_ref(&from_json)).unwrap();
    assert_eq!(read_csv(&again).unwrap(), vec![from_json]);
}

#[test]
fn exit_codes() {
    assert_eq!(lbm(&["list-kernels"]), EXIT_OK);
    assert_eq!(lbm(&["geometry", "--kind", "blocks", "--dims", "16x16x16", "--block", "4", "--spacing", "4"]), EXIT_OK);
    assert_eq!(lbm(&["geometry", "--kind", "tube", "--dims", "8x8x8"]), EXIT_CONFIG);
    assert_eq!(lbm(&["bench", "--kernel", "aa-soa", "--dims", "8x8x8", "--iterations", "3"]), EXIT_CONFIG);
    assert_eq!(lbm(&["bench", "--kernel", "aa-soa", "--dims", "8x8x8", "--padding", "odd"]), EXIT_CONFIG);
    assert_eq!(lbm(&["bench", "--kernel", "aa-soa", "--dims", "8x8x8", "--threads", "0"]), EXIT_CONFIG);
    assert_eq!(lbm(&["microbench", "--which", "copy", "--size", "1024"]), EXIT_CONFIG);
    assert_eq!(lbm(&["model", "--bandwidths", "/nonexistent/bw.toml"]), EXIT_CONFIG);
    assert_eq!(lbm(&["verify", "--kernel", "list-aa-soa", "--dims", "2x2x8"]), EXIT_OK);
    // a run too short to converge fails verification
    assert_eq!(lbm(&["verify", "--kernel", "list-aa-soa", "--dims", "2x2x40", "--max-steps", "100"]), EXIT_VERIFICATION);
}

#[test]
fn binary_reports_unknown_kernel() {
    let out = std::process::Command::new(env!("CARGO_BIN_EXE_lbmbench"))
        .args(["bench", "--kernel", "list-aa-xyz"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(EXIT_CONFIG));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("list-aa-pv-soa") && err.contains("blk-push-aos"));
}
