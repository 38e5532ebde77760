mod common;

use std::fs;
use std::path::{Path, PathBuf};

use proptest::prelude::*;

use blindspot::io::files::read_samples_file;
use common::{run, s, write};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn golden(name: &str) -> String {
    let p = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name);
    fs::read_to_string(p).unwrap()
}

fn stdout_of(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} exited {:?}: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().unwrap()
}

#[test]
fn curve_matches_golden() {
    let samples = data("toy_samples.csv");
    let got = stdout_of(&[
        "curve",
        "--samples",
        s(&samples),
        "--tau-max",
        "6",
        "--mode",
        "plugin",
        "--mode",
        "plugin+unseen",
        "--mode",
        "generalized-gt",
    ]);
    assert_eq!(got, golden("curve.csv"));
}

#[test]
fn decompose_matches_golden() {
    let samples = data("toy_samples.csv");
    let weights = data("toy_weights.tsv");
    let got = stdout_of(&[
        "decompose",
        "--samples",
        s(&samples),
        "--tau",
        "4",
        "--weights",
        s(&weights),
    ]);
    assert_eq!(got, golden("decompose_weighted.csv"));
    let got = stdout_of(&[
        "decompose",
        "--samples",
        s(&samples),
        "--tau",
        "4",
        "--top-k",
        "2",
    ]);
    assert_eq!(got, golden("decompose_top2.csv"));
}

#[test]
fn ceiling_histogram_wilson_match_golden() {
    let samples = data("toy_samples.csv");
    let got = stdout_of(&[
        "ceiling",
        "--samples",
        s(&samples),
        "--tau-max",
        "4",
        "--chance-classes",
        "4",
    ]);
    assert_eq!(got, golden("ceiling.csv"));
    assert_eq!(
        stdout_of(&["histogram", "--samples", s(&samples)]),
        golden("histogram.csv")
    );
    let tallies = data("tallies.csv");
    assert_eq!(
        stdout_of(&["wilson", "--input", s(&tallies)]),
        golden("wilson.csv")
    );
}

#[test]
fn simulate_and_report_match_golden() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("sim.csv");
    let spec = data("sweep.txt");
    stdout_of(&["simulate", "--spec", s(&spec), "--out-csv", s(&csv)]);
    assert_eq!(fs::read_to_string(&csv).unwrap(), golden("simulate.csv"));

    let samples = data("toy_samples.csv");
    let report = stdout_of(&[
        "report",
        "--samples",
        s(&samples),
        "--tau-max",
        "3",
        "--decompose-tau",
        "2",
    ]);
    assert_eq!(report, golden("report.json"));
}

#[test]
fn simulate_seed_override_changes_output() {
    let spec = data("sweep.txt");
    let a = stdout_of(&["simulate", "--spec", s(&spec)]);
    let b = stdout_of(&["simulate", "--spec", s(&spec), "--seed", "3"]);
    let c = stdout_of(&["simulate", "--spec", s(&spec), "--seed", "4"]);
    assert_eq!(a, b);
    assert_ne!(a, c);
}

#[test]
fn exit_codes() {
    let samples = data("toy_samples.csv");
    let samples = s(&samples);
    assert_eq!(code(&["--help"]), 0);
    assert_eq!(code(&["--version"]), 0);
    assert_eq!(code(&[]), 1);
    assert_eq!(code(&["frobnicate"]), 1);
    assert_eq!(code(&["curve", "--samples", samples, "--tau-max", "0"]), 1);
    assert_eq!(code(&["curve", "--samples", samples]), 1);
    assert_eq!(code(&["curve", "--tau-max", "3"]), 1);
    assert_eq!(
        code(&[
            "curve",
            "--samples",
            samples,
            "--counts",
            samples,
            "--tau-max",
            "3"
        ]),
        1
    );
    assert_eq!(
        code(&["curve", "--samples", samples, "--tau-max", "3", "--mode", "bogus"]),
        1
    );
    assert_eq!(
        code(&[
            "ceiling",
            "--samples",
            samples,
            "--tau-max",
            "3",
            "--chance-classes",
            "2",
            "--assumed-blind-accuracy",
            "0.5"
        ]),
        1
    );

    assert_eq!(
        code(&["curve", "--samples", "/definitely/not/here.csv", "--tau-max", "3"]),
        2
    );
    assert_eq!(
        code(&[
            "ceiling",
            "--samples",
            samples,
            "--tau-max",
            "3",
            "--assumed-blind-accuracy",
            "1.5"
        ]),
        2
    );
    assert_eq!(code(&["wilson", "--input", samples]), 2);

    let dir = tempfile::tempdir().unwrap();
    let empty = write(dir.path(), "empty.csv", "factor:activity\n");
    assert_eq!(code(&["curve", "--samples", s(&empty), "--tau-max", "3"]), 2);
    let zero = write(dir.path(), "zero.csv", "state,count\na,0\n");
    assert_eq!(code(&["histogram", "--counts", s(&zero)]), 2);
    let neg = write(dir.path(), "w.tsv", "walk|0\t-1\n");
    assert_eq!(
        code(&[
            "decompose",
            "--samples",
            samples,
            "--tau",
            "2",
            "--weights",
            s(&neg)
        ]),
        2
    );
}

#[test]
fn errors_go_to_stderr() {
    let out = run(&["curve", "--samples", "/definitely/not/here.csv", "--tau-max", "3"]);
    assert!(out.stdout.is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("not/here.csv"));
}

#[test]
fn har_counts_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let counts = write(dir.path(), "t.csv", common::har_counts());
    let weights = write(dir.path(), "w.tsv", common::har_weights());
    let out = stdout_of(&[
        "decompose",
        "--counts",
        s(&counts),
        "--tau",
        "150",
        "--weights",
        s(&weights),
    ]);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows[0], "state,count,prob,weight,contribution");
    assert!(rows.contains(&"Stairs up,134,0.080048,0.600000,0.048029"));
    assert!(!out.contains("Walking"));
}

#[test]
fn ingest_pamap2_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let s101 = write(
        d,
        "subject101.dat",
        &common::pamap2_file(&[(1, 20.0, 5.0, 0.2), (0, 2.0, 0.0, 0.0), (4, 20.0, 70.0, 3.0)]),
    );
    let s105 = write(d, "subject105.dat", &common::pamap2_file(&[(2, 15.0, 40.0, 1.0)]));
    let out = d.join("samples.csv");
    let summary = d.join("summary.json");
    let fitted = d.join("fitted.cfg");
    stdout_of(&[
        "ingest",
        "--source",
        "pamap2",
        "--input",
        s(&s101),
        s(&s105),
        "--preset",
        "a,p,e",
        "--out",
        s(&out),
        "--summary",
        s(&summary),
        "--fitted-config",
        s(&fitted),
    ]);
    let (schema, keys) = read_samples_file(&out).unwrap();
    assert_eq!(schema, ["activity", "tilt", "energy"]);
    // 5 s windows every 2.5 s: 7 + 7 + 5 windows.
    assert_eq!(keys.len(), 19);
    let activities: std::collections::BTreeSet<_> = keys
        .iter()
        .map(|k| k.value("activity").unwrap().to_owned())
        .collect();
    assert_eq!(activities.into_iter().collect::<Vec<_>>(), ["1", "2", "4"]);

    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    assert_eq!(json["emitted"], 19);
    assert_eq!(json["rows_read"], 5700);
    assert_eq!(json["rows_kept"], 5500);

    // The fitted config reproduces the same states when passed back in.
    let again = d.join("again.csv");
    stdout_of(&[
        "ingest",
        "--source",
        "pamap2",
        "--input",
        s(&s101),
        s(&s105),
        "--config",
        s(&fitted),
        "--out",
        s(&again),
    ]);
    assert_eq!(fs::read(&out).unwrap(), fs::read(&again).unwrap());

    let hist = stdout_of(&["histogram", "--samples", s(&out)]);
    assert_eq!(hist.lines().count() - 1, {
        let set: std::collections::BTreeSet<_> = keys.iter().collect();
        set.len()
    });
}

#[test]
fn ingest_imu_and_diagnoses() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let imu = write(
        d,
        "imu.csv",
        &common::imu_csv(&[("walk", 1000, 10.0, 1.0), ("sit", 1000, 85.0, 0.05)]),
    );
    let out = d.join("imu_samples.csv");
    stdout_of(&[
        "ingest",
        "--source",
        "imu-csv",
        "--input",
        s(&imu),
        "--sample-rate-hz",
        "100",
        "--preset",
        "a,p",
        "--out",
        s(&out),
    ]);
    let (schema, keys) = read_samples_file(&out).unwrap();
    assert_eq!(schema, ["activity", "tilt"]);
    assert_eq!(keys.len(), 6);
    assert!(keys.iter().any(|k| k.label() == "walk|0"));
    assert!(keys.iter().any(|k| k.label() == "sit|5"));

    let diag = write(d, "diagnoses.csv", common::diagnoses_csv());
    let out = d.join("icd.csv");
    stdout_of(&[
        "ingest",
        "--source",
        "diagnoses",
        "--input",
        s(&diag),
        "--out",
        s(&out),
    ]);
    let (schema, keys) = read_samples_file(&out).unwrap();
    assert_eq!(schema, ["icd4"]);
    let labels: Vec<String> = keys.iter().map(|k| k.label()).collect();
    assert_eq!(labels.iter().filter(|l| *l == "I251").count(), 3);
    assert_eq!(labels.len(), 5);
}

#[test]
fn samples_csv_ingest_requires_key_columns() {
    let dir = tempfile::tempdir().unwrap();
    let src = write(dir.path(), "raw.csv", "site,ward,x\nA,1,9\nB,2,8\n");
    let out = dir.path().join("o.csv");
    assert_eq!(
        code(&[
            "ingest",
            "--source",
            "samples-csv",
            "--input",
            s(&src),
            "--out",
            s(&out)
        ]),
        2
    );
    stdout_of(&[
        "ingest",
        "--source",
        "samples-csv",
        "--input",
        s(&src),
        "--key-columns",
        "site,ward",
        "--out",
        s(&out),
    ]);
    assert_eq!(
        fs::read_to_string(&out).unwrap(),
        "factor:site,factor:ward\nA,1\nB,2\n"
    );
}

fn malformed_counts() -> impl Strategy<Value = String> {
    let cell = prop_oneof![
        Just(String::new()),
        Just("-3".to_string()),
        Just("1.5".to_string()),
        Just("x".to_string()),
        Just("\"".to_string()),
        Just("18446744073709551616".to_string()),
        "[a-z]{1,4}",
    ];
    (prop::collection::vec((cell.clone(), cell), 1..6), any::<bool>()).prop_map(|(rows, drop_header)| {
        let mut s = if drop_header {
            "state,weight\n".to_string()
        } else {
            "state,count\n".to_string()
        };
        for (a, b) in rows {
            s.push_str(&format!("{a},{b}\n"));
        }
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Every count cell is invalid (or the header is), so the file must be rejected.
    #[test]
    fn malformed_counts_never_succeed(body in malformed_counts()) {
        let dir = tempfile::tempdir().unwrap();
        let p = write(dir.path(), "bad.csv", &body);
        let out = run(&["histogram", "--counts", s(&p)]);
        prop_assert_ne!(out.status.code(), Some(0), "accepted:\n{}", body);
        prop_assert!(out.status.code().is_some());
    }

    #[test]
    fn ragged_samples_never_succeed(extra in 1usize..4, at in 0usize..5) {
        let dir = tempfile::tempdir().unwrap();
        let mut body = String::from("factor:a,factor:b\n");
        for i in 0..5 {
            if i == at {
                body.push_str(&format!("x,y{}\n", ",z".repeat(extra)));
            } else {
                body.push_str("x,y\n");
            }
        }
        let p = write(dir.path(), "ragged.csv", &body);
        prop_assert_eq!(code(&["curve", "--samples", s(&p), "--tau-max", "2"]), 2);
    }
}
