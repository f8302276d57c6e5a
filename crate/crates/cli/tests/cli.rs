use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_timelike"));
    c.env_remove("TIMELIKE_OUT_DIR");
    c
}

fn write_config(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(format!("{name}.json"));
    std::fs::write(&p, body).unwrap();
    p
}

fn run(config: &Path, out: &Path, extra: &[&str]) -> Output {
    bin()
        .arg("run")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(extra)
        .output()
        .unwrap()
}

fn report(out: &Path, stem: &str) -> Value {
    serde_json::from_str(&std::fs::read_to_string(out.join(format!("{stem}.report.json"))).unwrap())
        .unwrap()
}

const SQUARE: &str = r#"{"space": {"kind": "minkowski", "N": 2},
 "region": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
 "seed": 7,
 "task": {"kind": "measure", "N": 2, "mode": "V", "schedule": [0.4, 0.2, 0.1, 0.05]}}"#;

#[test]
fn measure_on_the_unit_square_passes_with_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq", SQUARE);
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let csv = std::fs::read_to_string(dir.path().join("sq.measure.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "mode,N,delta,candidates,chosen,total_cost,feasible"
    );
    assert_eq!(lines.len(), 5);

    let r = report(dir.path(), "sq");
    assert_eq!(r["task"], "measure");
    let verdicts = r["verdicts"].as_array().unwrap();
    assert!(!verdicts.is_empty());
    for v in verdicts {
        assert_eq!(v["status"], "PASS");
        assert!(!v["invariant"].as_str().unwrap().is_empty());
    }
    // every row carries its δ and N axes
    for row in r["payload"]["estimate"]["rows"].as_array().unwrap() {
        assert!(row["delta"].is_number());
    }
    assert_eq!(r["payload"]["estimate"]["N"], 2.0);
}

#[test]
fn increasing_schedule_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "bad",
        &SQUARE.replace("[0.4, 0.2, 0.1, 0.05]", "[0.05, 0.1, 0.2]"),
    );
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("delta schedule must be strictly decreasing"),
        "{err}"
    );
    assert!(err.contains("task.schedule"), "{err}");
}

#[test]
fn unknown_keys_and_missing_seed_are_config_errors() {
    let dir = tempfile::tempdir().unwrap();
    let extra = write_config(
        dir.path(),
        "extra",
        &SQUARE.replace("\"seed\": 7,", "\"seed\": 7, \"colour\": 1,"),
    );
    let out = run(&extra, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("colour"));

    let seedless = write_config(dir.path(), "seedless", &SQUARE.replace("\"seed\": 7,", ""));
    let out = run(&seedless, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

fn strip_clock(mut v: Value) -> String {
    v.as_object_mut().unwrap().remove("wall_clock_seconds");
    serde_json::to_string(&v).unwrap()
}

#[test]
fn identical_config_and_seed_give_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq", SQUARE);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(run(&cfg, &a, &[]).status.code(), Some(0));
    assert_eq!(run(&cfg, &b, &["--threads", "2"]).status.code(), Some(0));
    let text = |d: &Path| std::fs::read_to_string(d.join("sq.report.json")).unwrap();
    let (ta, tb) = (text(&a), text(&b));
    // byte-identical up to the trailing wall-clock field
    let cut = |t: &str| t[..t.find("\"wall_clock_seconds\"").unwrap()].to_string();
    assert_eq!(cut(&ta), cut(&tb));
    assert_eq!(strip_clock(report(&a, "sq")), strip_clock(report(&b, "sq")));
    for csv in ["sq.measure.csv", "sq.series.csv"] {
        assert_eq!(
            std::fs::read(a.join(csv)).unwrap(),
            std::fs::read(b.join(csv)).unwrap()
        );
    }
}

#[test]
fn seed_override_is_echoed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq", SQUARE);
    assert_eq!(
        run(&cfg, dir.path(), &["--seed", "99"]).status.code(),
        Some(0)
    );
    assert_eq!(report(dir.path(), "sq")["config"]["seed"], 99);
}

#[test]
fn output_dir_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "sq", SQUARE);
    let target = dir.path().join("from-env");
    let out = bin()
        .arg("run")
        .arg(&cfg)
        .env("TIMELIKE_OUT_DIR", &target)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(target.join("sq.report.json").exists());
}

#[test]
fn scaling_audit_reports_lambda_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "audit",
        r#"{"space": {"kind": "minkowski", "N": 2},
            "region": {"kind": "diamond", "a": [0, 0], "b": [1, 0]},
            "seed": 1,
            "task": {"kind": "map-audit", "map": {"name": "scaling", "lambda": 2}}}"#,
    );
    assert_eq!(run(&cfg, dir.path(), &[]).status.code(), Some(0));
    let lambda = report(dir.path(), "audit")["payload"]["empirical_lambda"]
        .as_f64()
        .unwrap();
    assert!((lambda - 2.0).abs() < 1e-9, "{lambda}");
}

#[test]
fn dimension_scan_writes_one_series_per_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "dim",
        r#"{"space": {"kind": "minkowski", "N": 2},
            "region": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
            "seed": 5,
            "task": {"kind": "dimension", "N_list": [1.5, 2, 2.5], "mode": "V", "schedule": [0.4, 0.2, 0.1]}}"#,
    );
    assert_eq!(run(&cfg, dir.path(), &[]).status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("dim.series.csv")).unwrap();
    let mut ns: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect();
    ns.dedup();
    assert_eq!(ns, ["1.5", "2", "2.5"]);
}

#[test]
fn empty_schedule_gives_header_only_series() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "empty",
        &SQUARE.replace("[0.4, 0.2, 0.1, 0.05]", "[]"),
    );
    run(&cfg, dir.path(), &[]);
    let csv = std::fs::read_to_string(dir.path().join("empty.series.csv")).unwrap();
    assert_eq!(csv, "N,mode,delta,value,log10_delta,log10_value\n");
}

#[test]
fn nulldist_writes_graph_and_histogram_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "null",
        r#"{"space": {"kind": "minkowski", "N": 2},
            "region": {"kind": "box", "lo": [0, 0], "hi": [1, 1]},
            "seed": 9,
            "task": {"kind": "nulldist", "pitch": 0.05, "pairs": [[[0, 0], [0, 1]]],
                     "histogram_samples": 40}}"#,
    );
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let graph = std::fs::read_to_string(dir.path().join("null.graph.csv")).unwrap();
    assert!(graph.starts_with("pitch,linking_radius,nodes,edges\n0.05,"));
    let hist = std::fs::read_to_string(dir.path().join("null.histogram.csv")).unwrap();
    let total: usize = hist
        .lines()
        .skip(1)
        .map(|l| l.rsplit(',').next().unwrap().parse::<usize>().unwrap())
        .sum();
    assert_eq!(total, 40 * 39 / 2);
    let d = report(dir.path(), "null")["payload"]["distances"][0]["value"]
        .as_f64()
        .unwrap();
    assert!((d - 1.0).abs() <= 0.05);
}

#[test]
fn restricted_segment_has_no_admissible_covering() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "seg",
        r#"{"space": {"kind": "minkowski", "N": 2},
            "region": {"kind": "box", "lo": [0.5, 0], "hi": [0.5, 1]},
            "seed": 3,
            "task": {"kind": "restricted-measure", "N": 1, "mode": "V", "schedule": [0.4, 0.2]}}"#,
    );
    assert_eq!(run(&cfg, dir.path(), &[]).status.code(), Some(0));
    let r = report(dir.path(), "seg");
    assert_eq!(r["payload"]["admissible_covering_at_every_delta"], false);
    let csv = std::fs::read_to_string(dir.path().join("seg.measure.csv")).unwrap();
    assert!(csv.lines().skip(1).all(|l| l.contains(",inf,false")));
}

#[test]
fn refused_comparison_exits_with_verdict_failure() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "shear",
        r#"{"space": {"kind": "minkowski", "N": 2},
            "region": {"kind": "diamond", "a": [0, 0], "b": [1, 0]},
            "seed": 4,
            "task": {"kind": "volume-comparison", "map": {"name": "shear", "k": 0.5},
                     "N": 2, "mode": "V", "schedule": [0.2, 0.1]}}"#,
    );
    let out = run(&cfg, dir.path(), &[]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("hypothesis"));
}
