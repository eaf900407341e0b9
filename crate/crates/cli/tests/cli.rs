use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn embedplan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_embedplan"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_stdout(args: &[&str]) -> String {
    let out = embedplan(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> Value {
    serde_json::from_str(&ok_stdout(args)).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, text).unwrap();
    p
}

fn gen(dir: &TempDir, name: &str, args: &[&str]) -> PathBuf {
    let p = dir.path().join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.extend_from_slice(&["--out", path_str(&p)]);
    ok_stdout(&full);
    p
}

/// Six small tables on two channels: products are needed to cut rounds.
const PAIRED_SPEC: &str = r#"{
  "tables": [
    {"rows": 12, "dim": 4}, {"rows": 30, "dim": 8}, {"rows": 7, "dim": 4},
    {"rows": 50, "dim": 4}, {"rows": 9, "dim": 8}, {"rows": 20, "dim": 4}
  ],
  "hidden_dims": [16, 8],
  "memory": {"hbm_channels": 2, "ddr_channels": 0, "onchip_banks": 0}
}"#;

#[test]
fn gen_is_deterministic_and_sized_by_profile() {
    let dir = TempDir::new().unwrap();
    let a = gen(
        &dir,
        "a.json",
        &["--profile", "table3-small", "--seed", "7"],
    );
    let b = gen(
        &dir,
        "b.json",
        &["--profile", "table3-small", "--seed", "7"],
    );
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    let spec: Value = serde_json::from_str(&fs::read_to_string(&a).unwrap()).unwrap();
    assert_eq!(spec["tables"].as_array().unwrap().len(), 47);

    let one = gen(&dir, "one.json", &["--tables", "1"]);
    let report = json(&["plan", path_str(&one)]);
    assert_eq!(report["summary"]["tables"], 1);
}

#[test]
fn gen_rejects_unknown_profile() {
    let out = embedplan(&["gen", "--profile", "nope"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn plan_reproduces_round_reduction() {
    let dir = TempDir::new().unwrap();
    let spec = gen(
        &dir,
        "s.json",
        &["--profile", "table3-small", "--seed", "7"],
    );
    let with = json(&["plan", path_str(&spec)]);
    assert_eq!(with["summary"]["dram_rounds"], 1);
    assert_eq!(with["summary"]["physical_tables"], 42);
    assert_eq!(with["summary"]["offchip_tables"], 34);
    let without = json(&["plan", path_str(&spec), "--no-cartesian"]);
    assert_eq!(without["summary"]["dram_rounds"], 2);
    assert_eq!(without["summary"]["offchip_tables"], 39);
    assert_eq!(with["spec_digest"], without["spec_digest"]);
}

#[test]
fn plan_report_is_byte_stable() {
    let dir = TempDir::new().unwrap();
    let spec = gen(&dir, "s.json", &["--tables", "20", "--seed", "3"]);
    let a = ok_stdout(&["plan", path_str(&spec)]);
    let b = ok_stdout(&["plan", path_str(&spec)]);
    assert_eq!(a, b);
    assert!(!a.contains("planner_time_ms"));
    let timed = json(&["plan", path_str(&spec), "--timing"]);
    assert!(timed["planner_time_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn plan_oracle_dominates() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "p.json", PAIRED_SPEC);
    let r = json(&["plan", path_str(&spec), "--oracle"]);
    let heuristic = r["cost"]["lookup_latency_ns"].as_f64().unwrap();
    let oracle = r["oracle"]["cost"]["lookup_latency_ns"].as_f64().unwrap();
    assert!(oracle <= heuristic);
    assert!(r["summary"]["cartesian_pairs"].as_u64().unwrap() > 0);
}

#[test]
fn plan_exit_codes() {
    let dir = TempDir::new().unwrap();
    let big = gen(&dir, "big.json", &["--tables", "9"]);
    assert_eq!(
        embedplan(&["plan", path_str(&big), "--oracle"])
            .status
            .code(),
        Some(2)
    );

    let invalid = write(&dir, "bad.json", r#"{"tables":[{"rows":0,"dim":4}]}"#);
    let out = embedplan(&["plan", path_str(&invalid)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("tables[0].rows"));

    let unparsable = write(&dir, "junk.json", "{not json");
    assert_eq!(
        embedplan(&["plan", path_str(&unparsable)]).status.code(),
        Some(2)
    );

    let missing = dir.path().join("missing.json");
    assert_eq!(
        embedplan(&["plan", path_str(&missing)]).status.code(),
        Some(2)
    );

    let huge = write(
        &dir,
        "huge.json",
        r#"{"tables":[{"rows":1000000000,"dim":64}]}"#,
    );
    assert_eq!(embedplan(&["plan", path_str(&huge)]).status.code(), Some(3));
}

#[test]
fn simulate_follows_pipeline_formula() {
    let dir = TempDir::new().unwrap();
    let spec = gen(
        &dir,
        "s.json",
        &["--profile", "table3-small", "--seed", "7"],
    );
    let csv = dir.path().join("stages.csv");
    let r = json(&[
        "simulate",
        path_str(&spec),
        "--items",
        "100",
        "--csv",
        path_str(&csv),
    ]);
    let sim = &r["simulation"];
    let latency = sim["single_item_latency_ns"].as_f64().unwrap();
    let max = sim["max_stage_ns"].as_f64().unwrap();
    assert_eq!(sim["makespan_ns"].as_f64().unwrap(), latency + 99.0 * max);
    assert_eq!(
        sim["steady_throughput_items_per_s"].as_f64().unwrap(),
        1e9 / max
    );
    // Tens of microseconds end to end for the 47-table model.
    assert!((10_000.0..100_000.0).contains(&latency), "{latency}");
    let stages = fs::read_to_string(&csv).unwrap();
    assert!(stages.starts_with("stage,ns,utilization\nlookup,300,"));

    let with_overhead = json(&["simulate", path_str(&spec), "--overhead-ns", "150"]);
    assert_eq!(with_overhead["lookup"]["per_query_ns"], 450.0);
}

#[test]
fn simulate_accepts_saved_plan_and_rejects_foreign_one() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "p.json", PAIRED_SPEC);
    let report = dir.path().join("report.json");
    ok_stdout(&["plan", path_str(&spec), "--out", path_str(&report)]);
    let r = json(&["simulate", path_str(&spec), "--plan", path_str(&report)]);
    let planned: Value = serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(
        r["lookup"]["per_query_ns"],
        planned["cost"]["lookup_latency_ns"]
    );

    let other = gen(&dir, "other.json", &["--tables", "3"]);
    let out = embedplan(&["simulate", path_str(&other), "--plan", path_str(&report)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_outputs_match_across_plans() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "p.json", PAIRED_SPEC);
    let paired = dir.path().join("paired.json");
    let plain = dir.path().join("plain.json");
    ok_stdout(&["plan", path_str(&spec), "--out", path_str(&paired)]);
    ok_stdout(&[
        "plan",
        path_str(&spec),
        "--no-cartesian",
        "--out",
        path_str(&plain),
    ]);
    let paired_report: Value = serde_json::from_str(&fs::read_to_string(&paired).unwrap()).unwrap();
    assert!(
        paired_report["summary"]["cartesian_pairs"]
            .as_u64()
            .unwrap()
            > 0
    );

    let rows = [12u64, 30, 7, 50, 9, 20];
    let queries: String = (0..50u64)
        .map(|k| {
            let q: Vec<u64> = rows.iter().map(|&r| (k * 7 + r) % r).collect();
            serde_json::to_string(&q).unwrap() + "\n"
        })
        .collect();
    let qpath = write(&dir, "q.jsonl", &queries);
    for precision in ["32", "16"] {
        let run = |plan: &Path| {
            ok_stdout(&[
                "run",
                path_str(&spec),
                "--plan",
                path_str(plan),
                "--queries",
                path_str(&qpath),
                "--precision",
                precision,
                "--seed",
                "11",
            ])
        };
        let (a, b) = (run(&paired), run(&plain));
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 50);
        for v in a.lines().map(|l| l.parse::<f64>().unwrap()) {
            assert!(v > 0.0 && v < 1.0);
        }
    }
}

#[test]
fn run_edge_cases() {
    let dir = TempDir::new().unwrap();
    let spec = write(&dir, "p.json", PAIRED_SPEC);
    let empty = write(&dir, "empty.jsonl", "");
    let out = embedplan(&["run", path_str(&spec), "--queries", path_str(&empty)]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());

    let malformed = write(&dir, "bad.jsonl", "[0,0,0,0,0,0]\n[1,2,\n");
    let out = embedplan(&["run", path_str(&spec), "--queries", path_str(&malformed)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("bad.jsonl:2:"));

    let out_of_range = write(&dir, "range.jsonl", "[12,0,0,0,0,0]\n");
    let out = embedplan(&["run", path_str(&spec), "--queries", path_str(&out_of_range)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("range.jsonl:1:"));

    let q = write(&dir, "q.jsonl", "[0,0,0,0,0,0]\n");
    let out = embedplan(&[
        "run",
        path_str(&spec),
        "--queries",
        path_str(&q),
        "--precision",
        "8",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn compare_is_deterministic_and_bounded() {
    let args = ["compare", "--seeds", "10", "--n-min", "4", "--n-max", "6"];
    let a = ok_stdout(&args);
    assert_eq!(a, ok_stdout(&args));
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(
        lines[0],
        "n_tables,instances,skipped,matches,match_rate,mean_gap_ns,max_ratio"
    );
    assert_eq!(lines.len(), 4);
    for row in &lines[1..] {
        let ratio: f64 = row.rsplit(',').next().unwrap().parse().unwrap();
        assert!(ratio >= 1.0);
    }
    assert_eq!(
        embedplan(&["compare", "--n-max", "9"]).status.code(),
        Some(2)
    );
    assert_eq!(
        embedplan(&["compare", "--n-min", "5", "--n-max", "4"])
            .status
            .code(),
        Some(2)
    );
}
