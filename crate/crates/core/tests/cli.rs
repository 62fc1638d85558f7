use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn sisi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sisi")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = sisi(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn edge_lines(text: &str) -> usize {
    text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).count()
}

#[test]
fn gen_grid_counts() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    ok(&["gen", "grid", "--rows", "60", "--cols", "60", "-o", p(&g)]);
    let text = fs::read_to_string(&g).unwrap();
    assert!(text.starts_with("# nodes: 3600\n"));
    // 2 * (60*59 + 59*60)
    assert_eq!(edge_lines(&text), 14160);
}

#[test]
fn gen_random_is_reproducible_and_checks_feasibility() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    ok(&["gen", "random", "--nodes", "50", "--edges", "200", "--seed", "4", "-o", p(&a)]);
    ok(&["gen", "random", "--nodes", "50", "--edges", "200", "--seed", "4", "-o", p(&b)]);
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(edge_lines(&fs::read_to_string(&a).unwrap()), 200);

    // 10 nodes hold at most 90 directed edges
    let out = sisi(&["gen", "random", "--nodes", "10", "--edges", "200"]);
    assert!(!out.status.success());
    assert!(!out.stderr.is_empty());
}

#[test]
fn bad_arguments_fail() {
    assert!(!sisi(&["gen", "grid", "--rows", "x", "--cols", "3"]).status.success());
    assert!(!sisi(&["frobnicate"]).status.success());
    assert!(!sisi(&["detect", "--graph", "/nonexistent/g.txt", "--obs", "/nonexistent/o.txt"]).status.success());
}

#[test]
fn simulate_whole_graph_at_full_rate() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let o = dir.path().join("o.txt");
    // a grid is strongly connected
    ok(&["gen", "grid", "--rows", "4", "--cols", "5", "-o", p(&g)]);
    ok(&["simulate", "--graph", p(&g), "--beta", "1", "--sources", "1", "--min-infected", "20", "--seed", "2", "-o", p(&o)]);
    let text = fs::read_to_string(&o).unwrap();
    let infected = text.lines().nth(1).unwrap().split_whitespace().count();
    assert_eq!(infected, 20);
    assert!(text.lines().nth(2).unwrap().starts_with("sources: "));
}

#[test]
fn simulate_is_reproducible_and_reaches_size_on_grid() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let (a, b) = (dir.path().join("a.txt"), dir.path().join("b.txt"));
    ok(&["gen", "grid", "--rows", "60", "--cols", "60", "-o", p(&g)]);
    for out in [&a, &b] {
        ok(&["simulate", "--graph", p(&g), "--model", "si", "--beta", "0.05", "--sources", "2", "--min-infected", "100", "--seed", "11", "-o", p(out)]);
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with("si 0.05 "));
    assert!(text.lines().nth(1).unwrap().split_whitespace().count() >= 100);
    assert_eq!(text.lines().nth(2).unwrap().split_whitespace().count(), 3);
}

#[test]
fn simulate_unreachable_size_fails() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    fs::write(&g, "0 1\n1 2\n").unwrap();
    let out = sisi(&["simulate", "--graph", p(&g), "--source-ids", "0", "--beta", "0.5", "--min-infected", "10"]);
    assert!(!out.status.success());
}

fn chain_instance(dir: &Path) -> (String, String) {
    // 10 -> 11 -> 12 -> 13, plus 14 -> 12 with 14 never infected
    let g = dir.join("g.txt");
    let o = dir.join("o.txt");
    fs::write(&g, "10 11\n11 12\n12 13\n14 12\n").unwrap();
    ok(&["simulate", "--graph", p(&g), "--source-ids", "10", "--beta", "1", "--tau", "inf", "-o", p(&o)]);
    assert_eq!(fs::read_to_string(&o).unwrap(), "si 1 inf\n10 11 12 13\nsources: 10\n");
    (p(&g).to_owned(), p(&o).to_owned())
}

#[test]
fn detect_deterministic_single_source() {
    let dir = tempfile::tempdir().unwrap();
    let (g, o) = chain_instance(dir.path());
    for algo in ["sisi", "sisi-relax", "greedy"] {
        let r = dir.path().join(format!("{algo}.json"));
        let out = ok(&["detect", "--graph", &g, "--obs", &o, "--algo", algo, "--qjd-trials", "200", "--max-samples", "100000", "-o", p(&r)]);
        assert!(String::from_utf8_lossy(&out.stdout).contains("sources 10"));
        let v: Value = serde_json::from_str(&fs::read_to_string(&r).unwrap()).unwrap();
        assert_eq!(v["sources"], serde_json::json!([10]), "{algo}");
        assert_eq!(v["f1"], 1.0);
        assert_eq!(v["detection_rate"], 100.0);
        assert_eq!(v["q_jd"], 1.0);
        assert_eq!(v["estimated_sd"], 0.0);
        for key in ["samples_used", "delta", "epsilon_effective", "runtime_ms"] {
            assert!(v.get(key).is_some(), "{key} missing");
        }
    }
}

#[test]
fn detect_without_true_sources_has_null_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let (g, _) = chain_instance(dir.path());
    let o = dir.path().join("plain.txt");
    fs::write(&o, "si 1 inf\n10 11 12 13\n").unwrap();
    let out = ok(&["detect", "--graph", &g, "--obs", p(&o), "--algo", "max-degree", "--no-timing"]);
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v["f1"].is_null() && v["detection_rate"].is_null() && v["q_jd"].is_null());
    assert!(v["runtime_ms"].is_null());
    assert!(v["delta"].is_null());
}

#[test]
fn detect_rejects_unknown_algorithm() {
    let dir = tempfile::tempdir().unwrap();
    let (g, o) = chain_instance(dir.path());
    let out = sisi(&["detect", "--graph", &g, "--obs", &o, "--algo", "netsleuth"]);
    assert!(!out.status.success());
}

#[test]
fn detect_is_identical_across_runs_and_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    let o = dir.path().join("o.txt");
    ok(&["gen", "random", "--nodes", "200", "--edges", "800", "--seed", "1", "-o", p(&g)]);
    ok(&["simulate", "--graph", p(&g), "--beta", "0.3", "--sources", "2", "--min-infected", "25", "--seed", "5", "-o", p(&o)]);
    let run = |threads: &str| {
        ok(&["--threads", threads, "detect", "--graph", p(&g), "--obs", p(&o), "--seed", "9", "--qjd-trials", "500", "--no-timing"]).stdout
    };
    let one = run("1");
    assert_eq!(one, run("1"));
    assert_eq!(one, run("4"));
}

#[test]
fn benchmark_writes_fixed_columns() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    ok(&["gen", "grid", "--rows", "12", "--cols", "12", "-o", p(&g)]);
    let run = || {
        ok(&[
            "benchmark", "--graph", p(&g), "--beta", "0.3", "--sources", "1,2", "--sizes", "10", "--cases", "2",
            "--algos", "sisi-relax,max-degree", "--qjd-trials", "100", "--eval-trials", "100", "--trials-per-eval", "20", "--no-timing",
        ])
        .stdout
    };
    let csv = String::from_utf8(run()).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "sources,target_size,algorithm,cases,mean_infected,mean_sd,mean_f1,mean_detection_rate,mean_q_jd,mean_runtime_ms"
    );
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 4);
    assert!(rows[0].starts_with("1,10,sisi-relax,2,"));
    assert!(rows[3].starts_with("2,10,max-degree,2,"));
    assert!(rows.iter().all(|r| r.ends_with(',')), "runtime column should be empty");
    assert_eq!(csv.as_bytes(), run());
}

#[test]
fn benchmark_needs_algorithms() {
    let dir = tempfile::tempdir().unwrap();
    let g = dir.path().join("g.txt");
    ok(&["gen", "grid", "--rows", "3", "--cols", "3", "-o", p(&g)]);
    let out = sisi(&["benchmark", "--graph", p(&g), "--algos", ""]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no algorithms"));
}
