use std::path::{Path, PathBuf};

use mfmomp_cli::instance::{format_instance, parse_instance, InstanceFile};
use mfmomp_cli::run;
use proptest::prelude::*;
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn call(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("mfmomp").chain(args.iter().copied());
    let code = run(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn solve_json(args: &[&str]) -> (i32, Value) {
    let (code, out, err) = call(args);
    assert!(code == 0 || code == 2, "exit {code}: {err}");
    (code, serde_json::from_str(&out).unwrap())
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn small_instance(seed: u64, n: usize, p: usize) -> String {
    let mut s = seed.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
    let mut next = move || {
        s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        (s >> 33) as f64 / (1u64 << 31) as f64 * 10.0
    };
    let points = (0..n).map(|_| vec![(next() * 100.0).round() / 100.0, (next() * 100.0).round() / 100.0]).collect();
    format_instance(&InstanceFile { points, p })
}

const KEYS: [&str; 16] = [
    "objective",
    "lower_bound",
    "gap_percent",
    "gap_root_percent",
    "nodes",
    "columns",
    "exact_pricer_calls",
    "total_pricer_calls",
    "time_seconds",
    "facilities",
    "assignment",
    "method",
    "status",
    "config",
    "bound_is_exact",
    "aggregation",
];

#[test]
fn one_point_bnp() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "one.txt", "# single demand point\n1 2 1\n3 4\n");
    let (code, v) = solve_json(&["solve", inst.to_str().unwrap(), "--method", "bnp"]);
    assert_eq!(code, 0);
    assert_eq!(v["objective"], 0.0);
    assert_eq!(v["nodes"], 1);
    assert_eq!(v["status"], "optimal");
    assert_eq!(v["facilities"], serde_json::json!([[3.0, 4.0]]));
}

#[test]
fn report_schema_and_key_order() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.txt", &small_instance(1, 7, 2));
    let path = inst.to_str().unwrap();
    for method in ["bnp", "matheur", "kmean:4", "ptf:4", "grid-oracle:16", "partition-oracle"] {
        let (_, out, err) = call(&["solve", path, "--method", method, "--lambda", "D:0.5", "--norm", "l2"]);
        assert!(err.is_empty(), "{method}: {err}");
        let v: Value = serde_json::from_str(&out).unwrap();
        let keys: Vec<&str> = v.as_object().unwrap().keys().map(String::as_str).collect();
        // serde_json's map sorts keys unless order is preserved, so check the raw text order too
        let mut last = 0;
        for k in KEYS {
            assert!(keys.contains(&k), "{method}: missing {k}");
            let at = out.find(&format!("\"{k}\":")).unwrap();
            assert!(at >= last, "{method}: {k} out of order");
            last = at;
        }
        assert_eq!(keys.len(), KEYS.len());
        assert_eq!(v["method"], method);
        assert_eq!(v["assignment"].as_array().unwrap().len(), 7);
        assert_eq!(v["facilities"].as_array().unwrap().len(), 2);
        assert_eq!(v["config"]["lambda"], "D:0.5");
        assert_eq!(v["config"]["norm"], "l2");
        let agg = method.starts_with("kmean") || method.starts_with("ptf");
        assert_eq!(v["aggregation"].is_object(), agg, "{method}");
        if v["bound_is_exact"] == true {
            let obj = v["objective"].as_f64().unwrap();
            let lb = v["lower_bound"].as_f64().unwrap();
            if (obj - lb).abs() <= 1e-6 * obj.abs() {
                assert_eq!(v["gap_percent"], 0.0, "{method}");
            }
        }
    }
}

#[test]
fn bnp_and_oracle_agree() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.txt", &small_instance(2, 8, 2));
    let path = inst.to_str().unwrap();
    for lambda in ["W", "C", "K:3", "S:2:0.5", "A"] {
        let (_, a) = solve_json(&["solve", path, "--lambda", lambda]);
        let (_, b) = solve_json(&["solve", path, "--lambda", lambda, "--method", "partition-oracle"]);
        let (x, y) = (a["objective"].as_f64().unwrap(), b["objective"].as_f64().unwrap());
        assert!((x - y).abs() <= 1e-4 * y.max(1.0), "{lambda}: {x} vs {y}");
        assert_eq!(a["status"], "optimal");
    }
}

#[test]
fn lambda_file_matches_named_family() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.txt", &small_instance(3, 20, 1));
    let weights: Vec<&str> = std::iter::repeat("0").take(10).chain(std::iter::repeat("1").take(10)).collect();
    write(dir.path(), "k10.txt", &weights.join("\n"));
    let path = inst.to_str().unwrap();
    let (_, a) = solve_json(&["solve", path, "--lambda", "K:10", "--method", "grid-oracle:12"]);
    let (_, b) = solve_json(&["solve", path, "--lambda", "@k10.txt", "--method", "grid-oracle:12"]);
    assert_eq!(a["objective"], b["objective"]);
    assert_eq!(a["facilities"], b["facilities"]);
}

#[test]
fn identical_invocations_give_identical_json() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(dir.path(), "i.txt", &small_instance(4, 9, 3));
    let path = inst.to_str().unwrap();
    for method in ["bnp", "matheur", "kmean:5", "ptf:5"] {
        let args = ["solve", path, "--method", method, "--seed", "42", "--lambda", "S"];
        let strip = |s: String| {
            let mut v: Value = serde_json::from_str(&s).unwrap();
            v.as_object_mut().unwrap().remove("time_seconds");
            serde_json::to_string(&v).unwrap()
        };
        assert_eq!(strip(call(&args).1), strip(call(&args).1), "{method}");
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write(dir.path(), "ok.txt", &small_instance(5, 10, 3));
    let bad = write(dir.path(), "bad.txt", "3 2 1\n0 0\n1 1\n");
    let good = good.to_str().unwrap();

    let (code, out, err) = call(&["solve", bad.to_str().unwrap()]);
    assert_eq!((code, out.is_empty()), (3, true));
    assert!(err.contains("bad.txt"), "{err}");

    for args in [
        vec!["solve", good, "--lambda", "X"],
        vec!["solve", good, "--norm", "linf"],
        vec!["solve", good, "--method", "simplex"],
        vec!["solve", good, "--theta", "2"],
        vec!["solve", good, "--p", "0"],
        vec!["solve", good, "--method", "partition-oracle", "--p", "4"],
        vec!["solve", "/nonexistent/instance.txt"],
        vec!["frobnicate"],
    ] {
        let (code, _, err) = call(&args);
        assert_eq!(code, 3, "{args:?}");
        assert!(!err.trim().is_empty(), "{args:?}");
    }

    let (code, v) = solve_json(&["solve", good, "--time-limit", "0"]);
    assert_eq!(code, 2);
    assert_eq!(v["status"], "time_limit");
    assert!(v["objective"].as_f64().unwrap().is_finite());

    let (code, out, _) = call(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("solve") && out.contains("bench"));
}

#[test]
fn shipped_fixtures_parse() {
    let e = mfmomp_cli::instance::read_instance(&fixture("eilon50.txt")).unwrap();
    assert_eq!((e.n(), e.d(), e.p), (50, 2, 5));
    let s = mfmomp_cli::instance::read_instance(&fixture("synthetic654.txt")).unwrap();
    assert_eq!((s.n(), s.d()), (654, 2));
    let (_, v) = solve_json(&["solve", fixture("synthetic654.txt").to_str().unwrap(), "--method", "kmean:8", "--p", "2", "--pricing", "heuristic-first"]);
    assert_eq!(v["assignment"].as_array().unwrap().len(), 654);
    assert!(v["aggregation"]["delta"].as_f64().unwrap() > 0.0);
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    let mut r = csv::ReaderBuilder::new().has_headers(false).from_reader(text.as_bytes());
    r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect()
}

#[test]
fn bench_empty_manifest_is_header_only() {
    let dir = tempfile::tempdir().unwrap();
    let m = write(dir.path(), "empty.toml", "");
    let (code, out, err) = call(&["bench", m.to_str().unwrap()]);
    assert_eq!(code, 0, "{err}");
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0], mfmomp_cli::bench::HEADER.to_vec());
}

#[test]
fn bench_two_by_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", &small_instance(6, 6, 2));
    write(dir.path(), "b.txt", &small_instance(7, 7, 2));
    let m = write(
        dir.path(),
        "m.toml",
        "instances = [\"a.txt\", \"b.txt\"]\nmethods = [\"bnp\", \"partition-oracle\"]\nlambdas = [\"K:3\"]\np = [2]\nseed = 3\n",
    );
    let serial = csv_rows(&call(&["bench", m.to_str().unwrap()]).1);
    assert_eq!(serial.len(), 1 + 4 + 2);
    let col = |name: &str| mfmomp_cli::bench::HEADER.iter().position(|h| *h == name).unwrap();
    for r in &serial[1..5] {
        assert_eq!(r[col("error")], "");
        assert_eq!(r[col("status")], "optimal");
    }
    // bnp and oracle rows alternate per instance
    for pair in serial[1..5].chunks(2) {
        let (a, b): (f64, f64) = (pair[0][col("objective")].parse().unwrap(), pair[1][col("objective")].parse().unwrap());
        assert!((a - b).abs() <= 1e-4 * b.max(1.0));
    }
    assert_eq!(serial[5][0], "average");
    assert_eq!(serial[5][col("method")], "bnp");
    assert_eq!(serial[6][col("method")], "partition-oracle");
    let mean: f64 = (serial[2][col("objective")].parse::<f64>().unwrap() + serial[4][col("objective")].parse::<f64>().unwrap()) / 2.0;
    assert!((serial[6][col("objective")].parse::<f64>().unwrap() - mean).abs() <= 1e-12 * mean);

    let out = dir.path().join("par.csv");
    let (code, _, _) = call(&["bench", m.to_str().unwrap(), "--jobs", "3", "--output", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let parallel = csv_rows(&std::fs::read_to_string(out).unwrap());
    let t = col("time_seconds");
    let drop_time = |rows: &[Vec<String>]| -> Vec<Vec<String>> {
        rows.iter().map(|r| r.iter().enumerate().filter(|(i, _)| *i != t).map(|(_, c)| c.clone()).collect()).collect()
    };
    assert_eq!(drop_time(&serial), drop_time(&parallel));
}

#[test]
fn bench_records_failures_without_aborting() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "a.txt", &small_instance(8, 5, 2));
    write(dir.path(), "broken.txt", "2 2 1\n0 0\n");
    let m = write(
        dir.path(),
        "m.toml",
        "instances = [\"broken.txt\", \"a.txt\"]\nmethods = [\"partition-oracle\"]\n",
    );
    let (code, out, _) = call(&["bench", m.to_str().unwrap()]);
    assert_eq!(code, 0);
    let rows = csv_rows(&out);
    // the broken file never reveals its p, so it averages in a group of its own
    assert_eq!(rows.len(), 1 + 2 + 2);
    assert_eq!(rows[1][6], "error");
    assert_eq!(rows[3][6], "average 0/1");
    assert!(!rows[1].last().unwrap().is_empty());
    assert_eq!(rows[2][6], "optimal");

    let bad = write(dir.path(), "bad.toml", "instances = 3\n");
    assert_eq!(call(&["bench", bad.to_str().unwrap()]).0, 3);
    let unknown = write(dir.path(), "unk.toml", "methods = [\"nope\"]\n");
    assert_eq!(call(&["bench", unknown.to_str().unwrap()]).0, 3);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn instance_text_round_trip(
        pts in proptest::collection::vec(proptest::collection::vec(-1e12f64..1e12, 3), 1..12),
        p in 1usize..5,
    ) {
        let inst = InstanceFile { points: pts, p };
        let back = parse_instance(&format_instance(&inst), "mem").unwrap();
        prop_assert_eq!(back, inst);
    }
}
