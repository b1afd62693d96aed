use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use dgbs::experiments::{clique_probability, device_state, encode_plain, Instance};
use dgbs::graph::load_graph;
use dgbs::probability::ProbabilityEngine;
use dgbs::samplers::SampleBatch;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn demo6() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures/demo6.json")
}

fn dgbs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dgbs"))
        .args(args)
        .env_remove("DGBS_THREADS")
        .output()
        .unwrap()
}

fn ok(args: &[&str]) {
    let out = dgbs(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
}

fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::ReaderBuilder::new().delimiter(b';').from_path(path).unwrap();
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(header: &[String], name: &str) -> usize {
    header.iter().position(|h| h == name).unwrap()
}

fn pick(n: usize, count: usize, seed: u64) -> Vec<usize> {
    sample(&mut ChaCha8Rng::seed_from_u64(seed), n, count.min(n)).into_vec()
}

#[test]
fn landscape_writes_csv_and_manifest_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let graph = demo6();
    for out in [&a, &b] {
        ok(&[
            "experiment",
            "landscape",
            "--graph",
            graph.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--gammas",
            "0:1:11",
            "--lambdas",
            "0.2,0.5,0.8",
        ]);
    }
    let csv_a = std::fs::read(a.join("landscape.csv")).unwrap();
    assert_eq!(csv_a, std::fs::read(b.join("landscape.csv")).unwrap());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(a.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["seed"], 1);
    assert_eq!(manifest["outputs"][0], "landscape.csv");
    assert_eq!(manifest["config"]["args"]["lambdas"][1], 0.5);

    let (header, rows) = read_csv(&a.join("landscape.csv"));
    assert_eq!(header, ["gamma", "c", "lambda_max", "p_mc", "convention"]);
    assert_eq!(rows.len(), 33);
    let inst = Instance::certified(load_graph(&graph).unwrap()).unwrap();
    for i in pick(rows.len(), 10, 3) {
        let f = |name: &str| rows[i][column(&header, name)].parse::<f64>().unwrap();
        let exp = encode_plain(&inst.graph, f("lambda_max")).unwrap();
        assert_eq!(exp.plain_c(), f("c"));
        assert_eq!(clique_probability(&exp, &inst.target, f("gamma"), 1.0).unwrap(), f("p_mc"));
    }
}

#[test]
fn loss_prob_and_entropy_rows_are_rederivable() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let graph = demo6();
    let g = graph.to_str().unwrap();
    ok(&["experiment", "loss-prob", "--graph", g, "--out", out, "--etas", "0.3,0.6,1", "--gammas", "0:1:5"]);
    ok(&["experiment", "entropy", "--graph", g, "--out", out, "--gammas", "0:1:4", "--lambda-max", "0.6"]);
    let inst = Instance::certified(load_graph(&graph).unwrap()).unwrap();

    let (header, rows) = read_csv(&dir.path().join("loss_prob.csv"));
    let exp = encode_plain(&inst.graph, 0.5).unwrap();
    for i in pick(rows.len(), 10, 4) {
        let f = |name: &str| rows[i][column(&header, name)].parse::<f64>().unwrap();
        assert_eq!(clique_probability(&exp, &inst.target, f("gamma"), f("eta")).unwrap(), f("p_mc"));
    }

    let (header, rows) = read_csv(&dir.path().join("entropy.csv"));
    let exp = encode_plain(&inst.graph, 0.6).unwrap();
    for row in &rows {
        let f = |name: &str| row[column(&header, name)].parse::<f64>().unwrap();
        let engine = ProbabilityEngine::new(&device_state(&exp, f("gamma"), 1.0).unwrap()).unwrap();
        let dist = engine.subset_distribution(4, true).unwrap();
        assert_eq!(dist.probability(&inst.target), f("p_mc_conditioned"));
        assert!(f("entropy") <= f("max_entropy"));
    }
}

#[test]
fn improvement_is_at_least_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&["experiment", "improvement", "--out", out, "--lambdas", "0.2,0.5,0.85", "--gammas", "0:1.5:16"]);
    let (header, rows) = read_csv(&dir.path().join("improvement.csv"));
    let last = rows.len() - 1;
    let imp: Vec<f64> = rows
        .iter()
        .map(|r| r[column(&header, "improvement")].parse().unwrap())
        .collect();
    assert!(imp.iter().all(|&x| x >= 1.0));
    assert!(imp[0] > imp[last]);
}

#[test]
fn success_rate_rows_and_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    for out in [&a, &b] {
        ok(&[
            "experiment",
            "success-rate",
            "--fixture",
            "10:5:0.3:2",
            "--samples",
            "60",
            "--seed",
            "9",
            "--out",
            out.to_str().unwrap(),
        ]);
    }
    let bytes = std::fs::read(a.join("success_rate.csv")).unwrap();
    assert_eq!(bytes, std::fs::read(b.join("success_rate.csv")).unwrap());
    let (header, rows) = read_csv(&a.join("success_rate.csv"));
    let samplers: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(samplers, ["dgbs", "gbs", "uniform", "oh"]);
    for r in &rows {
        let f = |name: &str| r[column(&header, name)].parse::<f64>().unwrap();
        assert!(f("ci_low") <= f("rate") && f("rate") <= f("ci_high"));
        assert!((0.0..=1.0).contains(&f("rate")));
    }
    assert!(!rows[3][column(&header, "rejection_rate")].is_empty());
}

#[test]
fn without_displacement_gbs_and_dgbs_rows_coincide() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    ok(&[
        "experiment",
        "success-rate",
        "--fixture",
        "10:5:0.3:2",
        "--samples",
        "80",
        "--n-disp",
        "0",
        "--samplers",
        "dgbs,gbs",
        "--out",
        out,
    ]);
    let (_, rows) = read_csv(&dir.path().join("success_rate.csv"));
    assert_eq!(rows[0][1..], rows[1][1..]);
}

#[test]
fn sample_then_clique_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let graph = demo6();
    let g = graph.to_str().unwrap();
    ok(&["sample", "--graph", g, "--out", out, "--sampler", "dgbs", "--gamma", "0.3", "--count", "50"]);
    let samples = dir.path().join("samples.jsonl");
    let batch = SampleBatch::read_jsonl(&samples).unwrap();
    assert_eq!(batch.samples.len(), 50);
    assert_eq!(batch.modes, 6);
    ok(&["clique", "--graph", g, "--out", out, "--samples", samples.to_str().unwrap()]);
    let (_, rows) = read_csv(&dir.path().join("clique.csv"));
    assert_eq!(rows.len(), 50);
    for sampler in ["gbs", "uniform", "oh"] {
        ok(&["sample", "--graph", g, "--out", out, "--sampler", sampler, "--count", "20"]);
    }
}

#[test]
fn encode_and_prob_commands() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let graph = demo6();
    let g = graph.to_str().unwrap();
    ok(&["encode", "--graph", g, "--out", out, "--n-sqz", "1.0", "--gamma", "0.2"]);
    let enc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("encoding.json")).unwrap()).unwrap();
    assert!((enc["squeezing"]["n_sqz"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    assert!(dir.path().join("state.json").exists());

    let p = dgbs(&["prob", "--graph", g, "--out", out, "--pattern", "1,1,0,1,0,1", "--gamma", "0.2"]);
    assert!(p.status.success());
    let printed: f64 = String::from_utf8(p.stdout).unwrap().trim().parse().unwrap();
    assert!(printed > 0.0 && printed < 1.0);

    ok(&["prob", "--graph", g, "--out", out, "--subset-size", "4", "--renormalize"]);
    let (header, rows) = read_csv(&dir.path().join("distribution.csv"));
    assert_eq!(rows.len(), 15);
    let total: f64 = rows
        .iter()
        .map(|r| r[column(&header, "probability")].parse::<f64>().unwrap())
        .sum();
    assert!((total - 1.0).abs() < 1e-12);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();

    let missing = dgbs(&["experiment", "landscape", "--graph", "no/such/graph.json", "--out", out]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).contains("no/such/graph.json"));

    assert_eq!(dgbs(&["experiment", "bogus"]).status.code(), Some(2));
    assert_eq!(dgbs(&["experiment", "landscape", "--gammas", "0.5,0.1", "--out", out]).status.code(), Some(2));

    ok(&["fixture", "--spec", "26:5:0.2:1", "--name", "big", "--out", out]);
    let big = dir.path().join("big.json");
    let guard = dgbs(&["prob", "--graph", big.to_str().unwrap(), "--subset-size", "13", "--out", out]);
    assert_eq!(guard.status.code(), Some(3));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "weights,1,1\n0,1\n0,0\n").unwrap();
    let code = dgbs(&["experiment", "landscape", "--graph", bad.to_str().unwrap(), "--out", out]).status.code();
    assert_eq!(code, Some(2));
}

#[test]
fn thread_count_from_environment_lands_in_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().to_str().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_dgbs"))
        .args(["experiment", "landscape", "--out", out, "--gammas", "0,0.5", "--lambdas", "0.5"])
        .env("DGBS_THREADS", "2")
        .status()
        .unwrap();
    assert!(status.success());
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["threads"], 2);
}

#[test]
fn shipped_fixtures_agree() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    let json = load_graph(dir.join("demo6.json")).unwrap();
    let csv = load_graph(dir.join("demo6.csv")).unwrap();
    assert_eq!(json, csv);
    assert_eq!(json.node_count(), 6);
}
