//! Command-line behaviour of the `claimcheck` binary.

use std::collections::BTreeMap;
use std::path::Path;
use std::process::{Command, Output};

fn claimcheck(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claimcheck"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn run_writes_records() {
    let dir = tempfile::tempdir().unwrap();
    ok(&claimcheck(dir.path(), &["run", "--pipeline", "p2", "--corpus", "fixture", "--provider", "fixture", "--out", "r.jsonl"]));
    let text = std::fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    assert_eq!(text.lines().count(), 12);
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["schema"], "claimcheck.record/v1");
        assert_eq!(v["variant"], "p2_summary");
    }
    // default output name
    ok(&claimcheck(dir.path(), &["run", "--pipeline", "p1", "--corpus", "fixture"]));
    assert!(dir.path().join("records-p1.jsonl").exists());
}

#[test]
fn unknown_pipeline_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = claimcheck(dir.path(), &["run", "--pipeline", "p4", "--corpus", "fixture"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("p4"));
}

#[test]
fn runtime_errors_exit_one_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let out = claimcheck(dir.path(), &["run", "--pipeline", "p1", "--corpus", "missing.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).starts_with("error:"));
    let out = claimcheck(dir.path(), &["stats"]);
    assert_eq!(out.status.code(), Some(1));
    std::fs::write(dir.path().join("bad.toml"), "[claims]\nunknown_key = 1\n").unwrap();
    let out = claimcheck(dir.path(), &["--config", "bad.toml", "stats", "--corpus", "fixture"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn stats_match_a_recount_of_the_records() {
    let dir = tempfile::tempdir().unwrap();
    ok(&claimcheck(dir.path(), &["run", "--pipeline", "p3", "--corpus", "fixture", "--out", "r.jsonl"]));
    let table = ok(&claimcheck(dir.path(), &["stats", "--records", "r.jsonl"]));

    let mut want: BTreeMap<String, usize> = ["false", "partial_true", "true", "nei", "error"]
        .iter()
        .map(|k| (k.to_string(), 0))
        .collect();
    let text = std::fs::read_to_string(dir.path().join("r.jsonl")).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        if v.get("error").is_some() {
            *want.get_mut("error").unwrap() += 1;
        }
        if let Some(l) = v["label"].as_str() {
            *want.get_mut(l).unwrap() += 1;
        }
    }
    let got: BTreeMap<String, usize> = table
        .lines()
        .skip(1)
        .filter(|l| !l.starts_with("total"))
        .map(|l| {
            let mut parts = l.split_whitespace();
            (parts.next().unwrap().to_string(), parts.next().unwrap().parse().unwrap())
        })
        .collect();
    assert_eq!(got, want);
}

#[test]
fn corpus_stats_follow_the_label_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(&claimcheck(dir.path(), &["stats", "--corpus", "fixture"]));
    // raw labels of the bundled corpus, mapped by hand
    let raw = include_str!("../fixtures/corpus.jsonl");
    let mut want = [0usize; 3];
    for line in raw.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        match v["raw_label"].as_str().unwrap() {
            "false" => want[0] += 1,
            "mostly true" | "mixture" | "mostly false" => want[1] += 1,
            "true" => want[2] += 1,
            other => panic!("unexpected raw label {other}"),
        }
    }
    assert!(table.contains(&format!("{:<14}{:>8}", "false", want[0])));
    assert!(table.contains(&format!("{:<14}{:>8}", "partial_true", want[1])));
    assert!(table.contains(&format!("{:<14}{:>8}", "true", want[2])));
    assert!(table.contains(&format!("{:<14}{:>8}", "nei", 0)));
}

#[test]
fn ingested_corpus_reproduces_fixture_records() {
    let dir = tempfile::tempdir().unwrap();
    ok(&claimcheck(dir.path(), &["ingest", "--corpus", "fixture", "--out", "articles.jsonl"]));
    ok(&claimcheck(dir.path(), &["run", "--pipeline", "p1", "--corpus", "fixture", "--out", "a.jsonl"]));
    ok(&claimcheck(dir.path(), &["run", "--pipeline", "p1", "--corpus", "articles.jsonl", "--out", "b.jsonl"]));
    let a = std::fs::read(dir.path().join("a.jsonl")).unwrap();
    let b = std::fs::read(dir.path().join("b.jsonl")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn train_then_evaluate_reuses_the_split() {
    let dir = tempfile::tempdir().unwrap();
    ok(&claimcheck(dir.path(), &["run", "--pipeline", "p1", "--corpus", "fixture", "--out", "r.jsonl"]));
    let trained = ok(&claimcheck(dir.path(), &["--seed", "5", "train", "--records", "r.jsonl", "--out", "m.json"]));
    let evaluated = ok(&claimcheck(dir.path(), &["evaluate", "--model", "m.json", "--records", "r.jsonl"]));
    assert_eq!(trained, evaluated);
    assert!(evaluated.starts_with("n=1 "));

    let model: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("m.json")).unwrap()).unwrap();
    assert_eq!(model["metadata"]["split_seed"], "5");
    assert_eq!(model["metadata"]["input_mode"], "concat");

    ok(&claimcheck(dir.path(), &["train", "--records", "r.jsonl", "--mode", "content", "--out", "c.json"]));
    let c: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("c.json")).unwrap()).unwrap();
    assert_eq!(c["metadata"]["input_mode"], "content");
}

#[test]
fn gist_eval_prints_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let table = ok(&claimcheck(dir.path(), &["gist-eval", "--corpus", "fixture", "--out", "gist.json"]));
    assert!(table.starts_with("n=12\n"));
    assert!(table.contains("headline") && table.contains("lead"));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("gist.json")).unwrap()).unwrap();
    assert_eq!(report["sample_size"], 12);
}

#[test]
fn config_file_changes_behaviour() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("only.txt"), "example.net\n").unwrap();
    std::fs::write(dir.path().join("c.toml"), "[evidence]\ncredible_domains = \"only.txt\"\n").unwrap();
    ok(&claimcheck(dir.path(), &["--config", "c.toml", "run", "--pipeline", "p1", "--corpus", "fixture", "--out", "r.jsonl"]));
    // no fixture result is from example.net, so everything is NEI
    let table = ok(&claimcheck(dir.path(), &["stats", "--records", "r.jsonl"]));
    assert!(table.contains(&format!("{:<14}{:>8}", "nei", 12)), "{table}");
}
