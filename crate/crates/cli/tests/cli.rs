use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use astar_deduce::scoring::{Corpus, Scorer};
use serde_json::{json, Value};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_deduce"));
    cmd.env_remove("DEDUCE_PORT").env_remove("DEDUCE_CORPUS_DIR");
    cmd
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../testkit/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn exit_codes() {
    assert_eq!(run(&["--help"]).status.code(), Some(0));
    assert_eq!(run(&["--version"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(run(&["prove"]).status.code(), Some(1));
    assert_eq!(run(&["prove", "--program", "/definitely/missing.json"]).status.code(), Some(2));
    let bible = fixture("bible.json");
    let out = run(&["prove", "--program", bible.to_str().unwrap(), "--goal", "ancestor(moses,terah)"]);
    assert_eq!(out.status.code(), Some(2));
    let body = stdout_json(&run(&["prove", "--program", bible.to_str().unwrap(), "--goal", "ancestor(jacob,terah)"]));
    assert_eq!(body["provable"], false);
}

#[test]
fn prove_bible() {
    let bible = fixture("bible.json");
    let body = stdout_json(&run(&["prove", "--program", bible.to_str().unwrap()]));
    assert_eq!(body["weight"], 3);
    assert_eq!(body["metrics"]["steps"], 3);
    assert_eq!(body["metrics"]["pops"], 5);
    assert_eq!(body["shortest_proof"].as_array().unwrap().len(), 3);
    assert!(body["verbalization"].as_str().unwrap().ends_with("</answer>"));

    let zero = stdout_json(&run(&["prove", "--program", bible.to_str().unwrap(), "--heuristic", "zero"]));
    assert!(zero["metrics"]["pops"].as_u64().unwrap() > 5);
}

#[test]
fn proved_text_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let gary = fixture("gary.json");
    let out = run(&["prove", "--program", gary.to_str().unwrap(), "--format", "text"]);
    assert!(out.status.success());
    let cand = dir.path().join("cand.txt");
    std::fs::write(&cand, &out.stdout).unwrap();

    let body = stdout_json(&run(&[
        "score",
        "--program",
        gary.to_str().unwrap(),
        "--candidate",
        cand.to_str().unwrap(),
    ]));
    assert_eq!(body["verdict"]["correct"], true);
    for r in body["rewards"].as_array().unwrap() {
        assert_eq!(r["value"], 1.0, "{r}");
    }

    let verdict = stdout_json(&run(&[
        "verify",
        "--program",
        gary.to_str().unwrap(),
        "--candidate",
        cand.to_str().unwrap(),
    ]));
    assert_eq!(verdict["correct"], true);
}

#[test]
fn score_request_file_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    std::fs::copy(fixture("bible.json"), corpus.join("bible.json")).unwrap();
    let req = json!({
        "program_id": "bible",
        "candidate": {"text": "Premises: Isaac is a parent of Jacob.\nRule: If X is a parent of Y, then X is an ancestor of Y.\nConclusion: Isaac is an ancestor of Jacob."},
        "rewards": ["step-count", "astar-true"],
        "mode": "goal-cone",
    })
    .to_string();
    let path = dir.path().join("req.json");
    std::fs::write(&path, &req).unwrap();

    let out = run(&["score", "--request", path.to_str().unwrap(), "--corpus-dir", corpus.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let expected = Scorer::new(Corpus::load_dir(&corpus).unwrap()).score_body(&req).unwrap();
    assert_eq!(String::from_utf8(out.stdout).unwrap(), expected);

    let out = run(&["score", "--request", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn generation_pipeline() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.jsonl");
    let b = dir.path().join("b.jsonl");
    for p in [&a, &b] {
        let out = run(&["gen-deeprd", "--lookahead", "4..6", "--branching", "2", "--count", "12", "--seed", "9", "--out", p.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(std::fs::read_to_string(&a).unwrap().lines().count(), 12);

    let filtered = dir.path().join("f.jsonl");
    let out = run(&["filter", "--input", a.to_str().unwrap(), "--min-depth", "5", "--provable-only", "--out", filtered.to_str().unwrap()]);
    assert!(out.status.success());
    let kept = std::fs::read_to_string(&filtered).unwrap().lines().count();
    assert!(kept > 0 && kept < 12);

    let out = run(&["export", "--input", filtered.to_str().unwrap(), "--format", "icl", "--k", "2"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let records: Vec<Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(records.len(), kept);
    assert!(records[0]["completion"].as_str().unwrap().contains("<answer>"));

    let stats = stdout_json(&run(&["stats", "--input", a.to_str().unwrap()]));
    assert_eq!(stats["instances"], 12);
    let mean = |k: &str| stats["heuristics"][k]["pushes"]["mean"].as_f64().unwrap();
    assert!(mean("true") <= mean("dependency") && mean("dependency") <= mean("zero"));
}

#[test]
fn check_heuristic_report() {
    let bible = fixture("bible.json");
    let body = stdout_json(&run(&["check-heuristic", "--program", bible.to_str().unwrap(), "--heuristic", "true", "--dump"]));
    assert_eq!(body["consistency"]["passed"], true);
    assert_eq!(body["admissibility"]["passed"], true);
    assert_eq!(body["dump"]["ancestor(terah,jacob)"], 0);
    assert_eq!(body["dump"]["parent(terah,abraham)"], 3);
}

#[test]
fn serve_honours_environment_over_flags() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(fixture("bible.json"), dir.path().join("bible.json")).unwrap();
    let mut child = bin()
        .args(["serve", "--port", "9"])
        .env("DEDUCE_PORT", "0")
        .env("DEDUCE_CORPUS_DIR", dir.path())
        .stderr(Stdio::piped())
        .stdout(Stdio::null())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stderr.take().unwrap()).read_line(&mut line).unwrap();
    let addr = line.split_whitespace().nth(2).unwrap().to_string();
    assert!(!addr.ends_with(":9"), "{line}");
    assert!(line.contains("with 1 programs"), "{line}");

    let mut stream = TcpStream::connect(&addr).unwrap();
    write!(stream, "GET /program/bible HTTP/1.1\r\nHost: x\r\nConnection: close\r\n\r\n").unwrap();
    let mut resp = String::new();
    stream.read_to_string(&mut resp).unwrap();
    child.kill().unwrap();
    child.wait().unwrap();
    assert!(resp.starts_with("HTTP/1.1 200"), "{resp}");
    assert!(resp.contains("\"id\":\"bible\""));
}
