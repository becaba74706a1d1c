use std::path::Path;
use std::process::{Command, Output};

use attrib_core::AttributionResult;
use serde_json::Value;

fn attrib(args: &[&str]) -> Output {
    attrib_env(args, &[])
}

fn attrib_env(args: &[&str], env: &[(&str, &Path)]) -> Output {
    let mut command = Command::new(env!("CARGO_BIN_EXE_attrib"));
    command.args(args).env_remove("ATTRIB_CACHE");
    for (key, value) in env {
        command.env(key, value);
    }
    command.output().unwrap()
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).unwrap()
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn generate_then_evaluate_all_methods() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("clean.jsonl");
    let out = attrib(&["generate", "--out", path(&corpus), "--cases", "200", "--turns", "4", "--seed", "42"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(std::fs::read_to_string(&corpus).unwrap().lines().count(), 200);

    let args = ["evaluate", "--corpus", path(&corpus), "--all-methods"];
    let first = attrib(&args);
    assert!(first.status.success(), "{}", stderr(&first));
    let text = stdout(&first);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# hit@k"));
    assert!(lines[1].starts_with("Method"));
    let rows: Vec<&str> = lines[2..].iter().map(|l| l.split("  ").next().unwrap()).collect();
    assert_eq!(rows, ["Hierarchical", "Drop+Hold", "Leave-one-out", "Similarity"]);
    for line in &lines[2..] {
        let cells: Vec<&str> = line.split_whitespace().rev().take(4).collect();
        assert!(cells.iter().all(|c| c.len() == 5 && c.parse::<f64>().is_ok()), "{line}");
    }
    assert_eq!(attrib(&args).stdout, first.stdout);

    let json = attrib(&["evaluate", "--corpus", path(&corpus), "--all-methods", "--json", "--jobs", "2"]);
    let value: Value = serde_json::from_slice(&json.stdout).unwrap();
    let reports = value["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 4);
    assert_eq!(reports[0]["method"], "Hierarchical");
    assert_eq!(reports[0]["n_cases"], 200);
}

#[test]
fn attribute_single_sentence_dialogue() {
    let dir = tempfile::tempdir().unwrap();
    let dialogue = dir.path().join("d.json");
    std::fs::write(&dialogue, r#"{"id": "one", "turns": [{"teacher": "He responds well to praise."}]}"#).unwrap();

    let out = attrib(&["attribute", "--dialogue", path(&dialogue), "--target", "Use praise-based reinforcement."]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("selected turn: 1"));
    assert!(text.contains("evidence: turn 1 chars 0..27: \"He responds well to praise.\""));

    let json = attrib(&["attribute", "--dialogue", path(&dialogue), "--target", "Use praise.", "--json"]);
    assert!(json.status.success());
    let result: AttributionResult = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(result.ranked.len(), 1);
    assert_eq!(result.evidence.text, "He responds well to praise.");
    assert_eq!(result.rank_of(1, 1), Some(1));
    let reparsed: AttributionResult = serde_json::from_str(&serde_json::to_string(&result).unwrap()).unwrap();
    assert_eq!(reparsed, result);
}

#[test]
fn kappa_on_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    std::fs::write(&a, r#"{"rater_id": "r1", "labels": [1, 0, 1, 1, 0]}"#).unwrap();
    let out = attrib(&["kappa", "--a", path(&a), "--b", path(&a)]);
    assert!(out.status.success());
    assert_eq!(stdout(&out), "1.000\n");

    let b = dir.path().join("b.json");
    std::fs::write(&b, r#"{"rater_id": "r2", "labels": [1, 1, 1, 1, 1]}"#).unwrap();
    let c = dir.path().join("c.json");
    std::fs::write(&c, r#"{"rater_id": "r3", "labels": [1, 1, 1, 1, 0]}"#).unwrap();
    let out = attrib(&["kappa", "--a", path(&b), "--b", path(&c), "--json"]);
    assert!(out.status.success());
    let value: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(value["kappa"], 0.0);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["frobnicate"][..],
        &["evaluate", "--corpus", "x.jsonl", "--bogus"],
        &["evaluate", "--corpus", "x.jsonl", "--method", "magic"],
        &["evaluate", "--corpus", "x.jsonl", "--method", "loo", "--all-methods"],
        &["attribute", "--dialogue", "d.json", "--target", "x", "--scorer", "remote"],
        &["attribute", "--dialogue", "d.json", "--target", "   "],
        &["generate", "--out", "x.jsonl", "--turns", "1"],
    ] {
        let out = attrib(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}: {}", stderr(&out));
    }
}

#[test]
fn domain_errors_exit_1_and_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.jsonl");
    let out = attrib(&["evaluate", "--corpus", path(&missing)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("missing.jsonl"));

    let bad = dir.path().join("bad.jsonl");
    std::fs::write(&bad, "{\"id\": \"c1\"}\n").unwrap();
    let out = attrib(&["evaluate", "--corpus", path(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 1"), "{}", stderr(&out));

    let empty = dir.path().join("empty.jsonl");
    std::fs::write(&empty, "").unwrap();
    assert_eq!(attrib(&["evaluate", "--corpus", path(&empty)]).status.code(), Some(1));

    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(&a, r#"{"rater_id": "a", "labels": [1, 1]}"#).unwrap();
    std::fs::write(&b, r#"{"rater_id": "b", "labels": [0, 0, 1]}"#).unwrap();
    assert_eq!(attrib(&["kappa", "--a", path(&a), "--b", path(&b)]).status.code(), Some(1));
}

#[test]
fn cache_path_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c.jsonl");
    let cache = dir.path().join("scores.jsonl");
    attrib(&["generate", "--out", path(&corpus), "--cases", "3", "--turns", "2"]);
    let first = attrib_env(&["evaluate", "--corpus", path(&corpus)], &[("ATTRIB_CACHE", &cache)]);
    assert!(first.status.success(), "{}", stderr(&first));
    let lines = std::fs::read_to_string(&cache).unwrap().lines().count();
    assert!(lines > 0);

    let second = attrib_env(&["evaluate", "--corpus", path(&corpus)], &[("ATTRIB_CACHE", &cache)]);
    assert_eq!(second.stdout, first.stdout);
    assert_eq!(std::fs::read_to_string(&cache).unwrap().lines().count(), lines);
}

fn http(port: u16, request: &str) -> Option<String> {
    use std::io::{Read, Write};
    let mut stream = std::net::TcpStream::connect(("127.0.0.1", port)).ok()?;
    stream.write_all(request.as_bytes()).ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_reads_its_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    std::fs::write(dir.path().join("script.txt"), "How often?\n").unwrap();
    let config = dir.path().join("service.toml");
    std::fs::write(
        &config,
        format!("listen = \"127.0.0.1:{port}\"\nstore_path = \"sessions.jsonl\"\n\n[chat]\nkind = \"scripted\"\nscript_path = \"script.txt\"\n"),
    )
    .unwrap();
    let mut child =
        Command::new(env!("CARGO_BIN_EXE_attrib")).args(["serve", "--config", path(&config)]).spawn().unwrap();

    let request = "POST /sessions HTTP/1.1\r\nHost: localhost\r\nContent-Length: 0\r\nConnection: close\r\n\r\n";
    let mut response = None;
    for _ in 0..100 {
        response = http(port, request);
        if response.is_some() {
            break;
        }
        std::thread::sleep(std::time::Duration::from_millis(50));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    let response = response.expect("service did not come up");
    assert!(response.starts_with("HTTP/1.1 201"), "{response}");
    assert!(response.contains("\"id\""));
    assert!(dir.path().join("sessions.jsonl").exists());
}

#[test]
fn serve_rejects_an_invalid_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("service.toml");
    std::fs::write(&config, "[chat]\nkind = \"remote\"\n").unwrap();
    let out = attrib(&["serve", "--config", path(&config)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("remote chat backend"));
}
