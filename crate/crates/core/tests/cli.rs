mod common;

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::path::Path;
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::Value;

use newswatch::model::load_model;
use newswatch::service::RunStore;

use common::*;

fn newswatch(data_dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_newswatch"))
        .args(args)
        .env("NEWSWATCH_DATA_DIR", data_dir)
        .env("RUST_LOG", "warn")
        .output()
        .unwrap()
}

fn ok(data_dir: &Path, args: &[&str]) -> String {
    let output = newswatch(data_dir, args);
    assert!(
        output.status.success(),
        "{args:?} failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
    String::from_utf8(output.stdout).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_train_and_run_a_batch() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let articles = fixture("articles.jsonl");

    let out = ok(&data, &["ingest", "--input", path(&articles)]);
    assert!(out.contains("added 10 new articles"), "{out}");
    let out = ok(&data, &["ingest", "--input", path(&articles)]);
    assert!(out.contains("added 0 new articles"), "{out}");

    let model_path = data.join("model.nwm");
    let corpus = fixture("labeled_sample.tsv");
    let out = ok(
        &data,
        &[
            "train",
            "--corpus",
            path(&corpus),
            "--features",
            "all",
            "--l2",
            "1.0",
            "--out",
            path(&model_path),
        ],
    );
    assert!(out.contains("trained on 400 documents"), "{out}");
    let model = load_model(&model_path).unwrap();
    assert_eq!(model.pipeline.flags().to_string(), "ngrams,lexicon,style,nela");

    let out = ok(&data, &["run-batch", "--window-end", "2024-05-02T00:00:00Z"]);
    let json_part = &out[..out.find("\ntimings").unwrap()];
    let run: Value = serde_json::from_str(json_part).unwrap();
    assert_eq!(run["run_id"], "b20240502T000000Z");
    assert_eq!(run["counts"]["ingested"], 6);
    assert_eq!(run["counts"]["events"], 2);
    assert_eq!(run["counts"]["scored"], 5);
    assert_eq!(
        RunStore::new(&data).latest().unwrap().as_deref(),
        Some("b20240502T000000Z")
    );
}

#[test]
fn train_with_a_feature_subset() {
    let dir = tempfile::tempdir().unwrap();
    let model_path = dir.path().join("ngrams.nwm");
    ok(
        dir.path(),
        &[
            "train",
            "--corpus",
            path(&fixture("labeled_sample.tsv")),
            "--features",
            "ngrams",
            "--l2",
            "0.5",
            "--out",
            path(&model_path),
        ],
    );
    let model = load_model(&model_path).unwrap();
    assert_eq!(model.pipeline.flags().to_string(), "ngrams");
    assert_eq!(model.l2_lambda, 0.5);
}

#[test]
fn run_batch_without_a_model_fails() {
    let dir = tempfile::tempdir().unwrap();
    let output = newswatch(dir.path(), &["run-batch", "--window-end", "2024-05-02T00:00:00Z"]);
    assert!(!output.status.success());
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("model file not found"), "{stderr}");
}

#[test]
fn eval_reports_both_systems() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = fixture("labeled_sample.tsv");
    let out = ok(
        dir.path(),
        &["eval", "--corpus", path(&corpus), "--seed", "42", "--json"],
    );
    let report: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(report["seed"], 42);
    assert_eq!(
        report["n_train"].as_u64().unwrap() + report["n_test"].as_u64().unwrap(),
        400
    );
    for system in ["baseline", "full"] {
        let f1 = report[system]["report"]["f1"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&f1));
    }
    let p = report["mcnemar"]["p_value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));

    let again = ok(
        dir.path(),
        &["eval", "--corpus", path(&corpus), "--seed", "42", "--json"],
    );
    assert_eq!(out, again);
    let table = ok(dir.path(), &["eval", "--corpus", path(&corpus), "--seed", "42"]);
    assert!(table.contains("baseline") && table.contains("mcnemar"), "{table}");
}

#[test]
fn tuning_commands_cover_their_grids() {
    let dir = tempfile::tempdir().unwrap();
    let out = ok(
        dir.path(),
        &[
            "tune-dedup",
            "--pairs",
            path(&fixture("dedup_pairs.tsv")),
            "--ns",
            "2,3",
            "--thetas",
            "0.3,0.5,0.7",
            "--json",
        ],
    );
    let tuning: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(tuning["cells"].as_array().unwrap().len(), 6);
    let best = tuning["best"]["f1"].as_f64().unwrap();
    assert!(tuning["cells"]
        .as_array()
        .unwrap()
        .iter()
        .all(|c| c["f1"].as_f64().unwrap() <= best));

    let out = ok(
        dir.path(),
        &[
            "tune-eps",
            "--docs",
            path(&fixture("events_grouped.tsv")),
            "--grid",
            "0.3,0.55,0.8",
            "--json",
        ],
    );
    let tuning: Value = serde_json::from_str(&out).unwrap();
    assert_eq!(tuning["cells"].as_array().unwrap().len(), 3);
    let table = ok(
        dir.path(),
        &["tune-eps", "--docs", path(&fixture("events_grouped.tsv"))],
    );
    assert_eq!(table.matches("best").count(), 1, "{table}");
}

#[test]
fn bad_arguments_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let output = newswatch(dir.path(), &["run-batch", "--window-end", "not a time"]);
    assert!(!output.status.success());
    let output = newswatch(dir.path(), &["train", "--corpus", "/no/such/file.tsv"]);
    assert!(!output.status.success());
    let output = newswatch(dir.path(), &["train", "--corpus", "x", "--features", "colors"]);
    assert!(!output.status.success());
}

fn http_get(port: u16, path: &str) -> Option<String> {
    let mut stream = TcpStream::connect(("127.0.0.1", port)).ok()?;
    write!(stream, "GET {path} HTTP/1.0\r\nHost: localhost\r\n\r\n").ok()?;
    let mut response = String::new();
    stream.read_to_string(&mut response).ok()?;
    Some(response)
}

#[test]
fn serve_answers_over_tcp() {
    let dir = tempfile::tempdir().unwrap();
    let model = small_model();
    let config = fixture_store(dir.path(), &model);
    newswatch::service::run_batch(&config, fixture_window_end()).unwrap();

    let port = TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let mut child = Command::new(env!("CARGO_BIN_EXE_newswatch"))
        .args([
            "serve",
            "--port",
            &port.to_string(),
            "--model",
            path(&config.model_path()),
        ])
        .env("NEWSWATCH_DATA_DIR", dir.path())
        .env("RUST_LOG", "warn")
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();

    let deadline = Instant::now() + Duration::from_secs(30);
    let health = loop {
        if let Some(response) = http_get(port, "/api/health") {
            break response;
        }
        assert!(Instant::now() < deadline, "server did not come up");
        std::thread::sleep(Duration::from_millis(50));
    };
    let events = http_get(port, "/api/events").unwrap();
    let missing = http_get(port, "/api/events/nope").unwrap();
    child.kill().unwrap();
    child.wait().unwrap();

    assert!(
        health.starts_with("HTTP/1.0 200") || health.starts_with("HTTP/1.1 200"),
        "{health}"
    );
    assert!(health.contains("\"event_count\":2"), "{health}");
    assert!(events.contains("b20240502T000000Z"), "{events}");
    assert!(missing.contains(" 404 "), "{missing}");
}
