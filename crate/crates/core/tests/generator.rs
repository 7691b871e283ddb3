use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;

use leo::generator::*;
use leo::prompting::{ParseError, PromptMode};
use leo::{Candidate, ObjectiveSpec, Source};

fn square() -> ObjectiveSpec {
    ObjectiveSpec::new("sq", vec![-2.0; 2], vec![2.0; 2], 1, Arc::new(|x: &[f64]| vec![x[0] * x[0] + x[1] * x[1]]))
        .unwrap()
}

fn request(mode: PromptMode, rows: usize, key: u64) -> GenerationRequest {
    GenerationRequest {
        prompt: "propose points".into(),
        mode,
        expected_rows: rows,
        expected_cols: 2,
        context: vec![
            Candidate::new(vec![0.5, -1.0], vec![1.25], 0, Source::Init),
            Candidate::new(vec![1.5, 1.5], vec![4.5], 0, Source::Init),
        ],
        key,
    }
}

struct Captured {
    head: String,
    body: serde_json::Value,
}

/// Serves the canned `(status, body)` replies in order, one per connection.
fn stub(replies: Vec<(u16, String)>) -> (String, mpsc::Receiver<Captured>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let base = format!("http://{}/v1", listener.local_addr().unwrap());
    let (tx, rx) = mpsc::channel();
    thread::spawn(move || {
        for (status, body) in replies {
            let (mut stream, _) = listener.accept().unwrap();
            let mut reader = BufReader::new(stream.try_clone().unwrap());
            let mut head = String::new();
            loop {
                let mut line = String::new();
                reader.read_line(&mut line).unwrap();
                if line == "\r\n" || line.is_empty() {
                    break;
                }
                head.push_str(&line);
            }
            let len = head
                .lines()
                .find_map(|l| {
                    l.to_ascii_lowercase().strip_prefix("content-length:").map(|v| v.trim().parse::<usize>().unwrap())
                })
                .unwrap_or(0);
            let mut buf = vec![0; len];
            reader.read_exact(&mut buf).unwrap();
            let _ = tx.send(Captured { head, body: serde_json::from_slice(&buf).unwrap_or(serde_json::Value::Null) });
            let reply = format!(
                "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
                body.len()
            );
            stream.write_all(reply.as_bytes()).unwrap();
        }
    });
    (base, rx)
}

fn chat(content: &str) -> String {
    serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": content } }] }).to_string()
}

fn remote(base: &str, retries: u32) -> Generator {
    let cfg = GeneratorConfig {
        backend: BackendKind::Remote,
        api_base: Some(base.into()),
        temperature: 0.7,
        timeout_secs: 5.0,
        ..Default::default()
    };
    Generator::new(Arc::new(RemoteBackend::new(&cfg, "sk-test".into()).unwrap()), retries)
}

#[test]
fn remote_posts_chat_completion_and_parses() {
    let (base, rx) = stub(vec![(200, chat("0.1, 0.2\n-0.3, 0.4\n"))]);
    let sink = Arc::new(MemoryTranscript::default());
    let g = remote(&base, 1).with_sink(sink.clone()).with_run_id("r1");
    let parsed = g.generate(&request(PromptMode::Explore, 2, 5), &square()).unwrap();
    assert_eq!(parsed.rows, vec![vec![0.1, 0.2], vec![-0.3, 0.4]]);
    let req = rx.recv().unwrap();
    assert!(req.head.starts_with("POST /v1/chat/completions"));
    assert!(req.head.to_ascii_lowercase().contains("authorization: bearer sk-test"));
    assert_eq!(req.body["model"], DEFAULT_MODEL);
    assert_eq!(req.body["temperature"], 0.7);
    assert_eq!(req.body["messages"][0]["role"], "user");
    assert_eq!(req.body["messages"][0]["content"], "propose points");
    let entries = sink.entries();
    assert_eq!(entries.len(), 1);
    assert_eq!(entries[0].run_id, "r1");
    assert_eq!(entries[0].prompt_sha256, sha256_hex("propose points"));
}

#[test]
fn unauthorized_is_backend_unavailable_without_retry() {
    let (base, rx) = stub(vec![(401, r#"{"error":"bad key"}"#.into())]);
    let err = remote(&base, 3).generate(&request(PromptMode::Explore, 2, 0), &square()).unwrap_err();
    match &err {
        GeneratorError::BackendUnavailable { attempts, raw, .. } => {
            assert_eq!(*attempts, 1);
            assert!(raw.as_deref().unwrap().contains("bad key"));
        }
        e => panic!("{e:?}"),
    }
    assert_eq!(rx.iter().count(), 1);
}

#[test]
fn rate_limit_then_success_retries() {
    let (base, _rx) = stub(vec![(429, "{}".into()), (200, chat("1, 1\n"))]);
    let sink = Arc::new(MemoryTranscript::default());
    let g = remote(&base, 1).with_sink(sink.clone());
    let parsed = g.generate(&request(PromptMode::Explore, 1, 0), &square()).unwrap();
    assert_eq!(parsed.rows, vec![vec![1.0, 1.0]]);
    let attempts: Vec<u32> = sink.entries().iter().map(|e| e.attempt).collect();
    assert_eq!(attempts, [0, 1]);
    assert!(sink.entries()[0].error.as_deref().unwrap().contains("429"));
}

#[test]
fn malformed_answer_retries_with_corrective_prompt() {
    let (base, rx) = stub(vec![(200, chat("I would try the origin.")), (200, chat("0, 0\n"))]);
    let g = remote(&base, 1);
    g.generate(&request(PromptMode::Explore, 1, 0), &square()).unwrap();
    let first = rx.recv().unwrap();
    let second = rx.recv().unwrap();
    let (p0, p1) = (
        first.body["messages"][0]["content"].as_str().unwrap(),
        second.body["messages"][0]["content"].as_str().unwrap(),
    );
    assert_eq!(p0, "propose points");
    assert!(p1.starts_with(p0) && p1.len() > p0.len());
}

#[test]
fn malformed_after_retries_carries_raw_text() {
    let (base, _rx) = stub(vec![(200, chat("no numbers")), (200, chat("still none"))]);
    let err = remote(&base, 1).generate(&request(PromptMode::Explore, 1, 0), &square()).unwrap_err();
    match err {
        GeneratorError::MalformedResponse { attempts, raw, error } => {
            assert_eq!(attempts, 2);
            assert_eq!(raw, "still none");
            assert!(matches!(
                error,
                ParseError::TokenError { .. } | ParseError::EmptyResponse | ParseError::CountMismatch { .. }
            ));
        }
        e => panic!("{e:?}"),
    }
}

#[test]
fn unreachable_host_is_backend_unavailable() {
    let g = remote("http://127.0.0.1:9/v1", 0);
    let err = g.generate(&request(PromptMode::Explore, 1, 0), &square()).unwrap_err();
    assert!(matches!(err, GeneratorError::BackendUnavailable { .. }));
}

#[test]
fn empty_key_is_rejected() {
    assert!(RemoteBackend::new(&GeneratorConfig::default(), "  ".into()).is_err());
}

#[test]
fn api_base_resolution() {
    let cfg = GeneratorConfig { api_base: Some("http://x/v1/".into()), ..Default::default() };
    let b = RemoteBackend::new(&cfg, "k".into()).unwrap();
    assert_eq!(b.url(), "http://x/v1/chat/completions");
}

fn mock_rows(policy: MockPolicy, mode: PromptMode, keys: std::ops::Range<u64>) -> Vec<Vec<f64>> {
    let g = Generator::new(Arc::new(MockBackend::new(policy)), 0);
    keys.flat_map(|k| g.generate(&request(mode, 10, k), &square()).unwrap().rows).collect()
}

#[test]
fn mock_exploit_concentrates_on_best_context_row() {
    // sd = 0.0125 * range 4 = 0.05, so 4 sd = 0.2.
    let policy = MockPolicy { exploit_sigma: 0.0125, scale_decades: 0.0, seed: 9, ..Default::default() };
    let rows = mock_rows(policy, PromptMode::Exploit, 0..200);
    assert_eq!(rows.len(), 2000);
    for r in &rows {
        assert!((r[0] - 0.5).abs() < 0.2 && (r[1] + 1.0).abs() < 0.2, "{r:?}");
    }
    let n = rows.len() as f64;
    for (i, center) in [(0, 0.5), (1, -1.0)] {
        let mean = rows.iter().map(|r| r[i]).sum::<f64>() / n;
        let var = rows.iter().map(|r| (r[i] - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Standard error of the mean is 0.05 / sqrt(2000) ~ 1.1e-3.
        assert!((mean - center).abs() < 5e-3, "mean {mean}");
        // The sample sd is rounded to six decimals in transit; compare loosely.
        assert!((var.sqrt() - 0.05).abs() < 0.004, "sd {}", var.sqrt());
    }
}

#[test]
fn mock_explore_is_uniform_in_bounds() {
    let rows = mock_rows(MockPolicy { seed: 4, ..Default::default() }, PromptMode::Explore, 0..300);
    let n = rows.len() as f64;
    for i in 0..2 {
        let col: Vec<f64> = rows.iter().map(|r| r[i]).collect();
        assert!(col.iter().all(|v| (-2.0..=2.0).contains(v)));
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        // Uniform on [-2, 2]: mean 0, variance 16 / 12.
        assert!(mean.abs() < 0.06, "{mean}");
        assert!((var - 16.0 / 12.0).abs() < 0.06, "{var}");
        // Ten equal bins, chi-square with 9 dof at the 0.1% level.
        let mut counts = [0f64; 10];
        for v in &col {
            counts[(((v + 2.0) / 0.4) as usize).min(9)] += 1.0;
        }
        let e = n / 10.0;
        let chi2: f64 = counts.iter().map(|c| (c - e).powi(2) / e).sum();
        assert!(chi2 < 27.877, "{chi2}");
    }
}

#[test]
fn mock_hull_mode_stays_near_context() {
    let policy = MockPolicy {
        explore_mode: ExploreMode::UniformInPoolHullExpanded,
        hull_expand: 0.1,
        seed: 2,
        ..Default::default()
    };
    for r in mock_rows(policy, PromptMode::Explore, 0..50) {
        // Hull [0.5, 1.5] x [-1, 1.5] padded by 0.4.
        assert!(r[0] >= 0.1 - 1e-6 && r[0] <= 1.9 + 1e-6 && r[1] >= -1.4 - 1e-6 && r[1] <= 1.9 + 1e-6, "{r:?}");
    }
}

#[test]
fn jsonl_transcript_replays_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("t.jsonl");
    let sink = Arc::new(JsonlTranscript::open(&path).unwrap());
    let policy = MockPolicy { seed: 1, fault_rate: 0.3, ..Default::default() };
    let live = Generator::new(Arc::new(MockBackend::new(policy)), 2).with_sink(sink).with_run_id("a");
    let reqs: Vec<GenerationRequest> = (0..20).map(|k| request(PromptMode::Exploit, 4, k)).collect();
    let first: Vec<_> = reqs.iter().map(|r| live.generate(r, &square()).map(|p| p.rows)).collect();
    let entries = read_transcript(&path).unwrap();
    assert!(entries.iter().any(|e| e.attempt > 0), "fault injection should force retries");
    let replay = Generator::new(Arc::new(ReplayBackend::from_entries(&entries, Some("a"))), 2);
    let second: Vec<_> = reqs.iter().map(|r| replay.generate(r, &square()).map(|p| p.rows)).collect();
    assert_eq!(first.len(), second.len());
    for (a, b) in first.iter().zip(&second) {
        match (a, b) {
            (Ok(x), Ok(y)) => assert_eq!(x, y),
            (Err(x), Err(y)) => assert_eq!(x.raw(), y.raw()),
            _ => panic!("replay diverged"),
        }
    }
}

#[test]
fn storage_failure_is_a_warning() {
    struct Broken;
    impl TranscriptSink for Broken {
        fn record(&self, _e: &TranscriptEntry) -> std::io::Result<()> {
            Err(std::io::Error::other("disk full"))
        }
    }
    let g = Generator::new(Arc::new(MockBackend::new(MockPolicy::default())), 0).with_sink(Arc::new(Broken));
    assert!(g.generate(&request(PromptMode::Explore, 2, 0), &square()).is_ok());
    let w = g.take_storage_warnings();
    assert_eq!(w.len(), 1);
    assert!(w[0].contains("disk full"));
}
