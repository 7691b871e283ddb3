//! Candidate generators.
//!
//! A [`Generator`] wraps a [`Backend`] that turns a prompt into raw text. The
//! generator parses the text, retries with a corrective sentence on parse
//! failure, and appends every attempt to an optional transcript. Three
//! backends share that contract: a remote chat-completions endpoint, an
//! offline mock, and a replay of a stored transcript.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant, SystemTime, UNIX_EPOCH};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::CoreError;
use crate::objective::ObjectiveSpec;
use crate::pool::Candidate;
use crate::prompting::{corrective_suffix, parse_response, render_rows, ParseError, ParsedResponse, PromptMode};

pub const DEFAULT_MODEL: &str = "gpt-3.5-turbo-0613";
pub const DEFAULT_API_BASE: &str = "https://api.openai.com/v1";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendKind {
    Remote,
    #[default]
    Mock,
    Replay,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExploreMode {
    #[default]
    UniformInBounds,
    UniformInPoolHullExpanded,
}

/// Behaviour of the offline mock backend.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MockPolicy {
    /// Largest exploit std as a fraction of each dimension's search range.
    pub exploit_sigma: f64,
    /// Each exploit row draws its std from `exploit_sigma * 10^(-U * decades)`,
    /// `U ~ U(0, 1)`. Zero gives a single fixed std.
    pub scale_decades: f64,
    pub explore_mode: ExploreMode,
    /// Hull expansion per side, as a fraction of the search range.
    pub hull_expand: f64,
    /// Probability that an answer is unparseable prose.
    pub fault_rate: f64,
    pub seed: u64,
}

impl Default for MockPolicy {
    fn default() -> Self {
        Self {
            exploit_sigma: 0.05,
            scale_decades: 3.0,
            explore_mode: ExploreMode::UniformInBounds,
            hull_expand: 0.1,
            fault_rate: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorConfig {
    pub backend: BackendKind,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    pub timeout_secs: f64,
    /// Falls back to `$OPENAI_BASE_URL`, then the public endpoint.
    pub api_base: Option<String>,
    /// Name of the environment variable holding the API key.
    pub api_key_env: String,
    /// Global request cap; `None` disables the limiter.
    pub requests_per_minute: Option<u32>,
    pub mock: MockPolicy,
    /// Transcript to read in replay mode.
    pub replay_path: Option<PathBuf>,
    /// Record wall-clock timestamps in transcripts.
    pub timestamps: bool,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            backend: BackendKind::Mock,
            model_name: DEFAULT_MODEL.into(),
            temperature: 0.7,
            max_retries: 1,
            timeout_secs: 60.0,
            api_base: None,
            api_key_env: "OPENAI_API_KEY".into(),
            requests_per_minute: None,
            mock: MockPolicy::default(),
            replay_path: None,
            timestamps: true,
        }
    }
}

impl GeneratorConfig {
    pub fn mock(policy: MockPolicy) -> Self {
        Self { mock: policy, ..Self::default() }
    }

    pub fn validate(&self) -> Result<(), CoreError> {
        if !(self.temperature >= 0.0 && self.temperature.is_finite()) {
            return Err(CoreError::Parameter(format!("temperature must be >= 0, got {}", self.temperature)));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(CoreError::Parameter("timeout must be positive".into()));
        }
        let m = &self.mock;
        if !(m.exploit_sigma > 0.0 && m.scale_decades >= 0.0 && m.hull_expand >= 0.0) {
            return Err(CoreError::Parameter("mock policy scales must be non-negative, sigma positive".into()));
        }
        if !(0.0..=1.0).contains(&m.fault_rate) {
            return Err(CoreError::Parameter("mock fault_rate must lie in [0, 1]".into()));
        }
        if self.requests_per_minute == Some(0) {
            return Err(CoreError::Parameter("requests_per_minute must be positive".into()));
        }
        if self.backend == BackendKind::Replay && self.replay_path.is_none() {
            return Err(CoreError::Parameter("replay backend needs replay_path".into()));
        }
        Ok(())
    }

    pub fn resolved_api_base(&self) -> String {
        self.api_base
            .clone()
            .or_else(|| std::env::var("OPENAI_BASE_URL").ok().filter(|s| !s.is_empty()))
            .unwrap_or_else(|| DEFAULT_API_BASE.into())
    }
}

/// One generation call. `key` identifies the call within a run so mock
/// draws and replay lookups do not depend on call order.
#[derive(Debug, Clone, PartialEq)]
pub struct GenerationRequest {
    pub prompt: String,
    pub mode: PromptMode,
    pub expected_rows: usize,
    pub expected_cols: usize,
    /// Candidates shown in the prompt, after jitter.
    pub context: Vec<Candidate>,
    pub key: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("{message}")]
pub struct BackendError {
    pub message: String,
    pub retryable: bool,
    pub raw: Option<String>,
}

impl BackendError {
    fn new(message: impl Into<String>, retryable: bool, raw: Option<String>) -> Self {
        Self { message: message.into(), retryable, raw }
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum GeneratorError {
    #[error("backend unavailable after {attempts} attempt(s): {message}")]
    BackendUnavailable { message: String, attempts: u32, raw: Option<String> },
    #[error("malformed response after {attempts} attempt(s): {error}")]
    MalformedResponse { error: ParseError, attempts: u32, raw: String },
    #[error("invalid generation request: {0}")]
    InvalidRequest(String),
}

impl GeneratorError {
    /// The raw text of the last response, if any arrived.
    pub fn raw(&self) -> Option<&str> {
        match self {
            GeneratorError::BackendUnavailable { raw, .. } => raw.as_deref(),
            GeneratorError::MalformedResponse { raw, .. } => Some(raw),
            GeneratorError::InvalidRequest(_) => None,
        }
    }
}

pub trait Backend: Send + Sync {
    fn name(&self) -> &'static str;

    /// Produce raw text for `prompt`. `attempt` is 0 for the first try.
    fn complete(
        &self,
        req: &GenerationRequest,
        prompt: &str,
        attempt: u32,
        spec: &ObjectiveSpec,
    ) -> Result<String, BackendError>;
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derive an independent stream seed from a base seed and labels.
pub fn derive_seed(base: u64, labels: &[u64]) -> u64 {
    labels.iter().fold(splitmix(base), |acc, &l| splitmix(acc ^ splitmix(l)))
}

/// Offline stand-in for a language model. Answers are rendered as text and
/// go through the same parser as real responses.
#[derive(Debug, Clone)]
pub struct MockBackend {
    pub policy: MockPolicy,
}

impl MockBackend {
    pub fn new(policy: MockPolicy) -> Self {
        Self { policy }
    }

    fn sample_rows(&self, req: &GenerationRequest, spec: &ObjectiveSpec, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let lo = spec.search_lower();
        let hi = spec.search_upper();
        let n = req.expected_cols;
        let uniform = |rng: &mut ChaCha8Rng, lo: &[f64], hi: &[f64]| -> Vec<f64> {
            (0..n).map(|i| if hi[i] > lo[i] { rng.random_range(lo[i]..hi[i]) } else { lo[i] }).collect()
        };
        let exploit = matches!(req.mode, PromptMode::Exploit | PromptMode::NsgaExploit | PromptMode::Trajectory);
        if req.context.is_empty()
            || !(exploit || req.mode == PromptMode::Explore || req.mode == PromptMode::NsgaExplore)
        {
            return (0..req.expected_rows).map(|_| uniform(rng, lo, hi)).collect();
        }
        if exploit {
            let centers: Vec<&Candidate> = if req.mode == PromptMode::NsgaExploit {
                req.context.iter().collect()
            } else {
                let best = req.context.iter().min_by(|a, b| a.value().total_cmp(&b.value())).expect("non-empty");
                vec![best]
            };
            return (0..req.expected_rows)
                .map(|r| {
                    let c = centers[r % centers.len()];
                    let u: f64 = rng.random();
                    let frac = self.policy.exploit_sigma * 10f64.powf(-u * self.policy.scale_decades);
                    (0..n)
                        .map(|i| {
                            let sd = frac * (hi[i] - lo[i]);
                            c.x[i] + Normal::new(0.0, sd).expect("positive std").sample(rng)
                        })
                        .collect()
                })
                .collect();
        }
        match self.policy.explore_mode {
            ExploreMode::UniformInBounds => (0..req.expected_rows).map(|_| uniform(rng, lo, hi)).collect(),
            ExploreMode::UniformInPoolHullExpanded => {
                let mut hlo = vec![f64::INFINITY; n];
                let mut hhi = vec![f64::NEG_INFINITY; n];
                for c in &req.context {
                    for i in 0..n {
                        hlo[i] = hlo[i].min(c.x[i]);
                        hhi[i] = hhi[i].max(c.x[i]);
                    }
                }
                for i in 0..n {
                    let pad = self.policy.hull_expand * (hi[i] - lo[i]);
                    hlo[i] = (hlo[i] - pad).max(lo[i]);
                    hhi[i] = (hhi[i] + pad).min(hi[i]);
                }
                (0..req.expected_rows).map(|_| uniform(rng, &hlo, &hhi)).collect()
            }
        }
    }
}

impl Backend for MockBackend {
    fn name(&self) -> &'static str {
        "mock"
    }

    fn complete(
        &self,
        req: &GenerationRequest,
        _prompt: &str,
        attempt: u32,
        spec: &ObjectiveSpec,
    ) -> Result<String, BackendError> {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(self.policy.seed, &[req.key, attempt as u64]));
        if self.policy.fault_rate > 0.0 && rng.random::<f64>() < self.policy.fault_rate {
            return Ok("I'm sorry, I can only describe the search space in words.".into());
        }
        let rows = self.sample_rows(req, spec, &mut rng);
        Ok(render_rows(req.mode, &rows))
    }
}

/// Serializes calls so that at most `rpm` start per minute.
#[derive(Debug)]
pub struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    pub fn per_minute(rpm: u32) -> Self {
        Self { interval: Duration::from_secs_f64(60.0 / rpm.max(1) as f64), next: Mutex::new(None) }
    }

    pub fn wait(&self) {
        let sleep_for = {
            let mut next = self.next.lock().unwrap_or_else(|e| e.into_inner());
            let now = Instant::now();
            let start = match *next {
                Some(t) if t > now => t,
                _ => now,
            };
            *next = Some(start + self.interval);
            start - now
        };
        if !sleep_for.is_zero() {
            std::thread::sleep(sleep_for);
        }
    }
}

/// OpenAI-compatible chat-completions client.
pub struct RemoteBackend {
    client: reqwest::blocking::Client,
    url: String,
    model: String,
    temperature: f64,
    api_key: String,
    limiter: Option<RateLimiter>,
}

impl RemoteBackend {
    pub fn new(cfg: &GeneratorConfig, api_key: String) -> Result<Self, CoreError> {
        if api_key.trim().is_empty() {
            return Err(CoreError::Parameter(format!("remote backend needs a non-empty ${}", cfg.api_key_env)));
        }
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs_f64(cfg.timeout_secs))
            .build()
            .map_err(|e| CoreError::Parameter(format!("http client: {e}")))?;
        let base = cfg.resolved_api_base();
        Ok(Self {
            client,
            url: format!("{}/chat/completions", base.trim_end_matches('/')),
            model: cfg.model_name.clone(),
            temperature: cfg.temperature,
            api_key,
            limiter: cfg.requests_per_minute.map(RateLimiter::per_minute),
        })
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Backend for RemoteBackend {
    fn name(&self) -> &'static str {
        "remote"
    }

    fn complete(
        &self,
        _req: &GenerationRequest,
        prompt: &str,
        _attempt: u32,
        _spec: &ObjectiveSpec,
    ) -> Result<String, BackendError> {
        if let Some(l) = &self.limiter {
            l.wait();
        }
        let body = serde_json::json!({
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{ "role": "user", "content": prompt }],
        });
        let resp = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(&body)
            .send()
            .map_err(|e| BackendError::new(format!("request failed: {e}"), true, None))?;
        let status = resp.status();
        let text = resp.text().map_err(|e| BackendError::new(format!("reading body: {e}"), true, None))?;
        if !status.is_success() {
            let retryable = status.as_u16() == 429 || status.is_server_error();
            return Err(BackendError::new(format!("HTTP {status}"), retryable, Some(text)));
        }
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| BackendError::new(format!("invalid JSON: {e}"), true, Some(text.clone())))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| BackendError::new("response has no choices[0].message.content", true, Some(text)))
    }
}

/// Answers from a stored transcript, keyed by `(key, attempt)`.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    answers: HashMap<(u64, u32), Option<String>>,
}

impl ReplayBackend {
    /// Use the entries of one run; `run_id = None` accepts all entries.
    pub fn from_entries(entries: &[TranscriptEntry], run_id: Option<&str>) -> Self {
        let answers = entries
            .iter()
            .filter(|e| run_id.is_none_or(|id| e.run_id == id))
            .map(|e| ((e.key, e.attempt), e.raw_response.clone()))
            .collect();
        Self { answers }
    }

    pub fn len(&self) -> usize {
        self.answers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.answers.is_empty()
    }
}

impl Backend for ReplayBackend {
    fn name(&self) -> &'static str {
        "replay"
    }

    fn complete(
        &self,
        req: &GenerationRequest,
        _prompt: &str,
        attempt: u32,
        _spec: &ObjectiveSpec,
    ) -> Result<String, BackendError> {
        match self.answers.get(&(req.key, attempt)) {
            Some(Some(raw)) => Ok(raw.clone()),
            Some(None) => Err(BackendError::new("recorded backend failure", true, None)),
            None => Err(BackendError::new(
                format!("transcript has no entry for key {} attempt {attempt}", req.key),
                false,
                None,
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub run_id: String,
    pub key: u64,
    pub attempt: u32,
    pub mode: PromptMode,
    pub prompt_sha256: String,
    pub prompt: String,
    pub raw_response: Option<String>,
    pub warnings: Vec<String>,
    pub error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_ms: Option<u64>,
}

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub trait TranscriptSink: Send + Sync {
    fn record(&self, entry: &TranscriptEntry) -> std::io::Result<()>;
}

/// Append-only JSONL file.
#[derive(Debug)]
pub struct JsonlTranscript {
    path: PathBuf,
    file: Mutex<File>,
}

impl JsonlTranscript {
    pub fn open(path: impl AsRef<Path>) -> std::io::Result<Self> {
        let path = path.as_ref().to_path_buf();
        let file = OpenOptions::new().create(true).append(true).open(&path)?;
        Ok(Self { path, file: Mutex::new(file) })
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl TranscriptSink for JsonlTranscript {
    fn record(&self, entry: &TranscriptEntry) -> std::io::Result<()> {
        let mut line = serde_json::to_string(entry).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = self.file.lock().unwrap_or_else(|e| e.into_inner());
        f.write_all(line.as_bytes())
    }
}

/// In-memory sink, used by tests and by the experiment runner to keep
/// per-seed transcripts in seed order.
#[derive(Debug, Default)]
pub struct MemoryTranscript {
    entries: Mutex<Vec<TranscriptEntry>>,
}

impl MemoryTranscript {
    pub fn entries(&self) -> Vec<TranscriptEntry> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

impl TranscriptSink for MemoryTranscript {
    fn record(&self, entry: &TranscriptEntry) -> std::io::Result<()> {
        self.entries.lock().unwrap_or_else(|e| e.into_inner()).push(entry.clone());
        Ok(())
    }
}

pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<TranscriptEntry>, CoreError> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| CoreError::Parameter(format!("{}: {e}", path.display())))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| CoreError::Parameter(format!("{}: {e}", path.display())))?;
        if line.trim().is_empty() {
            continue;
        }
        let entry = serde_json::from_str(&line)
            .map_err(|e| CoreError::Parameter(format!("{} line {}: {e}", path.display(), i + 1)))?;
        out.push(entry);
    }
    Ok(out)
}

/// Backend plus retry policy and transcript plumbing.
pub struct Generator {
    backend: Arc<dyn Backend>,
    max_retries: u32,
    run_id: String,
    sink: Option<Arc<dyn TranscriptSink>>,
    timestamps: bool,
    storage_warnings: Mutex<Vec<String>>,
}

impl Generator {
    pub fn new(backend: Arc<dyn Backend>, max_retries: u32) -> Self {
        Self {
            backend,
            max_retries,
            run_id: String::new(),
            sink: None,
            timestamps: true,
            storage_warnings: Mutex::new(Vec::new()),
        }
    }

    /// Build the backend selected by `cfg`. The remote key is read from the
    /// environment here.
    pub fn from_config(cfg: &GeneratorConfig) -> Result<Self, CoreError> {
        cfg.validate()?;
        let backend: Arc<dyn Backend> = match cfg.backend {
            BackendKind::Mock => Arc::new(MockBackend::new(cfg.mock)),
            BackendKind::Remote => {
                let key = std::env::var(&cfg.api_key_env).unwrap_or_default();
                Arc::new(RemoteBackend::new(cfg, key)?)
            }
            BackendKind::Replay => {
                let path = cfg.replay_path.as_ref().expect("validated");
                Arc::new(ReplayBackend::from_entries(&read_transcript(path)?, None))
            }
        };
        let mut g = Self::new(backend, cfg.max_retries);
        g.timestamps = cfg.timestamps;
        Ok(g)
    }

    pub fn with_run_id(mut self, run_id: impl Into<String>) -> Self {
        self.run_id = run_id.into();
        self
    }

    pub fn with_sink(mut self, sink: Arc<dyn TranscriptSink>) -> Self {
        self.sink = Some(sink);
        self
    }

    pub fn with_timestamps(mut self, on: bool) -> Self {
        self.timestamps = on;
        self
    }

    pub fn backend_name(&self) -> &'static str {
        self.backend.name()
    }

    pub fn run_id(&self) -> &str {
        &self.run_id
    }

    /// Transcript write failures seen so far; generation continues past them.
    pub fn take_storage_warnings(&self) -> Vec<String> {
        std::mem::take(&mut *self.storage_warnings.lock().unwrap_or_else(|e| e.into_inner()))
    }

    fn record(
        &self,
        req: &GenerationRequest,
        attempt: u32,
        prompt: &str,
        raw: Option<&str>,
        warnings: &[String],
        error: Option<String>,
    ) {
        let Some(sink) = &self.sink else { return };
        let entry = TranscriptEntry {
            run_id: self.run_id.clone(),
            key: req.key,
            attempt,
            mode: req.mode,
            prompt_sha256: sha256_hex(prompt),
            prompt: prompt.to_string(),
            raw_response: raw.map(str::to_string),
            warnings: warnings.to_vec(),
            error,
            timestamp_ms: self
                .timestamps
                .then(|| SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)),
        };
        if let Err(e) = sink.record(&entry) {
            self.storage_warnings
                .lock()
                .unwrap_or_else(|p| p.into_inner())
                .push(format!("transcript write failed for key {}: {e}", req.key));
        }
    }

    /// Request, parse and retry. Failed attempts never evaluate anything, so
    /// callers charge evaluations only for the returned rows.
    pub fn generate(&self, req: &GenerationRequest, spec: &ObjectiveSpec) -> Result<ParsedResponse, GeneratorError> {
        if req.expected_rows == 0 || req.expected_cols != spec.num_vars {
            return Err(GeneratorError::InvalidRequest(format!(
                "expected {}x{} rows for a {}-variable problem",
                req.expected_rows, req.expected_cols, spec.num_vars
            )));
        }
        let mut prompt = req.prompt.clone();
        let mut last: Option<GeneratorError> = None;
        for attempt in 0..=self.max_retries {
            match self.backend.complete(req, &prompt, attempt, spec) {
                Ok(raw) => match parse_response(req.mode, &raw, req.expected_rows, req.expected_cols, spec) {
                    Ok(parsed) => {
                        self.record(req, attempt, &prompt, Some(&raw), &parsed.warnings, None);
                        return Ok(parsed);
                    }
                    Err(error) => {
                        self.record(req, attempt, &prompt, Some(&raw), &[], Some(error.to_string()));
                        last = Some(GeneratorError::MalformedResponse { error, attempts: attempt + 1, raw });
                        prompt = format!(
                            "{}{}",
                            req.prompt,
                            corrective_suffix(req.mode, req.expected_rows, req.expected_cols)
                        );
                    }
                },
                Err(e) => {
                    self.record(req, attempt, &prompt, e.raw.as_deref(), &[], Some(e.message.clone()));
                    let retryable = e.retryable;
                    last = Some(GeneratorError::BackendUnavailable {
                        message: e.message,
                        attempts: attempt + 1,
                        raw: e.raw,
                    });
                    if !retryable {
                        break;
                    }
                }
            }
        }
        Err(last.expect("at least one attempt"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pool::Source;

    fn square() -> ObjectiveSpec {
        ObjectiveSpec::new("sq", vec![-2.0; 2], vec![2.0; 2], 1, Arc::new(|x: &[f64]| vec![x[0] * x[0] + x[1] * x[1]]))
            .unwrap()
    }

    fn request(mode: PromptMode, key: u64) -> GenerationRequest {
        GenerationRequest {
            prompt: "p".into(),
            mode,
            expected_rows: 10,
            expected_cols: 2,
            context: vec![Candidate::new(vec![0.0, -1.0], vec![1.0], 0, Source::Init)],
            key,
        }
    }

    #[test]
    fn mock_is_keyed_not_ordered() {
        let g = Generator::new(Arc::new(MockBackend::new(MockPolicy { seed: 3, ..Default::default() })), 1);
        let a = g.generate(&request(PromptMode::Exploit, 5), &square()).unwrap();
        let _ = g.generate(&request(PromptMode::Exploit, 6), &square()).unwrap();
        let b = g.generate(&request(PromptMode::Exploit, 5), &square()).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.rows.len(), 10);
    }

    #[test]
    fn retries_then_reports_malformed() {
        let always = MockPolicy { fault_rate: 1.0, ..Default::default() };
        let sink = Arc::new(MemoryTranscript::default());
        let g = Generator::new(Arc::new(MockBackend::new(always)), 2).with_sink(sink.clone());
        let err = g.generate(&request(PromptMode::Explore, 0), &square()).unwrap_err();
        assert!(matches!(err, GeneratorError::MalformedResponse { attempts: 3, error: ParseError::EmptyResponse, .. }));
        let entries = sink.entries();
        assert_eq!(entries.len(), 3);
        assert!(entries[1].prompt.contains("could not be parsed"));
        assert!(err.raw().unwrap().contains("sorry"));
    }

    #[test]
    fn replay_reproduces_mock() {
        let sink = Arc::new(MemoryTranscript::default());
        let policy = MockPolicy { seed: 11, fault_rate: 0.3, ..Default::default() };
        let g = Generator::new(Arc::new(MockBackend::new(policy)), 3).with_sink(sink.clone()).with_run_id("r");
        let spec = square();
        let originals: Vec<_> = (0..8).map(|k| g.generate(&request(PromptMode::Exploit, k), &spec)).collect();
        let replay = Generator::new(Arc::new(ReplayBackend::from_entries(&sink.entries(), Some("r"))), 3);
        for (k, orig) in originals.into_iter().enumerate() {
            assert_eq!(replay.generate(&request(PromptMode::Exploit, k as u64), &spec), orig);
        }
    }

    #[test]
    fn empty_key_is_config_error() {
        assert!(RemoteBackend::new(&GeneratorConfig::default(), "  ".into()).is_err());
    }

    #[test]
    fn seeds_are_label_sensitive() {
        assert_ne!(derive_seed(1, &[2, 3]), derive_seed(1, &[3, 2]));
        assert_eq!(derive_seed(1, &[2, 3]), derive_seed(1, &[2, 3]));
    }
}
