use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::cache::{cache_key, ResponseCache};
use super::prompt::build_prompt;
use super::verdict::{parse_verdict, SemanticVerdict, Strength};
use super::{EventMetadata, MetadataMap, PairKey};
use crate::error::{Error, Result};
use crate::granger::RankedCandidates;
use crate::ts::ComovementSign;

/// Environment variable holding the bearer token for live scoring.
pub const API_KEY_ENV: &str = "LLM_API_KEY";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScorerMode {
    Live,
    #[default]
    Stub,
    Replay,
}

/// What the stub returns for pairs missing from its table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum StubDefault {
    /// Strength and sign derived from a hash of `(seed, leader, follower)`.
    #[default]
    Hashed,
    None,
    Weak,
    Moderate,
    Strong,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub mode: ScorerMode,
    /// Full chat-completions URL.
    pub endpoint_url: String,
    pub model_name: String,
    pub temperature: f64,
    pub max_retries: u32,
    /// Base delay; attempt `n` waits `retry_backoff_ms * 2^(n-1)`.
    pub retry_backoff_ms: u64,
    pub concurrency_limit: usize,
    pub timeout_secs: u64,
    pub cache_path: Option<PathBuf>,
    pub stub_table: Option<PathBuf>,
    pub stub_default: StubDefault,
}

impl Default for ScorerConfig {
    fn default() -> Self {
        Self {
            mode: ScorerMode::Stub,
            endpoint_url: "https://api.openai.com/v1/chat/completions".into(),
            model_name: "gpt-5-nano".into(),
            temperature: 0.0,
            max_retries: 3,
            retry_backoff_ms: 500,
            concurrency_limit: 4,
            timeout_secs: 60,
            cache_path: None,
            stub_table: None,
            stub_default: StubDefault::Hashed,
        }
    }
}

impl ScorerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.concurrency_limit < 1 {
            return Err(Error::Config("scorer.concurrency_limit must be >= 1".into()));
        }
        if self.temperature != 0.0 {
            return Err(Error::Config("scorer.temperature is fixed at 0".into()));
        }
        if self.mode == ScorerMode::Replay && self.cache_path.is_none() {
            return Err(Error::Config("replay mode needs scorer.cache_path".into()));
        }
        if self.mode == ScorerMode::Live && self.endpoint_url.trim().is_empty() {
            return Err(Error::Config("live mode needs scorer.endpoint_url".into()));
        }
        Ok(())
    }
}

/// One row of a stub scoring table file (a JSON array of these).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StubEntry {
    pub leader_id: String,
    pub follower_id: String,
    pub strength: Strength,
    #[serde(default = "positive")]
    pub expected_sign: ComovementSign,
}

fn positive() -> ComovementSign {
    ComovementSign::Positive
}

pub type StubTable = BTreeMap<PairKey, StubEntry>;

pub fn load_stub_table(path: &Path) -> Result<StubTable> {
    let entries: Vec<StubEntry> = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    Ok(entries
        .into_iter()
        .map(|e| (PairKey::new(&e.leader_id, &e.follower_id), e))
        .collect())
}

/// A pair whose scoring failed and was demoted to strength `none`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoringFailure {
    pub leader_id: String,
    pub follower_id: String,
    pub reason: String,
}

/// Verdicts for a candidate list, in candidate order, plus any failures.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ScoredCandidates {
    pub verdicts: BTreeMap<PairKey, SemanticVerdict>,
    pub failures: Vec<ScoringFailure>,
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'a str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    messages: [ChatMessage<'a>; 1],
    temperature: f64,
}

#[derive(Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Deserialize)]
struct ChatChoice {
    message: ChatResponseMessage,
}

#[derive(Deserialize)]
struct ChatResponseMessage {
    content: Option<String>,
}

enum Attempt {
    Done(SemanticVerdict),
    Retry(String),
    Fatal(String),
}

/// Scores directed pairs for semantic plausibility in live, stub or replay mode.
pub struct Scorer {
    config: ScorerConfig,
    seed: u64,
    stub_table: StubTable,
    cache: Option<ResponseCache>,
    client: Option<reqwest::blocking::Client>,
    api_key: Option<String>,
    requests: AtomicUsize,
    calls: AtomicUsize,
    request_log: Mutex<Vec<String>>,
}

impl std::fmt::Debug for Scorer {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Scorer")
            .field("mode", &self.config.mode)
            .field("model", &self.config.model_name)
            .field("requests", &self.requests_sent())
            .finish()
    }
}

impl Scorer {
    /// Builds a scorer. Loads the stub table and cache named in the config and,
    /// in live mode, reads the API key from `LLM_API_KEY`.
    pub fn new(config: ScorerConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let stub_table = match &config.stub_table {
            Some(p) if config.mode == ScorerMode::Stub => load_stub_table(p)?,
            _ => StubTable::new(),
        };
        let cache = match &config.cache_path {
            Some(p) if config.mode != ScorerMode::Stub => Some(ResponseCache::open(p)?),
            _ => None,
        };
        let (client, api_key) = if config.mode == ScorerMode::Live {
            let client = reqwest::blocking::Client::builder()
                .timeout(Duration::from_secs(config.timeout_secs))
                .build()
                .map_err(|e| Error::Config(format!("HTTP client: {e}")))?;
            (Some(client), std::env::var(API_KEY_ENV).ok())
        } else {
            (None, None)
        };
        Ok(Self {
            config,
            seed,
            stub_table,
            cache,
            client,
            api_key,
            requests: AtomicUsize::new(0),
            calls: AtomicUsize::new(0),
            request_log: Mutex::new(Vec::new()),
        })
    }

    /// Replaces the stub table (stub mode only).
    pub fn with_stub_table(mut self, table: StubTable) -> Self {
        self.stub_table = table;
        self
    }

    /// Overrides the API key read from the environment.
    pub fn with_api_key(mut self, key: Option<String>) -> Self {
        self.api_key = key;
        self
    }

    pub fn config(&self) -> &ScorerConfig {
        &self.config
    }

    /// HTTP requests sent so far.
    pub fn requests_sent(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// `score_pair` invocations so far, in any mode.
    pub fn calls(&self) -> usize {
        self.calls.load(Ordering::SeqCst)
    }

    /// One line per HTTP attempt: `<status or error> <leader> -> <follower>`.
    pub fn request_log(&self) -> Vec<String> {
        self.request_log.lock().expect("log lock").clone()
    }

    pub fn score_pair(&self, leader: &EventMetadata, follower: &EventMetadata) -> Result<SemanticVerdict> {
        self.calls.fetch_add(1, Ordering::SeqCst);
        let failed = |reason: String| Error::ScoringFailed {
            leader: leader.market_id.clone(),
            follower: follower.market_id.clone(),
            reason,
        };
        match self.config.mode {
            ScorerMode::Stub => Ok(self.stub_verdict(&leader.market_id, &follower.market_id)),
            ScorerMode::Replay => {
                let prompt = build_prompt(leader, follower)?;
                let key = cache_key(&self.config.model_name, &prompt);
                let rec = self
                    .cache
                    .as_ref()
                    .and_then(|c| c.get(&key))
                    .ok_or_else(|| failed("no cached response (replay mode)".into()))?;
                parse_verdict(&rec.response).map_err(|e| failed(format!("cached response unusable: {e}")))
            }
            ScorerMode::Live => {
                let prompt = build_prompt(leader, follower)?;
                let key = cache_key(&self.config.model_name, &prompt);
                if let Some(rec) = self.cache.as_ref().and_then(|c| c.get(&key)) {
                    if let Ok(v) = parse_verdict(&rec.response) {
                        return Ok(v);
                    }
                }
                let label = format!("{} -> {}", leader.market_id, follower.market_id);
                let mut last = String::from("no attempt made");
                for attempt in 0..=self.config.max_retries {
                    if attempt > 0 {
                        let factor = 1u64 << (attempt - 1).min(16);
                        std::thread::sleep(Duration::from_millis(
                            self.config.retry_backoff_ms.saturating_mul(factor),
                        ));
                    }
                    match self.attempt(&prompt, &label) {
                        Attempt::Done(v) => {
                            if let Some(cache) = &self.cache {
                                cache.insert(&key, &self.config.model_name, &v.raw_response)?;
                            }
                            return Ok(v);
                        }
                        Attempt::Retry(reason) => {
                            tracing::debug!(pair = %label, attempt, %reason, "retrying");
                            last = reason;
                        }
                        Attempt::Fatal(reason) => return Err(failed(reason)),
                    }
                }
                Err(failed(format!(
                    "retries exhausted after {} attempts: {last}",
                    self.config.max_retries + 1
                )))
            }
        }
    }

    fn attempt(&self, prompt: &str, label: &str) -> Attempt {
        let client = self.client.as_ref().expect("live mode has a client");
        let body = ChatRequest {
            model: &self.config.model_name,
            messages: [ChatMessage {
                role: "user",
                content: prompt,
            }],
            temperature: self.config.temperature,
        };
        let mut req = client.post(&self.config.endpoint_url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        self.requests.fetch_add(1, Ordering::SeqCst);
        let log = |entry: String| self.request_log.lock().expect("log lock").push(entry);
        let resp = match req.send() {
            Ok(r) => r,
            Err(e) => {
                log(format!("error {label}"));
                return Attempt::Retry(format!("transport error: {e}"));
            }
        };
        let status = resp.status();
        log(format!("{} {label}", status.as_u16()));
        if status.as_u16() == 429 || status.is_server_error() {
            return Attempt::Retry(format!("HTTP {status}"));
        }
        if !status.is_success() {
            return Attempt::Fatal(format!("HTTP {status}"));
        }
        let text = match resp.text() {
            Ok(t) => t,
            Err(e) => return Attempt::Retry(format!("reading body: {e}")),
        };
        let content = match serde_json::from_str::<ChatResponse>(&text) {
            Ok(r) => r.choices.into_iter().next().and_then(|c| c.message.content),
            Err(e) => return Attempt::Retry(format!("malformed completion envelope: {e}")),
        };
        let Some(content) = content else {
            return Attempt::Retry("completion has no message content".into());
        };
        match parse_verdict(&content) {
            Ok(v) => Attempt::Done(v),
            Err(e) => Attempt::Retry(e.to_string()),
        }
    }

    fn stub_verdict(&self, leader: &str, follower: &str) -> SemanticVerdict {
        let (strength, sign) = match self.stub_table.get(&PairKey::new(leader, follower)) {
            Some(e) => (e.strength, e.expected_sign),
            None => match self.config.stub_default {
                StubDefault::Hashed => {
                    let mut h = Sha256::new();
                    h.update(self.seed.to_le_bytes());
                    h.update(leader.as_bytes());
                    h.update([0u8]);
                    h.update(follower.as_bytes());
                    let d = h.finalize();
                    let sign = if d[1] & 1 == 0 {
                        ComovementSign::Positive
                    } else {
                        ComovementSign::Negative
                    };
                    (Strength::ALL[(d[0] % 4) as usize], sign)
                }
                StubDefault::None => (Strength::None, ComovementSign::Positive),
                StubDefault::Weak => (Strength::Weak, ComovementSign::Positive),
                StubDefault::Moderate => (Strength::Moderate, ComovementSign::Positive),
                StubDefault::Strong => (Strength::Strong, ComovementSign::Positive),
            },
        };
        let mut v = SemanticVerdict {
            plausible: strength != Strength::None,
            strength,
            expected_sign: sign,
            rationale: "stub verdict".into(),
            raw_response: String::new(),
        };
        v.raw_response = v.to_response_json();
        v
    }

    /// Scores every candidate, up to `concurrency_limit` at a time. Failed
    /// pairs get a strength-`none` verdict and a [`ScoringFailure`] entry.
    pub fn score_candidates(&self, candidates: &RankedCandidates, metadata: &MetadataMap) -> ScoredCandidates {
        let n = candidates.candidates.len();
        let results: Mutex<Vec<Option<Result<SemanticVerdict>>>> = Mutex::new((0..n).map(|_| None).collect());
        let next = AtomicUsize::new(0);
        let workers = self.config.concurrency_limit.min(n).max(1);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    if i >= n {
                        break;
                    }
                    let c = &candidates.candidates[i];
                    let outcome = match (metadata.get(&c.leader_id), metadata.get(&c.follower_id)) {
                        (Some(l), Some(f)) => self.score_pair(l, f),
                        (None, _) => Err(Error::UnknownMarket(c.leader_id.clone())),
                        (_, None) => Err(Error::UnknownMarket(c.follower_id.clone())),
                    };
                    results.lock().expect("results lock")[i] = Some(outcome);
                });
            }
        });

        let mut out = ScoredCandidates::default();
        for (c, r) in candidates.candidates.iter().zip(results.into_inner().expect("results lock")) {
            let key = PairKey::new(&c.leader_id, &c.follower_id);
            let verdict = match r.expect("every index scored") {
                Ok(v) => v,
                Err(e) => {
                    let reason = match e {
                        Error::ScoringFailed { reason, .. } => reason,
                        other => other.to_string(),
                    };
                    tracing::warn!(leader = %c.leader_id, follower = %c.follower_id, %reason, "scoring failed");
                    out.failures.push(ScoringFailure {
                        leader_id: c.leader_id.clone(),
                        follower_id: c.follower_id.clone(),
                        reason: reason.clone(),
                    });
                    SemanticVerdict::failed(&reason)
                }
            };
            out.verdicts.insert(key, verdict);
        }
        out
    }
}
