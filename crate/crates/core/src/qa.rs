//! Downstream question answering over routed context.
//!
//! Prompt template for external models (fixed):
//!
//! ```text
//! system: You answer questions about the user using only the memory context
//!         provided. Reply with the answer only. If the context does not
//!         contain the answer, reply UNKNOWN.
//! user:   <context, one "## <Store Name>" header per selected store>
//!
//!         Question: <query text>
//!         Answer:
//! ```

use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::PathBuf;
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{ItemId, Query, RouteDecision, ViewIndex};
use crate::store::StoreSet;
use crate::synthgen::AnswerKey;
use crate::tokenize::Tokenizer;

pub const UNKNOWN: &str = "UNKNOWN";

pub const SYSTEM_PROMPT: &str = "You answer questions about the user using only the memory context provided. \
Reply with the answer only. If the context does not contain the answer, reply UNKNOWN.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AssembledContext {
    pub query_id: String,
    pub stores_used: StoreSet,
    pub text: String,
    pub token_count: usize,
    /// Corpus ids of every included item, in context order.
    pub items: Vec<ItemId>,
}

impl AssembledContext {
    pub fn contains(&self, item: ItemId) -> bool {
        self.items.contains(&item)
    }
}

/// Concatenates the decision's stores in fixed store order, each under a
/// one-line header.
pub fn assemble(decision: &RouteDecision, views: &ViewIndex<'_>, tokenizer: &dyn Tokenizer) -> AssembledContext {
    let corpus = views.corpus();
    let mut sections = Vec::new();
    let mut items = Vec::new();
    for store in decision.stores.iter() {
        let ids = views.view(&decision.query_id, store);
        let mut section = format!("## {}", store.label());
        for &i in &ids {
            section.push('\n');
            section.push_str(&corpus.items[i].text);
        }
        sections.push(section);
        items.extend(ids);
    }
    let text = sections.join("\n\n");
    AssembledContext {
        query_id: decision.query_id.clone(),
        stores_used: decision.stores,
        token_count: tokenizer.count(&text),
        text,
        items,
    }
}

/// Case-insensitive substring scoring.
pub fn score(expected: &str, produced: &str) -> bool {
    produced.to_lowercase().contains(&expected.to_lowercase())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AnswererKind {
    Oracle,
    NoisyOracle,
    ExternalLlm,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnswerRecord {
    pub query_id: String,
    pub produced_answer: String,
    pub correct: bool,
    pub answerer: AnswererKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub latency_ms: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl AnswerRecord {
    fn scored(key: &AnswerKey, produced: String, answerer: AnswererKind) -> Self {
        AnswerRecord {
            query_id: key.query_id.clone(),
            correct: score(&key.answer, &produced),
            produced_answer: produced,
            answerer,
            latency_ms: None,
            error: None,
        }
    }
}

/// Anything that turns an assembled context into an answer. Alternative
/// noise models plug in here.
pub trait Answerer: Send + Sync {
    fn answer(&self, query: &Query, ctx: &AssembledContext, key: &AnswerKey, views: &ViewIndex<'_>) -> AnswerRecord;
}

/// Answers iff every answer item for the query is in the context, which makes
/// accuracy coincide with coverage.
pub fn answer_oracle(ctx: &AssembledContext, key: &AnswerKey) -> AnswerRecord {
    let found = !key.answer_items.is_empty() && key.answer_items.iter().all(|&i| ctx.contains(i));
    let produced = if found { key.answer.clone() } else { UNKNOWN.to_string() };
    AnswerRecord::scored(key, produced, AnswererKind::Oracle)
}

/// Uniform draw in [0, 1) fixed by `(seed, query_id)`.
fn per_query_draw(seed: u64, query_id: &str) -> f64 {
    let digest = Sha256::new()
        .chain_update(seed.to_le_bytes())
        .chain_update(query_id.as_bytes())
        .finalize();
    let mut bytes = [0u8; 32];
    bytes.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(bytes).gen::<f64>()
}

/// Like [`answer_oracle`], but a present distractor is extracted instead of the
/// answer with probability `noise`.
pub fn answer_noisy_oracle(
    ctx: &AssembledContext,
    key: &AnswerKey,
    views: &ViewIndex<'_>,
    noise: f64,
    seed: u64,
) -> Result<AnswerRecord> {
    if !(0.0..=1.0).contains(&noise) {
        return Err(Error::Config(format!("noise must be in [0, 1], got {noise}")));
    }
    let mut rec = answer_oracle(ctx, key);
    rec.answerer = AnswererKind::NoisyOracle;
    if let Some(&d) = key.distractor_items.iter().find(|&&d| ctx.contains(d)) {
        if per_query_draw(seed, &key.query_id) < noise {
            rec.produced_answer = views.corpus().items[d].text.clone();
            rec.correct = score(&key.answer, &rec.produced_answer);
        }
    }
    Ok(rec)
}

#[derive(Debug, Clone, Copy, Default)]
pub struct OracleAnswerer;

impl Answerer for OracleAnswerer {
    fn answer(&self, _: &Query, ctx: &AssembledContext, key: &AnswerKey, _: &ViewIndex<'_>) -> AnswerRecord {
        answer_oracle(ctx, key)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct NoisyOracle {
    noise: f64,
    seed: u64,
}

impl NoisyOracle {
    pub fn new(noise: f64, seed: u64) -> Result<Self> {
        if !(0.0..=1.0).contains(&noise) {
            return Err(Error::Config(format!("noise must be in [0, 1], got {noise}")));
        }
        Ok(NoisyOracle { noise, seed })
    }
}

impl Answerer for NoisyOracle {
    fn answer(&self, _: &Query, ctx: &AssembledContext, key: &AnswerKey, views: &ViewIndex<'_>) -> AnswerRecord {
        answer_noisy_oracle(ctx, key, views, self.noise, self.seed).expect("noise validated in constructor")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExternalConfig {
    /// Full URL of a chat-completions endpoint.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the bearer token; unset means no auth header.
    pub api_key_env: String,
    pub timeout_secs: u64,
    pub max_in_flight: usize,
    pub audit_log: Option<PathBuf>,
}

impl Default for ExternalConfig {
    fn default() -> Self {
        ExternalConfig {
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: "gpt-4o-mini".into(),
            api_key_env: "OPENAI_API_KEY".into(),
            timeout_secs: 60,
            max_in_flight: 4,
            audit_log: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatRequest {
    pub model: String,
    pub temperature: f64,
    pub messages: Vec<ChatMessage>,
}

#[derive(Debug, Deserialize)]
struct ChatResponse {
    choices: Vec<ChatChoice>,
}

#[derive(Debug, Deserialize)]
struct ChatChoice {
    message: ChatMessage,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ExternalError {
    #[error("authentication failed (HTTP {0})")]
    Auth(u16),
    #[error("HTTP status {0}")]
    Status(u16),
    #[error("request timed out")]
    Timeout,
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl From<ureq::Error> for ExternalError {
    fn from(e: ureq::Error) -> Self {
        match e {
            ureq::Error::StatusCode(c @ (401 | 403)) => ExternalError::Auth(c),
            ureq::Error::StatusCode(c) => ExternalError::Status(c),
            ureq::Error::Timeout(_) => ExternalError::Timeout,
            other => ExternalError::Network(other.to_string()),
        }
    }
}

pub fn build_request(model: &str, ctx: &AssembledContext, query: &Query) -> ChatRequest {
    ChatRequest {
        model: model.to_string(),
        temperature: 0.0,
        messages: vec![
            ChatMessage {
                role: "system".into(),
                content: SYSTEM_PROMPT.into(),
            },
            ChatMessage {
                role: "user".into(),
                content: format!("{}\n\nQuestion: {}\nAnswer:", ctx.text, query.text),
            },
        ],
    }
}

/// Blocking chat-completion client with an optional JSONL audit trail.
pub struct ExternalClient {
    config: ExternalConfig,
    agent: ureq::Agent,
    api_key: Option<String>,
    audit: Option<Mutex<File>>,
    pool: rayon::ThreadPool,
}

impl ExternalClient {
    pub fn new(config: ExternalConfig) -> Result<Self> {
        if config.max_in_flight == 0 {
            return Err(Error::Config("max_in_flight must be at least 1".into()));
        }
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs(config.timeout_secs)))
            .http_status_as_error(true)
            .build()
            .into();
        let audit = match &config.audit_log {
            Some(path) => Some(Mutex::new(
                OpenOptions::new()
                    .create(true)
                    .append(true)
                    .open(path)
                    .map_err(|e| Error::io(path, e))?,
            )),
            None => None,
        };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(config.max_in_flight)
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        let api_key = std::env::var(&config.api_key_env).ok().filter(|k| !k.is_empty());
        Ok(ExternalClient {
            config,
            agent,
            api_key,
            audit,
            pool,
        })
    }

    fn send(&self, request: &ChatRequest) -> std::result::Result<String, ExternalError> {
        let mut call = self.agent.post(&self.config.endpoint);
        if let Some(key) = &self.api_key {
            call = call.header("Authorization", &format!("Bearer {key}"));
        }
        let mut response = call.send_json(request)?;
        let body: ChatResponse = response
            .body_mut()
            .read_json()
            .map_err(|e| ExternalError::Malformed(e.to_string()))?;
        body.choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| ExternalError::Malformed("no choices".into()))
    }

    fn log(&self, query_id: &str, request: &ChatRequest, outcome: &std::result::Result<String, ExternalError>) {
        let Some(audit) = &self.audit else { return };
        let entry = match outcome {
            Ok(text) => serde_json::json!({"query_id": query_id, "request": request, "response": text}),
            Err(e) => serde_json::json!({"query_id": query_id, "request": request, "error": e.to_string()}),
        };
        let mut file = audit.lock().unwrap_or_else(|p| p.into_inner());
        let _ = writeln!(file, "{entry}");
    }

    /// One request. Failures come back as an incorrect record carrying the error.
    pub fn answer_external(&self, ctx: &AssembledContext, query: &Query) -> AnswerRecord {
        let request = build_request(&self.config.model, ctx, query);
        let start = Instant::now();
        let outcome = self.send(&request);
        let latency_ms = start.elapsed().as_secs_f64() * 1e3;
        self.log(&query.id, &request, &outcome);
        let (produced, correct, error) = match outcome {
            Ok(text) => {
                let ok = score(&query.answer, &text);
                (text, ok, None)
            }
            Err(e) => (String::new(), false, Some(e.to_string())),
        };
        AnswerRecord {
            query_id: query.id.clone(),
            produced_answer: produced,
            correct,
            answerer: AnswererKind::ExternalLlm,
            latency_ms: Some(latency_ms),
            error,
        }
    }

    /// Issues requests with at most `max_in_flight` outstanding; results are
    /// returned in input order.
    pub fn answer_batch(&self, jobs: &[(&AssembledContext, &Query)]) -> Vec<AnswerRecord> {
        self.pool
            .install(|| jobs.par_iter().map(|(ctx, q)| self.answer_external(ctx, q)).collect())
    }
}

impl Answerer for ExternalClient {
    fn answer(&self, query: &Query, ctx: &AssembledContext, _: &AnswerKey, _: &ViewIndex<'_>) -> AnswerRecord {
        self.answer_external(ctx, query)
    }
}
