//! Semantic scoring for requirement dimensions that rule-based comparison cannot decide.
//!
//! A request is rendered into a chat prompt asking for a single integer 0–10,
//! sent to a pluggable [`AdjudicationBackend`], and the first integer in the
//! reply becomes the score. Successful scores are cached by request key.
//! Backend or parse failures are retried up to the retry limit, after which a
//! neutral 0.5 is returned with the fallback flag set.

mod cache;
mod remote;
mod stub;

use std::sync::atomic::{AtomicU64, Ordering};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::domain::{CapabilityProfile, TaskDescription};
use crate::suitability::DimensionScore;

pub use cache::{CacheError, ScoreCache};
pub use remote::{RemoteBackend, RemoteConfig};
pub use stub::{FixtureTable, StubBackend};

pub const DEFAULT_RETRY_LIMIT: u32 = 3;
pub const FALLBACK_SCORE: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjudicationRequest {
    pub agent_id: String,
    pub task_id: String,
    pub agent_digest: String,
    pub task_digest: String,
    /// Dimension in question; empty means the whole agent/task pair.
    pub focus: String,
    key: String,
}

impl AdjudicationRequest {
    pub fn new(profile: &CapabilityProfile, task: &TaskDescription, focus: impl Into<String>) -> Self {
        let agent_digest = profile.digest();
        let task_digest = task.digest();
        let focus = focus.into();
        let key = request_key(&agent_digest, &task_digest, &focus);
        AdjudicationRequest {
            agent_id: profile.agent_id.clone(),
            task_id: task.task_id.clone(),
            agent_digest,
            task_digest,
            focus,
            key,
        }
    }

    /// Stable content hash of the agent digest, task digest and focus.
    pub fn key(&self) -> &str {
        &self.key
    }

    /// `agent/task/focus`, an alternative fixture lookup handle.
    pub fn label(&self) -> String {
        format!("{}/{}/{}", self.agent_id, self.task_id, self.focus)
    }

    pub fn is_whole_pair(&self) -> bool {
        self.focus.is_empty()
    }
}

fn request_key(agent_digest: &str, task_digest: &str, focus: &str) -> String {
    let mut h = Sha256::new();
    for part in [agent_digest, task_digest, focus] {
        h.update((part.len() as u64).to_le_bytes());
        h.update(part.as_bytes());
    }
    hex::encode(&h.finalize()[..16])
}

/// Builds the chat prompt for a request. Byte-identical for identical requests.
pub fn render_prompt(request: &AdjudicationRequest) -> String {
    let mut p = String::new();
    p.push_str("You are assessing whether a construction robot is suited to a task on a modular construction site.\n\n");
    p.push_str("Capability profile:\n");
    p.push_str(&request.agent_digest);
    p.push_str("\nTask description:\n");
    p.push_str(&request.task_digest);
    p.push('\n');
    if request.is_whole_pair() {
        p.push_str("Consider the task as a whole: how well does this agent's full set of capabilities match everything the task needs?\n");
    } else {
        p.push_str(&format!(
            "Focus only on the requirement \"{}\". Judge how well the agent's capabilities (including weight, size, tools and notes) satisfy it.\n",
            request.focus
        ));
    }
    p.push_str("Answer with a single integer from 0 (cannot do it) to 10 (ideally suited) and nothing else.\n");
    p
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("no integer found in response {0:?}")]
pub struct ParseFailure(pub String);

/// Takes the first run of ASCII digits in `raw`, divides by 10 and clamps to [0, 1].
pub fn parse_response(raw: &str) -> Result<f64, ParseFailure> {
    let start = raw
        .find(|c: char| c.is_ascii_digit())
        .ok_or_else(|| ParseFailure(raw.to_string()))?;
    let digits: String = raw[start..].chars().take_while(char::is_ascii_digit).collect();
    // Overlong digit runs saturate; they clamp to 1.0 either way.
    let value = digits.parse::<u64>().unwrap_or(u64::MAX);
    Ok((value as f64 / 10.0).clamp(0.0, 1.0))
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackendError {
    #[error("transport error: {0}")]
    Transport(String),
    #[error("backend returned status {status}: {body}")]
    Status { status: u16, body: String },
    #[error("malformed backend response: {0}")]
    Malformed(String),
    #[error("environment variable {0} is not set")]
    MissingKey(String),
    #[error("{0}")]
    Other(String),
}

/// Maps a prompt to raw reply text.
pub trait AdjudicationBackend: Send + Sync {
    fn complete(&self, request: &AdjudicationRequest, prompt: &str) -> Result<String, BackendError>;
}

impl<B: AdjudicationBackend + ?Sized> AdjudicationBackend for Box<B> {
    fn complete(&self, request: &AdjudicationRequest, prompt: &str) -> Result<String, BackendError> {
        (**self).complete(request, prompt)
    }
}

#[derive(Debug, Default)]
struct Counters {
    backend_calls: AtomicU64,
    failures: AtomicU64,
    fallbacks: AtomicU64,
    cache_hits: AtomicU64,
    requests: AtomicU64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize)]
pub struct AdjudicatorStats {
    pub requests: u64,
    pub backend_calls: u64,
    pub failures: u64,
    pub fallbacks: u64,
    pub cache_hits: u64,
}

/// Backend + cache + retry policy. Safe to share across threads.
pub struct Adjudicator {
    backend: Box<dyn AdjudicationBackend>,
    cache: ScoreCache,
    retry_limit: u32,
    counters: Counters,
}

impl Adjudicator {
    pub fn new(backend: Box<dyn AdjudicationBackend>) -> Self {
        Adjudicator::with_cache(backend, ScoreCache::new(), DEFAULT_RETRY_LIMIT)
    }

    pub fn with_cache(backend: Box<dyn AdjudicationBackend>, cache: ScoreCache, retry_limit: u32) -> Self {
        Adjudicator {
            backend,
            cache,
            retry_limit: retry_limit.max(1),
            counters: Counters::default(),
        }
    }

    /// Offline adjudicator backed by [`StubBackend`].
    pub fn stub(seed: u64, fixtures: FixtureTable) -> Self {
        Adjudicator::new(Box::new(StubBackend::new(seed, fixtures)))
    }

    pub fn cache(&self) -> &ScoreCache {
        &self.cache
    }

    pub fn stats(&self) -> AdjudicatorStats {
        let c = &self.counters;
        AdjudicatorStats {
            requests: c.requests.load(Ordering::Relaxed),
            backend_calls: c.backend_calls.load(Ordering::Relaxed),
            failures: c.failures.load(Ordering::Relaxed),
            fallbacks: c.fallbacks.load(Ordering::Relaxed),
            cache_hits: c.cache_hits.load(Ordering::Relaxed),
        }
    }

    /// Scores one request. Never fails: persistent backend or parse failures
    /// yield [`FALLBACK_SCORE`] with `fallback` set, and are not cached.
    pub fn adjudicate(&self, request: &AdjudicationRequest) -> DimensionScore {
        self.counters.requests.fetch_add(1, Ordering::Relaxed);
        let (score, hit) = self.cache.get_or_try_insert_with(request.key(), || self.query(request));
        if hit {
            self.counters.cache_hits.fetch_add(1, Ordering::Relaxed);
        }
        let (score, fallback) = match score {
            Some(s) => (s, false),
            None => {
                self.counters.fallbacks.fetch_add(1, Ordering::Relaxed);
                (FALLBACK_SCORE, true)
            }
        };
        DimensionScore {
            dimension: request.focus.clone(),
            score,
            feasible: score > 0.0,
            adjudicated: true,
            fallback,
        }
    }

    fn query(&self, request: &AdjudicationRequest) -> Option<f64> {
        let prompt = render_prompt(request);
        for _ in 0..self.retry_limit {
            self.counters.backend_calls.fetch_add(1, Ordering::Relaxed);
            match self.backend.complete(request, &prompt) {
                Ok(raw) => match parse_response(&raw) {
                    Ok(score) => return Some(score),
                    Err(_) => {
                        self.counters.failures.fetch_add(1, Ordering::Relaxed);
                    }
                },
                Err(_) => {
                    self.counters.failures.fetch_add(1, Ordering::Relaxed);
                }
            }
        }
        None
    }
}

impl std::fmt::Debug for Adjudicator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Adjudicator")
            .field("retry_limit", &self.retry_limit)
            .field("stats", &self.stats())
            .finish_non_exhaustive()
    }
}
