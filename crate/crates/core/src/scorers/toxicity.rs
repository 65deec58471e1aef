//! Toxicity scoring against a Perspective-compatible endpoint, with an
//! on-disk content-hash cache, a process-wide rate limiter, retry with
//! exponential backoff, and a lexicon fallback.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Mutex, RwLock};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::PhraseLexicon;
use crate::error::{Error, Result};

pub const BACKEND_API: &str = "api";
pub const BACKEND_FALLBACK: &str = "fallback";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ToxicityConfig {
    pub endpoint: String,
    #[serde(skip_serializing)]
    pub api_key: Option<String>,
    pub untuned_threshold: f64,
    pub tuned_threshold: f64,
    pub cache_path: Option<PathBuf>,
    /// Requests per second.
    pub rate_limit: f64,
    pub offline: bool,
    pub max_attempts: u32,
    pub backoff_base_secs: f64,
    pub timeout_secs: u64,
}

impl Default for ToxicityConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://commentanalyzer.googleapis.com/v1alpha1/comments:analyze".into(),
            api_key: None,
            untuned_threshold: 0.5,
            tuned_threshold: 0.8,
            cache_path: None,
            rate_limit: 1.0,
            offline: false,
            max_attempts: 5,
            backoff_base_secs: 1.0,
            timeout_secs: 30,
        }
    }
}

impl ToxicityConfig {
    pub fn validate(&self) -> Result<()> {
        let (u, t) = (self.untuned_threshold, self.tuned_threshold);
        if !(0.0 < u && u < t && t < 1.0) {
            return Err(Error::Config(format!(
                "toxicity thresholds must satisfy 0 < untuned < tuned < 1, got {u} and {t}"
            )));
        }
        if !(self.rate_limit > 0.0 && self.rate_limit.is_finite()) {
            return Err(Error::Config(format!("toxicity rate_limit must be positive, got {}", self.rate_limit)));
        }
        if self.max_attempts == 0 {
            return Err(Error::Config("toxicity max_attempts must be at least 1".into()));
        }
        Ok(())
    }
}

/// HTTP POST of a JSON body; returns (status, response body).
pub trait Transport: Send + Sync {
    fn post(&self, url: &str, body: &str) -> Result<(u16, String)>;
}

pub struct HttpTransport {
    agent: ureq::Agent,
}

impl HttpTransport {
    pub fn new(timeout: Duration) -> Self {
        Self {
            agent: ureq::AgentBuilder::new().timeout(timeout).build(),
        }
    }
}

impl Transport for HttpTransport {
    fn post(&self, url: &str, body: &str) -> Result<(u16, String)> {
        let resp = self
            .agent
            .post(url)
            .set("Content-Type", "application/json")
            .send_string(body);
        match resp {
            Ok(r) => {
                let status = r.status();
                let text = r.into_string().map_err(|e| Error::Transport(e.to_string()))?;
                Ok((status, text))
            }
            Err(ureq::Error::Status(code, r)) => Ok((code, r.into_string().unwrap_or_default())),
            Err(e) => Err(Error::Transport(e.to_string())),
        }
    }
}

pub fn content_hash(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

pub fn request_body(text: &str) -> String {
    serde_json::json!({
        "comment": {"text": text},
        "requestedAttributes": {"TOXICITY": {}},
    })
    .to_string()
}

pub fn parse_response(body: &str) -> Result<f64> {
    let v: serde_json::Value =
        serde_json::from_str(body).map_err(|e| Error::Protocol(format!("response is not JSON: {e}")))?;
    let score = v
        .pointer("/attributeScores/TOXICITY/summaryScore/value")
        .and_then(serde_json::Value::as_f64)
        .ok_or_else(|| Error::Protocol("missing attributeScores.TOXICITY.summaryScore.value".into()))?;
    if !(0.0..=1.0).contains(&score) {
        return Err(Error::Protocol(format!("toxicity {score} outside [0,1]")));
    }
    Ok(score)
}

#[derive(Debug, Clone, PartialEq)]
struct CacheEntry {
    score: f64,
    backend: String,
}

struct Cache {
    entries: RwLock<HashMap<String, CacheEntry>>,
    file: Option<Mutex<File>>,
}

impl Cache {
    fn open(path: Option<&Path>) -> Result<Self> {
        let mut entries = HashMap::new();
        let Some(path) = path else {
            return Ok(Self {
                entries: RwLock::new(entries),
                file: None,
            });
        };
        if path.exists() {
            let f = File::open(path).map_err(|e| Error::io(path, e))?;
            for (i, line) in BufReader::new(f).lines().enumerate() {
                let line = line.map_err(|e| Error::io(path, e))?;
                if line.trim().is_empty() {
                    continue;
                }
                let mut parts = line.split('\t');
                let (Some(h), Some(s), Some(b), None) = (parts.next(), parts.next(), parts.next(), parts.next()) else {
                    return Err(Error::Parse {
                        line: i + 1,
                        message: format!("{}: expected hash<TAB>score<TAB>backend", path.display()),
                    });
                };
                let score: f64 = s.parse().map_err(|_| Error::Parse {
                    line: i + 1,
                    message: format!("{}: bad score `{s}`", path.display()),
                })?;
                // later lines win, so an api result supersedes an earlier fallback
                entries.insert(
                    h.to_string(),
                    CacheEntry {
                        score,
                        backend: b.to_string(),
                    },
                );
            }
        }
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        let file = OpenOptions::new()
            .create(true)
            .append(true)
            .open(path)
            .map_err(|e| Error::io(path, e))?;
        Ok(Self {
            entries: RwLock::new(entries),
            file: Some(Mutex::new(file)),
        })
    }

    fn get(&self, hash: &str) -> Option<CacheEntry> {
        self.entries.read().expect("cache lock").get(hash).cloned()
    }

    fn put(&self, hash: String, entry: CacheEntry) -> Result<()> {
        let mut map = self.entries.write().expect("cache lock");
        if map.get(&hash) == Some(&entry) {
            return Ok(());
        }
        if let Some(f) = &self.file {
            let mut f = f.lock().expect("cache file lock");
            writeln!(f, "{hash}\t{}\t{}", entry.score, entry.backend)
                .map_err(|e| Error::Transport(format!("writing toxicity cache: {e}")))?;
        }
        map.insert(hash, entry);
        Ok(())
    }
}

/// Minimum spacing between requests, shared by all threads.
struct RateLimiter {
    interval: Duration,
    next: Mutex<Option<Instant>>,
}

impl RateLimiter {
    fn wait(&self) {
        let mut next = self.next.lock().expect("rate limiter lock");
        let now = Instant::now();
        if let Some(t) = *next {
            if t > now {
                std::thread::sleep(t - now);
            }
        }
        *next = Some(Instant::now() + self.interval);
    }
}

pub struct ToxicityScorer {
    config: ToxicityConfig,
    fallback: PhraseLexicon,
    cache: Cache,
    transport: Box<dyn Transport>,
    limiter: RateLimiter,
    requests: AtomicUsize,
    cache_hits: AtomicUsize,
}

impl ToxicityScorer {
    pub fn new(config: ToxicityConfig, fallback: PhraseLexicon) -> Result<Self> {
        let timeout = Duration::from_secs(config.timeout_secs);
        Self::with_transport(config, fallback, Box::new(HttpTransport::new(timeout)))
    }

    pub fn with_transport(
        config: ToxicityConfig,
        fallback: PhraseLexicon,
        transport: Box<dyn Transport>,
    ) -> Result<Self> {
        config.validate()?;
        let cache = Cache::open(config.cache_path.as_deref())?;
        let limiter = RateLimiter {
            interval: Duration::from_secs_f64(1.0 / config.rate_limit),
            next: Mutex::new(None),
        };
        Ok(Self {
            config,
            fallback,
            cache,
            transport,
            limiter,
            requests: AtomicUsize::new(0),
            cache_hits: AtomicUsize::new(0),
        })
    }

    pub fn config(&self) -> &ToxicityConfig {
        &self.config
    }

    /// External requests issued so far.
    pub fn request_count(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    /// Scores answered from the cache without recomputation.
    pub fn cache_hits(&self) -> usize {
        self.cache_hits.load(Ordering::SeqCst)
    }

    pub fn fallback_score(&self, text: &str) -> f64 {
        self.fallback.saturating_score(text)
    }

    fn url(&self) -> String {
        match &self.config.api_key {
            Some(k) if !k.is_empty() => {
                let sep = if self.config.endpoint.contains('?') { '&' } else { '?' };
                format!("{}{sep}key={k}", self.config.endpoint)
            }
            _ => self.config.endpoint.clone(),
        }
    }

    /// `Ok(None)` when retries are exhausted.
    fn query(&self, text: &str) -> Result<Option<f64>> {
        let body = request_body(text);
        let url = self.url();
        for attempt in 0..self.config.max_attempts {
            if attempt > 0 {
                let delay = self.config.backoff_base_secs * 2f64.powi(attempt as i32 - 1);
                std::thread::sleep(Duration::from_secs_f64(delay));
            }
            self.limiter.wait();
            self.requests.fetch_add(1, Ordering::SeqCst);
            match self.transport.post(&url, &body) {
                Ok((200..=299, resp)) => return parse_response(&resp).map(Some),
                Ok((429, _)) | Ok((500..=599, _)) | Err(Error::Transport(_)) => continue,
                Ok((status, resp)) => return Err(Error::Client { status, body: resp }),
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    }

    /// Toxicity in [0, 1]. Cached api results are reused in every mode;
    /// cached fallback results only offline.
    pub fn score(&self, text: &str) -> Result<f64> {
        let hash = content_hash(text);
        if let Some(hit) = self.cache.get(&hash) {
            if hit.backend == BACKEND_API || self.config.offline {
                self.cache_hits.fetch_add(1, Ordering::SeqCst);
                return Ok(hit.score);
            }
        }
        let (score, backend) = if self.config.offline {
            (self.fallback_score(text), BACKEND_FALLBACK)
        } else {
            match self.query(text)? {
                Some(s) => (s, BACKEND_API),
                None => (self.fallback_score(text), BACKEND_FALLBACK),
            }
        };
        self.cache.put(
            hash,
            CacheEntry {
                score,
                backend: backend.to_string(),
            },
        )?;
        Ok(score)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToxicityMetrics {
    pub untuned_count: usize,
    pub tuned_count: usize,
    pub pct_nontoxic_untuned: f64,
    pub pct_nontoxic_tuned: f64,
}

/// Counts of replies above each threshold and the non-toxic shares; with no
/// replies both shares are 1.
pub fn toxicity_metrics(scores: &[f64], untuned: f64, tuned: f64) -> ToxicityMetrics {
    let untuned_count = scores.iter().filter(|&&s| s > untuned).count();
    let tuned_count = scores.iter().filter(|&&s| s > tuned).count();
    let share = |c: usize| {
        if scores.is_empty() {
            1.0
        } else {
            1.0 - c as f64 / scores.len() as f64
        }
    };
    ToxicityMetrics {
        untuned_count,
        tuned_count,
        pct_nontoxic_untuned: share(untuned_count),
        pct_nontoxic_tuned: share(tuned_count),
    }
}
