use std::collections::HashMap;
use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};
use std::time::Duration;

use log::{debug, warn};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::ChatRequest;

pub const API_KEY_ENV: &str = "SATD_FORGE_API_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TransportError {
    #[error("HTTP {code}: {body}")]
    Status { code: u16, body: String },
    #[error("network error: {0}")]
    Network(String),
    #[error("malformed response: {0}")]
    Malformed(String),
}

impl TransportError {
    fn is_transient(&self) -> bool {
        match self {
            TransportError::Status { code, .. } => *code == 429 || *code >= 500,
            TransportError::Network(_) => true,
            TransportError::Malformed(_) => false,
        }
    }
}

#[derive(Debug, Error)]
pub enum ClientError {
    #[error("endpoint rejected the credential (HTTP {status})")]
    Auth { status: u16 },
    #[error("gave up after {attempts} attempts: {last}")]
    ExhaustedRetries { attempts: u32, last: TransportError },
    #[error("request failed: {0}")]
    Rejected(TransportError),
    #[error("response cache: {0}")]
    Cache(#[from] io::Error),
}

/// One round trip to a chat-completion endpoint.
pub trait Transport: Send + Sync {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError>;
}

/// The common chat-completion wire format over HTTP(S).
pub struct HttpTransport {
    url: String,
    api_key: Option<String>,
    agent: ureq::Agent,
}

impl HttpTransport {
    /// `endpoint` is a base URL such as `http://host:8000/v1`; the
    /// `/chat/completions` path is appended unless already present.
    pub fn new(endpoint: &str, api_key: Option<String>, timeout: Duration) -> Self {
        let base = endpoint.trim_end_matches('/');
        let url = if base.ends_with("/chat/completions") { base.to_string() } else { format!("{base}/chat/completions") };
        let agent = ureq::Agent::config_builder().http_status_as_error(false).timeout_global(Some(timeout)).build().into();
        HttpTransport { url, api_key, agent }
    }

    /// Reads the credential from the environment.
    pub fn from_env(endpoint: &str, timeout: Duration) -> Self {
        Self::new(endpoint, std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty()), timeout)
    }

    pub fn url(&self) -> &str {
        &self.url
    }
}

impl Transport for HttpTransport {
    fn send(&self, request: &ChatRequest) -> Result<String, TransportError> {
        let body = json!({
            "model": request.model,
            "messages": [{"role": "user", "content": request.prompt}],
            "temperature": request.temperature,
            "max_tokens": request.max_output_tokens,
        });
        let mut req = self.agent.post(&self.url).header("Content-Type", "application/json");
        if let Some(key) = &self.api_key {
            req = req.header("Authorization", format!("Bearer {key}"));
        }
        let mut resp = req.send_json(&body).map_err(|e| TransportError::Network(e.to_string()))?;
        let code = resp.status().as_u16();
        let text = resp.body_mut().read_to_string().map_err(|e| TransportError::Network(e.to_string()))?;
        if !(200..300).contains(&code) {
            return Err(TransportError::Status { code, body: text });
        }
        let value: Value = serde_json::from_str(&text).map_err(|e| TransportError::Malformed(e.to_string()))?;
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| TransportError::Malformed("no choices[0].message.content".into()))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetryPolicy {
    /// Total attempts, including the first.
    pub limit: u32,
    pub base_delay: Duration,
    pub max_delay: Duration,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        RetryPolicy { limit: 5, base_delay: Duration::from_millis(500), max_delay: Duration::from_secs(30) }
    }
}

impl RetryPolicy {
    fn delay(&self, attempt: u32) -> Duration {
        self.base_delay.saturating_mul(1u32 << attempt.min(16)).min(self.max_delay)
    }
}

/// Hex SHA-256 over the fields that determine a response.
pub fn cache_key(request: &ChatRequest) -> String {
    let material =
        serde_json::to_vec(&(&request.model, &request.prompt, request.temperature, request.max_output_tokens))
            .expect("plain data serializes");
    hex::encode(Sha256::digest(&material))
}

#[derive(Serialize, Deserialize)]
struct CacheEntry {
    model: String,
    response: String,
}

/// Responses on disk, one file per request key.
#[derive(Debug, Clone)]
pub struct DiskCache {
    dir: PathBuf,
}

impl DiskCache {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        DiskCache { dir: dir.into() }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, key: &str) -> PathBuf {
        self.dir.join(&key[..2]).join(format!("{key}.json"))
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let text = fs::read_to_string(self.path(key)).ok()?;
        match serde_json::from_str::<CacheEntry>(&text) {
            Ok(entry) => Some(entry.response),
            Err(e) => {
                warn!("ignoring corrupt cache entry {key}: {e}");
                None
            }
        }
    }

    pub fn put(&self, key: &str, model: &str, response: &str) -> io::Result<()> {
        let path = self.path(key);
        let dir = path.parent().expect("cache paths have a parent");
        fs::create_dir_all(dir)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
        serde_json::to_writer(&mut tmp, &CacheEntry { model: model.into(), response: response.into() })?;
        tmp.flush()?;
        tmp.persist(&path).map_err(|e| e.error)?;
        Ok(())
    }
}

/// Retrying, caching client over any [`Transport`].
pub struct ChatClient {
    transport: Box<dyn Transport>,
    cache: Option<DiskCache>,
    pub retry: RetryPolicy,
    pub max_concurrency: usize,
    network_calls: AtomicUsize,
    key_locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl ChatClient {
    pub fn new(transport: impl Transport + 'static) -> Self {
        ChatClient {
            transport: Box::new(transport),
            cache: None,
            retry: RetryPolicy::default(),
            max_concurrency: 4,
            network_calls: AtomicUsize::new(0),
            key_locks: Mutex::new(HashMap::new()),
        }
    }

    pub fn with_cache(mut self, cache: DiskCache) -> Self {
        self.cache = Some(cache);
        self
    }

    pub fn with_retry(mut self, retry: RetryPolicy) -> Self {
        self.retry = retry;
        self
    }

    pub fn with_max_concurrency(mut self, n: usize) -> Self {
        self.max_concurrency = n.max(1);
        self
    }

    /// Round trips made so far, retries included.
    pub fn network_calls(&self) -> usize {
        self.network_calls.load(Ordering::SeqCst)
    }

    fn lock_for(&self, key: &str) -> Arc<Mutex<()>> {
        let mut locks = self.key_locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(key.to_string()).or_default().clone()
    }

    /// The model's reply, from the cache when possible. Concurrent calls for
    /// the same request share one round trip.
    pub fn complete(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let Some(cache) = &self.cache else {
            return self.send_with_retry(request);
        };
        let key = cache_key(request);
        let lock = self.lock_for(&key);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        if let Some(hit) = cache.get(&key) {
            debug!("cache hit {key}");
            return Ok(hit);
        }
        let text = self.send_with_retry(request)?;
        cache.put(&key, &request.model, &text)?;
        Ok(text)
    }

    fn send_with_retry(&self, request: &ChatRequest) -> Result<String, ClientError> {
        let limit = self.retry.limit.max(1);
        let mut attempt = 0;
        loop {
            self.network_calls.fetch_add(1, Ordering::SeqCst);
            let err = match self.transport.send(request) {
                Ok(text) => return Ok(text),
                Err(e) => e,
            };
            if let TransportError::Status { code: code @ (401 | 403), .. } = err {
                return Err(ClientError::Auth { status: code });
            }
            if !err.is_transient() {
                return Err(ClientError::Rejected(err));
            }
            attempt += 1;
            if attempt >= limit {
                return Err(ClientError::ExhaustedRetries { attempts: attempt, last: err });
            }
            let delay = self.retry.delay(attempt - 1);
            warn!("transient failure ({err}); retrying in {delay:?}");
            std::thread::sleep(delay);
        }
    }

    /// Completes all requests with at most `max_concurrency` in flight.
    /// Results are in input order.
    pub fn complete_many(&self, requests: &[ChatRequest]) -> Vec<Result<String, ClientError>> {
        let slots: Vec<Mutex<Option<Result<String, ClientError>>>> = requests.iter().map(|_| Mutex::new(None)).collect();
        let next = AtomicUsize::new(0);
        let workers = self.max_concurrency.clamp(1, requests.len().max(1));
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let i = next.fetch_add(1, Ordering::SeqCst);
                    let Some(req) = requests.get(i) else { break };
                    let result = self.complete(req);
                    *slots[i].lock().unwrap_or_else(|e| e.into_inner()) = Some(result);
                });
            }
        });
        slots
            .into_iter()
            .map(|m| m.into_inner().unwrap_or_else(|e| e.into_inner()).expect("every slot is filled"))
            .collect()
    }
}
