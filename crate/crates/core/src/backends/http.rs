//! Completion-style HTTP generation client.
//!
//! Sends `{model, prompt, temperature, max_tokens, seed?}` and reads the
//! generated text and completion-token usage from configurable dotted paths
//! into the response JSON (`choices.0.text`, `usage.completion_tokens` by
//! default, the OpenAI-compatible layout).

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{DiscError, Result};
use crate::policy::{Generation, GenerationPolicy, PolicyParams};
use crate::seq::TextSeq;

/// Environment variable holding the bearer token for the endpoint.
pub const API_KEY_ENV: &str = "DISC_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct HttpConfig {
    pub endpoint_url: String,
    pub model: String,
    pub timeout_ms: u64,
    pub max_retries: u32,
    /// First retry delay; doubles on every further retry.
    pub backoff_ms: u64,
    pub max_in_flight: usize,
    pub text_path: String,
    /// `None` falls back to counting units of the returned text.
    pub tokens_path: Option<String>,
}

impl Default for HttpConfig {
    fn default() -> Self {
        HttpConfig {
            endpoint_url: "http://127.0.0.1:8000/v1/completions".into(),
            model: "default".into(),
            timeout_ms: 60_000,
            max_retries: 3,
            backoff_ms: 200,
            max_in_flight: 8,
            text_path: "choices.0.text".into(),
            tokens_path: Some("usage.completion_tokens".into()),
        }
    }
}

/// Looks up `a.0.b` style paths; numeric segments index arrays.
pub fn json_path<'a>(value: &'a Value, path: &str) -> Option<&'a Value> {
    path.split('.').filter(|s| !s.is_empty()).try_fold(value, |v, seg| match v {
        Value::Array(items) => seg.parse::<usize>().ok().and_then(|i| items.get(i)),
        Value::Object(map) => map.get(seg),
        _ => None,
    })
}

enum Failure {
    Retryable(String),
    Timeout(String),
    Fatal(DiscError),
}

pub struct HttpGenerationBackend {
    cfg: HttpConfig,
    client: reqwest::blocking::Client,
    api_key: Option<String>,
    retries: AtomicU64,
    in_flight: Mutex<usize>,
    slot_free: Condvar,
}

impl std::fmt::Debug for HttpGenerationBackend {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HttpGenerationBackend")
            .field("cfg", &self.cfg)
            .field("retries", &self.retries.load(Ordering::Relaxed))
            .finish()
    }
}

impl HttpGenerationBackend {
    pub fn new(cfg: HttpConfig) -> Result<Self> {
        if cfg.max_in_flight == 0 {
            return Err(DiscError::Config("max_in_flight must be >= 1".into()));
        }
        reqwest::Url::parse(&cfg.endpoint_url)
            .map_err(|e| DiscError::Config(format!("endpoint_url {:?}: {e}", cfg.endpoint_url)))?;
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_millis(cfg.timeout_ms))
            .build()
            .map_err(|e| DiscError::Backend(e.to_string()))?;
        let api_key = std::env::var(API_KEY_ENV).ok().filter(|k| !k.is_empty());
        Ok(HttpGenerationBackend {
            cfg,
            client,
            api_key,
            retries: AtomicU64::new(0),
            in_flight: Mutex::new(0),
            slot_free: Condvar::new(),
        })
    }

    pub fn config(&self) -> &HttpConfig {
        &self.cfg
    }

    /// Retries issued since construction.
    pub fn retry_count(&self) -> u64 {
        self.retries.load(Ordering::Relaxed)
    }

    fn acquire(&self) {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        while *n >= self.cfg.max_in_flight {
            n = self.slot_free.wait(n).unwrap_or_else(|e| e.into_inner());
        }
        *n += 1;
    }

    fn release(&self) {
        let mut n = self.in_flight.lock().unwrap_or_else(|e| e.into_inner());
        *n -= 1;
        self.slot_free.notify_one();
    }

    fn attempt(&self, body: &Value) -> std::result::Result<Value, Failure> {
        let mut req = self.client.post(&self.cfg.endpoint_url).json(body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req.send().map_err(|e| {
            if e.is_timeout() {
                Failure::Timeout(e.to_string())
            } else {
                Failure::Retryable(e.to_string())
            }
        })?;
        let status = resp.status();
        let text = resp.text().map_err(|e| {
            if e.is_timeout() {
                Failure::Timeout(e.to_string())
            } else {
                Failure::Retryable(e.to_string())
            }
        })?;
        log::debug!("http {} <- {status} {text}", self.cfg.endpoint_url);
        if status.is_server_error() || status.as_u16() == 429 {
            return Err(Failure::Retryable(format!("HTTP {status}")));
        }
        if !status.is_success() {
            return Err(Failure::Fatal(DiscError::Backend(format!("HTTP {status}: {text}"))));
        }
        serde_json::from_str(&text)
            .map_err(|e| Failure::Fatal(DiscError::Protocol(format!("response is not JSON: {e}"))))
    }

    fn request(&self, body: &Value) -> Result<Value> {
        log::debug!("http {} -> {body}", self.cfg.endpoint_url);
        let attempts = self.cfg.max_retries + 1;
        let mut last = Failure::Retryable(String::new());
        for attempt in 0..attempts {
            if attempt > 0 {
                self.retries.fetch_add(1, Ordering::Relaxed);
                let delay = self.cfg.backoff_ms.saturating_mul(1 << (attempt - 1).min(16));
                log::info!("retry {attempt}/{} after {delay} ms", self.cfg.max_retries);
                std::thread::sleep(Duration::from_millis(delay));
            }
            match self.attempt(body) {
                Ok(v) => return Ok(v),
                Err(Failure::Fatal(e)) => return Err(e),
                Err(f) => last = f,
            }
        }
        Err(match last {
            Failure::Timeout(msg) => {
                log::warn!("request timed out: {msg}");
                DiscError::Timeout(Duration::from_millis(self.cfg.timeout_ms))
            }
            Failure::Retryable(msg) => DiscError::RetriesExhausted { attempts: attempts as usize, last: msg },
            Failure::Fatal(e) => e,
        })
    }
}

impl GenerationPolicy for HttpGenerationBackend {
    fn sample(&self, prefix: &TextSeq, params: &PolicyParams) -> Result<Generation> {
        let mut body = json!({
            "model": self.cfg.model,
            "prompt": prefix.as_str(),
            "temperature": params.temperature,
            "max_tokens": params.max_units,
        });
        if let Some(seed) = params.seed {
            body["seed"] = json!(seed);
        }
        let start = Instant::now();
        self.acquire();
        let resp = self.request(&body);
        self.release();
        let resp = resp?;
        let gen_time = start.elapsed();
        let text = json_path(&resp, &self.cfg.text_path)
            .and_then(Value::as_str)
            .ok_or_else(|| DiscError::Protocol(format!("no string at {:?} in response", self.cfg.text_path)))?;
        let suffix = TextSeq::new(text, prefix.scheme);
        let tokens = match &self.cfg.tokens_path {
            Some(path) => json_path(&resp, path)
                .and_then(Value::as_u64)
                .ok_or_else(|| DiscError::Protocol(format!("no token count at {path:?} in response")))?
                as usize,
            None => suffix.unit_count(),
        };
        Ok(Generation { suffix, tokens, gen_time })
    }
}
