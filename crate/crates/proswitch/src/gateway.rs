//! Provider-agnostic chat-completion client.
//!
//! One [`Gateway`] wraps a [`Provider`] with exponential-backoff retries, an
//! optional content-addressed response cache, and a bounded in-flight limit.
//! Requests carry user-role content only; no system prompt is ever injected.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::{Duration, Instant};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One completion request. The cache key covers every field.
#[derive(Debug, Clone, PartialEq)]
pub struct GatewayRequest {
    pub prompt: String,
    pub temperature: f64,
    pub top_p: f64,
    pub max_tokens: u32,
    pub model_name: String,
}

impl GatewayRequest {
    pub fn new(prompt: &str) -> Self {
        GatewayRequest {
            prompt: prompt.to_string(),
            temperature: 0.0,
            top_p: 1.0,
            max_tokens: 1024,
            model_name: "default".to_string(),
        }
    }

    pub fn with_model(mut self, model: &str) -> Self {
        self.model_name = model.to_string();
        self
    }

    pub fn with_sampling(mut self, temperature: f64, top_p: f64) -> Self {
        self.temperature = temperature;
        self.top_p = top_p;
        self
    }

    /// Content hash over all fields; length-prefixed so field boundaries
    /// cannot collide.
    pub fn cache_key(&self) -> String {
        let mut hasher = Sha256::new();
        for text in [&self.prompt, &self.model_name] {
            hasher.update((text.len() as u64).to_le_bytes());
            hasher.update(text.as_bytes());
        }
        hasher.update(self.temperature.to_bits().to_le_bytes());
        hasher.update(self.top_p.to_bits().to_le_bytes());
        hasher.update(self.max_tokens.to_le_bytes());
        hasher
            .finalize()
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

/// One completion result.
#[derive(Debug, Clone, PartialEq)]
pub struct GatewayResponse {
    pub text: String,
    pub from_cache: bool,
    pub latency_ms: u64,
    /// Provider attempt that succeeded (1-based); 0 for cache hits.
    pub attempt: u32,
}

/// Backend that actually produces a completion. Transport errors are
/// retried by the gateway; any other error aborts immediately.
pub trait Provider: Send + Sync {
    fn complete(&self, request: &GatewayRequest) -> Result<String>;
}

/// Gateway tuning knobs.
#[derive(Debug, Clone)]
pub struct GatewayConfig {
    /// Response cache directory; None disables caching (evaluation runs
    /// want fresh samples, data-prep wants idempotent re-runs).
    pub cache_dir: Option<PathBuf>,
    pub max_in_flight: usize,
    pub retry_base: Duration,
    pub max_attempts: u32,
}

impl Default for GatewayConfig {
    fn default() -> Self {
        GatewayConfig {
            cache_dir: None,
            max_in_flight: 4,
            retry_base: Duration::from_secs(1),
            max_attempts: 3,
        }
    }
}

/// Counting semaphore; keeps concurrent provider calls within the limit.
struct InFlightLimit {
    available: Mutex<usize>,
    released: Condvar,
}

impl InFlightLimit {
    fn new(limit: usize) -> Self {
        InFlightLimit {
            available: Mutex::new(limit.max(1)),
            released: Condvar::new(),
        }
    }

    fn acquire(&self) -> InFlightGuard<'_> {
        let mut available = self.available.lock().unwrap();
        while *available == 0 {
            available = self.released.wait(available).unwrap();
        }
        *available -= 1;
        InFlightGuard { limit: self }
    }
}

struct InFlightGuard<'a> {
    limit: &'a InFlightLimit,
}

impl Drop for InFlightGuard<'_> {
    fn drop(&mut self) {
        *self.limit.available.lock().unwrap() += 1;
        self.limit.released.notify_one();
    }
}

pub struct Gateway {
    provider: Box<dyn Provider>,
    config: GatewayConfig,
    in_flight: InFlightLimit,
}

static TMP_COUNTER: AtomicU64 = AtomicU64::new(0);

impl Gateway {
    pub fn new(provider: Box<dyn Provider>, config: GatewayConfig) -> Self {
        let in_flight = InFlightLimit::new(config.max_in_flight);
        Gateway {
            provider,
            config,
            in_flight,
        }
    }

    /// Gateway over a mock script file (JSON map of prompt substring to
    /// response).
    pub fn mock_from_script(script: &Path, config: GatewayConfig) -> Result<Self> {
        Ok(Gateway::new(
            Box::new(MockProvider::from_script_file(script)?),
            config,
        ))
    }

    /// Gateway over the HTTP provider configured from PROSWITCH_API_URL and
    /// PROSWITCH_API_KEY.
    pub fn remote_from_env(config: GatewayConfig) -> Result<Self> {
        Ok(Gateway::new(Box::new(RemoteProvider::from_env()?), config))
    }

    /// Resolve a request: cache hit, or provider call with exponential
    /// backoff (base delay doubling per attempt) on transport errors.
    pub fn complete(&self, request: &GatewayRequest) -> Result<GatewayResponse> {
        let started = Instant::now();
        let key = request.cache_key();
        if let Some(dir) = &self.config.cache_dir {
            if let Ok(text) = std::fs::read_to_string(dir.join(&key)) {
                return Ok(GatewayResponse {
                    text,
                    from_cache: true,
                    latency_ms: started.elapsed().as_millis() as u64,
                    attempt: 0,
                });
            }
        }

        let _guard = self.in_flight.acquire();
        let mut last_err = None;
        for attempt in 1..=self.config.max_attempts {
            match self.provider.complete(request) {
                Ok(text) => {
                    if let Some(dir) = &self.config.cache_dir {
                        write_cache_entry(dir, &key, &text)?;
                    }
                    return Ok(GatewayResponse {
                        text,
                        from_cache: false,
                        latency_ms: started.elapsed().as_millis() as u64,
                        attempt,
                    });
                }
                Err(e @ Error::Transport(_)) => {
                    last_err = Some(e);
                    if attempt < self.config.max_attempts {
                        std::thread::sleep(self.config.retry_base * 2u32.pow(attempt - 1));
                    }
                }
                Err(e) => return Err(e),
            }
        }
        Err(last_err.expect("at least one attempt"))
    }
}

fn write_cache_entry(dir: &Path, key: &str, text: &str) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let tmp = dir.join(format!(
        "{key}.tmp.{}.{}",
        std::process::id(),
        TMP_COUNTER.fetch_add(1, Ordering::Relaxed)
    ));
    std::fs::write(&tmp, text)?;
    std::fs::rename(&tmp, dir.join(key))?;
    Ok(())
}

/// Deterministic scripted provider. The longest script key contained in the
/// prompt wins; equal lengths break toward the lexicographically smallest.
pub struct MockProvider {
    /// Sorted by (length desc, key asc) so the first substring hit wins.
    entries: Vec<(String, String)>,
}

impl MockProvider {
    pub fn from_map(map: BTreeMap<String, String>) -> Self {
        let mut entries: Vec<(String, String)> = map.into_iter().collect();
        entries.sort_by(|a, b| b.0.len().cmp(&a.0.len()).then(a.0.cmp(&b.0)));
        MockProvider { entries }
    }

    pub fn from_script_file(path: &Path) -> Result<Self> {
        let content = std::fs::read_to_string(path)?;
        let map: BTreeMap<String, String> = serde_json::from_str(&content)?;
        Ok(MockProvider::from_map(map))
    }
}

impl Provider for MockProvider {
    fn complete(&self, request: &GatewayRequest) -> Result<String> {
        for (key, response) in &self.entries {
            if request.prompt.contains(key.as_str()) {
                return Ok(response.clone());
            }
        }
        let head: String = request.prompt.chars().take(80).collect();
        Err(Error::Input(format!(
            "mock script has no entry matching prompt starting: {head:?}"
        )))
    }
}

/// HTTP chat-completion provider. Sends a single user-role message and
/// reads the first choice's content.
pub struct RemoteProvider {
    url: String,
    api_key: Option<String>,
    client: reqwest::blocking::Client,
}

impl RemoteProvider {
    pub fn new(url: String, api_key: Option<String>) -> Self {
        RemoteProvider {
            url,
            api_key,
            client: reqwest::blocking::Client::new(),
        }
    }

    pub fn from_env() -> Result<Self> {
        let url = std::env::var("PROSWITCH_API_URL")
            .map_err(|_| Error::Input("PROSWITCH_API_URL is not set".into()))?;
        let api_key = std::env::var("PROSWITCH_API_KEY").ok();
        Ok(RemoteProvider::new(url, api_key))
    }
}

#[derive(serde::Serialize)]
struct WireMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(serde::Serialize)]
struct WireRequest<'a> {
    model: &'a str,
    messages: [WireMessage<'a>; 1],
    temperature: f64,
    top_p: f64,
    max_tokens: u32,
}

#[derive(serde::Deserialize)]
struct WireResponse {
    choices: Vec<WireChoice>,
}

#[derive(serde::Deserialize)]
struct WireChoice {
    message: WireContent,
}

#[derive(serde::Deserialize)]
struct WireContent {
    content: String,
}

impl Provider for RemoteProvider {
    fn complete(&self, request: &GatewayRequest) -> Result<String> {
        let body = WireRequest {
            model: &request.model_name,
            messages: [WireMessage {
                role: "user",
                content: &request.prompt,
            }],
            temperature: request.temperature,
            top_p: request.top_p,
            max_tokens: request.max_tokens,
        };
        let mut req = self.client.post(&self.url).json(&body);
        if let Some(key) = &self.api_key {
            req = req.bearer_auth(key);
        }
        let resp = req
            .send()
            .map_err(|e| Error::Transport(format!("completion request failed: {e}")))?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Error::Transport(format!(
                "completion endpoint returned {status}"
            )));
        }
        let parsed: WireResponse = resp
            .json()
            .map_err(|e| Error::Transport(format!("bad completion response: {e}")))?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::Transport("completion response had no choices".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::atomic::AtomicUsize;

    fn fast_config() -> GatewayConfig {
        GatewayConfig {
            retry_base: Duration::from_millis(1),
            ..GatewayConfig::default()
        }
    }

    fn mock(entries: &[(&str, &str)]) -> MockProvider {
        MockProvider::from_map(
            entries
                .iter()
                .map(|(k, v)| (k.to_string(), v.to_string()))
                .collect(),
        )
    }

    #[test]
    fn mock_longest_key_wins_then_lexicographic() {
        let provider = mock(&[
            ("steps", "short"),
            ("Total steps", "long"),
            ("otal steps:", "other-long-b"),
            ("Total steps:", "exact"),
        ]);
        let req = GatewayRequest::new("give me Total steps: now");
        // "Total steps:" and "otal steps:" both length 12; "Total..." < "otal..."
        assert_eq!(provider.complete(&req).unwrap(), "exact");
    }

    #[test]
    fn mock_miss_is_fatal_not_retried() {
        let gw = Gateway::new(Box::new(mock(&[("a", "b")])), fast_config());
        let err = gw.complete(&GatewayRequest::new("zzz")).unwrap_err();
        assert!(matches!(err, Error::Input(_)));
    }

    struct FlakyProvider {
        calls: AtomicUsize,
        fail_first: usize,
    }

    impl Provider for FlakyProvider {
        fn complete(&self, _request: &GatewayRequest) -> Result<String> {
            let n = self.calls.fetch_add(1, Ordering::SeqCst);
            if n < self.fail_first {
                Err(Error::Transport("injected".into()))
            } else {
                Ok("ok".into())
            }
        }
    }

    #[test]
    fn two_failures_then_success_reports_attempt_three() {
        let gw = Gateway::new(
            Box::new(FlakyProvider {
                calls: AtomicUsize::new(0),
                fail_first: 2,
            }),
            fast_config(),
        );
        let resp = gw.complete(&GatewayRequest::new("x")).unwrap();
        assert_eq!(resp.attempt, 3);
        assert_eq!(resp.text, "ok");
        assert!(!resp.from_cache);
    }

    #[test]
    fn retries_exhaust_into_transport_error() {
        let gw = Gateway::new(
            Box::new(FlakyProvider {
                calls: AtomicUsize::new(0),
                fail_first: 99,
            }),
            fast_config(),
        );
        let err = gw.complete(&GatewayRequest::new("x")).unwrap_err();
        assert!(matches!(err, Error::Transport(_)));
    }

    #[test]
    fn cache_round_trip_and_restart_survival() {
        let dir = tempfile::tempdir().unwrap();
        let config = GatewayConfig {
            cache_dir: Some(dir.path().to_path_buf()),
            ..fast_config()
        };
        let gw = Gateway::new(Box::new(mock(&[("hello", "world")])), config.clone());
        let req = GatewayRequest::new("hello there");
        let first = gw.complete(&req).unwrap();
        assert!(!first.from_cache);
        let second = gw.complete(&req).unwrap();
        assert!(second.from_cache);
        assert_eq!(second.text, first.text);
        assert_eq!(second.attempt, 0);

        // New gateway, same cache dir, provider that would fail: still hits.
        let gw2 = Gateway::new(
            Box::new(FlakyProvider {
                calls: AtomicUsize::new(0),
                fail_first: 99,
            }),
            config,
        );
        let third = gw2.complete(&req).unwrap();
        assert!(third.from_cache);
        assert_eq!(third.text, "world");
    }

    #[test]
    fn cache_key_separates_fields() {
        let a = GatewayRequest::new("ab").with_model("c");
        let b = GatewayRequest::new("a").with_model("bc");
        assert_ne!(a.cache_key(), b.cache_key());
        let cold = GatewayRequest::new("x");
        let warm = GatewayRequest::new("x").with_sampling(1.0, 0.9);
        assert_ne!(cold.cache_key(), warm.cache_key());
    }

    struct SlowCountingProvider {
        current: std::sync::Arc<AtomicUsize>,
        peak: std::sync::Arc<AtomicUsize>,
    }

    impl Provider for SlowCountingProvider {
        fn complete(&self, _request: &GatewayRequest) -> Result<String> {
            let now = self.current.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            std::thread::sleep(Duration::from_millis(5));
            self.current.fetch_sub(1, Ordering::SeqCst);
            Ok("done".into())
        }
    }

    #[test]
    fn in_flight_never_exceeds_limit() {
        let peak = std::sync::Arc::new(AtomicUsize::new(0));
        let config = GatewayConfig {
            max_in_flight: 3,
            ..fast_config()
        };
        let gw = std::sync::Arc::new(Gateway::new(
            Box::new(SlowCountingProvider {
                current: std::sync::Arc::new(AtomicUsize::new(0)),
                peak: peak.clone(),
            }),
            config,
        ));
        let handles: Vec<_> = (0..24)
            .map(|i| {
                let gw = gw.clone();
                std::thread::spawn(move || {
                    gw.complete(&GatewayRequest::new(&format!("req {i}"))).unwrap();
                })
            })
            .collect();
        for h in handles {
            h.join().unwrap();
        }
        let observed = peak.load(Ordering::SeqCst);
        assert!(observed <= 3, "peak in-flight was {observed}");
    }
}
