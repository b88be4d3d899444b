//! Language-model backends: replayed transcripts, HTTP chat completions and
//! a recorder that captures any backend's traffic.

use std::cell::RefCell;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("no recorded completion for this prompt (system starts {0:?})")]
    ReplayMiss(String),
    #[error("transport error: {0}")]
    Transport(String),
    #[error("malformed response: {0}")]
    Response(String),
    #[error("prompt not recognised by the oracle")]
    UnknownPrompt,
    #[error("missing environment variable {0}")]
    MissingKey(String),
    #[error("cannot read transcript {path}: {reason}")]
    Transcript { path: String, reason: String },
}

/// Stateless chat completion: one system and one user message in, text out.
pub trait LlmBackend {
    fn complete(&self, system: &str, user: &str) -> Result<String, BackendError>;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exchange {
    pub system: String,
    pub user: String,
    pub completion: String,
}

/// Answers from a recorded transcript, matching prompts byte for byte.
#[derive(Debug, Clone, Default)]
pub struct ReplayBackend {
    exchanges: Vec<Exchange>,
}

impl ReplayBackend {
    pub fn new(exchanges: Vec<Exchange>) -> Self {
        ReplayBackend { exchanges }
    }

    pub fn from_file(path: &Path) -> Result<Self, BackendError> {
        let err = |reason: String| BackendError::Transcript {
            path: path.display().to_string(),
            reason,
        };
        let text = fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
        let exchanges = serde_json::from_str(&text).map_err(|e| err(e.to_string()))?;
        Ok(ReplayBackend { exchanges })
    }
}

impl LlmBackend for ReplayBackend {
    fn complete(&self, system: &str, user: &str) -> Result<String, BackendError> {
        self.exchanges
            .iter()
            .find(|e| e.system == system && e.user == user)
            .map(|e| e.completion.clone())
            .ok_or_else(|| BackendError::ReplayMiss(system.chars().take(40).collect()))
    }
}

/// Wraps a backend and keeps every exchange for later replay.
pub struct RecordingBackend<'a> {
    inner: &'a dyn LlmBackend,
    log: RefCell<Vec<Exchange>>,
}

impl<'a> RecordingBackend<'a> {
    pub fn new(inner: &'a dyn LlmBackend) -> Self {
        RecordingBackend {
            inner,
            log: RefCell::new(Vec::new()),
        }
    }

    pub fn exchanges(&self) -> Vec<Exchange> {
        self.log.borrow().clone()
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        let json = serde_json::to_string_pretty(&*self.log.borrow()).expect("exchanges serialize");
        fs::write(path, json + "\n")
    }
}

impl LlmBackend for RecordingBackend<'_> {
    fn complete(&self, system: &str, user: &str) -> Result<String, BackendError> {
        let completion = self.inner.complete(system, user)?;
        let mut log = self.log.borrow_mut();
        if !log.iter().any(|e| e.system == system && e.user == user) {
            log.push(Exchange {
                system: system.to_string(),
                user: user.to_string(),
                completion: completion.clone(),
            });
        }
        Ok(completion)
    }
}

/// Environment variable holding the API key for [`HttpBackend`].
pub const API_KEY_VAR: &str = "REFLECT_API_KEY";
/// Environment variable overriding the model name.
pub const MODEL_VAR: &str = "REFLECT_MODEL";

/// OpenAI-style chat-completions endpoint at temperature 0.
pub struct HttpBackend {
    url: String,
    model: String,
    api_key: String,
    client: reqwest::blocking::Client,
}

impl HttpBackend {
    pub fn new(url: &str, model: &str, api_key: &str) -> Result<Self, BackendError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(120))
            .build()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        Ok(HttpBackend {
            url: url.to_string(),
            model: model.to_string(),
            api_key: api_key.to_string(),
            client,
        })
    }

    /// Reads the key from `REFLECT_API_KEY` and the model from `REFLECT_MODEL`
    /// (default "gpt-4").
    pub fn from_env(url: &str) -> Result<Self, BackendError> {
        let key = std::env::var(API_KEY_VAR).map_err(|_| BackendError::MissingKey(API_KEY_VAR.into()))?;
        let model = std::env::var(MODEL_VAR).unwrap_or_else(|_| "gpt-4".to_string());
        HttpBackend::new(url, &model, &key)
    }

    fn send(&self, body: &serde_json::Value) -> Result<serde_json::Value, BackendError> {
        let response = self
            .client
            .post(&self.url)
            .bearer_auth(&self.api_key)
            .json(body)
            .send()
            .map_err(|e| BackendError::Transport(e.to_string()))?;
        let status = response.status();
        let value: serde_json::Value = response
            .json()
            .map_err(|e| BackendError::Response(e.to_string()))?;
        if !status.is_success() {
            return Err(BackendError::Response(format!("HTTP {status}: {value}")));
        }
        Ok(value)
    }
}

impl LlmBackend for HttpBackend {
    fn complete(&self, system: &str, user: &str) -> Result<String, BackendError> {
        let body = serde_json::json!({
            "model": self.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": system},
                {"role": "user", "content": user},
            ],
        });
        // One retry on transport errors only.
        let value = match self.send(&body) {
            Err(BackendError::Transport(_)) => self.send(&body)?,
            other => other?,
        };
        value["choices"][0]["message"]["content"]
            .as_str()
            .map(|s| s.trim().to_string())
            .ok_or_else(|| BackendError::Response(value.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Echo;

    impl LlmBackend for Echo {
        fn complete(&self, system: &str, user: &str) -> Result<String, BackendError> {
            Ok(format!("{system}|{user}"))
        }
    }

    #[test]
    fn record_then_replay() {
        let rec = RecordingBackend::new(&Echo);
        assert_eq!(rec.complete("s", "u").unwrap(), "s|u");
        rec.complete("s", "u").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.json");
        rec.save(&path).unwrap();
        let replay = ReplayBackend::from_file(&path).unwrap();
        assert_eq!(replay.complete("s", "u").unwrap(), "s|u");
        assert!(matches!(replay.complete("s", "other"), Err(BackendError::ReplayMiss(_))));
        assert_eq!(rec.exchanges().len(), 1);
    }

    #[test]
    fn http_backend_reports_transport_errors() {
        let b = HttpBackend::new("http://127.0.0.1:9/v1/chat/completions", "m", "k").unwrap();
        assert!(matches!(b.complete("s", "u"), Err(BackendError::Transport(_))));
    }
}
