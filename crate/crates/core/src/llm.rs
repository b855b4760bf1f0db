//! Minimal completion client for a locally hosted inference server.
//!
//! The contract is deliberately small: send prompt text, receive completion
//! text. The HTTP implementation speaks the llama.cpp `/completion` shape
//! (`{"prompt", "temperature", "n_predict"}` in, `{"content"}` out) and
//! also accepts OpenAI-style `choices[0].text` replies.

use std::time::Duration;

use serde::{Deserialize, Serialize};

/// Sampling parameters sent with every request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompletionParams {
    pub temperature: f64,
    pub max_tokens: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum TransportError {
    /// The server could not be reached at all.
    #[error("inference endpoint {endpoint} unreachable: {message}")]
    Unreachable { endpoint: String, message: String },
    #[error("inference endpoint returned HTTP {status}: {body}")]
    Status { status: u16, body: String },
    /// A reply arrived but did not have the expected envelope.
    #[error("unexpected reply from inference endpoint: {0}")]
    Protocol(String),
}

pub trait CompletionTransport: Send + Sync {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, TransportError>;
}

/// HTTP transport for a llama.cpp-compatible completion endpoint.
pub struct HttpCompletion {
    endpoint: String,
    agent: ureq::Agent,
}

impl HttpCompletion {
    pub fn new(endpoint: impl Into<String>, timeout: Duration) -> Self {
        let config = ureq::Agent::config_builder()
            .http_status_as_error(false)
            .timeout_global(Some(timeout))
            .build();
        Self {
            endpoint: endpoint.into(),
            agent: ureq::Agent::new_with_config(config),
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }
}

#[derive(Deserialize)]
struct Reply {
    content: Option<String>,
    choices: Option<Vec<Choice>>,
}

#[derive(Deserialize)]
struct Choice {
    text: Option<String>,
}

impl CompletionTransport for HttpCompletion {
    fn complete(&self, prompt: &str, params: &CompletionParams) -> Result<String, TransportError> {
        let body = serde_json::json!({
            "prompt": prompt,
            "temperature": params.temperature,
            "n_predict": params.max_tokens,
            "max_tokens": params.max_tokens,
            "stream": false,
        });
        let mut resp = self
            .agent
            .post(&self.endpoint)
            .header("Content-Type", "application/json")
            .send(body.to_string())
            .map_err(|e| TransportError::Unreachable {
                endpoint: self.endpoint.clone(),
                message: e.to_string(),
            })?;
        let status = resp.status().as_u16();
        let text = resp
            .body_mut()
            .read_to_string()
            .map_err(|e| TransportError::Protocol(e.to_string()))?;
        if !(200..300).contains(&status) {
            return Err(TransportError::Status { status, body: text });
        }
        let reply: Reply =
            serde_json::from_str(&text).map_err(|e| TransportError::Protocol(e.to_string()))?;
        reply
            .content
            .or_else(|| {
                reply
                    .choices
                    .and_then(|c| c.into_iter().next())
                    .and_then(|c| c.text)
            })
            .ok_or_else(|| TransportError::Protocol("no `content` or `choices[0].text`".into()))
    }
}

/// Rough token estimate used to check prompts against the context window:
/// one token per four bytes, rounded up.
pub fn estimate_tokens(text: &str) -> usize {
    text.len().div_ceil(4)
}

/// Pull the first balanced JSON object out of a completion, tolerating
/// code fences and chatter around it.
pub fn extract_json_object(text: &str) -> Option<&str> {
    let start = text.find('{')?;
    let mut depth = 0usize;
    let mut in_string = false;
    let mut escaped = false;
    for (i, c) in text[start..].char_indices() {
        if in_string {
            match c {
                _ if escaped => escaped = false,
                '\\' => escaped = true,
                '"' => in_string = false,
                _ => {}
            }
            continue;
        }
        match c {
            '"' => in_string = true,
            '{' => depth += 1,
            '}' => {
                depth -= 1;
                if depth == 0 {
                    return Some(&text[start..start + i + 1]);
                }
            }
            _ => {}
        }
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Model,
    #[default]
    Rules,
}

impl std::str::FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "model" => Ok(Mode::Model),
            "rules" => Ok(Mode::Rules),
            other => Err(format!(
                "unknown mode `{other}` (expected `rules` or `model`)"
            )),
        }
    }
}

/// Configuration shared by the extraction and classification stages.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StageModelConfig {
    pub mode: Mode,
    pub endpoint: Option<String>,
    pub temperature: f64,
    /// Context window in tokens; the rendered prompt must fit.
    pub max_context: usize,
    /// Prompt template file; the bundled template is used when absent.
    pub prompt_path: Option<std::path::PathBuf>,
    /// Concurrent in-flight requests in model mode.
    pub concurrency: usize,
    pub timeout_secs: u64,
    /// Completion budget per request, in tokens.
    pub max_tokens: usize,
}

impl Default for StageModelConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Rules,
            endpoint: None,
            temperature: 0.1,
            max_context: 8192,
            prompt_path: None,
            concurrency: 4,
            timeout_secs: 120,
            max_tokens: 512,
        }
    }
}

impl StageModelConfig {
    /// Check the invariants that do not depend on a prompt.
    pub fn check(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.temperature) {
            return Err(format!("temperature {} outside [0, 1]", self.temperature));
        }
        if self.concurrency == 0 {
            return Err("concurrency must be at least 1".into());
        }
        if self.mode == Mode::Model && self.endpoint.as_deref().is_none_or(str::is_empty) {
            return Err("model mode needs an endpoint".into());
        }
        Ok(())
    }

    /// Check that a rendered prompt plus the completion budget fits.
    pub fn check_prompt(&self, prompt: &str) -> Result<(), String> {
        let need = estimate_tokens(prompt) + self.max_tokens;
        if need > self.max_context {
            return Err(format!(
                "prompt needs about {need} tokens but max_context is {}",
                self.max_context
            ));
        }
        Ok(())
    }

    pub fn params(&self) -> CompletionParams {
        CompletionParams {
            temperature: self.temperature,
            max_tokens: self.max_tokens,
        }
    }

    /// Load the prompt template, falling back to `bundled`.
    pub fn prompt_template(&self, bundled: &str) -> std::io::Result<String> {
        match &self.prompt_path {
            Some(p) => std::fs::read_to_string(p),
            None => Ok(bundled.to_string()),
        }
    }
}

/// Run `f` over `items` on a dedicated pool of `threads` workers, which
/// bounds the number of requests in flight. Output order matches input.
pub fn bounded_map<T, R, F>(items: &[T], threads: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    use rayon::prelude::*;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .expect("thread pool");
    pool.install(|| items.par_iter().map(&f).collect())
}
