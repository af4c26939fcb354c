//! Client for a text-completion endpoint and the two prompt templates.
//!
//! Wire contract: `POST {base_url}` with JSON `{"prompt", "max_tokens"}`
//! (plus `"model"` when configured), answered by JSON `{"text"}`.

use std::fs;
use std::path::PathBuf;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const ENV_URL: &str = "ALIGN_LLM_URL";
pub const ENV_KEY: &str = "ALIGN_LLM_KEY";

pub const SUMMARIZE_TEMPLATE: &str = include_str!("../../prompts/summarize.txt");
pub const PREDICT_TEMPLATE: &str = include_str!("../../prompts/predict.txt");

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PromptTemplatePaths {
    pub summarize: Option<PathBuf>,
    pub predict: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmEndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub timeout_s: f64,
    pub max_retries: u32,
    pub max_tokens: u32,
    /// Upper bound on concurrent summarisation requests.
    pub max_in_flight: usize,
    pub prompt_template_paths: PromptTemplatePaths,
    /// Bearer token; never serialised.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for LlmEndpointConfig {
    fn default() -> Self {
        Self {
            base_url: String::new(),
            model_name: String::new(),
            timeout_s: 30.0,
            max_retries: 2,
            max_tokens: 512,
            max_in_flight: 4,
            prompt_template_paths: PromptTemplatePaths::default(),
            api_key: None,
        }
    }
}

impl LlmEndpointConfig {
    /// Reads `ALIGN_LLM_URL` / `ALIGN_LLM_KEY`; `None` without a URL.
    pub fn from_env() -> Option<Self> {
        let base_url = std::env::var(ENV_URL).ok().filter(|s| !s.is_empty())?;
        Some(Self {
            base_url,
            api_key: std::env::var(ENV_KEY).ok().filter(|s| !s.is_empty()),
            ..Self::default()
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.timeout_s > 0.0) {
            return Err(Error::Config("endpoint timeout_s must be positive".into()));
        }
        if self.base_url.is_empty() {
            return Err(Error::Config("endpoint base_url is empty".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PromptTemplates {
    pub summarize: String,
    pub predict: String,
}

impl Default for PromptTemplates {
    fn default() -> Self {
        Self {
            summarize: SUMMARIZE_TEMPLATE.to_owned(),
            predict: PREDICT_TEMPLATE.to_owned(),
        }
    }
}

impl PromptTemplates {
    pub fn load(paths: &PromptTemplatePaths) -> Result<Self> {
        let read = |p: &Option<PathBuf>, fallback: &str| -> Result<String> {
            match p {
                Some(path) => fs::read_to_string(path).map_err(|e| Error::io(path, e)),
                None => Ok(fallback.to_owned()),
            }
        };
        Ok(Self {
            summarize: read(&paths.summarize, SUMMARIZE_TEMPLATE)?,
            predict: read(&paths.predict, PREDICT_TEMPLATE)?,
        })
    }
}

/// Replaces every `{{key}}` in `template`.
pub fn render(template: &str, vars: &[(&str, &str)]) -> String {
    let mut out = template.to_owned();
    for (k, v) in vars {
        out = out.replace(&format!("{{{{{k}}}}}"), v);
    }
    out
}

pub trait LlmClient: Sync {
    fn complete(&self, prompt: &str) -> Result<String>;
}

#[derive(Serialize)]
struct CompletionRequest<'a> {
    prompt: &'a str,
    max_tokens: u32,
    #[serde(skip_serializing_if = "str::is_empty")]
    model: &'a str,
}

#[derive(Deserialize)]
struct CompletionResponse {
    text: String,
}

/// Blocking HTTP client with a per-request timeout and bounded retries.
pub struct HttpLlmClient {
    config: LlmEndpointConfig,
    agent: ureq::Agent,
}

impl HttpLlmClient {
    pub fn new(config: LlmEndpointConfig) -> Result<Self> {
        config.validate()?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_secs_f64(config.timeout_s)))
            .build()
            .into();
        Ok(Self { config, agent })
    }

    pub fn config(&self) -> &LlmEndpointConfig {
        &self.config
    }

    fn attempt(&self, prompt: &str) -> Result<String> {
        let body = CompletionRequest {
            prompt,
            max_tokens: self.config.max_tokens,
            model: &self.config.model_name,
        };
        let mut req = self.agent.post(&self.config.base_url);
        if let Some(key) = &self.config.api_key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        let mut resp = req
            .send_json(&body)
            .map_err(|e| Error::Endpoint(format!("{}: {e}", self.config.base_url)))?;
        let parsed: CompletionResponse = resp
            .body_mut()
            .read_json()
            .map_err(|e| Error::Endpoint(format!("malformed response: {e}")))?;
        Ok(parsed.text)
    }
}

impl LlmClient for HttpLlmClient {
    fn complete(&self, prompt: &str) -> Result<String> {
        let mut last = None;
        for attempt in 0..=self.config.max_retries {
            match self.attempt(prompt) {
                Ok(text) => return Ok(text),
                Err(e) => {
                    log::debug!("endpoint attempt {} failed: {e}", attempt + 1);
                    last = Some(e);
                }
            }
        }
        Err(last.unwrap_or_else(|| Error::Endpoint("no attempt made".into())))
    }
}
