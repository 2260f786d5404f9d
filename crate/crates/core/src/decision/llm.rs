//! Remote chat-completion backend.
//!
//! Speaks the common chat-completion wire format: one POST per decision with
//! the persona as the system message and the task prompt as the user message.
//! Malformed answers are re-asked with a clarifying instruction; transport
//! errors, error statuses, and parse failures all consume attempts, and the
//! whole call is bounded by `timeout * (max_retries + 1)` wall time.

use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenario::parse_likert;

use super::{DecisionBackend, DecisionRequest, DecisionResponse, QueryKind};

/// Default name of the environment variable holding the API credential.
pub const DEFAULT_API_KEY_ENV: &str = "PROSIM_API_KEY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LlmBackendConfig {
    /// Full chat-completion endpoint URL.
    pub endpoint: String,
    pub model_name: String,
    pub temperature: f64,
    /// Extra attempts after the first; 3 retries means at most 4 requests.
    pub max_retries: u32,
    /// Per-attempt timeout in milliseconds.
    pub timeout_ms: u64,
    /// Name of the environment variable holding the bearer token.
    pub api_key_env: String,
}

impl Default for LlmBackendConfig {
    fn default() -> Self {
        Self {
            endpoint: "https://api.openai.com/v1/chat/completions".to_owned(),
            model_name: "gpt-4o".to_owned(),
            temperature: 0.0,
            max_retries: 3,
            timeout_ms: 30_000,
            api_key_env: DEFAULT_API_KEY_ENV.to_owned(),
        }
    }
}

impl LlmBackendConfig {
    pub fn validate(&self) -> Result<()> {
        if self.endpoint.trim().is_empty() {
            return Err(Error::InvalidSpec("llm endpoint must not be empty".into()));
        }
        if !(self.temperature >= 0.0) {
            return Err(Error::InvalidSpec(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        if self.timeout_ms == 0 {
            return Err(Error::InvalidSpec("timeout must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Serialize)]
struct ChatMessage<'a> {
    role: &'static str,
    content: &'a str,
}

#[derive(Serialize)]
struct ChatRequest<'a> {
    model: &'a str,
    temperature: f64,
    messages: [ChatMessage<'a>; 2],
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
    content: String,
}

/// Scans a punish-choice answer for the ACCEPT / PUNISH keywords,
/// case-insensitively. The instruction asks for the keyword as the final
/// token, so when both appear the later one wins.
pub fn parse_punish(text: &str) -> Result<bool> {
    let lower = text.to_lowercase();
    let punish_at = lower.rfind("punish");
    let accept_at = lower.rfind("accept");
    match (punish_at, accept_at) {
        (Some(p), Some(a)) => Ok(p > a),
        (Some(_), None) => Ok(true),
        (None, Some(_)) => Ok(false),
        (None, None) => Err(Error::ParseFailure { raw: text.to_owned() }),
    }
}

fn clarification(query: QueryKind) -> &'static str {
    match query {
        QueryKind::ScenarioIntention | QueryKind::UnfairnessRating => {
            "\n\nAnswer with a single integer between 1 and 7."
        }
        QueryKind::PunishChoice => "\n\nAnswer with a single word: ACCEPT or PUNISH.",
    }
}

pub struct LlmBackend {
    config: LlmBackendConfig,
}

impl LlmBackend {
    pub fn new(config: LlmBackendConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &LlmBackendConfig {
        &self.config
    }

    fn api_key(&self) -> Result<String> {
        std::env::var(&self.config.api_key_env)
            .map_err(|_| Error::MissingCredential { var: self.config.api_key_env.clone() })
    }

    /// One HTTP attempt; `budget` caps this attempt's timeout so the whole
    /// call never outlives its deadline.
    fn attempt(&self, api_key: &str, prompt: &str, persona: &str, budget: Duration) -> Result<String> {
        let body = serde_json::to_string(&ChatRequest {
            model: &self.config.model_name,
            temperature: self.config.temperature,
            messages: [
                ChatMessage { role: "system", content: persona },
                ChatMessage { role: "user", content: prompt },
            ],
        })?;
        log::debug!("llm request to {}: {}", self.config.endpoint, body);

        let agent = ureq::Agent::new_with_config(
            ureq::Agent::config_builder()
                .timeout_global(Some(budget))
                .http_status_as_error(false)
                .build(),
        );
        let mut response = agent
            .post(&self.config.endpoint)
            .header("Authorization", &format!("Bearer {api_key}"))
            .header("Content-Type", "application/json")
            .send(body.as_str())
            .map_err(|e| Error::Transport(e.to_string()))?;

        let status = response.status().as_u16();
        let text = response
            .body_mut()
            .read_to_string()
            .map_err(|e| Error::Transport(e.to_string()))?;
        log::debug!("llm response ({status}): {text}");
        if !(200..300).contains(&status) {
            return Err(Error::HttpStatus { status, body: text });
        }
        let parsed: ChatResponse = serde_json::from_str(&text)?;
        parsed
            .choices
            .into_iter()
            .next()
            .map(|c| c.message.content)
            .ok_or_else(|| Error::ParseFailure { raw: text })
    }
}

impl DecisionBackend for LlmBackend {
    fn name(&self) -> &str {
        "llm"
    }

    fn decide(&self, request: &DecisionRequest<'_>) -> Result<DecisionResponse> {
        let api_key = self.api_key()?;
        let started = Instant::now();
        let attempt_timeout = Duration::from_millis(self.config.timeout_ms);
        let attempts_allowed = self.config.max_retries + 1;
        let deadline = started + attempt_timeout * attempts_allowed;

        let mut prompt = request.prompt.clone();
        let mut clarified = false;
        let mut last_error = String::new();

        for attempt in 0..attempts_allowed {
            let remaining = deadline.saturating_duration_since(Instant::now());
            if remaining.is_zero() {
                return Err(Error::ExhaustedRetries {
                    attempts: attempt,
                    last: format!("deadline exceeded; last error: {last_error}"),
                });
            }
            let budget = attempt_timeout.min(remaining);
            match self.attempt(&api_key, &prompt, &request.agent.persona, budget) {
                Ok(answer) => {
                    let parsed = match request.query {
                        QueryKind::ScenarioIntention | QueryKind::UnfairnessRating => {
                            parse_likert(&answer).map(|r| DecisionResponse {
                                likert: Some(r.value),
                                punish: None,
                                raw_text: answer.clone(),
                                backend_name: self.name().to_owned(),
                                latency_ms: started.elapsed().as_millis() as u64,
                            })
                        }
                        QueryKind::PunishChoice => parse_punish(&answer).map(|p| DecisionResponse {
                            likert: None,
                            punish: Some(p),
                            raw_text: answer.clone(),
                            backend_name: self.name().to_owned(),
                            latency_ms: started.elapsed().as_millis() as u64,
                        }),
                    };
                    match parsed {
                        Ok(response) => return Ok(response),
                        Err(err) => {
                            last_error = err.to_string();
                            if !clarified {
                                prompt.push_str(clarification(request.query));
                                clarified = true;
                            }
                        }
                    }
                }
                Err(err) => last_error = err.to_string(),
            }
        }
        Err(Error::ExhaustedRetries { attempts: attempts_allowed, last: last_error })
    }
}
