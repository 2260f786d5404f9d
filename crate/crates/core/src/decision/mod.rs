//! The backend-agnostic decision contract.
//!
//! The engine talks to every decision source through [`DecisionBackend`]:
//! a remote chat-completion model ([`LlmBackend`]) or the deterministic
//! synthetic oracle ([`SyntheticBackend`]) used for offline testing and
//! calibration. Backends are interchangeable; the engine produces
//! structurally identical traces either way.

mod llm;
mod synthetic;

pub use llm::{parse_punish, LlmBackend, LlmBackendConfig};
pub use synthetic::{update_unfairness, SyntheticBackend, SyntheticParams};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::AgentProfile;

/// What kind of answer a request expects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryKind {
    /// A 1-7 willingness rating for a prosocial scenario.
    ScenarioIntention,
    /// A binary accept/punish choice in the third-party punishment game.
    PunishChoice,
    /// A 1-7 rating of perceived unfairness.
    UnfairnessRating,
}

/// Structured inputs that accompany the rendered prompt. The text prompt is
/// everything a language model sees; the synthetic oracle reads these fields
/// instead of parsing prose.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DecisionContext {
    /// Index of the scenario being rated, in catalog order.
    pub scenario_index: Option<usize>,
    /// Index of the active policy intervention, in catalog order.
    pub policy_index: Option<usize>,
    /// The agent's own rating from the previous round.
    pub prior: Option<u8>,
    /// Mean of the observed neighbor ratings from the previous round.
    pub neighbor_mean: Option<f64>,
    /// Current perceived unfairness, in `[1, 7]`. 1.0 means none.
    pub unfairness: f64,
    /// Allocation offered to Player 2 in a punishment trial.
    pub allocation: Option<u8>,
    /// Cost of punishing in a punishment trial.
    pub cost: Option<u8>,
}

impl DecisionContext {
    /// Neutral context: no social inputs, no unfairness.
    pub fn neutral() -> Self {
        Self { unfairness: 1.0, ..Self::default() }
    }
}

/// One decision request: the agent acting, the expected answer space, the
/// fully rendered prompt, and the structured context behind it.
#[derive(Debug, Clone)]
pub struct DecisionRequest<'a> {
    pub agent: &'a AgentProfile,
    pub query: QueryKind,
    pub prompt: String,
    /// Iteration number or trial index, depending on the study.
    pub round: u32,
    pub context: DecisionContext,
}

/// A backend's answer. Exactly one of `likert` / `punish` is populated,
/// matching the query kind.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecisionResponse {
    pub likert: Option<u8>,
    pub punish: Option<bool>,
    pub raw_text: String,
    pub backend_name: String,
    pub latency_ms: u64,
}

/// Any decision source the engine can drive. Implementations must be safe to
/// share across concurrent calls within one timestep.
pub trait DecisionBackend: Send + Sync {
    fn name(&self) -> &str;

    fn decide(&self, request: &DecisionRequest<'_>) -> Result<DecisionResponse>;
}

/// Dispatches a request to a backend and enforces the response contract:
/// the populated field must match the query kind and a Likert answer must
/// lie in `[1, 7]`.
pub fn decide(backend: &dyn DecisionBackend, request: &DecisionRequest<'_>) -> Result<DecisionResponse> {
    if request.prompt.is_empty() {
        return Err(Error::InvalidParameters("decision prompt is empty".into()));
    }
    let response = backend.decide(request)?;
    match request.query {
        QueryKind::ScenarioIntention | QueryKind::UnfairnessRating => {
            match (response.likert, response.punish) {
                (Some(v), None) if (1..=7).contains(&v) => Ok(response),
                _ => Err(Error::ResponseMismatch { expected: "likert value in [1, 7]" }),
            }
        }
        QueryKind::PunishChoice => match (response.likert, response.punish) {
            (None, Some(_)) => Ok(response),
            _ => Err(Error::ResponseMismatch { expected: "punish boolean" }),
        },
    }
}
