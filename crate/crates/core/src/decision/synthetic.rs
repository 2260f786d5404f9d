//! The deterministic synthetic oracle.
//!
//! A trait-driven linear rule that stands in for a language model so every
//! pipeline property is testable offline. Intentions respond to traits,
//! scenario and policy framings, social observation, and perceived
//! unfairness; punishment follows a threshold rule over inequity, cost, and
//! moral traits. With `noise_sd = 0` (the default) the oracle is a pure
//! function of `(params, request)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::policy::InequityKind;
use crate::rng::{derive_seed, rng_from_seed};

use super::{DecisionBackend, DecisionRequest, DecisionResponse, QueryKind};

/// Calibration of the synthetic oracle. Defaults are frozen so that a default
/// dynamics run lands in the documented acceptance bands; override any field
/// through the JSON config for sensitivity studies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticParams {
    /// Intercept of the intention score.
    pub intercept: f64,
    /// Per-trait weights, in canonical trait order, applied to `trait - 4`.
    pub trait_weights: [f64; 9],
    /// Per-scenario additive offsets, in catalog order.
    pub scenario_offsets: [f64; 6],
    /// Per-policy additive offsets, in catalog order.
    pub policy_offsets: [f64; 4],
    /// Weight of `(neighbor_mean - prior)`: pull toward observed neighbors.
    pub conformity: f64,
    /// Weight of `(unfairness - 1)`: how strongly felt unfairness suppresses
    /// intentions.
    pub unfairness_sensitivity: f64,
    /// Per-round unfairness increment for directly affected agents; indirect
    /// exposure adds half of it.
    pub inequity_unfairness_gain: f64,
    /// Multiplier on the gain when the run's condition is burden asymmetry;
    /// burdens weigh less than withheld recognition.
    pub burden_unfairness_scale: f64,
    /// Per-round decay of `(unfairness - 1)` in rounds with no exposure.
    pub unfairness_decay: f64,
    /// Punishment score weight on the inequity of the allocation.
    pub punish_inequity_weight: f64,
    /// Punishment score weight on the personal cost of punishing.
    pub punish_cost_weight: f64,
    /// Punishment score weight on moral identity plus altruistic tendency.
    pub punish_trait_weight: f64,
    /// Punish exactly when the score exceeds this threshold.
    pub punish_threshold: f64,
    /// Standard deviation of an optional seeded noise term on the intention
    /// score. Zero keeps the oracle fully deterministic.
    pub noise_sd: f64,
    /// Seed of the noise stream; only read when `noise_sd > 0`.
    pub noise_seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            intercept: 4.3,
            trait_weights: [0.35, 0.25, 0.45, 0.20, 0.05, 0.05, 0.05, 0.10, -0.10],
            scenario_offsets: [0.0, 0.6, -0.3, 0.2, 0.4, 0.1],
            policy_offsets: [0.5, 1.0, 0.6, 0.3],
            conformity: 0.3,
            unfairness_sensitivity: 0.3,
            inequity_unfairness_gain: 1.0,
            burden_unfairness_scale: 0.6,
            unfairness_decay: 0.1,
            punish_inequity_weight: 1.0,
            punish_cost_weight: 0.8,
            punish_trait_weight: 0.5,
            punish_threshold: 0.1,
            noise_sd: 0.0,
            noise_seed: 0,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<()> {
        let mut all = vec![
            self.intercept,
            self.conformity,
            self.unfairness_sensitivity,
            self.inequity_unfairness_gain,
            self.burden_unfairness_scale,
            self.unfairness_decay,
            self.punish_inequity_weight,
            self.punish_cost_weight,
            self.punish_trait_weight,
            self.punish_threshold,
            self.noise_sd,
        ];
        all.extend_from_slice(&self.trait_weights);
        all.extend_from_slice(&self.scenario_offsets);
        all.extend_from_slice(&self.policy_offsets);
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidSpec("synthetic params must all be finite".into()));
        }
        if self.conformity < 0.0
            || self.unfairness_sensitivity < 0.0
            || self.inequity_unfairness_gain < 0.0
            || self.noise_sd < 0.0
        {
            return Err(Error::InvalidSpec(
                "conformity, unfairness sensitivity, inequity gain, and noise sd must be \
                 non-negative"
                    .into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.unfairness_decay) {
            return Err(Error::InvalidSpec(format!(
                "unfairness decay must lie in [0, 1], got {}",
                self.unfairness_decay
            )));
        }
        Ok(())
    }

    /// Params with the unfairness gain scaled for the run's inequity kind.
    /// Burden asymmetry applies `burden_unfairness_scale`; reward asymmetry
    /// (and no inequity) leaves the gain unchanged.
    pub fn for_inequity_kind(&self, kind: Option<InequityKind>) -> Self {
        let mut scaled = self.clone();
        if kind == Some(InequityKind::BurdenAsymmetry) {
            scaled.inequity_unfairness_gain *= scaled.burden_unfairness_scale;
        }
        scaled
    }
}

/// One step of the perceived-unfairness state:
/// direct exposure adds the full gain, indirect exposure half of it, and a
/// round with neither decays the excess over 1 by the decay rate. The result
/// is clamped to `[1, 7]`.
pub fn update_unfairness(
    params: &SyntheticParams,
    u_prev: f64,
    directly_affected: bool,
    indirectly_exposed: bool,
) -> f64 {
    let gain = params.inequity_unfairness_gain;
    let mut u = u_prev;
    if directly_affected {
        u += gain;
    }
    if indirectly_exposed {
        u += gain / 2.0;
    }
    if !directly_affected && !indirectly_exposed {
        u -= params.unfairness_decay * (u_prev - 1.0);
    }
    u.clamp(1.0, 7.0)
}

/// Round half up and clamp to the 7-point scale.
fn to_likert(score: f64) -> u8 {
    (score.round().clamp(1.0, 7.0)) as u8
}

/// The deterministic oracle backend.
#[derive(Debug, Clone)]
pub struct SyntheticBackend {
    params: SyntheticParams,
}

impl SyntheticBackend {
    pub fn new(params: SyntheticParams) -> Result<Self> {
        params.validate()?;
        Ok(Self { params })
    }

    pub fn params(&self) -> &SyntheticParams {
        &self.params
    }

    fn intention_score(&self, request: &DecisionRequest<'_>) -> f64 {
        let p = &self.params;
        let ctx = &request.context;
        let traits = request.agent.traits.as_array();
        let trait_term: f64 = p
            .trait_weights
            .iter()
            .zip(traits)
            .map(|(w, value)| w * (value - 4.0))
            .sum();
        let scenario_offset = ctx.scenario_index.map_or(0.0, |i| p.scenario_offsets[i]);
        let policy_offset = ctx.policy_index.map_or(0.0, |i| p.policy_offsets[i]);
        let social = match (ctx.neighbor_mean, ctx.prior) {
            (Some(mean), Some(prior)) => p.conformity * (mean - f64::from(prior)),
            _ => 0.0,
        };
        let unfairness = p.unfairness_sensitivity * (ctx.unfairness - 1.0);
        let noise = if p.noise_sd > 0.0 {
            let label = format!(
                "noise-{}-{}-{:?}-{}",
                request.agent.id,
                request.round,
                request.query,
                ctx.scenario_index.map_or(-1, |i| i as i64),
            );
            let mut rng = rng_from_seed(derive_seed(p.noise_seed, &label));
            use rand_distr::Distribution as _;
            rand_distr::Normal::new(0.0, p.noise_sd).expect("validated noise sd").sample(&mut rng)
        } else {
            0.0
        };
        p.intercept + trait_term + scenario_offset + policy_offset + social - unfairness + noise
    }

    fn punish_score(&self, request: &DecisionRequest<'_>) -> Result<f64> {
        let p = &self.params;
        let (Some(x), Some(y)) = (request.context.allocation, request.context.cost) else {
            return Err(Error::InvalidParameters(
                "punish_choice request is missing allocation or cost".into(),
            ));
        };
        let traits = &request.agent.traits;
        let inequity = p.punish_inequity_weight * (15.0 - f64::from(x)) / 15.0;
        let cost = p.punish_cost_weight * f64::from(y) / 10.0;
        let disposition = p.punish_trait_weight
            * (traits.moral_identity + traits.altruistic_tendency - 8.0)
            / 6.0;
        Ok(inequity - cost + disposition)
    }
}

impl DecisionBackend for SyntheticBackend {
    fn name(&self) -> &str {
        "synthetic"
    }

    fn decide(&self, request: &DecisionRequest<'_>) -> Result<DecisionResponse> {
        let (likert, punish, raw_text) = match request.query {
            QueryKind::ScenarioIntention => {
                let value = to_likert(self.intention_score(request));
                (Some(value), None, value.to_string())
            }
            QueryKind::PunishChoice => {
                let punish = self.punish_score(request)? > self.params.punish_threshold;
                let word = if punish { "PUNISH" } else { "ACCEPT" };
                (None, Some(punish), word.to_string())
            }
            QueryKind::UnfairnessRating => {
                let value = to_likert(request.context.unfairness);
                (Some(value), None, value.to_string())
            }
        };
        Ok(DecisionResponse {
            likert,
            punish,
            raw_text,
            backend_name: self.name().to_owned(),
            latency_ms: 0,
        })
    }
}
