//! Policy interventions and structural inequity conditions.
//!
//! The four interventions sit in a fixed 2x2 taxonomy (mechanism of influence
//! x mode of compliance); the taxonomy is enforced at construction and only
//! the prompt texts are editable. Inequity conditions assign a random subset
//! of agents to asymmetric treatment and render the matching prompt block.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::population::IncomeBracket;
use crate::rng::rng_from_seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    MoralIndoctrination,
    RegulatoryEnforcement,
    SocialComparison,
    EconomicIncentives,
}

impl PolicyKind {
    pub const ALL: [PolicyKind; 4] = [
        PolicyKind::MoralIndoctrination,
        PolicyKind::RegulatoryEnforcement,
        PolicyKind::SocialComparison,
        PolicyKind::EconomicIncentives,
    ];

    pub fn label(self) -> &'static str {
        match self {
            PolicyKind::MoralIndoctrination => "moral_indoctrination",
            PolicyKind::RegulatoryEnforcement => "regulatory_enforcement",
            PolicyKind::SocialComparison => "social_comparison",
            PolicyKind::EconomicIncentives => "economic_incentives",
        }
    }

    /// The mechanism axis is fixed per kind.
    pub fn mechanism(self) -> Mechanism {
        match self {
            PolicyKind::MoralIndoctrination | PolicyKind::SocialComparison => Mechanism::Cognitive,
            PolicyKind::RegulatoryEnforcement | PolicyKind::EconomicIncentives => {
                Mechanism::Behavioral
            }
        }
    }

    /// The compliance axis is fixed per kind.
    pub fn compliance(self) -> Compliance {
        match self {
            PolicyKind::MoralIndoctrination | PolicyKind::RegulatoryEnforcement => {
                Compliance::Compulsory
            }
            PolicyKind::SocialComparison | PolicyKind::EconomicIncentives => Compliance::Voluntary,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mechanism {
    Cognitive,
    Behavioral,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Compliance {
    Voluntary,
    Compulsory,
}

/// One intervention: its fixed taxonomy cell plus the editable prompt block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawPolicyIntervention")]
pub struct PolicyIntervention {
    pub kind: PolicyKind,
    pub mechanism: Mechanism,
    pub compliance: Compliance,
    pub text: String,
}

/// Wire form; conversion re-checks the taxonomy so deserialized catalogs
/// cannot smuggle in a mislabelled cell.
#[derive(Deserialize)]
struct RawPolicyIntervention {
    kind: PolicyKind,
    mechanism: Mechanism,
    compliance: Compliance,
    text: String,
}

impl TryFrom<RawPolicyIntervention> for PolicyIntervention {
    type Error = Error;

    fn try_from(raw: RawPolicyIntervention) -> Result<Self> {
        PolicyIntervention::with_taxonomy(raw.kind, raw.mechanism, raw.compliance, raw.text)
    }
}

impl PolicyIntervention {
    /// Builds an intervention with the taxonomy implied by its kind.
    pub fn new(kind: PolicyKind, text: impl Into<String>) -> Self {
        Self {
            kind,
            mechanism: kind.mechanism(),
            compliance: kind.compliance(),
            text: text.into(),
        }
    }

    /// Builds an intervention from explicit axes, rejecting any combination
    /// that contradicts the fixed taxonomy.
    pub fn with_taxonomy(
        kind: PolicyKind,
        mechanism: Mechanism,
        compliance: Compliance,
        text: impl Into<String>,
    ) -> Result<Self> {
        if mechanism != kind.mechanism() || compliance != kind.compliance() {
            return Err(Error::InvalidCatalog(format!(
                "{kind:?} is ({:?}, {:?}) in the fixed taxonomy, got ({mechanism:?}, {compliance:?})",
                kind.mechanism(),
                kind.compliance()
            )));
        }
        Ok(Self::new(kind, text))
    }
}

/// The built-in catalog: four interventions with default prompt texts, in
/// [`PolicyKind::ALL`] order.
pub fn policy_catalog() -> Vec<PolicyIntervention> {
    vec![
        PolicyIntervention::new(
            PolicyKind::MoralIndoctrination,
            "Public institutions in your community run a mandatory civic education \
             program stressing that helping others is a core moral duty. Official \
             messaging reminds everyone that good citizens act for the common good.",
        ),
        PolicyIntervention::new(
            PolicyKind::RegulatoryEnforcement,
            "A municipal regulation now requires residents to take part in \
             community-support activities. Noncompliance is recorded and can lead \
             to fines.",
        ),
        PolicyIntervention::new(
            PolicyKind::SocialComparison,
            "A public community board shows how often your neighbors take part in \
             prosocial activities, and most of them participate regularly. Joining \
             is entirely your choice.",
        ),
        PolicyIntervention::new(
            PolicyKind::EconomicIncentives,
            "A voluntary rewards program gives small monetary bonuses and vouchers \
             to residents who take part in prosocial activities.",
        ),
    ]
}

/// Validates a policy catalog: all four kinds, each once, in order.
pub fn validate_policy_catalog(catalog: &[PolicyIntervention]) -> Result<()> {
    if catalog.len() != 4 {
        return Err(Error::InvalidCatalog(format!(
            "policy catalog must hold exactly 4 entries, got {}",
            catalog.len()
        )));
    }
    for (entry, expected) in catalog.iter().zip(PolicyKind::ALL) {
        if entry.kind != expected {
            return Err(Error::InvalidCatalog(format!(
                "policy catalog out of order: expected {expected:?}, found {:?}",
                entry.kind
            )));
        }
        if entry.text.trim().is_empty() {
            return Err(Error::InvalidCatalog(format!("{expected:?} has an empty text block")));
        }
    }
    Ok(())
}

/// Loads a policy catalog from JSON; the taxonomy is re-checked on the way in.
pub fn policy_catalog_from_json(json: &str) -> Result<Vec<PolicyIntervention>> {
    let catalog: Vec<PolicyIntervention> = serde_json::from_str(json)?;
    validate_policy_catalog(&catalog)?;
    Ok(catalog)
}

/// The two structural inequity conditions. They are mutually exclusive
/// within one run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InequityKind {
    RewardAsymmetry,
    BurdenAsymmetry,
}

impl InequityKind {
    pub fn label(self) -> &'static str {
        match self {
            InequityKind::RewardAsymmetry => "reward_asymmetry",
            InequityKind::BurdenAsymmetry => "burden_asymmetry",
        }
    }
}

/// A resolved inequity assignment: which agents are treated asymmetrically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InequityCondition {
    pub kind: InequityKind,
    pub affected: BTreeSet<u32>,
    pub fraction: f64,
    pub seed: u64,
}

impl InequityCondition {
    pub fn is_affected(&self, agent: u32) -> bool {
        self.affected.contains(&agent)
    }
}

/// Draws `round(fraction * n)` agent ids uniformly without replacement
/// (round half up, so 20% of 104 agents is 21). Deterministic in the seed.
pub fn assign_inequity(
    n: u32,
    kind: InequityKind,
    fraction: f64,
    seed: u64,
) -> Result<InequityCondition> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::InvalidParameters(format!(
            "inequity fraction must lie in [0, 1], got {fraction}"
        )));
    }
    let count = (fraction * f64::from(n)).round() as usize;
    let mut rng = rng_from_seed(seed);
    let affected = if count == 0 {
        BTreeSet::new()
    } else {
        rand::seq::index::sample(&mut rng, n as usize, count.min(n as usize))
            .into_iter()
            .map(|i| i as u32)
            .collect()
    };
    Ok(InequityCondition { kind, affected, fraction, seed })
}

/// Renders the treatment block for one agent: affected agents get the
/// asymmetric framing (burden wording conditioned on income), everyone else a
/// kind-neutral standard-treatment statement.
pub fn render_inequity_context(
    condition: &InequityCondition,
    agent: u32,
    income: IncomeBracket,
) -> String {
    if !condition.is_affected(agent) {
        return "You receive the standard treatment: the same recognition and the same \
                costs as most other members of your community."
            .to_owned();
    }
    match condition.kind {
        InequityKind::RewardAsymmetry => {
            "Recently, your prosocial contributions have gone unrecognized: others \
             receive public recognition and benefits for the same actions, while you \
             receive none."
                .to_owned()
        }
        InequityKind::BurdenAsymmetry => {
            let income_clause = match income {
                IncomeBracket::Low => {
                    "Because your income is low, this fixed burden weighs especially \
                     heavily on you."
                }
                IncomeBracket::Middle => {
                    "Relative to your middle income, this fixed burden is a real strain."
                }
                IncomeBracket::High => {
                    "Even with your high income, this unequal burden is a persistent cost."
                }
            };
            format!(
                "You face unequal costs: performing the same prosocial task costs you \
                 more time, money, and effort than it costs others. {income_clause}"
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_taxonomy() {
        let catalog = policy_catalog();
        validate_policy_catalog(&catalog).unwrap();

        let behavioral_compulsory: Vec<_> = catalog
            .iter()
            .filter(|p| p.mechanism == Mechanism::Behavioral && p.compliance == Compliance::Compulsory)
            .collect();
        assert_eq!(behavioral_compulsory.len(), 1);
        assert_eq!(behavioral_compulsory[0].kind, PolicyKind::RegulatoryEnforcement);

        let cognitive_voluntary: Vec<_> = catalog
            .iter()
            .filter(|p| p.mechanism == Mechanism::Cognitive && p.compliance == Compliance::Voluntary)
            .collect();
        assert_eq!(cognitive_voluntary.len(), 1);
        assert_eq!(cognitive_voluntary[0].kind, PolicyKind::SocialComparison);

        let cognitive = catalog.iter().filter(|p| p.mechanism == Mechanism::Cognitive).count();
        let voluntary = catalog.iter().filter(|p| p.compliance == Compliance::Voluntary).count();
        assert_eq!((cognitive, voluntary), (2, 2));
    }

    #[test]
    fn taxonomy_enforced_at_construction() {
        let err = PolicyIntervention::with_taxonomy(
            PolicyKind::MoralIndoctrination,
            Mechanism::Cognitive,
            Compliance::Voluntary,
            "x",
        );
        assert!(matches!(err, Err(Error::InvalidCatalog(_))));

        // and on the way in from JSON
        let json = r#"[{"kind":"moral_indoctrination","mechanism":"behavioral",
                        "compliance":"compulsory","text":"x"}]"#;
        assert!(serde_json::from_str::<Vec<PolicyIntervention>>(json).is_err());
    }

    #[test]
    fn policy_catalog_json_round_trip() {
        let catalog = policy_catalog();
        let json = serde_json::to_string(&catalog).unwrap();
        assert_eq!(policy_catalog_from_json(&json).unwrap(), catalog);
    }

    #[test]
    fn assignment_counts_round_half_up() {
        let c = assign_inequity(104, InequityKind::BurdenAsymmetry, 0.2, 9).unwrap();
        assert_eq!(c.affected.len(), 21); // round(20.8)
        assert!(c.affected.iter().all(|&a| a < 104));

        let none = assign_inequity(104, InequityKind::RewardAsymmetry, 0.0, 9).unwrap();
        assert!(none.affected.is_empty());

        let all = assign_inequity(10, InequityKind::RewardAsymmetry, 1.0, 9).unwrap();
        assert_eq!(all.affected.len(), 10);
    }

    #[test]
    fn assignment_is_deterministic() {
        let a = assign_inequity(104, InequityKind::RewardAsymmetry, 0.2, 4).unwrap();
        let b = assign_inequity(104, InequityKind::RewardAsymmetry, 0.2, 4).unwrap();
        assert_eq!(a, b);
        let c = assign_inequity(104, InequityKind::RewardAsymmetry, 0.2, 5).unwrap();
        assert_ne!(a.affected, c.affected);
    }

    #[test]
    fn assignment_is_exchangeable() {
        // Inclusion frequency per agent over many seeds stays within 1% of
        // the realized assignment fraction. That fraction is 21/104, not 0.2
        // exactly, because of the round-half-up count; 4e4 seeds keep the 1%
        // band at five binomial sigma so the check cannot trip on noise.
        let n = 104u32;
        let seeds = 40_000u64;
        let realized = 21.0 / 104.0;
        let mut inclusion = vec![0u32; n as usize];
        for seed in 0..seeds {
            let c = assign_inequity(n, InequityKind::BurdenAsymmetry, 0.2, seed).unwrap();
            for agent in &c.affected {
                inclusion[*agent as usize] += 1;
            }
        }
        for (agent, count) in inclusion.iter().enumerate() {
            let freq = f64::from(*count) / seeds as f64;
            assert!(
                (freq - realized).abs() <= 0.01,
                "agent {agent} inclusion frequency {freq} strays from {realized}"
            );
        }
    }

    #[test]
    fn inequity_context_texts() {
        let condition = InequityCondition {
            kind: InequityKind::RewardAsymmetry,
            affected: BTreeSet::from([3]),
            fraction: 0.2,
            seed: 0,
        };
        let affected = render_inequity_context(&condition, 3, IncomeBracket::Middle);
        assert!(affected.contains("gone unrecognized"));
        assert!(affected.contains("while you receive none"));

        let unaffected = render_inequity_context(&condition, 4, IncomeBracket::Middle);
        assert!(unaffected.contains("standard treatment"));

        let burden = InequityCondition {
            kind: InequityKind::BurdenAsymmetry,
            affected: BTreeSet::from([3]),
            fraction: 0.2,
            seed: 0,
        };
        let low_income = render_inequity_context(&burden, 3, IncomeBracket::Low);
        assert!(low_income.contains("income is low"));
        assert!(low_income.contains("weighs especially heavily"));
        assert_eq!(
            render_inequity_context(&burden, 4, IncomeBracket::Low),
            render_inequity_context(&condition, 4, IncomeBracket::High),
            "standard-treatment text is kind-neutral"
        );
    }
}
