//! The six prosocial scenarios, prompt construction, and Likert parsing.
//!
//! Narratives and dimension assignments are data, not logic: the built-in
//! catalog is an editable default, and a whole catalog can be loaded from
//! JSON to substitute custom texts.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six scenario kinds, in catalog order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScenarioKind {
    Volunteering,
    Helping,
    Donating,
    Cooperation,
    Recycling,
    Sharing,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 6] = [
        ScenarioKind::Volunteering,
        ScenarioKind::Helping,
        ScenarioKind::Donating,
        ScenarioKind::Cooperation,
        ScenarioKind::Recycling,
        ScenarioKind::Sharing,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ScenarioKind::Volunteering => "volunteering",
            ScenarioKind::Helping => "helping",
            ScenarioKind::Donating => "donating",
            ScenarioKind::Cooperation => "cooperation",
            ScenarioKind::Recycling => "recycling",
            ScenarioKind::Sharing => "sharing",
        }
    }
}

/// Ordinal level of a scenario dimension.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimensionLevel {
    Low,
    Medium,
    High,
}

/// One standardized decision situation with its four-dimension
/// classification. The dimensions are descriptive metadata used for grouping
/// in analysis; they drive no engine logic.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Scenario {
    pub kind: ScenarioKind,
    pub narrative: String,
    pub cost_level: DimensionLevel,
    pub norm_expectation: DimensionLevel,
    pub reward_visibility: DimensionLevel,
    pub dependency_level: DimensionLevel,
}

/// A parsed 7-point answer together with the verbatim backend output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LikertResponse {
    pub value: u8,
    pub raw_text: String,
}

/// Fixed instruction closing every intention prompt.
pub const LIKERT_INSTRUCTION: &str = "Respond with only a single integer from 1 to 7, \
     where 1 means not at all willing and 7 means extremely willing.";

fn scenario(
    kind: ScenarioKind,
    narrative: &str,
    cost_level: DimensionLevel,
    norm_expectation: DimensionLevel,
    reward_visibility: DimensionLevel,
    dependency_level: DimensionLevel,
) -> Scenario {
    Scenario {
        kind,
        narrative: narrative.to_owned(),
        cost_level,
        norm_expectation,
        reward_visibility,
        dependency_level,
    }
}

/// The built-in catalog: six scenarios with fixed narratives and a default
/// dimension matrix, in [`ScenarioKind::ALL`] order. Stable across calls.
pub fn scenario_catalog() -> Vec<Scenario> {
    use DimensionLevel::*;
    vec![
        scenario(
            ScenarioKind::Volunteering,
            "A local community center is recruiting volunteers to spend a Saturday \
             helping at a neighborhood cleanup event. Participation is unpaid and \
             takes about four hours. How willing would you be to volunteer?",
            High, Medium, Medium, Medium,
        ),
        scenario(
            ScenarioKind::Helping,
            "While walking to an appointment, you see a stranger drop a heavy bag, \
             scattering their belongings across the sidewalk. Stopping to help would \
             cost you a few minutes. How willing would you be to stop and help?",
            Low, High, Low, High,
        ),
        scenario(
            ScenarioKind::Donating,
            "A well-documented charity is collecting donations for families affected \
             by a recent flood. A donation of one day's discretionary income would \
             meaningfully help. How willing would you be to donate?",
            High, Medium, Low, Low,
        ),
        scenario(
            ScenarioKind::Cooperation,
            "Your neighborhood is organizing a shared garden that only succeeds if \
             most residents contribute a few hours of upkeep each month. How willing \
             would you be to contribute your share?",
            Medium, High, Medium, High,
        ),
        scenario(
            ScenarioKind::Recycling,
            "Your building introduced a recycling program that requires sorting \
             household waste into separate bins, adding a small daily effort. How \
             willing would you be to sort your waste consistently?",
            Low, High, Low, Low,
        ),
        scenario(
            ScenarioKind::Sharing,
            "You learn useful information about a public health resource that many \
             people around you are unaware of. Passing it on takes a little time and \
             effort. How willing would you be to share it with others?",
            Low, Medium, Medium, Medium,
        ),
    ]
}

/// Validates a catalog: exactly the six kinds, each exactly once, in
/// [`ScenarioKind::ALL`] order, with non-empty narratives.
pub fn validate_catalog(catalog: &[Scenario]) -> Result<()> {
    if catalog.len() != 6 {
        return Err(Error::InvalidCatalog(format!(
            "scenario catalog must hold exactly 6 entries, got {}",
            catalog.len()
        )));
    }
    for (entry, expected) in catalog.iter().zip(ScenarioKind::ALL) {
        if entry.kind != expected {
            return Err(Error::InvalidCatalog(format!(
                "scenario catalog out of order: expected {expected:?}, found {:?}",
                entry.kind
            )));
        }
        if entry.narrative.trim().is_empty() {
            return Err(Error::InvalidCatalog(format!("{expected:?} has an empty narrative")));
        }
    }
    Ok(())
}

/// Loads a catalog from its JSON representation and validates it.
pub fn catalog_from_json(json: &str) -> Result<Vec<Scenario>> {
    let catalog: Vec<Scenario> = serde_json::from_str(json)?;
    validate_catalog(&catalog)?;
    Ok(catalog)
}

/// Assembles the full decision prompt. Fixed block order: persona, scenario
/// narrative, optional context (policy or inequity framing), optional
/// previous-rating clause, optional neighbor observations, instruction. Each
/// optional block appears exactly when its input is present; identical inputs
/// yield byte-identical prompts.
pub fn build_scenario_prompt(
    scenario: &Scenario,
    persona: &str,
    context: Option<&str>,
    observations: Option<&[(u32, u8)]>,
    prior: Option<u8>,
) -> String {
    let mut prompt = String::with_capacity(1024);
    prompt.push_str(persona);
    prompt.push_str("\n\n");
    prompt.push_str(&scenario.narrative);
    if let Some(context) = context {
        prompt.push_str("\n\n");
        prompt.push_str(context);
    }
    if let Some(prior) = prior {
        prompt.push_str(&format!("\n\nYour previous rating for this situation was {prior}."));
    }
    if let Some(observations) = observations {
        prompt.push_str("\n\nYou observe the latest ratings of some people you know:");
        for (neighbor, value) in observations {
            prompt.push_str(&format!(" person {neighbor} rated {value};"));
        }
    }
    prompt.push_str("\n\n");
    prompt.push_str(LIKERT_INSTRUCTION);
    prompt
}

static INTEGER_TOKEN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b[0-9]+\b").expect("valid regex"));

/// Extracts the first standalone integer in `[1, 7]` from backend output.
/// Digit runs embedded in words ("option7") and out-of-range numbers ("10")
/// are skipped. The raw text is preserved for audit.
pub fn parse_likert(text: &str) -> Result<LikertResponse> {
    for token in INTEGER_TOKEN.find_iter(text) {
        if let Ok(value) = token.as_str().parse::<u8>() {
            if (1..=7).contains(&value) {
                return Ok(LikertResponse { value, raw_text: text.to_owned() });
            }
        }
    }
    Err(Error::ParseFailure { raw: text.to_owned() })
}
