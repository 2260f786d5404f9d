//! Population synthesis: demographic sampling, Gaussian trait sampling, and
//! persona rendering.

use std::collections::BTreeMap;
use std::fmt;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution as _;
use rand::Rng;
use rand_distr::Normal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::rng_from_seed;

const PROB_SUM_TOL: f64 = 1e-9;

/// Lower and upper bound of the 7-point trait scale.
pub const TRAIT_MIN: f64 = 1.0;
pub const TRAIT_MAX: f64 = 7.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gender {
    Female,
    Male,
}

impl Gender {
    pub const ALL: [Gender; 2] = [Gender::Female, Gender::Male];

    pub fn label(self) -> &'static str {
        match self {
            Gender::Female => "female",
            Gender::Male => "male",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Education {
    Primary,
    Secondary,
    Tertiary,
    Postgraduate,
}

impl Education {
    pub const ALL: [Education; 4] = [
        Education::Primary,
        Education::Secondary,
        Education::Tertiary,
        Education::Postgraduate,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Education::Primary => "primary",
            Education::Secondary => "secondary",
            Education::Tertiary => "tertiary",
            Education::Postgraduate => "postgraduate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IncomeBracket {
    Low,
    Middle,
    High,
}

impl IncomeBracket {
    pub const ALL: [IncomeBracket; 3] =
        [IncomeBracket::Low, IncomeBracket::Middle, IncomeBracket::High];

    pub fn label(self) -> &'static str {
        match self {
            IncomeBracket::Low => "low",
            IncomeBracket::Middle => "middle",
            IncomeBracket::High => "high",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Employment {
    Employed,
    SelfEmployed,
    Unemployed,
    Student,
    Retired,
}

impl Employment {
    pub const ALL: [Employment; 5] = [
        Employment::Employed,
        Employment::SelfEmployed,
        Employment::Unemployed,
        Employment::Student,
        Employment::Retired,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Employment::Employed => "employed",
            Employment::SelfEmployed => "self-employed",
            Employment::Unemployed => "unemployed",
            Employment::Student => "student",
            Employment::Retired => "retired",
        }
    }

    fn persona_phrase(self) -> &'static str {
        match self {
            Employment::Employed => "currently employed",
            Employment::SelfEmployed => "self-employed",
            Employment::Unemployed => "currently unemployed",
            Employment::Student => "a student",
            Employment::Retired => "retired",
        }
    }
}

/// Demographic attributes of one agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Demographics {
    pub age: u32,
    pub gender: Gender,
    pub education: Education,
    pub income: IncomeBracket,
    pub employment: Employment,
}

/// The nine psychological traits, each on the `[1, 7]` scale: four prosocial
/// dispositions followed by the Big Five.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraitVector {
    pub empathic_concern: f64,
    pub moral_identity: f64,
    pub altruistic_tendency: f64,
    pub social_responsibility: f64,
    pub openness: f64,
    pub conscientiousness: f64,
    pub extraversion: f64,
    pub agreeableness: f64,
    pub neuroticism: f64,
}

/// Canonical trait order used everywhere a trait index appears.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraitName {
    EmpathicConcern,
    MoralIdentity,
    AltruisticTendency,
    SocialResponsibility,
    Openness,
    Conscientiousness,
    Extraversion,
    Agreeableness,
    Neuroticism,
}

impl TraitName {
    pub const ALL: [TraitName; 9] = [
        TraitName::EmpathicConcern,
        TraitName::MoralIdentity,
        TraitName::AltruisticTendency,
        TraitName::SocialResponsibility,
        TraitName::Openness,
        TraitName::Conscientiousness,
        TraitName::Extraversion,
        TraitName::Agreeableness,
        TraitName::Neuroticism,
    ];

    pub fn label(self) -> &'static str {
        match self {
            TraitName::EmpathicConcern => "empathic concern",
            TraitName::MoralIdentity => "moral identity",
            TraitName::AltruisticTendency => "altruistic tendency",
            TraitName::SocialResponsibility => "social responsibility",
            TraitName::Openness => "openness",
            TraitName::Conscientiousness => "conscientiousness",
            TraitName::Extraversion => "extraversion",
            TraitName::Agreeableness => "agreeableness",
            TraitName::Neuroticism => "neuroticism",
        }
    }
}

impl fmt::Display for TraitName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl TraitVector {
    pub const COUNT: usize = 9;

    /// Values in canonical [`TraitName::ALL`] order.
    pub fn as_array(&self) -> [f64; 9] {
        [
            self.empathic_concern,
            self.moral_identity,
            self.altruistic_tendency,
            self.social_responsibility,
            self.openness,
            self.conscientiousness,
            self.extraversion,
            self.agreeableness,
            self.neuroticism,
        ]
    }

    pub fn from_array(values: [f64; 9]) -> Self {
        Self {
            empathic_concern: values[0],
            moral_identity: values[1],
            altruistic_tendency: values[2],
            social_responsibility: values[3],
            openness: values[4],
            conscientiousness: values[5],
            extraversion: values[6],
            agreeableness: values[7],
            neuroticism: values[8],
        }
    }

    pub fn get(&self, name: TraitName) -> f64 {
        self.as_array()[name as usize]
    }

    /// All nine traits set to the same value.
    pub fn uniform(value: f64) -> Self {
        Self::from_array([value; 9])
    }
}

/// One synthesized agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentProfile {
    pub id: u32,
    pub demographics: Demographics,
    pub traits: TraitVector,
    pub persona: String,
}

/// Gaussian parameters for one trait.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianParams {
    pub mean: f64,
    pub sd: f64,
}

impl Default for GaussianParams {
    fn default() -> Self {
        // Scale midpoint with unit spread; override per trait as needed.
        Self { mean: 4.0, sd: 1.0 }
    }
}

/// Per-trait Gaussian parameters, each defaulting to (mean 4.0, sd 1.0).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct TraitParams {
    pub empathic_concern: GaussianParams,
    pub moral_identity: GaussianParams,
    pub altruistic_tendency: GaussianParams,
    pub social_responsibility: GaussianParams,
    pub openness: GaussianParams,
    pub conscientiousness: GaussianParams,
    pub extraversion: GaussianParams,
    pub agreeableness: GaussianParams,
    pub neuroticism: GaussianParams,
}

impl TraitParams {
    pub fn as_array(&self) -> [GaussianParams; 9] {
        [
            self.empathic_concern,
            self.moral_identity,
            self.altruistic_tendency,
            self.social_responsibility,
            self.openness,
            self.conscientiousness,
            self.extraversion,
            self.agreeableness,
            self.neuroticism,
        ]
    }

    /// Same (mean, sd) for all nine traits.
    pub fn uniform(mean: f64, sd: f64) -> Self {
        let g = GaussianParams { mean, sd };
        Self {
            empathic_concern: g,
            moral_identity: g,
            altruistic_tendency: g,
            social_responsibility: g,
            openness: g,
            conscientiousness: g,
            extraversion: g,
            agreeableness: g,
            neuroticism: g,
        }
    }
}

/// One bucket of the age distribution; ages are sampled uniformly inside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgeBucket {
    pub min: u32,
    pub max: u32,
    pub p: f64,
}

/// Categorical probability tables for the demographic fields.
///
/// The defaults are illustrative placeholders, not census figures; replace
/// them with real distribution tables via the JSON config when fidelity to a
/// particular population matters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemographicDistributions {
    pub age: Vec<AgeBucket>,
    pub gender: BTreeMap<Gender, f64>,
    pub education: BTreeMap<Education, f64>,
    pub income: BTreeMap<IncomeBracket, f64>,
    pub employment: BTreeMap<Employment, f64>,
}

impl Default for DemographicDistributions {
    fn default() -> Self {
        Self {
            age: vec![
                AgeBucket { min: 18, max: 24, p: 0.12 },
                AgeBucket { min: 25, max: 34, p: 0.22 },
                AgeBucket { min: 35, max: 44, p: 0.20 },
                AgeBucket { min: 45, max: 54, p: 0.17 },
                AgeBucket { min: 55, max: 64, p: 0.14 },
                AgeBucket { min: 65, max: 80, p: 0.15 },
            ],
            gender: BTreeMap::from([(Gender::Female, 0.51), (Gender::Male, 0.49)]),
            education: BTreeMap::from([
                (Education::Primary, 0.10),
                (Education::Secondary, 0.40),
                (Education::Tertiary, 0.35),
                (Education::Postgraduate, 0.15),
            ]),
            income: BTreeMap::from([
                (IncomeBracket::Low, 0.30),
                (IncomeBracket::Middle, 0.50),
                (IncomeBracket::High, 0.20),
            ]),
            employment: BTreeMap::from([
                (Employment::Employed, 0.55),
                (Employment::SelfEmployed, 0.10),
                (Employment::Unemployed, 0.07),
                (Employment::Student, 0.13),
                (Employment::Retired, 0.15),
            ]),
        }
    }
}

/// Everything needed to synthesize a population deterministically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PopulationSpec {
    pub n: u32,
    pub demographics: DemographicDistributions,
    pub traits: TraitParams,
    pub seed: u64,
}

impl Default for PopulationSpec {
    fn default() -> Self {
        Self {
            n: 104,
            demographics: DemographicDistributions::default(),
            traits: TraitParams::default(),
            seed: 0,
        }
    }
}

fn check_table<K: fmt::Debug>(field: &str, table: &BTreeMap<K, f64>) -> Result<()> {
    let mut sum = 0.0;
    for (key, p) in table {
        if !p.is_finite() || *p < 0.0 {
            return Err(Error::InvalidSpec(format!(
                "{field} probability for {key:?} is {p}, must be a finite non-negative number"
            )));
        }
        sum += p;
    }
    if (sum - 1.0).abs() > PROB_SUM_TOL {
        return Err(Error::InvalidSpec(format!(
            "{field} probabilities sum to {sum}, expected 1.0"
        )));
    }
    Ok(())
}

impl PopulationSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(Error::InvalidSpec("population size n must be at least 1".into()));
        }
        if self.demographics.age.is_empty() {
            return Err(Error::InvalidSpec("age distribution has no buckets".into()));
        }
        let mut age_sum = 0.0;
        for bucket in &self.demographics.age {
            if bucket.min < 18 || bucket.max > 80 || bucket.min > bucket.max {
                return Err(Error::InvalidSpec(format!(
                    "age bucket {}-{} outside the valid 18-80 range",
                    bucket.min, bucket.max
                )));
            }
            if !bucket.p.is_finite() || bucket.p < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "age bucket {}-{} has invalid probability {}",
                    bucket.min, bucket.max, bucket.p
                )));
            }
            age_sum += bucket.p;
        }
        if (age_sum - 1.0).abs() > PROB_SUM_TOL {
            return Err(Error::InvalidSpec(format!(
                "age probabilities sum to {age_sum}, expected 1.0"
            )));
        }
        check_table("gender", &self.demographics.gender)?;
        check_table("education", &self.demographics.education)?;
        check_table("income", &self.demographics.income)?;
        check_table("employment", &self.demographics.employment)?;
        for (name, params) in TraitName::ALL.iter().zip(self.traits.as_array()) {
            if !params.mean.is_finite() {
                return Err(Error::InvalidSpec(format!("{name} mean is not finite")));
            }
            if !params.sd.is_finite() || params.sd < 0.0 {
                return Err(Error::InvalidSpec(format!(
                    "{name} standard deviation is {}, must be non-negative",
                    params.sd
                )));
            }
        }
        Ok(())
    }
}

fn weighted_choice<K: Copy + Ord>(
    rng: &mut impl Rng,
    categories: &[K],
    table: &BTreeMap<K, f64>,
) -> K {
    // validate() has already checked the table, so construction cannot fail.
    let weights: Vec<f64> = categories.iter().map(|c| table.get(c).copied().unwrap_or(0.0)).collect();
    let index = WeightedIndex::new(&weights).expect("validated probability table");
    categories[index.sample(rng)]
}

/// Synthesizes exactly `spec.n` agents, a pure function of the spec (which
/// includes the seed). Traits are drawn from per-trait Gaussians and clamped
/// to `[1, 7]`; clamping rather than resampling keeps the seed stream aligned
/// no matter how extreme a draw is.
pub fn sample_population(spec: &PopulationSpec) -> Result<Vec<AgentProfile>> {
    spec.validate()?;
    let mut rng = rng_from_seed(spec.seed);
    let trait_params = spec.traits.as_array();
    let normals: Vec<Normal<f64>> = trait_params
        .iter()
        .map(|g| Normal::new(g.mean, g.sd).expect("validated gaussian params"))
        .collect();

    let mut profiles = Vec::with_capacity(spec.n as usize);
    for id in 0..spec.n {
        let bucket_weights: Vec<f64> = spec.demographics.age.iter().map(|b| b.p).collect();
        let bucket_index = WeightedIndex::new(&bucket_weights)
            .expect("validated probability table")
            .sample(&mut rng);
        let bucket = spec.demographics.age[bucket_index];
        let age = rng.random_range(bucket.min..=bucket.max);

        let demographics = Demographics {
            age,
            gender: weighted_choice(&mut rng, &Gender::ALL, &spec.demographics.gender),
            education: weighted_choice(&mut rng, &Education::ALL, &spec.demographics.education),
            income: weighted_choice(&mut rng, &IncomeBracket::ALL, &spec.demographics.income),
            employment: weighted_choice(&mut rng, &Employment::ALL, &spec.demographics.employment),
        };

        let mut values = [0.0; 9];
        for (slot, normal) in values.iter_mut().zip(&normals) {
            *slot = normal.sample(&mut rng).clamp(TRAIT_MIN, TRAIT_MAX);
        }
        let traits = TraitVector::from_array(values);

        let mut profile = AgentProfile { id, demographics, traits, persona: String::new() };
        profile.persona = render_persona(&profile);
        profiles.push(profile);
    }
    Ok(profiles)
}

/// Qualitative level of a trait score: below 3 is low, above 5 is high,
/// everything between (inclusive) is moderate.
pub fn trait_level(value: f64) -> &'static str {
    if value < 3.0 {
        "low"
    } else if value > 5.0 {
        "high"
    } else {
        "moderate"
    }
}

/// Renders the profile into the persona text used as the agent's identity in
/// every prompt. Deterministic: identical profiles yield byte-identical text.
pub fn render_persona(profile: &AgentProfile) -> String {
    let d = &profile.demographics;
    let mut out = String::with_capacity(768);
    out.push_str(&format!(
        "You are a {}-year-old {}. Your education level is {}. \
         Your household income falls in the {} bracket. You are {}.",
        d.age,
        d.gender.label(),
        d.education.label(),
        d.income.label(),
        d.employment.persona_phrase(),
    ));
    out.push_str(" Psychologically, you know yourself as follows.");
    for (name, value) in TraitName::ALL.iter().zip(profile.traits.as_array()) {
        out.push_str(&format!(
            " Your {} is {} ({:.1} on a 1-to-7 scale).",
            name.label(),
            trait_level(value),
            value
        ));
    }
    out
}
