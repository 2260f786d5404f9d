//! Study orchestration: baseline elicitation, policy runs, and the networked
//! inequity-contagion dynamics.
//!
//! Dynamics steps are snapshot-synchronous: every decision at time `t` reads
//! only the `t - 1` state, so per-agent work can run in any order (or
//! concurrently) without changing the trace. States swap atomically between
//! steps; a failed decision aborts the whole step rather than leaving a
//! partially updated population.

use std::io::BufRead;

use serde::{Deserialize, Serialize};

use crate::decision::{
    decide, update_unfairness, DecisionBackend, DecisionContext, DecisionRequest, QueryKind,
    SyntheticParams,
};
use crate::error::{Error, Result};
use crate::policy::{
    assign_inequity, render_inequity_context, InequityCondition, InequityKind, PolicyIntervention,
};
use crate::population::{sample_population, AgentProfile, PopulationSpec};
use crate::rng::derive_seed;
use crate::scenario::{build_scenario_prompt, Scenario};
use crate::socialnet::{activate_edges, active_neighbors, watts_strogatz, Graph};

/// Trace format marker written into every header.
pub const TRACE_FORMAT: u32 = 1;

/// Small-world parameters; the node count always equals the population size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NetworkParams {
    pub k: u32,
    pub rewiring_probability: f64,
}

impl Default for NetworkParams {
    fn default() -> Self {
        Self { k: 6, rewiring_probability: 0.2 }
    }
}

/// Which inequity condition a dynamics run imposes. Reward and burden
/// asymmetry are tested separately, never together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequitySpec {
    pub kind: InequityKind,
    pub fraction: f64,
}

impl Default for InequitySpec {
    fn default() -> Self {
        Self { kind: InequityKind::BurdenAsymmetry, fraction: 0.2 }
    }
}

/// Full description of a simulation run. Every random stream derives from
/// `master_seed`; the `seed` field inside `population` is overridden with the
/// derived population sub-seed so one master seed pins the entire run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimulationConfig {
    pub population: PopulationSpec,
    pub network: NetworkParams,
    /// Number of dynamics iterations T.
    pub iterations: u32,
    /// Fraction of edges activated each round.
    pub activation_fraction: f64,
    /// Inequity condition for dynamics runs; `None` runs a neutral dynamics.
    pub inequity: Option<InequitySpec>,
    /// Synthetic oracle calibration; also supplies the unfairness-state
    /// update rule for every backend.
    pub synthetic: SyntheticParams,
    pub master_seed: u64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            population: PopulationSpec::default(),
            network: NetworkParams::default(),
            iterations: 30,
            activation_fraction: 0.1,
            inequity: Some(InequitySpec::default()),
            synthetic: SyntheticParams::default(),
            master_seed: 42,
        }
    }
}

/// Sub-seeds derived from the master seed, one label per consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResolvedSeeds {
    pub population: u64,
    pub network: u64,
    pub activation: u64,
    pub inequity: u64,
    pub shuffle: u64,
}

impl ResolvedSeeds {
    pub fn from_master(master: u64) -> Self {
        Self {
            population: derive_seed(master, "population"),
            network: derive_seed(master, "network"),
            activation: derive_seed(master, "activation"),
            inequity: derive_seed(master, "inequity"),
            shuffle: derive_seed(master, "shuffle"),
        }
    }
}

impl SimulationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidSpec("iterations must be at least 1".into()));
        }
        if !(self.activation_fraction > 0.0 && self.activation_fraction <= 1.0) {
            return Err(Error::InvalidSpec(format!(
                "activation fraction must lie in (0, 1], got {}",
                self.activation_fraction
            )));
        }
        if let Some(inequity) = &self.inequity {
            if !(0.0..=1.0).contains(&inequity.fraction) {
                return Err(Error::InvalidSpec(format!(
                    "inequity fraction must lie in [0, 1], got {}",
                    inequity.fraction
                )));
            }
        }
        self.population.validate()?;
        self.synthetic.validate()?;
        Ok(())
    }

    pub fn seeds(&self) -> ResolvedSeeds {
        ResolvedSeeds::from_master(self.master_seed)
    }

    /// The population spec with the derived population sub-seed applied.
    pub fn resolved_population(&self) -> PopulationSpec {
        PopulationSpec { seed: self.seeds().population, ..self.population.clone() }
    }
}

/// One agent's live state during a dynamics run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentState {
    pub intentions: [u8; 6],
    pub unfairness: f64,
    pub directly_affected: bool,
    pub ever_exposed: bool,
}

impl AgentState {
    pub fn tendency(&self) -> f64 {
        self.intentions.iter().map(|v| f64::from(*v)).sum::<f64>() / 6.0
    }
}

/// Per-agent row of an iteration record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub intentions: [u8; 6],
    pub unfairness: f64,
    pub directly_affected: bool,
    pub indirectly_exposed: bool,
    pub ever_exposed: bool,
    pub tendency: f64,
}

/// One timestep of a dynamics run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    pub t: u32,
    pub active_edges: Vec<(u32, u32)>,
    pub agents: Vec<AgentRecord>,
}

/// Trace header: everything needed to replay or resume the run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceHeader {
    pub trace_format: u32,
    pub config: SimulationConfig,
    pub seeds: ResolvedSeeds,
    pub graph_edges: Vec<(u32, u32)>,
    pub affected: Vec<u32>,
    /// State at t = 0: baseline intentions, unit unfairness, exposure flags.
    pub initial: Vec<AgentState>,
}

/// A full or partial dynamics run: header plus one record per iteration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub header: TraceHeader,
    pub records: Vec<IterationRecord>,
}

impl Trace {
    /// JSONL encoding: header line followed by one line per record.
    /// Byte-stable for a given trace.
    pub fn to_jsonl(&self) -> Result<String> {
        let mut out = serde_json::to_string(&self.header)?;
        out.push('\n');
        for record in &self.records {
            out.push_str(&serde_json::to_string(record)?);
            out.push('\n');
        }
        Ok(out)
    }

    pub fn from_jsonl(reader: impl BufRead) -> Result<Self> {
        let mut lines = reader.lines();
        let header_line = lines
            .next()
            .ok_or_else(|| Error::InvalidTrace("empty trace file".into()))??;
        let header: TraceHeader = serde_json::from_str(&header_line)?;
        if header.trace_format != TRACE_FORMAT {
            return Err(Error::InvalidTrace(format!(
                "unsupported trace format {}, expected {TRACE_FORMAT}",
                header.trace_format
            )));
        }
        let mut records = Vec::new();
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            records.push(serde_json::from_str::<IterationRecord>(&line)?);
        }
        let trace = Self { header, records };
        trace.check_contiguous()?;
        Ok(trace)
    }

    fn check_contiguous(&self) -> Result<()> {
        for (i, record) in self.records.iter().enumerate() {
            if record.t != i as u32 + 1 {
                return Err(Error::InvalidTrace(format!(
                    "record {i} carries t = {}, expected {}",
                    record.t,
                    i + 1
                )));
            }
            if record.agents.len() != self.header.initial.len() {
                return Err(Error::InvalidTrace(format!(
                    "record t = {} has {} agents, expected {}",
                    record.t,
                    record.agents.len(),
                    self.header.initial.len()
                )));
            }
        }
        if self.records.len() as u32 > self.header.config.iterations {
            return Err(Error::InvalidTrace(format!(
                "trace holds {} records but the config runs only {} iterations",
                self.records.len(),
                self.header.config.iterations
            )));
        }
        Ok(())
    }

    pub fn is_complete(&self) -> bool {
        self.records.len() as u32 == self.header.config.iterations
    }

    /// Reconstructs the agent states as of the last recorded iteration.
    pub fn last_states(&self) -> Vec<AgentState> {
        match self.records.last() {
            None => self.header.initial.clone(),
            Some(record) => record
                .agents
                .iter()
                .map(|a| AgentState {
                    intentions: a.intentions,
                    unfairness: a.unfairness,
                    directly_affected: a.directly_affected,
                    ever_exposed: a.ever_exposed,
                })
                .collect(),
        }
    }
}

/// Baseline responses: one row of six scenario ratings per agent.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResponseTable {
    pub values: Vec<[u8; 6]>,
}

impl ResponseTable {
    pub fn n_agents(&self) -> usize {
        self.values.len()
    }
}

/// Policy-study responses: for each policy (catalog order), one baseline-shaped
/// table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolicyTable {
    pub tables: Vec<ResponseTable>,
}

/// Runs one agent range in parallel with at most `jobs` workers, preserving
/// index order in the output. Results depend only on each index, never on
/// scheduling.
fn map_agents<T, F>(n: usize, jobs: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync,
{
    if jobs <= 1 || n <= 1 {
        return (0..n).map(f).collect();
    }
    let workers = jobs.min(n);
    let chunk = n.div_ceil(workers);
    let mut chunks: Vec<Result<Vec<T>>> = Vec::with_capacity(workers);
    std::thread::scope(|scope| {
        let handles: Vec<_> = (0..workers)
            .map(|w| {
                let f = &f;
                scope.spawn(move || {
                    let start = w * chunk;
                    let end = ((w + 1) * chunk).min(n);
                    (start..end).map(f).collect::<Result<Vec<T>>>()
                })
            })
            .collect();
        for handle in handles {
            chunks.push(handle.join().expect("agent worker panicked"));
        }
    });
    let mut out = Vec::with_capacity(n);
    for chunk in chunks {
        out.extend(chunk?);
    }
    Ok(out)
}

fn elicit_intention(
    backend: &dyn DecisionBackend,
    agent: &AgentProfile,
    scenario: &Scenario,
    scenario_index: usize,
    context_text: Option<&str>,
    policy_index: Option<usize>,
    observations: Option<&[(u32, u8)]>,
    prior: Option<u8>,
    unfairness: f64,
    round: u32,
) -> Result<u8> {
    let prompt = build_scenario_prompt(scenario, &agent.persona, context_text, observations, prior);
    let neighbor_mean = observations.and_then(|obs| {
        if obs.is_empty() {
            None
        } else {
            Some(obs.iter().map(|(_, v)| f64::from(*v)).sum::<f64>() / obs.len() as f64)
        }
    });
    let request = DecisionRequest {
        agent,
        query: QueryKind::ScenarioIntention,
        prompt,
        round,
        context: DecisionContext {
            scenario_index: Some(scenario_index),
            policy_index,
            prior,
            neighbor_mean,
            unfairness,
            allocation: None,
            cost: None,
        },
    };
    let response = decide(backend, &request).map_err(|e| Error::DecisionFailed {
        agent: agent.id,
        unit: format!("scenario {}, round {round}", scenario.kind.label()),
        source: Box::new(e),
    })?;
    Ok(response.likert.expect("validated likert response"))
}

/// Neutral elicitation: one intention per (agent, scenario) with no policy,
/// no observations, no unfairness.
pub fn run_baseline(
    population: &[AgentProfile],
    scenarios: &[Scenario],
    backend: &dyn DecisionBackend,
    jobs: usize,
) -> Result<ResponseTable> {
    if population.is_empty() {
        return Err(Error::InvalidSpec("population is empty".into()));
    }
    let values = map_agents(population.len(), jobs, |i| {
        let agent = &population[i];
        let mut row = [0u8; 6];
        for (s, scenario) in scenarios.iter().enumerate() {
            row[s] =
                elicit_intention(backend, agent, scenario, s, None, None, None, None, 1.0, 0)?;
        }
        Ok(row)
    })?;
    Ok(ResponseTable { values })
}

/// Policy study: the baseline design repeated once per intervention, with the
/// policy block added to every prompt.
pub fn run_policy_study(
    population: &[AgentProfile],
    scenarios: &[Scenario],
    policies: &[PolicyIntervention],
    backend: &dyn DecisionBackend,
    jobs: usize,
) -> Result<PolicyTable> {
    if population.is_empty() {
        return Err(Error::InvalidSpec("population is empty".into()));
    }
    let mut tables = Vec::with_capacity(policies.len());
    for (p, policy) in policies.iter().enumerate() {
        let values = map_agents(population.len(), jobs, |i| {
            let agent = &population[i];
            let mut row = [0u8; 6];
            for (s, scenario) in scenarios.iter().enumerate() {
                row[s] = elicit_intention(
                    backend,
                    agent,
                    scenario,
                    s,
                    Some(&policy.text),
                    Some(p),
                    None,
                    None,
                    1.0,
                    0,
                )?;
            }
            Ok(row)
        })?;
        tables.push(ResponseTable { values });
    }
    Ok(PolicyTable { tables })
}

/// A fully resolved dynamics run bound to a backend.
pub struct Engine<'a> {
    config: SimulationConfig,
    seeds: ResolvedSeeds,
    population: Vec<AgentProfile>,
    graph: Graph,
    inequity: Option<InequityCondition>,
    scenarios: Vec<Scenario>,
    backend: &'a dyn DecisionBackend,
    /// Unfairness-update parameters, already scaled for the inequity kind.
    u_params: SyntheticParams,
    jobs: usize,
}

impl<'a> Engine<'a> {
    /// Builds population, graph, and inequity assignment from the config's
    /// derived sub-seeds.
    pub fn new(
        config: SimulationConfig,
        scenarios: Vec<Scenario>,
        backend: &'a dyn DecisionBackend,
        jobs: usize,
    ) -> Result<Self> {
        config.validate()?;
        crate::scenario::validate_catalog(&scenarios)?;
        let seeds = config.seeds();
        let population = sample_population(&config.resolved_population())?;
        let n = population.len() as u32;
        let graph =
            watts_strogatz(n, config.network.k, config.network.rewiring_probability, seeds.network)?;
        let inequity = match &config.inequity {
            Some(spec) => Some(assign_inequity(n, spec.kind, spec.fraction, seeds.inequity)?),
            None => None,
        };
        let u_params = config.synthetic.for_inequity_kind(inequity.as_ref().map(|c| c.kind));
        Ok(Self {
            config,
            seeds,
            population,
            graph,
            inequity,
            scenarios,
            backend,
            u_params,
            jobs: jobs.max(1),
        })
    }

    /// Rebuilds an engine from a trace header so an interrupted run can
    /// continue. The graph is taken verbatim from the header rather than
    /// regenerated.
    pub fn from_header(
        header: &TraceHeader,
        backend: &'a dyn DecisionBackend,
        jobs: usize,
    ) -> Result<Self> {
        let config = header.config.clone();
        config.validate()?;
        let scenarios = crate::scenario::scenario_catalog();
        let population = sample_population(&config.resolved_population())?;
        let n = population.len() as u32;
        if header.initial.len() != population.len() {
            return Err(Error::InvalidTrace(format!(
                "header holds {} initial states for a population of {}",
                header.initial.len(),
                population.len()
            )));
        }
        let graph = Graph::from_edges(n, &header.graph_edges)?;
        let inequity = match &config.inequity {
            Some(spec) => Some(InequityCondition {
                kind: spec.kind,
                affected: header.affected.iter().copied().collect(),
                fraction: spec.fraction,
                seed: header.seeds.inequity,
            }),
            None => None,
        };
        let u_params = config.synthetic.for_inequity_kind(inequity.as_ref().map(|c| c.kind));
        Ok(Self {
            config,
            seeds: header.seeds,
            population,
            graph,
            inequity,
            scenarios,
            backend,
            u_params,
            jobs: jobs.max(1),
        })
    }

    pub fn population(&self) -> &[AgentProfile] {
        &self.population
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn config(&self) -> &SimulationConfig {
        &self.config
    }

    /// State at t = 0: baseline intentions, unfairness 1, and the inequity
    /// assignment applied. Directly affected agents count as exposed from the
    /// start.
    pub fn initial_state(&self) -> Result<Vec<AgentState>> {
        let baseline = run_baseline(&self.population, &self.scenarios, self.backend, self.jobs)?;
        Ok(baseline
            .values
            .iter()
            .enumerate()
            .map(|(i, intentions)| {
                let affected =
                    self.inequity.as_ref().is_some_and(|c| c.is_affected(i as u32));
                AgentState {
                    intentions: *intentions,
                    unfairness: 1.0,
                    directly_affected: affected,
                    ever_exposed: affected,
                }
            })
            .collect())
    }

    fn header(&self, initial: Vec<AgentState>) -> TraceHeader {
        TraceHeader {
            trace_format: TRACE_FORMAT,
            config: self.config.clone(),
            seeds: self.seeds,
            graph_edges: self.graph.edges().to_vec(),
            affected: self
                .inequity
                .as_ref()
                .map(|c| c.affected.iter().copied().collect())
                .unwrap_or_default(),
            initial,
        }
    }

    fn agent_step(
        &self,
        prev: &[AgentState],
        subset: &crate::socialnet::EdgeSubset,
        i: usize,
        t: u32,
    ) -> Result<(AgentState, AgentRecord)> {
        let agent = &self.population[i];
        let state = &prev[i];
        let neighbors = active_neighbors(&self.graph, subset, i as u32)?;
        let indirectly_exposed =
            neighbors.iter().any(|&j| prev[j as usize].ever_exposed);
        let unfairness = update_unfairness(
            &self.u_params,
            state.unfairness,
            state.directly_affected,
            indirectly_exposed,
        );
        let context_text = self
            .inequity
            .as_ref()
            .map(|c| render_inequity_context(c, agent.id, agent.demographics.income));

        let mut intentions = [0u8; 6];
        for (s, scenario) in self.scenarios.iter().enumerate() {
            let observations: Vec<(u32, u8)> =
                neighbors.iter().map(|&j| (j, prev[j as usize].intentions[s])).collect();
            let observations = if observations.is_empty() { None } else { Some(&observations[..]) };
            intentions[s] = elicit_intention(
                self.backend,
                agent,
                scenario,
                s,
                context_text.as_deref(),
                None,
                observations,
                Some(state.intentions[s]),
                unfairness,
                t,
            )?;
        }

        let next = AgentState {
            intentions,
            unfairness,
            directly_affected: state.directly_affected,
            ever_exposed: state.ever_exposed || state.directly_affected || indirectly_exposed,
        };
        let record = AgentRecord {
            intentions,
            unfairness,
            directly_affected: next.directly_affected,
            indirectly_exposed,
            ever_exposed: next.ever_exposed,
            tendency: next.tendency(),
        };
        Ok((next, record))
    }

    /// Advances one timestep: activates edges, computes indirect exposure
    /// from the previous snapshot, updates unfairness, elicits all intentions
    /// against the snapshot, then swaps states atomically.
    pub fn step(&self, prev: &[AgentState], t: u32) -> Result<(Vec<AgentState>, IterationRecord)> {
        let subset =
            activate_edges(&self.graph, self.config.activation_fraction, t, self.seeds.activation)?;
        let results = map_agents(prev.len(), self.jobs, |i| self.agent_step(prev, &subset, i, t))?;
        let mut states = Vec::with_capacity(results.len());
        let mut agents = Vec::with_capacity(results.len());
        for (state, record) in results {
            states.push(state);
            agents.push(record);
        }
        Ok((states, IterationRecord { t, active_edges: subset.active, agents }))
    }

    /// Identical to [`Engine::step`] but evaluates agents sequentially in the
    /// given order. Snapshot semantics guarantee the result does not depend
    /// on that order; tests permute it to verify exactly that.
    pub fn step_with_order(
        &self,
        prev: &[AgentState],
        t: u32,
        order: &[usize],
    ) -> Result<(Vec<AgentState>, IterationRecord)> {
        let n = prev.len();
        let mut seen = vec![false; n];
        for &i in order {
            if i >= n || seen[i] {
                return Err(Error::InvalidParameters(
                    "evaluation order must be a permutation of the agent indices".into(),
                ));
            }
            seen[i] = true;
        }
        if order.len() != n {
            return Err(Error::InvalidParameters(
                "evaluation order must cover every agent exactly once".into(),
            ));
        }
        let subset =
            activate_edges(&self.graph, self.config.activation_fraction, t, self.seeds.activation)?;
        let mut slots: Vec<Option<(AgentState, AgentRecord)>> = vec![None; n];
        for &i in order {
            slots[i] = Some(self.agent_step(prev, &subset, i, t)?);
        }
        let mut states = Vec::with_capacity(n);
        let mut agents = Vec::with_capacity(n);
        for slot in slots {
            let (state, record) = slot.expect("all slots filled by permutation");
            states.push(state);
            agents.push(record);
        }
        Ok((states, IterationRecord { t, active_edges: subset.active, agents }))
    }

    /// Runs the full dynamics study: baseline state at t = 0, then
    /// `iterations` sequential steps.
    pub fn run_dynamics(&self) -> Result<Trace> {
        let initial = self.initial_state()?;
        let header = self.header(initial.clone());
        let mut trace = Trace { header, records: Vec::with_capacity(self.config.iterations as usize) };
        let mut states = initial;
        for t in 1..=self.config.iterations {
            let (next, record) = self.step(&states, t)?;
            states = next;
            trace.records.push(record);
        }
        Ok(trace)
    }

    /// Continues a partial trace to completion. The returned trace extends
    /// the input byte-for-byte: replaying from round `k + 1` reproduces what
    /// an uninterrupted run would have written.
    pub fn resume(&self, partial: Trace) -> Result<Trace> {
        if partial.header.config != self.config {
            return Err(Error::InvalidTrace(
                "trace header config does not match the engine config".into(),
            ));
        }
        let mut trace = partial;
        let mut states = trace.last_states();
        for t in (trace.records.len() as u32 + 1)..=self.config.iterations {
            let (next, record) = self.step(&states, t)?;
            states = next;
            trace.records.push(record);
        }
        Ok(trace)
    }
}

/// Convenience entry point: build an engine with the default scenario catalog
/// and run the dynamics study.
pub fn run_dynamics(
    config: SimulationConfig,
    backend: &dyn DecisionBackend,
    jobs: usize,
) -> Result<Trace> {
    Engine::new(config, crate::scenario::scenario_catalog(), backend, jobs)?.run_dynamics()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{DecisionResponse, SyntheticBackend};
    use crate::scenario::scenario_catalog;

    fn synthetic() -> SyntheticBackend {
        SyntheticBackend::new(SyntheticParams::default()).unwrap()
    }

    fn small_config(n: u32, iterations: u32) -> SimulationConfig {
        SimulationConfig {
            population: PopulationSpec { n, seed: 0, ..PopulationSpec::default() },
            iterations,
            ..SimulationConfig::default()
        }
    }

    #[test]
    fn baseline_shape_and_determinism() {
        let backend = synthetic();
        let config = small_config(104, 1);
        let population = sample_population(&config.resolved_population()).unwrap();
        let scenarios = scenario_catalog();
        let table = run_baseline(&population, &scenarios, &backend, 1).unwrap();
        assert_eq!(table.n_agents(), 104);
        assert_eq!(table.values.len() * 6, 624);
        let again = run_baseline(&population, &scenarios, &backend, 1).unwrap();
        assert_eq!(table, again);
    }

    #[test]
    fn baseline_symmetry_case() {
        // all traits 4, zero offsets, intercept 4 -> every response is 4
        let params = SyntheticParams {
            intercept: 4.0,
            scenario_offsets: [0.0; 6],
            policy_offsets: [0.0; 4],
            ..SyntheticParams::default()
        };
        let backend = SyntheticBackend::new(params.clone()).unwrap();
        let mut config = small_config(10, 1);
        config.population.traits = crate::population::TraitParams::uniform(4.0, 0.0);
        config.synthetic = params;
        let population = sample_population(&config.resolved_population()).unwrap();
        let table = run_baseline(&population, &scenario_catalog(), &backend, 1).unwrap();
        for row in &table.values {
            assert_eq!(row, &[4u8; 6]);
        }
    }

    #[test]
    fn policy_study_offsets_shift_responses() {
        let base_params = SyntheticParams {
            intercept: 3.0,
            scenario_offsets: [0.0; 6],
            policy_offsets: [0.0, 1.0, 0.0, 0.0],
            ..SyntheticParams::default()
        };
        let backend = SyntheticBackend::new(base_params.clone()).unwrap();
        let mut config = small_config(8, 1);
        config.population.traits = crate::population::TraitParams::uniform(4.0, 0.0);
        let population = sample_population(&config.resolved_population()).unwrap();
        let scenarios = scenario_catalog();
        let policies = crate::policy::policy_catalog();

        let baseline = run_baseline(&population, &scenarios, &backend, 1).unwrap();
        let study = run_policy_study(&population, &scenarios, &policies, &backend, 1).unwrap();
        assert_eq!(study.tables.len(), 4);

        // zero-offset policies replicate the baseline
        assert_eq!(study.tables[0], baseline);
        assert_eq!(study.tables[2], baseline);
        // the +1 offset shifts every response by one point
        for (policy_row, base_row) in study.tables[1].values.iter().zip(&baseline.values) {
            for (p, b) in policy_row.iter().zip(base_row) {
                assert_eq!(*p, b + 1);
            }
        }
    }

    #[test]
    fn no_inequity_zero_conformity_is_a_fixed_point() {
        let params = SyntheticParams { conformity: 0.0, ..SyntheticParams::default() };
        let backend = SyntheticBackend::new(params.clone()).unwrap();
        let mut config = small_config(20, 3);
        config.inequity = None;
        config.synthetic = params;
        let engine = Engine::new(config, scenario_catalog(), &backend, 1).unwrap();
        let trace = engine.run_dynamics().unwrap();
        let initial = &trace.header.initial;
        for record in &trace.records {
            for (agent, init) in record.agents.iter().zip(initial) {
                assert_eq!(agent.intentions, init.intentions);
                assert_eq!(agent.unfairness, 1.0);
                assert!(!agent.ever_exposed);
            }
        }
    }

    #[test]
    fn exposure_spreads_along_a_path() {
        // 4-node path 0-1-2-3 with full activation. Agent 1 is directly
        // affected. After step 1 its graph neighbors 0 and 2 are exposed;
        // agent 3 only after observing agent 2 in step 2.
        struct FixedBackend;
        impl DecisionBackend for FixedBackend {
            fn name(&self) -> &str {
                "fixed"
            }
            fn decide(&self, request: &DecisionRequest<'_>) -> crate::Result<DecisionResponse> {
                Ok(DecisionResponse {
                    likert: Some(4),
                    punish: None,
                    raw_text: "4".into(),
                    backend_name: "fixed".into(),
                    latency_ms: 0,
                })
                .map(|mut r| {
                    if request.query == QueryKind::PunishChoice {
                        r.likert = None;
                        r.punish = Some(false);
                    }
                    r
                })
            }
        }

        let backend = FixedBackend;
        let config = SimulationConfig {
            population: PopulationSpec { n: 4, seed: 0, ..PopulationSpec::default() },
            network: NetworkParams { k: 2, rewiring_probability: 0.0 },
            iterations: 2,
            activation_fraction: 1.0,
            inequity: Some(InequitySpec { kind: InequityKind::RewardAsymmetry, fraction: 0.25 }),
            ..SimulationConfig::default()
        };
        let engine = Engine::new(config.clone(), scenario_catalog(), &backend, 1).unwrap();

        // Override the sampled structures with the hand-built path setup.
        let graph = Graph::from_edges(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        let inequity = InequityCondition {
            kind: InequityKind::RewardAsymmetry,
            affected: std::collections::BTreeSet::from([1]),
            fraction: 0.25,
            seed: 0,
        };
        let engine = Engine { graph, inequity: Some(inequity), ..engine };

        let initial = engine.initial_state().unwrap();
        assert!(initial[1].ever_exposed && initial[1].directly_affected);
        assert!(!initial[0].ever_exposed && !initial[3].ever_exposed);

        let (after_1, record_1) = engine.step(&initial, 1).unwrap();
        assert!(after_1[0].ever_exposed && after_1[2].ever_exposed);
        assert!(!after_1[3].ever_exposed, "two hops in one step is impossible");
        assert!(record_1.agents[0].indirectly_exposed);
        assert!(!record_1.agents[3].indirectly_exposed);

        let (after_2, _) = engine.step(&after_1, 2).unwrap();
        assert!(after_2[3].ever_exposed);
    }

    #[test]
    fn agent_with_unexposed_neighbors_is_not_indirectly_exposed() {
        let backend = synthetic();
        let mut config = small_config(20, 1);
        config.inequity = Some(InequitySpec { kind: InequityKind::BurdenAsymmetry, fraction: 0.2 });
        config.activation_fraction = 1.0;
        let engine = Engine::new(config, scenario_catalog(), &backend, 1).unwrap();
        let initial = engine.initial_state().unwrap();
        let (_, record) = engine.step(&initial, 1).unwrap();
        let affected: Vec<usize> = initial
            .iter()
            .enumerate()
            .filter_map(|(i, s)| s.directly_affected.then_some(i))
            .collect();
        for (i, row) in record.agents.iter().enumerate() {
            let has_affected_neighbor = engine
                .graph
                .neighbors(i as u32)
                .unwrap()
                .iter()
                .any(|&j| affected.contains(&(j as usize)));
            assert_eq!(row.indirectly_exposed, has_affected_neighbor);
        }
    }

    #[test]
    fn single_iteration_yields_single_record() {
        let backend = synthetic();
        let config = small_config(12, 1);
        let trace = run_dynamics(config, &backend, 1).unwrap();
        assert_eq!(trace.records.len(), 1);
        assert!(trace.is_complete());
    }

    #[test]
    fn zero_iterations_rejected() {
        let backend = synthetic();
        let config = small_config(12, 0);
        assert!(matches!(run_dynamics(config, &backend, 1), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn no_inequity_means_no_exposure() {
        let backend = synthetic();
        let mut config = small_config(16, 5);
        config.inequity = None;
        let trace = run_dynamics(config, &backend, 1).unwrap();
        for record in &trace.records {
            assert!(record.agents.iter().all(|a| !a.ever_exposed));
        }
    }

    #[test]
    fn evaluation_order_does_not_change_the_step() {
        let backend = synthetic();
        let config = small_config(16, 1);
        let engine = Engine::new(config, scenario_catalog(), &backend, 1).unwrap();
        let initial = engine.initial_state().unwrap();
        let forward = engine.step(&initial, 1).unwrap();
        let reversed: Vec<usize> = (0..16).rev().collect();
        let backward = engine.step_with_order(&initial, 1, &reversed).unwrap();
        assert_eq!(forward, backward);

        let bad = engine.step_with_order(&initial, 1, &[0, 0, 1]);
        assert!(bad.is_err());
    }

    #[test]
    fn parallel_jobs_reproduce_the_sequential_trace() {
        let backend = synthetic();
        let sequential =
            Engine::new(small_config(20, 3), scenario_catalog(), &backend, 1).unwrap();
        let parallel = Engine::new(small_config(20, 3), scenario_catalog(), &backend, 4).unwrap();
        assert_eq!(
            sequential.run_dynamics().unwrap().to_jsonl().unwrap(),
            parallel.run_dynamics().unwrap().to_jsonl().unwrap()
        );
    }

    #[test]
    fn trace_round_trips_and_resumes() {
        let backend = synthetic();
        let config = small_config(14, 6);
        let engine = Engine::new(config, scenario_catalog(), &backend, 1).unwrap();
        let full = engine.run_dynamics().unwrap();
        let jsonl = full.to_jsonl().unwrap();

        let parsed = Trace::from_jsonl(jsonl.as_bytes()).unwrap();
        assert_eq!(parsed, full);

        // truncate to 2 records and resume
        let mut partial = parsed.clone();
        partial.records.truncate(2);
        let resumed = Engine::from_header(&partial.header, &backend, 1)
            .unwrap()
            .resume(partial)
            .unwrap();
        assert_eq!(resumed.to_jsonl().unwrap(), jsonl);
    }

    #[test]
    fn truncated_trace_parses_from_partial_file() {
        let backend = synthetic();
        let config = small_config(8, 4);
        let engine = Engine::new(config, scenario_catalog(), &backend, 1).unwrap();
        let full = engine.run_dynamics().unwrap();
        let jsonl = full.to_jsonl().unwrap();
        // keep header + first record only, as an interrupted run would
        let cut: String = jsonl.lines().take(2).map(|l| format!("{l}\n")).collect();
        let partial = Trace::from_jsonl(cut.as_bytes()).unwrap();
        assert_eq!(partial.records.len(), 1);
        assert!(!partial.is_complete());
    }
}
