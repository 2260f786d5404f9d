//! The third-party punishment game.
//!
//! Each trial shows the judge an allocation of a $30 pot: Player 1 offers
//! $x to Player 2 and keeps $(30 - x). The judge either accepts (the
//! allocation stands, judge earns the $10 reward) or pays $y to punish
//! (Player 1's earnings are eliminated, Player 2 keeps $x, judge keeps
//! $(10 - y)). Trials are stateless: every trial involves freshly assigned
//! virtual players and no reputation carries over.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::decision::{decide, DecisionBackend, DecisionContext, DecisionRequest, QueryKind};
use crate::error::{Error, Result};
use crate::population::AgentProfile;
use crate::rng::rng_from_seed;

/// Total pot Player 1 splits.
pub const POT: i64 = 30;
/// The judge's reward for serving.
pub const JUDGE_REWARD: i64 = 10;
/// Largest allocation in a valid trial (the equal split).
pub const MAX_ALLOCATION: u8 = 15;
/// Largest punishment cost in a valid trial.
pub const MAX_COST: u8 = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trial {
    /// 1-based position in the session.
    pub index: u32,
    /// Dollars offered to Player 2; at most the equal split.
    pub allocation: u8,
    /// Dollars the judge pays to punish.
    pub cost: u8,
}

impl Trial {
    pub fn validate(&self) -> Result<()> {
        if self.allocation > MAX_ALLOCATION {
            return Err(Error::InvalidParameters(format!(
                "allocation {} exceeds the equal split of {MAX_ALLOCATION}",
                self.allocation
            )));
        }
        if self.cost < 1 || self.cost > MAX_COST {
            return Err(Error::InvalidParameters(format!(
                "cost {} outside [1, {MAX_COST}]",
                self.cost
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Choice {
    Accept,
    Punish,
}

/// One judged trial with exact payoff accounting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub trial: Trial,
    pub choice: Choice,
    pub judge_payoff: i64,
    pub p1_payoff: i64,
    pub p2_payoff: i64,
}

/// The factorial trial grid: every (allocation, cost) pair, repeated, then
/// shuffled. `total_trials` pins the session length; the default 4x3x5 grid
/// yields the standard 60-trial session.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrialGrid {
    pub allocations: Vec<u8>,
    pub costs: Vec<u8>,
    pub repeats: usize,
    pub total_trials: usize,
}

impl Default for TrialGrid {
    fn default() -> Self {
        Self { allocations: vec![0, 5, 10, 15], costs: vec![1, 4, 7], repeats: 5, total_trials: 60 }
    }
}

impl TrialGrid {
    pub fn cells(&self) -> Vec<(u8, u8)> {
        let mut cells = Vec::with_capacity(self.allocations.len() * self.costs.len());
        for &x in &self.allocations {
            for &y in &self.costs {
                cells.push((x, y));
            }
        }
        cells
    }
}

/// Expands the grid into `total_trials` trials, shuffled deterministically by
/// seed. Errors when the grid arithmetic does not produce the requested
/// count or any value is out of bounds.
pub fn generate_trials(grid: &TrialGrid, seed: u64) -> Result<Vec<Trial>> {
    let product = grid.allocations.len() * grid.costs.len() * grid.repeats;
    if product != grid.total_trials {
        return Err(Error::GridMismatch { expected: grid.total_trials, actual: product });
    }
    let mut trials = Vec::with_capacity(product);
    for _ in 0..grid.repeats {
        for &(allocation, cost) in &grid.cells() {
            let trial = Trial { index: 0, allocation, cost };
            trial.validate()?;
            trials.push(trial);
        }
    }
    let mut rng = rng_from_seed(seed);
    trials.shuffle(&mut rng);
    for (position, trial) in trials.iter_mut().enumerate() {
        trial.index = position as u32 + 1;
    }
    Ok(trials)
}

/// Exact payoffs for a judged trial: `(judge, player1, player2)`.
pub fn payoff(trial: &Trial, choice: Choice) -> (i64, i64, i64) {
    let x = i64::from(trial.allocation);
    let y = i64::from(trial.cost);
    match choice {
        Choice::Accept => (JUDGE_REWARD, POT - x, x),
        Choice::Punish => (JUDGE_REWARD - y, 0, x),
    }
}

/// The prompt shown to the judge for one trial.
pub fn build_trial_prompt(trial: &Trial) -> String {
    let x = i64::from(trial.allocation);
    let y = i64::from(trial.cost);
    format!(
        "You are observing a one-time allocation between two strangers. Player 1 \
         was given ${POT} to split and offered ${x} to Player 2, keeping ${}. As an \
         independent judge you must choose one of two actions. ACCEPT: the \
         allocation stands and you receive a ${JUDGE_REWARD} reward. PUNISH: you pay \
         ${y} from that reward to eliminate Player 1's earnings entirely; Player 2 \
         keeps ${x} and you keep ${}.\n\nReply with a single word: ACCEPT or PUNISH.",
        POT - x,
        JUDGE_REWARD - y,
    )
}

/// Runs one judge through a trial list: one punish-choice decision per trial,
/// outcomes in trial order with exact payoffs. Trials are independent, so a
/// backend failure is reported with the trial index attached and aborts the
/// session.
pub fn run_tpp_session(
    backend: &dyn DecisionBackend,
    agent: &AgentProfile,
    trials: &[Trial],
) -> Result<Vec<TrialOutcome>> {
    let mut outcomes = Vec::with_capacity(trials.len());
    for trial in trials {
        trial.validate()?;
        let request = DecisionRequest {
            agent,
            query: QueryKind::PunishChoice,
            prompt: format!("{}\n\n{}", agent.persona, build_trial_prompt(trial)),
            round: trial.index,
            context: DecisionContext {
                allocation: Some(trial.allocation),
                cost: Some(trial.cost),
                ..DecisionContext::neutral()
            },
        };
        let response = decide(backend, &request).map_err(|e| Error::DecisionFailed {
            agent: agent.id,
            unit: format!("trial {}", trial.index),
            source: Box::new(e),
        })?;
        let choice = if response.punish.expect("validated punish response") {
            Choice::Punish
        } else {
            Choice::Accept
        };
        let (judge_payoff, p1_payoff, p2_payoff) = payoff(trial, choice);
        outcomes.push(TrialOutcome { trial: *trial, choice, judge_payoff, p1_payoff, p2_payoff });
    }
    Ok(outcomes)
}

/// Punishment rate and sample size of one (allocation, cost) cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellRate {
    pub rate: f64,
    pub n: usize,
}

/// Aggregates outcomes (typically pooled over many agents) into per-cell
/// punishment rates. Every requested cell must have at least one outcome.
pub fn punishment_rate_matrix(
    outcomes: &[TrialOutcome],
    cells: &[(u8, u8)],
) -> Result<BTreeMap<(u8, u8), CellRate>> {
    let mut counts: BTreeMap<(u8, u8), (usize, usize)> = BTreeMap::new();
    for outcome in outcomes {
        let entry = counts.entry((outcome.trial.allocation, outcome.trial.cost)).or_default();
        entry.1 += 1;
        if outcome.choice == Choice::Punish {
            entry.0 += 1;
        }
    }
    let mut matrix = BTreeMap::new();
    for &(allocation, cost) in cells {
        let (punished, total) = counts
            .get(&(allocation, cost))
            .copied()
            .ok_or(Error::EmptyCell { allocation, cost })?;
        matrix.insert((allocation, cost), CellRate { rate: punished as f64 / total as f64, n: total });
    }
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::decision::{SyntheticBackend, SyntheticParams};
    use crate::population::{sample_population, PopulationSpec};

    fn default_backend() -> SyntheticBackend {
        SyntheticBackend::new(SyntheticParams::default()).unwrap()
    }

    fn midpoint_agent() -> AgentProfile {
        crate::decision::test_support::midpoint_agent(0)
    }

    #[test]
    fn default_grid_yields_sixty_trials() {
        let trials = generate_trials(&TrialGrid::default(), 42).unwrap();
        assert_eq!(trials.len(), 60);
        let indices: Vec<u32> = trials.iter().map(|t| t.index).collect();
        assert_eq!(indices, (1..=60).collect::<Vec<_>>());
        // each cell appears exactly `repeats` times
        for cell in TrialGrid::default().cells() {
            let count =
                trials.iter().filter(|t| (t.allocation, t.cost) == cell).count();
            assert_eq!(count, 5);
        }
    }

    #[test]
    fn single_repeat_gives_each_pair_once() {
        let grid = TrialGrid { repeats: 1, total_trials: 12, ..TrialGrid::default() };
        let trials = generate_trials(&grid, 1).unwrap();
        assert_eq!(trials.len(), 12);
        let mut pairs: Vec<(u8, u8)> = trials.iter().map(|t| (t.allocation, t.cost)).collect();
        pairs.sort_unstable();
        pairs.dedup();
        assert_eq!(pairs.len(), 12);
    }

    #[test]
    fn shuffle_is_deterministic() {
        let grid = TrialGrid::default();
        assert_eq!(generate_trials(&grid, 7).unwrap(), generate_trials(&grid, 7).unwrap());
        assert_ne!(generate_trials(&grid, 7).unwrap(), generate_trials(&grid, 8).unwrap());
    }

    #[test]
    fn grid_mismatch_rejected() {
        let grid = TrialGrid { repeats: 4, ..TrialGrid::default() };
        assert!(matches!(
            generate_trials(&grid, 1),
            Err(Error::GridMismatch { expected: 60, actual: 48 })
        ));

        let out_of_bounds = TrialGrid {
            allocations: vec![0, 5, 10, 20],
            total_trials: 60,
            ..TrialGrid::default()
        };
        assert!(generate_trials(&out_of_bounds, 1).is_err());
    }

    #[test]
    fn payoff_exactness() {
        let t = |x, y| Trial { index: 1, allocation: x, cost: y };
        assert_eq!(payoff(&t(10, 3), Choice::Accept), (10, 20, 10));
        assert_eq!(payoff(&t(10, 3), Choice::Punish), (7, 0, 10));
        assert_eq!(payoff(&t(15, 1), Choice::Accept), (10, 15, 15));
    }

    #[test]
    fn payoff_conservation() {
        for x in 0..=15u8 {
            for y in 1..=10u8 {
                let t = Trial { index: 1, allocation: x, cost: y };
                let (j, p1, p2) = payoff(&t, Choice::Accept);
                assert_eq!(j + p1 + p2, POT + JUDGE_REWARD);
                let (j, p1, p2) = payoff(&t, Choice::Punish);
                assert_eq!(j + p1 + p2, JUDGE_REWARD - i64::from(y) + i64::from(x));
            }
        }
    }

    #[test]
    fn session_with_default_params() {
        let backend = default_backend();
        let agent = midpoint_agent();
        let trials = vec![
            Trial { index: 1, allocation: 0, cost: 1 },
            Trial { index: 2, allocation: 15, cost: 10 },
        ];
        let outcomes = run_tpp_session(&backend, &agent, &trials).unwrap();
        assert_eq!(outcomes[0].choice, Choice::Punish);
        assert_eq!(outcomes[1].choice, Choice::Accept);
        assert_eq!(outcomes[0].judge_payoff, 9);
        assert_eq!(outcomes[1].judge_payoff, 10);
    }

    #[test]
    fn session_preserves_trial_order_and_is_deterministic() {
        let backend = default_backend();
        let agent = midpoint_agent();
        let trials = generate_trials(&TrialGrid::default(), 3).unwrap();
        let a = run_tpp_session(&backend, &agent, &trials).unwrap();
        let b = run_tpp_session(&backend, &agent, &trials).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 60);
        for (outcome, trial) in a.iter().zip(&trials) {
            assert_eq!(outcome.trial, *trial);
        }
    }

    #[test]
    fn rate_matrix_edges() {
        let t = Trial { index: 1, allocation: 5, cost: 4 };
        let punished = TrialOutcome {
            trial: t,
            choice: Choice::Punish,
            judge_payoff: 6,
            p1_payoff: 0,
            p2_payoff: 5,
        };
        let matrix = punishment_rate_matrix(&[punished], &[(5, 4)]).unwrap();
        assert_eq!(matrix[&(5, 4)].rate, 1.0);
        assert_eq!(matrix[&(5, 4)].n, 1);

        let accepted = TrialOutcome { choice: Choice::Accept, ..punished };
        let matrix = punishment_rate_matrix(&[accepted], &[(5, 4)]).unwrap();
        assert_eq!(matrix[&(5, 4)].rate, 0.0);

        assert!(matches!(
            punishment_rate_matrix(&[punished], &[(0, 1)]),
            Err(Error::EmptyCell { allocation: 0, cost: 1 })
        ));
    }

    #[test]
    fn population_rates_monotone_along_both_axes() {
        // Pooled over a trait-heterogeneous population, rates must fall as
        // allocations grow fairer and as punishing grows costlier.
        let backend = default_backend();
        let spec = PopulationSpec { n: 104, seed: 11, ..PopulationSpec::default() };
        let population = sample_population(&spec).unwrap();
        let grid = TrialGrid::default();
        let trials = generate_trials(&grid, 5).unwrap();
        let mut all = Vec::new();
        for agent in &population {
            all.extend(run_tpp_session(&backend, agent, &trials).unwrap());
        }
        let matrix = punishment_rate_matrix(&all, &grid.cells()).unwrap();
        for &y in &grid.costs {
            for pair in grid.allocations.windows(2) {
                assert!(matrix[&(pair[1], y)].rate <= matrix[&(pair[0], y)].rate);
            }
        }
        for &x in &grid.allocations {
            for pair in grid.costs.windows(2) {
                assert!(matrix[&(x, pair[1])].rate <= matrix[&(x, pair[0])].rate);
            }
        }
    }
}
