//! Seed-reproducible multi-agent simulation of prosocial behavior.
//!
//! The crate is organized around the stages of a simulation run:
//!
//! * [`population`] — synthesizes agents with demographic attributes and
//!   psychological traits, and renders each profile into a persona text.
//! * [`socialnet`] — builds the Watts–Strogatz small-world graph and the
//!   per-round activated edge subsets that gate observation between agents.
//! * [`scenario`] — the six prosocial scenarios, prompt construction, and
//!   Likert response parsing.
//! * [`policy`] — the four policy interventions and the two structural
//!   inequity conditions.
//! * [`decision`] — the backend-agnostic decision contract, with a remote
//!   chat-completion client and a deterministic synthetic oracle.
//! * [`tpp`] — the third-party punishment game with exact payoff accounting.
//! * [`engine`] — orchestrates baseline, policy, and networked dynamics runs
//!   with snapshot-synchronous updates and JSONL traces.
//! * [`analysis`] — scenario means, Pearson correlations, relative changes,
//!   exact Shapley trait attributions, and contagion statistics.
//!
//! Every random choice flows from a single master seed through labelled
//! sub-streams (see [`rng`]), so any run replays byte-identically.

pub mod analysis;
pub mod decision;
pub mod engine;
mod error;
pub mod policy;
pub mod population;
pub mod rng;
pub mod scenario;
pub mod socialnet;
pub mod tpp;

pub use error::{Error, Result};
