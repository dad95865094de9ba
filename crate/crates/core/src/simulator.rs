//! Scenario-driven episodes: rounds of items, agent arrivals and departures,
//! welfare-argmax allocation each round, and trace/metric CSV output.
//!
//! A scenario is a JSON document with three fields:
//!
//! ```json
//! {
//!   "agents": [{"id": "Alice", "arrival": 0}, {"id": "Bob", "arrival": 10}],
//!   "u_max": 1.0,
//!   "rounds": [
//!     {"repeat": 10, "items": [{"id": "slot", "utilities": {"Alice": 0.5}}]},
//!     {"index": 10, "items": [{"id": "slot", "utilities": {"Alice": 0.5, "Bob": 0.5}}]}
//!   ]
//! }
//! ```
//!
//! Round entries are either explicit (`{"index": N, "items": [...]}`, indices
//! contiguous from 0) or a generator (`{"repeat": N, "items": [...]}`) that
//! expands to `N` identical rounds. Items may omit utilities for some agents;
//! missing entries default to 0 with a validation warning.
//!
//! An episode processes rounds in order: arrivals join the fairness state at
//! `Z = 0`, departures drop out, the allocator picks the welfare-argmax
//! allocation, and the chosen step utilities are committed. Agents that
//! receive nothing still experience the decay step (time flows uniformly for
//! everyone tracked). Episodes are deterministic end to end: the same
//! scenario and configuration produce byte-identical CSVs.

use std::collections::BTreeSet;
use std::io;

use serde::{Deserialize, Serialize};

use crate::allocator::{optimize_with, Allocation, Item, OptimizeOptions};
use crate::error::{Error, Result};
use crate::fairness::{FairnessState, Paradigm};
use crate::types::{AgentId, ItemId};
use crate::welfare::{UtilityVector, WelfareSpec};

/// An agent's participation window: active from round `arrival` (inclusive)
/// to round `departure` (exclusive), or to the end if `departure` is absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AgentSpec {
    pub id: AgentId,
    pub arrival: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub departure: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExplicitRound {
    pub index: u64,
    pub items: Vec<Item>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RepeatRounds {
    pub repeat: u64,
    pub items: Vec<Item>,
}

/// One entry of the scenario's `rounds` list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RoundSpec {
    Explicit(ExplicitRound),
    Repeat(RepeatRounds),
}

/// A scenario as parsed from JSON, before validation and expansion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioDoc {
    pub agents: Vec<AgentSpec>,
    pub u_max: f64,
    pub rounds: Vec<RoundSpec>,
}

/// A validated scenario with generators expanded to concrete rounds.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub agents: Vec<AgentSpec>,
    pub u_max: f64,
    pub rounds: Vec<Round>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Round {
    pub index: u64,
    pub items: Vec<Item>,
}

impl Scenario {
    /// Parses and validates a scenario document. Returns the scenario and
    /// any non-fatal validation warnings.
    pub fn from_json(json: &str) -> Result<(Scenario, Vec<String>)> {
        let doc: ScenarioDoc = serde_json::from_str(json)?;
        validate_scenario(doc)
    }

    /// Agents active in round `t`.
    pub fn active_agents(&self, t: u64) -> Vec<AgentId> {
        self.agents
            .iter()
            .filter(|a| a.arrival <= t && a.departure.is_none_or(|d| t < d))
            .map(|a| a.id.clone())
            .collect()
    }

    pub fn agent_ids(&self) -> Vec<AgentId> {
        self.agents.iter().map(|a| a.id.clone()).collect()
    }
}

fn check_id(id: &str, kind: &str) -> Result<()> {
    if id.is_empty() {
        return Err(Error::InvalidScenario(format!(
            "{kind} id must not be empty"
        )));
    }
    if id
        .chars()
        .any(|c| c == ',' || c == ';' || c == '"' || c == '→' || c.is_control())
    {
        return Err(Error::InvalidScenario(format!(
            "{kind} id \"{id}\" contains characters reserved for trace output"
        )));
    }
    Ok(())
}

fn active_at(agents: &[AgentSpec], t: u64) -> Vec<AgentId> {
    agents
        .iter()
        .filter(|a| a.arrival <= t && a.departure.is_none_or(|d| t < d))
        .map(|a| a.id.clone())
        .collect()
}

/// Normalizes a raw scenario document: expands generators, checks every
/// invariant, and collects warnings for sparse utility tables.
pub fn validate_scenario(doc: ScenarioDoc) -> Result<(Scenario, Vec<String>)> {
    let mut warnings = Vec::new();

    if doc.agents.is_empty() {
        return Err(Error::InvalidScenario("no agents defined".to_owned()));
    }
    if !doc.u_max.is_finite() || doc.u_max <= 0.0 {
        return Err(Error::InvalidScenario(format!(
            "u_max must be positive and finite, got {}",
            doc.u_max
        )));
    }
    for (i, agent) in doc.agents.iter().enumerate() {
        check_id(agent.id.as_str(), "agent")?;
        if doc.agents[..i].iter().any(|a| a.id == agent.id) {
            return Err(Error::DuplicateAgent(agent.id.clone()));
        }
        if let Some(departure) = agent.departure {
            if departure <= agent.arrival {
                return Err(Error::InvalidScenario(format!(
                    "agent \"{}\": departure {} must be greater than arrival {}",
                    agent.id, departure, agent.arrival
                )));
            }
        }
    }

    let mut rounds = Vec::new();
    for spec in &doc.rounds {
        match spec {
            RoundSpec::Explicit(round) => {
                let expected = rounds.len() as u64;
                if round.index != expected {
                    return Err(Error::InvalidScenario(format!(
                        "round indices must be contiguous from 0: expected {expected}, found {}",
                        round.index
                    )));
                }
                rounds.push(Round {
                    index: expected,
                    items: round.items.clone(),
                });
            }
            RoundSpec::Repeat(repeat) => {
                if repeat.repeat == 0 {
                    return Err(Error::InvalidScenario(
                        "generator: repeat must be at least 1".to_owned(),
                    ));
                }
                for _ in 0..repeat.repeat {
                    let index = rounds.len() as u64;
                    rounds.push(Round {
                        index,
                        items: repeat.items.clone(),
                    });
                }
            }
        }
    }
    if rounds.is_empty() {
        return Err(Error::InvalidScenario("no rounds defined".to_owned()));
    }

    let mut missing: BTreeSet<(ItemId, AgentId)> = BTreeSet::new();
    for round in &rounds {
        let t = round.index;
        for (i, item) in round.items.iter().enumerate() {
            check_id(item.id.as_str(), "item")?;
            if round.items[..i].iter().any(|other| other.id == item.id) {
                return Err(Error::InvalidScenario(format!(
                    "round {t}: duplicate item id \"{}\"",
                    item.id
                )));
            }
            for (agent, &u) in &item.utilities {
                if !doc.agents.iter().any(|a| &a.id == agent) {
                    return Err(Error::InvalidScenario(format!(
                        "round {t}: item \"{}\": utility refers to unknown agent \"{agent}\"",
                        item.id
                    )));
                }
                if !u.is_finite() || u < 0.0 {
                    return Err(Error::InvalidScenario(format!(
                        "round {t}: item \"{}\": utility {u} for agent \"{agent}\" must be \
                         finite and nonnegative",
                        item.id
                    )));
                }
                if u > doc.u_max {
                    return Err(Error::InvalidScenario(format!(
                        "round {t}: item \"{}\": utility {u} for agent \"{agent}\" exceeds \
                         u_max {}",
                        item.id, doc.u_max
                    )));
                }
            }
        }
        let active = active_at(&doc.agents, t);
        if active.is_empty() {
            return Err(Error::InvalidScenario(format!(
                "round {t}: no active agents"
            )));
        }
        for item in &round.items {
            for agent in &active {
                if !item.utilities.contains_key(agent) {
                    missing.insert((item.id.clone(), agent.clone()));
                }
            }
        }
    }

    for (item, agent) in missing {
        warnings.push(format!(
            "item \"{item}\": no utility entry for active agent \"{agent}\"; defaulting to 0"
        ));
    }
    let round_count = rounds.len() as u64;
    for agent in &doc.agents {
        if agent.arrival >= round_count {
            warnings.push(format!(
                "agent \"{}\" arrives at round {} but the scenario ends at round {}",
                agent.id,
                agent.arrival,
                round_count - 1
            ));
        }
    }

    Ok((
        Scenario {
            agents: doc.agents,
            u_max: doc.u_max,
            rounds,
        },
        warnings,
    ))
}

/// Interprets a scenario document as a repeating cycle for the augmented-MDP
/// analysis: each raw `rounds` entry contributes one phase (a repeat
/// generator contributes its round once), and every agent must be present
/// throughout (arrival 0, no departure). Returns the agent list and phases.
pub fn cycle_phases(doc: &ScenarioDoc) -> Result<(Vec<AgentId>, Vec<Vec<Item>>)> {
    for agent in &doc.agents {
        if agent.arrival != 0 || agent.departure.is_some() {
            return Err(Error::InvalidScenario(format!(
                "cycle analysis requires every agent present throughout; agent \"{}\" arrives \
                 at {} (departure {:?})",
                agent.id, agent.arrival, agent.departure
            )));
        }
    }
    let agents = doc.agents.iter().map(|a| a.id.clone()).collect();
    let phases = doc
        .rounds
        .iter()
        .map(|spec| match spec {
            RoundSpec::Explicit(round) => round.items.clone(),
            RoundSpec::Repeat(repeat) => repeat.items.clone(),
        })
        .collect();
    Ok((agents, phases))
}

/// Everything recorded about one simulated round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub t: u64,
    /// Agents active this round, in arrival order.
    pub active: Vec<AgentId>,
    pub allocation: Allocation,
    /// Step utilities of the chosen allocation, over the active agents.
    pub step: UtilityVector,
    /// Committed perceived utilities after this round.
    pub z: UtilityVector,
    /// Welfare of the committed `Z` over the active agents.
    pub welfare: f64,
    /// Running per-agent cumulative step utilities, aligned with
    /// [`EpisodeTrace::agents`]. Zero before arrival, frozen after departure.
    pub cumulative: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    /// All scenario agents in declaration order.
    pub agents: Vec<AgentId>,
    pub rounds: Vec<RoundRecord>,
}

/// Runs one episode under the default optimizer options.
pub fn run_episode(
    scenario: &Scenario,
    paradigm: Paradigm,
    welfare: &WelfareSpec,
) -> Result<EpisodeTrace> {
    run_episode_with(scenario, paradigm, welfare, &OptimizeOptions::default())
}

pub fn run_episode_with(
    scenario: &Scenario,
    paradigm: Paradigm,
    welfare: &WelfareSpec,
    options: &OptimizeOptions,
) -> Result<EpisodeTrace> {
    let agent_order = scenario.agent_ids();
    let mut state = FairnessState::init(paradigm, Vec::new())?;
    let mut cumulative = vec![0.0; agent_order.len()];
    let mut rounds = Vec::with_capacity(scenario.rounds.len());

    for round in &scenario.rounds {
        let t = round.index;
        for spec in &scenario.agents {
            if spec.arrival == t {
                state = state
                    .add_agent(spec.id.clone())
                    .map_err(|e| Error::in_round(t, e))?;
            }
        }
        for spec in &scenario.agents {
            if spec.departure == Some(t) && state.z().position(&spec.id).is_some() {
                state = state
                    .remove_agent(&spec.id)
                    .map_err(|e| Error::in_round(t, e))?;
            }
        }

        let active = state.agent_ids().to_vec();
        let outcome = optimize_with(&state, &round.items, welfare, &active, options)
            .map_err(|e| Error::in_round(t, e))?;

        state = state
            .commit(&outcome.step)
            .map_err(|e| Error::in_round(t, e))?;

        for (agent, u) in outcome.step.iter() {
            let idx = agent_order
                .iter()
                .position(|a| a == agent)
                .expect("active agents come from the scenario");
            cumulative[idx] += u;
        }

        rounds.push(RoundRecord {
            t,
            active,
            allocation: outcome.allocation,
            step: outcome.step,
            z: state.z().clone(),
            welfare: outcome.welfare,
            cumulative: cumulative.clone(),
        });
    }

    Ok(EpisodeTrace {
        agents: agent_order,
        rounds,
    })
}

/// Per-round series comparing two agents across an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSeries {
    pub t: Vec<u64>,
    /// Cumulative utility difference `sum(u_a) - sum(u_b)` per round.
    pub cumulative_diff: Vec<f64>,
    /// Perceived utility difference `Z_a - Z_b` per round; an agent not yet
    /// arrived (or departed) counts as 0.
    pub perceived_diff: Vec<f64>,
    /// Welfare of the committed state per round.
    pub welfare: Vec<f64>,
}

pub fn metrics(trace: &EpisodeTrace, a: &AgentId, b: &AgentId) -> Result<MetricsSeries> {
    let idx_a = trace
        .agents
        .iter()
        .position(|x| x == a)
        .ok_or_else(|| Error::AgentNotInTrace(a.clone()))?;
    let idx_b = trace
        .agents
        .iter()
        .position(|x| x == b)
        .ok_or_else(|| Error::AgentNotInTrace(b.clone()))?;

    let mut series = MetricsSeries {
        t: Vec::with_capacity(trace.rounds.len()),
        cumulative_diff: Vec::with_capacity(trace.rounds.len()),
        perceived_diff: Vec::with_capacity(trace.rounds.len()),
        welfare: Vec::with_capacity(trace.rounds.len()),
    };
    for record in &trace.rounds {
        series.t.push(record.t);
        series
            .cumulative_diff
            .push(record.cumulative[idx_a] - record.cumulative[idx_b]);
        let z_a = record.z.get(a).unwrap_or(0.0);
        let z_b = record.z.get(b).unwrap_or(0.0);
        series.perceived_diff.push(z_a - z_b);
        series.welfare.push(record.welfare);
    }
    Ok(series)
}

/// A labelled (paradigm, welfare) pair for side-by-side comparison runs.
#[derive(Debug, Clone, PartialEq)]
pub struct CompareConfig {
    pub label: String,
    pub paradigm: Paradigm,
    pub welfare: WelfareSpec,
}

impl CompareConfig {
    pub fn new(label: impl Into<String>, paradigm: Paradigm, welfare: WelfareSpec) -> Self {
        Self {
            label: label.into(),
            paradigm,
            welfare,
        }
    }

    /// Labels the config from its parts, e.g. `discounted_additive:0.9+mmf`.
    pub fn auto(paradigm: Paradigm, welfare: WelfareSpec) -> Self {
        let label = format!("{}+{}", paradigm.label(), welfare.label());
        Self {
            label,
            paradigm,
            welfare,
        }
    }
}

/// Runs every config on the identical scenario. Results keep the input
/// order; with the `parallel` feature the episodes run on a thread pool,
/// one isolated fairness state per episode.
pub fn compare(
    scenario: &Scenario,
    configs: &[CompareConfig],
) -> Result<Vec<(String, EpisodeTrace)>> {
    compare_with(scenario, configs, &OptimizeOptions::default())
}

pub fn compare_with(
    scenario: &Scenario,
    configs: &[CompareConfig],
    options: &OptimizeOptions,
) -> Result<Vec<(String, EpisodeTrace)>> {
    if configs.is_empty() {
        return Err(Error::NoConfigs);
    }
    for (i, config) in configs.iter().enumerate() {
        if configs[..i].iter().any(|c| c.label == config.label) {
            return Err(Error::DuplicateLabel(config.label.clone()));
        }
    }

    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        configs
            .par_iter()
            .map(|c| {
                run_episode_with(scenario, c.paradigm, &c.welfare, options)
                    .map(|trace| (c.label.clone(), trace))
            })
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        configs
            .iter()
            .map(|c| {
                run_episode_with(scenario, c.paradigm, &c.welfare, options)
                    .map(|trace| (c.label.clone(), trace))
            })
            .collect()
    }
}

/// Writes the long-format trace CSV:
/// `t,config,agent,step_utility,cumulative_utility,perceived_Z,welfare,allocation`,
/// one row per (config, round, tracked agent), in that order. Floats use
/// Rust's shortest round-trip formatting, so output is byte-stable across
/// runs and platforms.
pub fn write_trace_csv<W: io::Write>(mut w: W, traces: &[(String, EpisodeTrace)]) -> Result<()> {
    writeln!(
        w,
        "t,config,agent,step_utility,cumulative_utility,perceived_Z,welfare,allocation"
    )?;
    for (label, trace) in traces {
        for record in &trace.rounds {
            let allocation = record.allocation.to_string();
            for agent in record.z.agent_ids() {
                let step = record.step.get(agent).unwrap_or(0.0);
                let idx = trace
                    .agents
                    .iter()
                    .position(|a| a == agent)
                    .expect("tracked agents come from the scenario");
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    record.t,
                    label,
                    agent,
                    step,
                    record.cumulative[idx],
                    record.z.get(agent).unwrap_or(0.0),
                    record.welfare,
                    allocation
                )?;
            }
        }
    }
    Ok(())
}

/// Writes the comparison CSV: `config,t,cumulative_diff,perceived_diff,welfare`,
/// the three metric series for the agent pair `(a, b)`, one block per config.
pub fn write_compare_csv<W: io::Write>(
    mut w: W,
    traces: &[(String, EpisodeTrace)],
    a: &AgentId,
    b: &AgentId,
) -> Result<()> {
    writeln!(w, "config,t,cumulative_diff,perceived_diff,welfare")?;
    for (label, trace) in traces {
        let series = metrics(trace, a, b)?;
        for i in 0..series.t.len() {
            writeln!(
                w,
                "{},{},{},{},{}",
                label,
                series.t[i],
                series.cumulative_diff[i],
                series.perceived_diff[i],
                series.welfare[i]
            )?;
        }
    }
    Ok(())
}
