//! Why past discounting keeps the augmented state space finite.
//!
//! With step utilities in `[0, u_max]` and the additive discounted update
//! `Z' = gamma * Z + u`, an induction argument bounds every perceived utility
//! by `u_max / (1 - gamma)` for `gamma < 1`. Discretizing that interval into
//! bins of width `delta` therefore yields a *fixed* number of states per
//! agent, independent of the horizon — in contrast to perfect recall, where
//! `Z` grows linearly with time and the bin count grows with it.
//!
//! This module computes the bound and both state counts, discretizes
//! perceived-utility vectors, enumerates the reachable augmented MDP over a
//! repeating cycle of rounds, and solves it exactly by finite-horizon
//! backward induction, so the myopic welfare-argmax policy can be compared
//! against full lookahead on the same model.

use std::collections::{BTreeSet, HashMap};

use crate::allocator::{AssignmentOdometer, Item};
use crate::error::{Error, Result};
use crate::fairness::Paradigm;
use crate::types::AgentId;
use crate::welfare::{UtilityVector, WelfareSpec};

/// Upper bound on any discounted-additive `Z_i`: `u_max / (1 - gamma)`.
/// Errors for `gamma = 1`, where recall is perfect and `Z` is unbounded.
pub fn discounted_bound(gamma: f64, u_max: f64) -> Result<f64> {
    if !gamma.is_finite() || !(0.0..=1.0).contains(&gamma) {
        return Err(Error::InvalidGamma(gamma));
    }
    if gamma >= 1.0 {
        return Err(Error::PerfectRecallUnbounded(gamma));
    }
    if !u_max.is_finite() || u_max <= 0.0 {
        return Err(Error::InvalidDiscretization(format!(
            "u_max must be positive and finite, got {u_max}"
        )));
    }
    Ok(u_max / (1.0 - gamma))
}

/// Uniform binning of the bounded `Z` range: bin width `delta`, floor
/// indexing, top bin clamped at the bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiscretizationSpec {
    gamma: f64,
    u_max: f64,
    delta: f64,
}

impl DiscretizationSpec {
    pub fn new(gamma: f64, u_max: f64, delta: f64) -> Result<Self> {
        let _ = discounted_bound(gamma, u_max)?;
        if !delta.is_finite() || delta <= 0.0 {
            return Err(Error::InvalidDiscretization(format!(
                "delta must be positive and finite, got {delta}"
            )));
        }
        if delta > u_max {
            return Err(Error::InvalidDiscretization(format!(
                "delta {delta} must not exceed u_max {u_max}"
            )));
        }
        Ok(Self {
            gamma,
            u_max,
            delta,
        })
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn bound(&self) -> f64 {
        self.u_max / (1.0 - self.gamma)
    }

    pub fn top_bin(&self) -> u64 {
        (self.bound() / self.delta).floor() as u64
    }
}

/// Distinct per-agent bins under discounting: `floor(bound / delta) + 1`,
/// independent of the horizon.
pub fn state_count_discounted(spec: &DiscretizationSpec) -> u64 {
    spec.top_bin() + 1
}

/// Distinct per-agent bins under perfect recall at horizon `t`, where
/// `Z_i <= (t + 1) * u_max`: `floor((t + 1) * u_max / delta) + 1`.
pub fn state_count_perfect(t: u64, u_max: f64, delta: f64) -> Result<u64> {
    if !u_max.is_finite() || u_max <= 0.0 {
        return Err(Error::InvalidDiscretization(format!(
            "u_max must be positive and finite, got {u_max}"
        )));
    }
    if !delta.is_finite() || delta <= 0.0 {
        return Err(Error::InvalidDiscretization(format!(
            "delta must be positive and finite, got {delta}"
        )));
    }
    Ok((((t + 1) as f64 * u_max) / delta).floor() as u64 + 1)
}

fn discretize_value(value: f64, spec: &DiscretizationSpec) -> Option<u64> {
    if value > spec.bound() + spec.delta() / 2.0 {
        return None;
    }
    let bin = (value / spec.delta()).floor() as u64;
    Some(bin.min(spec.top_bin()))
}

/// Bins each `Z_i`. A value beyond the bound (plus `delta / 2` tolerance)
/// is an error: it signals a bound violation upstream, not a binning issue.
pub fn discretize(z: &UtilityVector, spec: &DiscretizationSpec) -> Result<Vec<u64>> {
    z.iter()
        .map(|(agent, value)| {
            discretize_value(value, spec).ok_or_else(|| Error::BoundViolation {
                agent: agent.clone(),
                value,
                bound: spec.bound(),
            })
        })
        .collect()
}

/// A state of the augmented MDP: which round of the cycle comes next, and
/// the binned perceived utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpState {
    pub phase: usize,
    pub bins: Vec<u64>,
}

/// One allocation choice in a state: the per-item agent indices (in
/// lexicographic enumeration order), the successor state, and the welfare of
/// the updated perceived utilities.
#[derive(Debug, Clone, PartialEq)]
pub struct MdpAction {
    pub assignment: Vec<usize>,
    pub next: usize,
    pub reward: f64,
}

/// Default cap on enumerated reachable states.
pub const DEFAULT_STATE_CAP: u64 = 1_000_000;

/// The reachable augmented MDP over a repeating cycle of rounds under the
/// discounted-additive update. Transitions are deterministic and total for
/// every expanded state; states first reached at the horizon stay leaves.
#[derive(Debug, Clone)]
pub struct AugmentedMdp {
    agents: Vec<AgentId>,
    phases: Vec<Vec<Item>>,
    gamma: f64,
    spec: DiscretizationSpec,
    welfare: WelfareSpec,
    horizon: usize,
    states: Vec<MdpState>,
    actions: Vec<Vec<MdpAction>>,
    initial: usize,
    max_binning_error: f64,
}

impl AugmentedMdp {
    pub fn agents(&self) -> &[AgentId] {
        &self.agents
    }

    pub fn phase_items(&self, phase: usize) -> &[Item] {
        &self.phases[phase]
    }

    pub fn num_phases(&self) -> usize {
        self.phases.len()
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn discretization(&self) -> &DiscretizationSpec {
        &self.spec
    }

    pub fn welfare(&self) -> &WelfareSpec {
        &self.welfare
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn states(&self) -> &[MdpState] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn actions(&self, state: usize) -> &[MdpAction] {
        &self.actions[state]
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    /// Largest per-coordinate gap between an exact update and its binned
    /// representative, over every enumerated transition. Bounded by `delta`.
    pub fn max_binning_error(&self) -> f64 {
        self.max_binning_error
    }

    /// Continuous representative of a state's bins (bin lower edges).
    pub fn representative(&self, state: usize) -> Vec<f64> {
        self.states[state]
            .bins
            .iter()
            .map(|&b| b as f64 * self.spec.delta())
            .collect()
    }

    /// Count of distinct bin values seen per agent across reachable states.
    pub fn reachable_bins_per_agent(&self) -> Vec<u64> {
        let mut seen: Vec<BTreeSet<u64>> = vec![BTreeSet::new(); self.agents.len()];
        for state in &self.states {
            for (i, &b) in state.bins.iter().enumerate() {
                seen[i].insert(b);
            }
        }
        seen.iter().map(|s| s.len() as u64).collect()
    }
}

/// Enumerates the states reachable from the all-zero state within `horizon`
/// steps, breadth first, and records every allocation's transition and
/// reward. The reward is the welfare of the exact update from the state's
/// representative; only the successor state is binned.
pub fn build_augmented_mdp(
    phases: &[Vec<Item>],
    agents: &[AgentId],
    paradigm: Paradigm,
    welfare: &WelfareSpec,
    spec: &DiscretizationSpec,
    horizon: usize,
    state_cap: u64,
) -> Result<AugmentedMdp> {
    let gamma = match paradigm {
        Paradigm::DiscountedAdditive { gamma } if gamma < 1.0 => gamma,
        _ => return Err(Error::MdpParadigm),
    };
    if gamma != spec.gamma() {
        return Err(Error::InvalidDiscretization(format!(
            "paradigm gamma {gamma} does not match discretization gamma {}",
            spec.gamma()
        )));
    }
    if phases.is_empty() {
        return Err(Error::InvalidScenario("cycle has no rounds".to_owned()));
    }
    if agents.is_empty() {
        return Err(Error::NoActiveAgents);
    }
    for (i, agent) in agents.iter().enumerate() {
        if agents[..i].contains(agent) {
            return Err(Error::DuplicateAgent(agent.clone()));
        }
    }
    welfare.validate_for(agents.len())?;
    for (p, items) in phases.iter().enumerate() {
        crate::allocator::check_cap(
            items.len(),
            agents.len(),
            crate::allocator::DEFAULT_CAP_BITS,
        )?;
        for item in items {
            for (agent, &u) in &item.utilities {
                if !agents.contains(agent) {
                    return Err(Error::InvalidScenario(format!(
                        "cycle phase {p}: item \"{}\" refers to unknown agent \"{agent}\"",
                        item.id
                    )));
                }
                if !u.is_finite() || u < 0.0 || u > spec.u_max() {
                    return Err(Error::InvalidScenario(format!(
                        "cycle phase {p}: item \"{}\": utility {u} for agent \"{agent}\" is \
                         outside [0, {}]",
                        item.id,
                        spec.u_max()
                    )));
                }
            }
        }
    }

    let per_agent = state_count_discounted(spec) as u128;
    let estimate =
        (phases.len() as u128).saturating_mul(per_agent.saturating_pow(agents.len() as u32));
    if estimate > state_cap as u128 {
        return Err(Error::StateCapExceeded {
            estimate,
            cap: state_cap,
        });
    }

    let n = agents.len();
    let zero = MdpState {
        phase: 0,
        bins: vec![0; n],
    };
    let mut states = vec![zero];
    let mut actions: Vec<Vec<MdpAction>> = vec![Vec::new()];
    let mut index: HashMap<(usize, Vec<u64>), usize> = HashMap::new();
    index.insert((0, vec![0; n]), 0);
    let mut frontier = vec![0usize];
    let mut max_binning_error = 0.0f64;
    let mut scratch = Vec::new();

    for _depth in 0..horizon {
        let mut next_frontier = Vec::new();
        for &s in &frontier {
            if !actions[s].is_empty() {
                continue;
            }
            let phase = states[s].phase;
            let next_phase = (phase + 1) % phases.len();
            let repr: Vec<f64> = states[s]
                .bins
                .iter()
                .map(|&b| b as f64 * spec.delta())
                .collect();
            let items = &phases[phase];
            let mut expanded = Vec::new();
            let mut odometer = AssignmentOdometer::new(items.len(), n);
            while let Some(digits) = odometer.next() {
                let mut step = vec![0.0; n];
                for (i, &j) in digits.iter().enumerate() {
                    step[j] += items[i].utility_for(&agents[j]);
                }
                let next_exact: Vec<f64> =
                    repr.iter().zip(&step).map(|(z, u)| gamma * z + u).collect();
                let reward = welfare.eval_slice(&next_exact, &mut scratch);
                let mut bins = Vec::with_capacity(n);
                for (i, &v) in next_exact.iter().enumerate() {
                    let bin = discretize_value(v, spec).ok_or_else(|| Error::BoundViolation {
                        agent: agents[i].clone(),
                        value: v,
                        bound: spec.bound(),
                    })?;
                    let gap = (v - bin as f64 * spec.delta()).abs();
                    if gap > max_binning_error {
                        max_binning_error = gap;
                    }
                    bins.push(bin);
                }
                let key = (next_phase, bins);
                let next = match index.get(&key) {
                    Some(&i) => i,
                    None => {
                        let i = states.len();
                        states.push(MdpState {
                            phase: next_phase,
                            bins: key.1.clone(),
                        });
                        actions.push(Vec::new());
                        index.insert(key, i);
                        next_frontier.push(i);
                        i
                    }
                };
                expanded.push(MdpAction {
                    assignment: digits.to_vec(),
                    next,
                    reward,
                });
            }
            actions[s] = expanded;
        }
        frontier = next_frontier;
    }

    Ok(AugmentedMdp {
        agents: agents.to_vec(),
        phases: phases.to_vec(),
        gamma,
        spec: *spec,
        welfare: welfare.clone(),
        horizon,
        states,
        actions,
        initial: 0,
        max_binning_error,
    })
}

/// Optimal values and a deterministic policy from exact finite-horizon
/// backward induction. `values[k][s]` is the best total reward obtainable
/// from state `s` with `horizon - k` steps left; `policy[k][s]` is the
/// argmax action index (first maximum on ties), or `usize::MAX` for leaf
/// states that were never expanded.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub values: Vec<Vec<f64>>,
    pub policy: Vec<Vec<usize>>,
}

fn stage_best(mdp: &AugmentedMdp, next_values: &[f64], state: usize) -> (f64, usize) {
    let acts = mdp.actions(state);
    let mut best = f64::NEG_INFINITY;
    let mut best_action = usize::MAX;
    for (i, act) in acts.iter().enumerate() {
        let q = act.reward + next_values[act.next];
        if q > best {
            best = q;
            best_action = i;
        }
    }
    if best_action == usize::MAX {
        (0.0, usize::MAX)
    } else {
        (best, best_action)
    }
}

pub fn value_iteration(mdp: &AugmentedMdp) -> PlanResult {
    let n = mdp.num_states();
    let horizon = mdp.horizon();
    let mut values = vec![vec![0.0; n]; horizon + 1];
    let mut policy = vec![vec![usize::MAX; n]; horizon];

    for stage in (0..horizon).rev() {
        let next = values[stage + 1].clone();
        #[cfg(feature = "parallel")]
        let stage_results: Vec<(f64, usize)> = {
            use rayon::prelude::*;
            (0..n)
                .into_par_iter()
                .map(|s| stage_best(mdp, &next, s))
                .collect()
        };
        #[cfg(not(feature = "parallel"))]
        let stage_results: Vec<(f64, usize)> = (0..n).map(|s| stage_best(mdp, &next, s)).collect();

        for (s, (v, a)) in stage_results.into_iter().enumerate() {
            values[stage][s] = v;
            policy[stage][s] = a;
        }
    }
    PlanResult { values, policy }
}

/// Greedy one-step action: argmax of immediate reward, first maximum on
/// ties. `None` for leaf states.
pub fn myopic_action(mdp: &AugmentedMdp, state: usize) -> Option<usize> {
    let acts = mdp.actions(state);
    if acts.is_empty() {
        return None;
    }
    let mut best = f64::NEG_INFINITY;
    let mut best_action = 0;
    for (i, act) in acts.iter().enumerate() {
        if act.reward > best {
            best = act.reward;
            best_action = i;
        }
    }
    Some(best_action)
}

/// Total reward of following the planned policy from the initial state.
pub fn rollout_plan(mdp: &AugmentedMdp, plan: &PlanResult) -> f64 {
    let mut state = mdp.initial();
    let mut total = 0.0;
    for stage in 0..mdp.horizon() {
        let action = plan.policy[stage][state];
        let act = &mdp.actions(state)[action];
        total += act.reward;
        state = act.next;
    }
    total
}

/// Total reward of the myopic welfare-argmax policy from the initial state.
pub fn rollout_myopic(mdp: &AugmentedMdp) -> f64 {
    let mut state = mdp.initial();
    let mut total = 0.0;
    for _ in 0..mdp.horizon() {
        let action = myopic_action(mdp, state).expect("rollout hit an unexpanded state");
        let act = &mdp.actions(state)[action];
        total += act.reward;
        state = act.next;
    }
    total
}
