//! Enumeration of feasible allocations and welfare-argmax selection.
//!
//! Each round offers `m` indivisible items to `n` active agents. Every item
//! goes to exactly one agent (agents may receive several items, and an agent
//! may receive nothing), so the search space has `n^m` assignments. The
//! optimizer scores each assignment by previewing the fairness state with the
//! assignment's step utilities and evaluating the configured welfare on the
//! result, then picks the argmax. Ties are broken by the lexicographically
//! smallest assignment in enumeration order (items in given order, agents in
//! given order), which keeps traces reproducible; a seeded random tie-break
//! is available as an option.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fairness::FairnessState;
use crate::types::{AgentId, ItemId};
use crate::welfare::{UtilityVector, WelfareSpec};

/// An indivisible item with per-agent utilities. Agents missing from the map
/// derive zero utility from the item.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Item {
    pub id: ItemId,
    pub utilities: BTreeMap<AgentId, f64>,
}

impl Item {
    pub fn new(id: impl Into<ItemId>, utilities: BTreeMap<AgentId, f64>) -> Self {
        Self {
            id: id.into(),
            utilities,
        }
    }

    pub fn utility_for(&self, agent: &AgentId) -> f64 {
        self.utilities.get(agent).copied().unwrap_or(0.0)
    }
}

/// A round's assignment of items to agents, in the round's item order.
///
/// Normally total over the round's items; when the optional discard flag is
/// on, discarded items are simply absent from the assignment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Allocation {
    assignment: Vec<(ItemId, AgentId)>,
}

impl Allocation {
    pub fn new(assignment: Vec<(ItemId, AgentId)>) -> Self {
        Self { assignment }
    }

    pub fn empty() -> Self {
        Self {
            assignment: Vec::new(),
        }
    }

    pub fn assignment(&self) -> &[(ItemId, AgentId)] {
        &self.assignment
    }

    pub fn agent_for(&self, item: &ItemId) -> Option<&AgentId> {
        self.assignment
            .iter()
            .find(|(i, _)| i == item)
            .map(|(_, a)| a)
    }

    pub fn is_empty(&self) -> bool {
        self.assignment.is_empty()
    }
}

impl fmt::Display for Allocation {
    /// `item→agent` pairs joined by `;`, e.g. `cake→Bob;donut→Alice`.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (item, agent)) in self.assignment.iter().enumerate() {
            if i > 0 {
                f.write_str(";")?;
            }
            write!(f, "{item}→{agent}")?;
        }
        Ok(())
    }
}

/// Default enumeration cap: at most `2^20` assignments per round.
pub const DEFAULT_CAP_BITS: u32 = 20;

pub(crate) fn check_cap(items: usize, agents: usize, cap_bits: u32) -> Result<u64> {
    if agents == 0 {
        return Err(Error::NoActiveAgents);
    }
    let count = (agents as u128)
        .checked_pow(items as u32)
        .unwrap_or(u128::MAX);
    if count > 1u128 << cap_bits {
        return Err(Error::AllocationSpaceTooLarge {
            items,
            agents,
            required: count,
            cap_bits,
        });
    }
    Ok(count as u64)
}

fn check_unique_agents(active: &[AgentId]) -> Result<()> {
    for (i, id) in active.iter().enumerate() {
        if active[..i].contains(id) {
            return Err(Error::DuplicateAgent(id.clone()));
        }
    }
    Ok(())
}

fn check_unique_items(items: &[Item]) -> Result<()> {
    for (i, item) in items.iter().enumerate() {
        if items[..i].iter().any(|other| other.id == item.id) {
            return Err(Error::DuplicateItem(item.id.clone()));
        }
    }
    Ok(())
}

/// Odometer over per-item agent choices; the first item is the most
/// significant digit, so iteration order is lexicographic.
pub(crate) struct AssignmentOdometer {
    digits: Vec<usize>,
    choices: usize,
    started: bool,
    exhausted: bool,
}

impl AssignmentOdometer {
    pub(crate) fn new(items: usize, choices: usize) -> Self {
        Self {
            digits: vec![0; items],
            choices,
            started: false,
            exhausted: false,
        }
    }

    pub(crate) fn next(&mut self) -> Option<&[usize]> {
        if self.exhausted {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(&self.digits);
        }
        for pos in (0..self.digits.len()).rev() {
            if self.digits[pos] + 1 < self.choices {
                self.digits[pos] += 1;
                for d in &mut self.digits[pos + 1..] {
                    *d = 0;
                }
                return Some(&self.digits);
            }
        }
        self.exhausted = true;
        None
    }
}

/// All `n^m` assignments of `items` to `active` agents, in lexicographic
/// order. Errors if the space exceeds the default cap of `2^20`.
pub fn enumerate_allocations(items: &[Item], active: &[AgentId]) -> Result<Vec<Allocation>> {
    enumerate_allocations_capped(items, active, DEFAULT_CAP_BITS)
}

pub fn enumerate_allocations_capped(
    items: &[Item],
    active: &[AgentId],
    cap_bits: u32,
) -> Result<Vec<Allocation>> {
    check_unique_agents(active)?;
    check_unique_items(items)?;
    let count = check_cap(items.len(), active.len(), cap_bits)?;
    let mut out = Vec::with_capacity(count as usize);
    let mut odometer = AssignmentOdometer::new(items.len(), active.len());
    while let Some(digits) = odometer.next() {
        let assignment = items
            .iter()
            .zip(digits)
            .map(|(item, &j)| (item.id.clone(), active[j].clone()))
            .collect();
        out.push(Allocation::new(assignment));
    }
    Ok(out)
}

/// Step utilities `u` derived from an allocation: each agent's sum of
/// utilities over the items assigned to it; agents receiving nothing get 0.
/// Items absent from the assignment (discarded) contribute nothing.
pub fn step_utilities(
    allocation: &Allocation,
    items: &[Item],
    active: &[AgentId],
) -> Result<UtilityVector> {
    check_unique_agents(active)?;
    let mut values = vec![0.0; active.len()];
    for (item_id, agent_id) in allocation.assignment() {
        let item = items
            .iter()
            .find(|it| &it.id == item_id)
            .ok_or_else(|| Error::UnknownItem(item_id.clone()))?;
        let j = active
            .iter()
            .position(|a| a == agent_id)
            .ok_or_else(|| Error::UnknownAgent(agent_id.clone()))?;
        values[j] += item.utility_for(agent_id);
    }
    UtilityVector::new(active.to_vec(), values)
}

/// How the optimizer resolves exact welfare ties.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TieBreak {
    /// First maximum in enumeration order. The default; keeps traces stable.
    Lexicographic,
    /// Uniform choice among the tied assignments, driven by a fixed seed.
    Random { seed: u64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOptions {
    pub cap_bits: u32,
    pub tie_break: TieBreak,
    /// When on, items may also be left unassigned (a zero-utility "discard"
    /// choice per item). Off by default: both bundled examples assign every
    /// item.
    pub allow_discard: bool,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self {
            cap_bits: DEFAULT_CAP_BITS,
            tie_break: TieBreak::Lexicographic,
            allow_discard: false,
        }
    }
}

/// Result of a welfare-argmax search.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizeOutcome {
    pub allocation: Allocation,
    /// Step utilities of the chosen allocation, over the active agents.
    pub step: UtilityVector,
    /// Previewed post-allocation `Z`, over all agents tracked by the state.
    pub previewed: UtilityVector,
    /// Welfare of the previewed `Z` restricted to the active agents.
    pub welfare: f64,
}

/// Picks the allocation maximizing the welfare of the previewed fairness
/// state. Active agents must be tracked by `state`; tracked-but-inactive
/// agents receive zero step utility and are excluded from the welfare score.
pub fn optimize(
    state: &FairnessState,
    items: &[Item],
    welfare: &WelfareSpec,
    active: &[AgentId],
) -> Result<OptimizeOutcome> {
    optimize_with(state, items, welfare, active, &OptimizeOptions::default())
}

pub fn optimize_with(
    state: &FairnessState,
    items: &[Item],
    welfare: &WelfareSpec,
    active: &[AgentId],
    options: &OptimizeOptions,
) -> Result<OptimizeOutcome> {
    check_unique_agents(active)?;
    check_unique_items(items)?;
    welfare.validate_for(active.len())?;

    let positions: Vec<usize> = active
        .iter()
        .map(|a| {
            state
                .z()
                .position(a)
                .ok_or_else(|| Error::UnknownAgent(a.clone()))
        })
        .collect::<Result<_>>()?;

    let n_active = active.len();
    let n_tracked = state.z().len();
    let choices = n_active + usize::from(options.allow_discard);
    let count = if items.is_empty() {
        1
    } else {
        check_cap(items.len(), choices, options.cap_bits)?
    };

    // Per-item utility for each choice; the discard column stays 0.
    let utility_matrix: Vec<Vec<f64>> = items
        .iter()
        .map(|item| {
            let mut row: Vec<f64> = active.iter().map(|a| item.utility_for(a)).collect();
            if options.allow_discard {
                row.push(0.0);
            }
            row
        })
        .collect();

    let mut step_active = vec![0.0; n_active];
    let mut step_full = vec![0.0; n_tracked];
    let mut preview = Vec::with_capacity(n_tracked);
    let mut selected = vec![0.0; n_active];
    let mut scratch = Vec::new();

    let mut best_welfare = f64::NEG_INFINITY;
    let mut best_index: u64 = 0;
    let mut ties: Vec<u64> = Vec::new();
    let want_ties = matches!(options.tie_break, TieBreak::Random { .. });

    let mut odometer = AssignmentOdometer::new(items.len(), choices);
    let mut index: u64 = 0;
    while let Some(digits) = odometer.next() {
        step_active.iter_mut().for_each(|v| *v = 0.0);
        for (i, &j) in digits.iter().enumerate() {
            if j < n_active {
                step_active[j] += utility_matrix[i][j];
            }
        }
        step_full.iter_mut().for_each(|v| *v = 0.0);
        for (j, &pos) in positions.iter().enumerate() {
            step_full[pos] = step_active[j];
        }
        state.preview_values_into(&step_full, &mut preview);
        for (j, &pos) in positions.iter().enumerate() {
            selected[j] = preview[pos];
        }
        let w = welfare.eval_slice(&selected, &mut scratch);
        if w > best_welfare {
            best_welfare = w;
            best_index = index;
            if want_ties {
                ties.clear();
                ties.push(index);
            }
        } else if want_ties && w == best_welfare {
            ties.push(index);
        }
        index += 1;
    }
    debug_assert_eq!(index, count);

    let chosen_index = match options.tie_break {
        TieBreak::Lexicographic => best_index,
        TieBreak::Random { seed } => {
            let mut rng = SplitMix64::new(seed);
            let pick = ((rng.next_u64() as u128 * ties.len() as u128) >> 64) as usize;
            ties[pick]
        }
    };

    // Rebuild the chosen assignment from its enumeration index.
    let mut digits = vec![0usize; items.len()];
    let mut rem = chosen_index;
    for pos in (0..items.len()).rev() {
        digits[pos] = (rem % choices as u64) as usize;
        rem /= choices as u64;
    }
    let assignment: Vec<(ItemId, AgentId)> = items
        .iter()
        .zip(&digits)
        .filter(|(_, &j)| j < n_active)
        .map(|(item, &j)| (item.id.clone(), active[j].clone()))
        .collect();
    let allocation = Allocation::new(assignment);

    let step = step_utilities(&allocation, items, active)?;
    step_full.iter_mut().for_each(|v| *v = 0.0);
    for (j, &pos) in positions.iter().enumerate() {
        step_full[pos] = step.values()[j];
    }
    let step_tracked = UtilityVector::new(state.z().agent_ids().to_vec(), step_full.clone())?;
    let previewed = state.preview(&step_tracked)?;
    for (j, &pos) in positions.iter().enumerate() {
        selected[j] = previewed.values()[pos];
    }
    let welfare_value = welfare.eval_slice(&selected, &mut scratch);

    Ok(OptimizeOutcome {
        allocation,
        step,
        previewed,
        welfare: welfare_value,
    })
}

/// Per-item greedy assignment: each item goes to the agent valuing it most
/// (first such agent on ties). Exact for utilitarian welfare in the
/// instantaneous paradigm, where the objective decomposes per item;
/// approximate for every other paradigm/welfare combination.
pub fn greedy_utilitarian(items: &[Item], active: &[AgentId]) -> Result<Allocation> {
    check_unique_agents(active)?;
    check_unique_items(items)?;
    if active.is_empty() {
        return Err(Error::NoActiveAgents);
    }
    let assignment = items
        .iter()
        .map(|item| {
            let mut best = 0usize;
            let mut best_u = item.utility_for(&active[0]);
            for (j, agent) in active.iter().enumerate().skip(1) {
                let u = item.utility_for(agent);
                if u > best_u {
                    best_u = u;
                    best = j;
                }
            }
            (item.id.clone(), active[best].clone())
        })
        .collect();
    Ok(Allocation::new(assignment))
}

/// Small deterministic PRNG (splitmix64) for the seeded tie-break; avoids a
/// platform-dependent RNG dependency so traces replay bit-identically.
struct SplitMix64(u64);

impl SplitMix64 {
    fn new(seed: u64) -> Self {
        Self(seed)
    }

    fn next_u64(&mut self) -> u64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
}
