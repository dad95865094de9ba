//! Perceived-utility state under the three temporal fairness paradigms.
//!
//! The perceived utilities `Z` evolve per round according to the configured
//! paradigm. With step utilities `u` and decay factor `gamma`:
//!
//! | mode                 | update                                        |
//! |----------------------|-----------------------------------------------|
//! | instantaneous        | `Z' = u`                                      |
//! | perfect_additive     | `Z' = Z + u`                                  |
//! | perfect_averaged     | `Z' = (Z*t + u) / (t + 1)`                    |
//! | discounted_additive  | `Z' = gamma*Z + u`                            |
//! | discounted_averaged  | `Z' = (gamma*Z*d + u) / (gamma*d + 1)`        |
//!
//! `t` counts commits so far and `d` is the geometric partial sum
//! `1 + gamma + gamma^2 + ...` acting as the effective time denominator in
//! the averaged discounted mode. `discounted_additive` degenerates to
//! `instantaneous` at `gamma = 0` and to `perfect_additive` at `gamma = 1`;
//! `discounted_averaged` at `gamma = 1` is the running mean.
//!
//! Updates are value-semantic: [`FairnessState::commit`] returns a new state
//! and leaves the original untouched, so states can be checkpointed, cloned
//! for replays, and moved freely across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::AgentId;
use crate::welfare::UtilityVector;

/// Temporal fairness paradigm. Discounted modes carry their decay factor
/// `gamma` in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum Paradigm {
    Instantaneous,
    PerfectAdditive,
    PerfectAveraged,
    DiscountedAdditive { gamma: f64 },
    DiscountedAveraged { gamma: f64 },
}

fn check_gamma(gamma: f64) -> Result<f64> {
    if gamma.is_finite() && (0.0..=1.0).contains(&gamma) {
        Ok(gamma)
    } else {
        Err(Error::InvalidGamma(gamma))
    }
}

impl Paradigm {
    pub fn discounted_additive(gamma: f64) -> Result<Self> {
        Ok(Paradigm::DiscountedAdditive {
            gamma: check_gamma(gamma)?,
        })
    }

    pub fn discounted_averaged(gamma: f64) -> Result<Self> {
        Ok(Paradigm::DiscountedAveraged {
            gamma: check_gamma(gamma)?,
        })
    }

    /// Builds a paradigm from a mode name and an optional gamma. Gamma is
    /// required for the discounted modes and ignored otherwise.
    pub fn from_mode(mode: &str, gamma: Option<f64>) -> Result<Self> {
        match mode {
            "instantaneous" => Ok(Paradigm::Instantaneous),
            "perfect_additive" => Ok(Paradigm::PerfectAdditive),
            "perfect_averaged" => Ok(Paradigm::PerfectAveraged),
            "discounted_additive" => match gamma {
                Some(g) => Paradigm::discounted_additive(g),
                None => Err(Error::MissingGamma(mode.to_owned())),
            },
            "discounted_averaged" => match gamma {
                Some(g) => Paradigm::discounted_averaged(g),
                None => Err(Error::MissingGamma(mode.to_owned())),
            },
            other => Err(Error::UnknownMode(other.to_owned())),
        }
    }

    pub fn mode_name(&self) -> &'static str {
        match self {
            Paradigm::Instantaneous => "instantaneous",
            Paradigm::PerfectAdditive => "perfect_additive",
            Paradigm::PerfectAveraged => "perfect_averaged",
            Paradigm::DiscountedAdditive { .. } => "discounted_additive",
            Paradigm::DiscountedAveraged { .. } => "discounted_averaged",
        }
    }

    /// Label used in trace CSVs, e.g. `discounted_additive:0.9`.
    pub fn label(&self) -> String {
        match self.gamma() {
            Some(g) => format!("{}:{}", self.mode_name(), g),
            None => self.mode_name().to_owned(),
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Paradigm::DiscountedAdditive { gamma } | Paradigm::DiscountedAveraged { gamma } => {
                Some(*gamma)
            }
            _ => None,
        }
    }

    fn is_averaged(&self) -> bool {
        matches!(
            self,
            Paradigm::PerfectAveraged | Paradigm::DiscountedAveraged { .. }
        )
    }

    /// Decay applied to the averaged denominator on commit.
    fn denominator_gamma(&self) -> f64 {
        match self {
            Paradigm::PerfectAveraged => 1.0,
            Paradigm::DiscountedAveraged { gamma } => *gamma,
            _ => 0.0,
        }
    }
}

/// Fairness state: the perceived utilities `Z` per tracked agent, the
/// averaged-mode denominator `d`, and the commit counter `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FairnessState {
    paradigm: Paradigm,
    z: UtilityVector,
    d: f64,
    t: u64,
}

impl FairnessState {
    /// Fresh state with `Z = 0` for every agent. The agent list may be empty;
    /// agents can arrive later via [`FairnessState::add_agent`].
    pub fn init(paradigm: Paradigm, agent_ids: Vec<AgentId>) -> Result<Self> {
        Ok(Self {
            paradigm,
            z: UtilityVector::zeros(agent_ids)?,
            d: 0.0,
            t: 0,
        })
    }

    /// Rebuilds a state from raw parts, e.g. a deserialized checkpoint or a
    /// discretized representative.
    pub fn from_parts(paradigm: Paradigm, z: UtilityVector, d: f64, t: u64) -> Result<Self> {
        if !d.is_finite() || d < 0.0 {
            return Err(Error::InvalidScenario(format!(
                "denominator d must be finite and nonnegative, got {d}"
            )));
        }
        Ok(Self { paradigm, z, d, t })
    }

    pub fn paradigm(&self) -> Paradigm {
        self.paradigm
    }

    pub fn z(&self) -> &UtilityVector {
        &self.z
    }

    pub fn agent_ids(&self) -> &[AgentId] {
        self.z.agent_ids()
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    fn check_aligned(&self, step: &UtilityVector) -> Result<()> {
        if step.agent_ids() != self.z.agent_ids() {
            return Err(Error::MisalignedAgents);
        }
        Ok(())
    }

    /// Post-allocation perceived utilities `Z | u` under the configured rule,
    /// without mutating the state.
    pub fn preview(&self, step: &UtilityVector) -> Result<UtilityVector> {
        self.check_aligned(step)?;
        let mut out = Vec::with_capacity(self.z.len());
        self.preview_values_into(step.values(), &mut out);
        Ok(UtilityVector::from_parts_unchecked(
            self.z.agent_ids().to_vec(),
            out,
        ))
    }

    /// Slice-level preview used by the allocator's argmax loop.
    pub(crate) fn preview_values_into(&self, step: &[f64], out: &mut Vec<f64>) {
        debug_assert_eq!(step.len(), self.z.len());
        out.clear();
        let t = self.t as f64;
        let d = self.d;
        match self.paradigm {
            Paradigm::Instantaneous => out.extend_from_slice(step),
            Paradigm::PerfectAdditive => {
                out.extend(self.z.values().iter().zip(step).map(|(z, u)| z + u))
            }
            Paradigm::PerfectAveraged => out.extend(
                self.z
                    .values()
                    .iter()
                    .zip(step)
                    .map(|(z, u)| (z * t + u) / (t + 1.0)),
            ),
            Paradigm::DiscountedAdditive { gamma } => {
                out.extend(self.z.values().iter().zip(step).map(|(z, u)| gamma * z + u))
            }
            Paradigm::DiscountedAveraged { gamma } => out.extend(
                self.z
                    .values()
                    .iter()
                    .zip(step)
                    .map(|(z, u)| (gamma * z * d + u) / (gamma * d + 1.0)),
            ),
        }
    }

    /// Applies the update: `Z` becomes the preview result, the averaged
    /// denominator advances, and the commit counter increments. Returns the
    /// new state; `self` is unchanged.
    pub fn commit(&self, step: &UtilityVector) -> Result<FairnessState> {
        let z = self.preview(step)?;
        let d = if self.paradigm.is_averaged() {
            self.paradigm.denominator_gamma() * self.d + 1.0
        } else {
            self.d
        };
        Ok(FairnessState {
            paradigm: self.paradigm,
            z,
            d,
            t: self.t + 1,
        })
    }

    /// Tracks a newly arrived agent with `Z = 0`. `d` and `t` are unchanged:
    /// the arrival shares the global clock and denominator, it does not get a
    /// personal one.
    pub fn add_agent(&self, agent: AgentId) -> Result<FairnessState> {
        if self.z.position(&agent).is_some() {
            return Err(Error::DuplicateAgent(agent));
        }
        let mut ids = self.z.agent_ids().to_vec();
        let mut values = self.z.values().to_vec();
        ids.push(agent);
        values.push(0.0);
        Ok(FairnessState {
            paradigm: self.paradigm,
            z: UtilityVector::from_parts_unchecked(ids, values),
            d: self.d,
            t: self.t,
        })
    }

    /// Drops a departing agent's entry. Re-adding the agent later starts it
    /// fresh at `Z = 0`.
    pub fn remove_agent(&self, agent: &AgentId) -> Result<FairnessState> {
        let pos = self
            .z
            .position(agent)
            .ok_or_else(|| Error::UnknownAgent(agent.clone()))?;
        let mut ids = self.z.agent_ids().to_vec();
        let mut values = self.z.values().to_vec();
        ids.remove(pos);
        values.remove(pos);
        Ok(FairnessState {
            paradigm: self.paradigm,
            z: UtilityVector::from_parts_unchecked(ids, values),
            d: self.d,
            t: self.t,
        })
    }
}
