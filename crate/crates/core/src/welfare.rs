//! Social welfare functions over per-agent utility vectors.
//!
//! Four welfare families are supported: utilitarian (sum), egalitarian
//! (minimum, also called maximin fairness or MMF), Nash (product), and
//! generalized Gini (rank-weighted sum of the ascending-sorted utilities
//! with nonincreasing weights, so the worst-off agent carries the largest
//! weight).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::AgentId;

/// Per-agent nonnegative utilities, aligned with a fixed agent order.
///
/// Invariants enforced at construction: agent ids are unique, the id and
/// value lists have equal length, and every value is finite and `>= 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtilityVector {
    agent_ids: Vec<AgentId>,
    values: Vec<f64>,
}

impl UtilityVector {
    pub fn new(agent_ids: Vec<AgentId>, values: Vec<f64>) -> Result<Self> {
        if agent_ids.len() != values.len() {
            return Err(Error::LengthMismatch {
                ids: agent_ids.len(),
                values: values.len(),
            });
        }
        for (i, id) in agent_ids.iter().enumerate() {
            if agent_ids[..i].contains(id) {
                return Err(Error::DuplicateAgent(id.clone()));
            }
        }
        for (id, &v) in agent_ids.iter().zip(&values) {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidUtility {
                    agent: id.clone(),
                    value: v,
                });
            }
        }
        Ok(Self { agent_ids, values })
    }

    /// All-zero vector over the given agents.
    pub fn zeros(agent_ids: Vec<AgentId>) -> Result<Self> {
        let n = agent_ids.len();
        Self::new(agent_ids, vec![0.0; n])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn agent_ids(&self) -> &[AgentId] {
        &self.agent_ids
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Value for `agent`, or `None` if the agent is not tracked.
    pub fn get(&self, agent: &AgentId) -> Option<f64> {
        self.position(agent).map(|i| self.values[i])
    }

    pub fn position(&self, agent: &AgentId) -> Option<usize> {
        self.agent_ids.iter().position(|a| a == agent)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&AgentId, f64)> {
        self.agent_ids.iter().zip(self.values.iter().copied())
    }

    pub(crate) fn from_parts_unchecked(agent_ids: Vec<AgentId>, values: Vec<f64>) -> Self {
        debug_assert_eq!(agent_ids.len(), values.len());
        Self { agent_ids, values }
    }
}

/// Which welfare function to optimize, with any per-family parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WelfareSpec {
    Utilitarian,
    Egalitarian,
    /// Product of utilities, optionally offset by `epsilon` before
    /// multiplying. The default offset is 0: a zero utility annihilates the
    /// product, and silently smoothing it away would change argmax results.
    Nash {
        #[serde(default)]
        epsilon: f64,
    },
    GeneralizedGini {
        weights: Vec<f64>,
    },
}

impl WelfareSpec {
    pub fn nash() -> Self {
        WelfareSpec::Nash { epsilon: 0.0 }
    }

    pub fn generalized_gini(weights: Vec<f64>) -> Result<Self> {
        validate_gini_weights(&weights)?;
        Ok(WelfareSpec::GeneralizedGini { weights })
    }

    /// Parses a CLI/config welfare name: `utilitarian`, `egalitarian` (alias
    /// `mmf`), `nash`, or `gini:w1,w2,...`.
    pub fn parse(s: &str) -> Result<Self> {
        let (name, args) = match s.split_once(':') {
            Some((name, args)) => (name, Some(args)),
            None => (s, None),
        };
        match (name, args) {
            ("utilitarian" | "util", None) => Ok(WelfareSpec::Utilitarian),
            ("egalitarian" | "mmf", None) => Ok(WelfareSpec::Egalitarian),
            ("nash", None) => Ok(WelfareSpec::nash()),
            ("gini" | "generalized_gini", Some(args)) => {
                let weights = args
                    .split(',')
                    .map(|w| {
                        w.trim()
                            .parse::<f64>()
                            .map_err(|_| Error::UnknownWelfare(s.to_owned()))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                WelfareSpec::generalized_gini(weights)
            }
            ("gini" | "generalized_gini", None) => Err(Error::InvalidGiniWeights(
                "gini requires a weight list, e.g. gini:0.5,0.3,0.2",
            )),
            _ => Err(Error::UnknownWelfare(s.to_owned())),
        }
    }

    /// Short label used in trace CSVs; contains no commas.
    pub fn label(&self) -> String {
        match self {
            WelfareSpec::Utilitarian => "utilitarian".to_owned(),
            WelfareSpec::Egalitarian => "mmf".to_owned(),
            WelfareSpec::Nash { .. } => "nash".to_owned(),
            WelfareSpec::GeneralizedGini { weights } => {
                let ws: Vec<String> = weights.iter().map(|w| w.to_string()).collect();
                format!("gini:{}", ws.join("|"))
            }
        }
    }

    /// Checks that the spec can score a vector of `agents` entries.
    pub fn validate_for(&self, agents: usize) -> Result<()> {
        if agents == 0 {
            return Err(Error::EmptyUtilityVector);
        }
        if let WelfareSpec::GeneralizedGini { weights } = self {
            if weights.len() != agents {
                return Err(Error::WeightLengthMismatch {
                    weights: weights.len(),
                    agents,
                });
            }
        }
        Ok(())
    }

    /// Scores a pre-validated value slice. `scratch` is reused for sorting.
    pub(crate) fn eval_slice(&self, values: &[f64], scratch: &mut Vec<f64>) -> f64 {
        match self {
            WelfareSpec::Utilitarian => values.iter().sum(),
            WelfareSpec::Egalitarian => values.iter().copied().fold(f64::INFINITY, f64::min),
            WelfareSpec::Nash { epsilon } => values.iter().map(|v| v + epsilon).product(),
            WelfareSpec::GeneralizedGini { weights } => {
                scratch.clear();
                scratch.extend_from_slice(values);
                scratch.sort_by(|a, b| a.total_cmp(b));
                scratch.iter().zip(weights).map(|(z, w)| w * z).sum()
            }
        }
    }
}

fn validate_gini_weights(weights: &[f64]) -> Result<()> {
    if weights.is_empty() {
        return Err(Error::InvalidGiniWeights("weight list is empty"));
    }
    for (i, w) in weights.iter().enumerate() {
        if !w.is_finite() || *w < 0.0 {
            return Err(Error::InvalidGiniWeights(
                "weights must be finite and nonnegative",
            ));
        }
        if i > 0 && *w > weights[i - 1] {
            return Err(Error::IncreasingGiniWeights { index: i });
        }
    }
    if weights.iter().all(|w| *w == 0.0) {
        return Err(Error::InvalidGiniWeights("at least one weight must be > 0"));
    }
    Ok(())
}

fn require_nonempty(z: &UtilityVector) -> Result<()> {
    if z.is_empty() {
        Err(Error::EmptyUtilityVector)
    } else {
        Ok(())
    }
}

/// Total utility: the sum of all entries.
pub fn utilitarian(z: &UtilityVector) -> Result<f64> {
    require_nonempty(z)?;
    Ok(z.values().iter().sum())
}

/// Utility of the worst-off agent (maximin fairness).
pub fn egalitarian(z: &UtilityVector) -> Result<f64> {
    require_nonempty(z)?;
    Ok(z.values().iter().copied().fold(f64::INFINITY, f64::min))
}

/// Product of utilities. A zero entry yields zero.
pub fn nash(z: &UtilityVector) -> Result<f64> {
    require_nonempty(z)?;
    Ok(z.values().iter().product())
}

/// Rank-weighted welfare: utilities are sorted ascending and dotted with
/// `weights`, so `weights[0]` (the largest) applies to the worst-off agent.
///
/// Weights are not required to sum to 1; normalizing only rescales the
/// welfare value and leaves any argmax over allocations unchanged.
pub fn generalized_gini(z: &UtilityVector, weights: &[f64]) -> Result<f64> {
    require_nonempty(z)?;
    validate_gini_weights(weights)?;
    if weights.len() != z.len() {
        return Err(Error::WeightLengthMismatch {
            weights: weights.len(),
            agents: z.len(),
        });
    }
    let mut sorted = z.values().to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));
    Ok(sorted.iter().zip(weights).map(|(v, w)| w * v).sum())
}

/// Dispatches to the welfare function selected by `spec`.
pub fn evaluate(spec: &WelfareSpec, z: &UtilityVector) -> Result<f64> {
    require_nonempty(z)?;
    spec.validate_for(z.len())?;
    let mut scratch = Vec::new();
    Ok(spec.eval_slice(z.values(), &mut scratch))
}
