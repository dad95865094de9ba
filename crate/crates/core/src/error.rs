//! Crate-wide error type.

use crate::types::{AgentId, ItemId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty utility vector")]
    EmptyUtilityVector,

    #[error("utility vector has {ids} agent ids but {values} values")]
    LengthMismatch { ids: usize, values: usize },

    #[error("duplicate agent id \"{0}\"")]
    DuplicateAgent(AgentId),

    #[error("unknown agent id \"{0}\"")]
    UnknownAgent(AgentId),

    #[error("agent \"{agent}\": utility {value} must be finite and nonnegative")]
    InvalidUtility { agent: AgentId, value: f64 },

    #[error("gini weights must be nonincreasing, but weights[{index}] increases")]
    IncreasingGiniWeights { index: usize },

    #[error("invalid gini weights: {0}")]
    InvalidGiniWeights(&'static str),

    #[error("welfare weights cover {weights} agents but the utility vector has {agents}")]
    WeightLengthMismatch { weights: usize, agents: usize },

    #[error("gamma must lie in [0, 1], got {0}")]
    InvalidGamma(f64),

    #[error("mode \"{0}\" requires a gamma value")]
    MissingGamma(String),

    #[error("unknown paradigm mode \"{0}\"")]
    UnknownMode(String),

    #[error("unknown welfare \"{0}\"")]
    UnknownWelfare(String),

    #[error("step utilities are not aligned with the tracked agents")]
    MisalignedAgents,

    #[error("no active agents to allocate to")]
    NoActiveAgents,

    #[error("unknown item id \"{0}\"")]
    UnknownItem(ItemId),

    #[error("duplicate item id \"{0}\"")]
    DuplicateItem(ItemId),

    #[error(
        "allocation space too large: {items} items over {agents} agents would require \
         {required} allocations, cap is 2^{cap_bits}"
    )]
    AllocationSpaceTooLarge {
        items: usize,
        agents: usize,
        required: u128,
        cap_bits: u32,
    },

    #[error("scenario: {0}")]
    InvalidScenario(String),

    #[error("scenario is not valid JSON: {0}")]
    ScenarioJson(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("round {round}: {source}")]
    InRound {
        round: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("agent \"{0}\" does not appear in the trace")]
    AgentNotInTrace(AgentId),

    #[error("no comparison configurations given")]
    NoConfigs,

    #[error("duplicate config label \"{0}\"")]
    DuplicateLabel(String),

    #[error("perfect recall is unbounded: the discounted bound requires gamma_p < 1, got {0}")]
    PerfectRecallUnbounded(f64),

    #[error("invalid discretization: {0}")]
    InvalidDiscretization(String),

    #[error(
        "agent \"{agent}\": perceived utility {value} exceeds the discounted bound {bound}; \
         this indicates a bound violation upstream"
    )]
    BoundViolation {
        agent: AgentId,
        value: f64,
        bound: f64,
    },

    #[error(
        "augmented state space too large: estimated {estimate} reachable states exceeds the \
         cap of {cap}"
    )]
    StateCapExceeded { estimate: u128, cap: u64 },

    #[error("the augmented MDP requires the discounted_additive paradigm with gamma_p < 1")]
    MdpParadigm,
}

impl Error {
    /// Errors caused by a configured resource cap rather than invalid input.
    pub fn is_resource_cap(&self) -> bool {
        match self {
            Error::AllocationSpaceTooLarge { .. } | Error::StateCapExceeded { .. } => true,
            Error::InRound { source, .. } => source.is_resource_cap(),
            _ => false,
        }
    }

    pub(crate) fn in_round(round: u64, source: Error) -> Error {
        Error::InRound {
            round,
            source: Box::new(source),
        }
    }
}
