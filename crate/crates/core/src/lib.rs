//! Sequential multi-agent resource allocation under temporal fairness.
//!
//! The crate models three ways of judging fairness over time when indivisible
//! items are repeatedly allocated to agents:
//!
//! * **instantaneous** — only the current round's utilities count;
//! * **perfect recall** — utilities are summed (or averaged) since the start;
//! * **discounted recall** — past utilities decay by a factor `gamma_p` per
//!   round, interpolating between the two extremes.
//!
//! [`welfare`] scores utility vectors, [`fairness`] maintains the perceived
//! utilities `Z` under each paradigm, [`allocator`] picks the welfare-argmax
//! allocation each round, [`simulator`] runs scenario-driven episodes and
//! emits trace/metric CSVs, and [`state_space`] quantifies why discounting
//! keeps the augmented state space finite (the `u_max / (1 - gamma_p)` bound,
//! discretized state counts, and an exact finite-horizon planning demo).

pub mod allocator;
pub mod error;
pub mod fairness;
pub mod simulator;
pub mod state_space;
pub mod types;
pub mod welfare;

pub use error::{Error, Result};
pub use types::{AgentId, ItemId};
