//! tSEARCH: static constraints from tPaths and pools, a mempool watch list,
//! dynamic instantiation against chain state, profit solving and the
//! template tournament.

mod constraints;
mod dynamic;
mod solve;
mod template;
mod watch;

use std::collections::BTreeMap;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sim::{Address, PoolId, SimError, TokenId, Tx, Value};

pub use constraints::{
    classify_pools, gen_static_constraints, gen_swap_baselines, statically_feasible, PoolInfo, StaticConstraint, RELATION_VOCABULARY,
    TPathRef,
};
pub use dynamic::{counterfactual, instantiate_dynamic, victim_sign, DynamicConstraint, Evaluation};
pub use solve::{golden_section_max, replay_plan, solve, tournament, SolverMethod};
pub use template::{catalog, Action, Actor, Amount, Leg, Template, TemplateId, TscSign, Venue};
pub use watch::{parse_mempool, watch_and_match, Match, PendingTx, WatchEntry, WatchKey, WatchList};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("stale state: {0}")]
    StaleState(String),
    #[error("solver hit the iteration cap of {0}")]
    SolverTimeout(usize),
    #[error("replay mismatch: plan records {recorded}, replay gives {replayed}")]
    ReplayMismatch { recorded: BigInt, replayed: BigInt },
    #[error("template not applicable: {0}")]
    NotApplicable(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// Serde for big integers as decimal strings.
pub(crate) mod amount {
    use num_bigint::BigInt;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&v.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Price {
    #[serde(with = "amount")]
    pub num: BigInt,
    #[serde(with = "amount")]
    pub den: BigInt,
}

/// One transaction of a plan, tagged with the template leg it realizes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlanTx {
    pub actor: Actor,
    pub venue: Venue,
    pub action: Action,
    pub sender: String,
    pub target: String,
    pub function: String,
    pub args: Vec<Value>,
}

impl PlanTx {
    pub fn tx(&self) -> Tx {
        Tx::new(&self.sender, &self.target, &self.function, self.args.clone())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MevPlan {
    pub template_id: TemplateId,
    #[serde(default)]
    pub extended: bool,
    pub victim_tx_id: String,
    pub token: TokenId,
    pub pools: BTreeMap<Venue, PoolId>,
    pub searcher: Address,
    pub bundle: Vec<PlanTx>,
    pub solved_args: BTreeMap<String, String>,
    #[serde(with = "amount")]
    pub profit: BigInt,
    pub profit_token: TokenId,
    /// Tokens whose searcher balance must not end below where it started.
    pub hold: Vec<TokenId>,
    /// Price (X per Y) at which leftover Y counts toward profit, if enabled.
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub residual_price: Option<Price>,
    pub solver: SolverMethod,
    pub iterations: usize,
    /// Fingerprint of the state the bundle was solved against.
    pub pre_state: String,
}

impl MevPlan {
    pub fn txs(&self) -> Vec<Tx> {
        self.bundle.iter().map(PlanTx::tx).collect()
    }
}
