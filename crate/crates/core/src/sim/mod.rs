//! Deterministic chain simulator: token models, pools, bundles and the
//! price-insensitivity probe.

pub mod fixture;
pub mod interp;
mod pitex;
pub mod pool;
mod state;
pub mod token;
mod value;

use num_bigint::BigInt;
use thiserror::Error;

pub use fixture::{load_bundle, load_fixture, parse_bundle, parse_fixture, Fixture};
pub use pitex::{classify_pool, pitex_test, PitexOutcome, Sensitivity};
pub use pool::{PoolInstance, PoolKind, PoolState};
pub use state::{ChainState, ExecReceipt, Tx};
pub use token::{TokenInstance, TokenModel};
pub use value::{Address, PoolId, TokenId, Value};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error("{account} holds {available} {token}, needs {needed}")]
    InsufficientBalance { token: TokenId, account: Address, needed: BigInt, available: BigInt },
    #[error("pool {0} has an empty reserve")]
    EmptyPool(PoolId),
    #[error("trade amount must be positive")]
    InsufficientTrade,
    #[error("pool {0} cannot pay out that much")]
    InsufficientPoolLiquidity(PoolId),
    #[error("tick is active in pool {0}")]
    ActiveTickError(PoolId),
    #[error("unknown target `{0}`")]
    UnknownTarget(String),
    #[error("`{target}` has no function `{function}`")]
    UnknownFunction { target: String, function: String },
    #[error("bad arguments: {0}")]
    BadArguments(String),
    #[error("division by zero")]
    DivisionByZero,
    #[error("negative value stored in uint `{0}`")]
    NegativeUint(String),
    #[error("step budget of {0} exceeded")]
    StepBudgetExceeded(u64),
    #[error("`{function}` is owner-only")]
    NotOwner { function: String },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("balance conservation violated for {0}")]
    ConservationViolated(TokenId),
    #[error("bundle reverted at tx {index}: {cause}")]
    BundleReverted { index: usize, cause: Box<SimError> },
    #[error("empty bundle")]
    EmptyBundle,
    #[error("fixture: {0}")]
    Fixture(String),
}
