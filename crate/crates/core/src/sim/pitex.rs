use num_bigint::BigInt;
use num_traits::Signed;
use serde::{Deserialize, Serialize};

use super::pool::{PoolKind, INACTIVE_TICK};
use super::{Address, ChainState, PoolId, SimError, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sensitivity {
    Sensitive,
    Insensitive,
}

impl Sensitivity {
    pub fn as_str(self) -> &'static str {
        match self {
            Sensitivity::Sensitive => "sensitive",
            Sensitivity::Insensitive => "insensitive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PitexOutcome {
    pub class: Sensitivity,
    pub dx1: BigInt,
    pub dx2: BigInt,
}

const TRADER: &str = "pitex.trader";
const DONOR: &str = "pitex.donor";

/// Spend `dy` of `token_y` through the pool's exchange entry point and return
/// what comes back. On a concentrated pool `tick` selects the inactive tick.
fn tex(state: &mut ChainState, pool: &PoolId, token_y: &TokenId, dy: &BigInt, tick: Option<u32>) -> Result<BigInt, SimError> {
    let p = state.pool(pool)?.clone();
    let trader = Address::new(TRADER);
    if let Some(t) = tick {
        if p.kind() != PoolKind::ConcTick {
            return Err(SimError::BadArguments(format!("pool {pool} has no ticks")));
        }
        return state.add_liquidity(pool, &trader, t, dy);
    }
    let y_in = if *token_y == p.token_y {
        true
    } else if *token_y == p.token_x {
        false
    } else {
        return Err(SimError::BadArguments(format!("pool {pool} does not trade {token_y}")));
    };
    match p.kind() {
        PoolKind::LendingFixed => state.lend(pool, &trader, !y_in, dy),
        _ => state.swap(pool, &trader, !y_in, dy),
    }
}

/// Differential test: the exchange output for `dy` with and without a prior
/// direct transfer of `dy2` to the pool must be exactly equal for the pool to
/// be price-insensitive.
pub fn pitex_test(
    state: &ChainState,
    pool: &PoolId,
    token_y: &TokenId,
    dy: &BigInt,
    dy2: &BigInt,
    tick: Option<u32>,
) -> Result<PitexOutcome, SimError> {
    if !dy.is_positive() || !dy2.is_positive() {
        return Err(SimError::BadArguments("probe amounts must be positive".into()));
    }
    let pool_addr = Address::from(pool);
    let probe_token = match tick {
        Some(_) => state.pool(pool)?.token_y.clone(),
        None => token_y.clone(),
    };

    let mut a = state.clone();
    a.token_mut(&probe_token)?.fund(&Address::new(TRADER), dy)?;
    let dx1 = tex(&mut a, pool, &probe_token, dy, tick)?;

    let mut b = state.clone();
    b.token_mut(&probe_token)?.fund(&Address::new(TRADER), dy)?;
    b.token_mut(&probe_token)?.fund(&Address::new(DONOR), dy2)?;
    b.transfer(&probe_token, &Address::new(DONOR), &pool_addr, dy2)?;
    let dx2 = tex(&mut b, pool, &probe_token, dy, tick)?;

    let class = if dx1 == dx2 { Sensitivity::Insensitive } else { Sensitivity::Sensitive };
    Ok(PitexOutcome { class, dx1, dx2 })
}

/// Classify a pool with default probe sizes: 1/1000 of the pool's Y balance
/// (at least 1000 units) for both the trade and the perturbation.
pub fn classify_pool(state: &ChainState, pool: &PoolId, tick: Option<u32>) -> Result<PitexOutcome, SimError> {
    let p = state.pool(pool)?;
    let bal = state.balance_of(&p.token_y, &Address::from(pool))?;
    let probe: BigInt = (bal / BigInt::from(1000)).max(BigInt::from(1000));
    let tick = match (p.kind(), tick) {
        (PoolKind::ConcTick, Some(t)) if t == INACTIVE_TICK => Some(t),
        (PoolKind::ConcTick, Some(_)) | (_, None) => None,
        (_, Some(_)) => return Err(SimError::BadArguments(format!("pool {pool} has no ticks"))),
    };
    pitex_test(state, pool, &p.token_y.clone(), &probe, &probe, tick)
}
