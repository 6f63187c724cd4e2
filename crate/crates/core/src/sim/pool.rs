use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use super::{PoolId, TokenId};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoolKind {
    /// Constant product over internal reserves.
    ReserveCpmm,
    /// Constant product over live token balances.
    BalanceCpmm,
    /// Fixed-price borrow and repay.
    LendingFixed,
    /// Two ticks: an active constant-product segment and one inactive
    /// fixed-price tick.
    ConcTick,
}

impl PoolKind {
    pub fn as_str(self) -> &'static str {
        match self {
            PoolKind::ReserveCpmm => "reserve_cpmm",
            PoolKind::BalanceCpmm => "balance_cpmm",
            PoolKind::LendingFixed => "lending_fixed",
            PoolKind::ConcTick => "conc_tick",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PoolState {
    ReserveCpmm { rx: BigInt, ry: BigInt },
    BalanceCpmm,
    /// Borrowing `a` of X pays out `a * num / den` of Y.
    LendingFixed { price_num: BigInt, price_den: BigInt },
    ConcTick {
        /// L minted per Y deposited at the inactive tick is `num / den`.
        tick_price_num: BigInt,
        tick_price_den: BigInt,
        /// Y parked at the inactive tick; excluded from the active segment.
        parked_y: BigInt,
        liquidity_token: TokenId,
    },
}

pub const ACTIVE_TICK: u32 = 0;
pub const INACTIVE_TICK: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PoolInstance {
    pub id: PoolId,
    pub token_x: TokenId,
    pub token_y: TokenId,
    pub fee_bps: u32,
    pub state: PoolState,
}

impl PoolInstance {
    pub fn kind(&self) -> PoolKind {
        match self.state {
            PoolState::ReserveCpmm { .. } => PoolKind::ReserveCpmm,
            PoolState::BalanceCpmm => PoolKind::BalanceCpmm,
            PoolState::LendingFixed { .. } => PoolKind::LendingFixed,
            PoolState::ConcTick { .. } => PoolKind::ConcTick,
        }
    }

    pub fn functions(&self) -> &'static [&'static str] {
        match self.kind() {
            PoolKind::ReserveCpmm | PoolKind::BalanceCpmm => &["swap_xy", "swap_yx"],
            PoolKind::LendingFixed => &["borrow", "repay"],
            PoolKind::ConcTick => &["swap_xy", "swap_yx", "add_liquidity", "remove_liquidity"],
        }
    }
}

/// Input amount after the pool fee.
pub fn after_fee(dx: &BigInt, fee_bps: u32) -> BigInt {
    dx * BigInt::from(10_000 - fee_bps) / BigInt::from(10_000)
}

/// Constant-product output `floor(r_out * d / (r_in + d))` for an input
/// already net of fees.
pub fn cpmm_out(r_in: &BigInt, r_out: &BigInt, d_eff: &BigInt) -> BigInt {
    let denom = r_in + d_eff;
    if denom.is_zero() || d_eff.is_negative() {
        return BigInt::zero();
    }
    r_out * d_eff / denom
}

/// Smallest input (net of fees) whose constant-product output is at least
/// `want`, or `None` when the pool cannot supply that much.
pub fn cpmm_in_for(r_in: &BigInt, r_out: &BigInt, want: &BigInt) -> Option<BigInt> {
    if want >= r_out {
        return None;
    }
    if !want.is_positive() {
        return Some(BigInt::zero());
    }
    // out(d) >= want  <=>  r_out*d >= want*(r_in+d)  <=>  d >= want*r_in/(r_out-want)
    let num = want * r_in;
    let den = r_out - want;
    Some((num + &den - 1) / den)
}
