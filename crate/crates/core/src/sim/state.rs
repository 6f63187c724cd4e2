use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::pool::{after_fee, cpmm_out, PoolInstance, PoolKind, PoolState, ACTIVE_TICK, INACTIVE_TICK};
use super::token::{TokenInstance, TokenModel};
use super::{Address, PoolId, SimError, TokenId, Value};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Tx {
    pub sender: Address,
    /// Token id or pool id.
    pub target: String,
    pub function: String,
    pub args: Vec<Value>,
}

impl Tx {
    pub fn new(sender: &str, target: &str, function: &str, args: Vec<Value>) -> Tx {
        Tx { sender: Address::new(sender), target: target.to_string(), function: function.to_string(), args }
    }
}

impl fmt::Display for Tx {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.sender, self.target, self.function)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExecReceipt {
    pub ok: bool,
    pub outputs: Vec<Value>,
    /// Nonzero balance changes, by (account, token).
    pub balance_deltas: BTreeMap<(Address, TokenId), BigInt>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainState {
    pub block_number: u64,
    pub tokens: BTreeMap<TokenId, TokenInstance>,
    pub pools: BTreeMap<PoolId, PoolInstance>,
    pub native_accounts: BTreeSet<Address>,
    pub step_budget: u64,
}

impl Default for ChainState {
    fn default() -> Self {
        ChainState::new(10_000)
    }
}

impl ChainState {
    pub fn new(step_budget: u64) -> ChainState {
        ChainState {
            block_number: 0,
            tokens: BTreeMap::new(),
            pools: BTreeMap::new(),
            native_accounts: BTreeSet::new(),
            step_budget,
        }
    }

    pub fn token(&self, id: &TokenId) -> Result<&TokenInstance, SimError> {
        self.tokens.get(id).ok_or_else(|| SimError::UnknownTarget(id.to_string()))
    }

    pub fn token_mut(&mut self, id: &TokenId) -> Result<&mut TokenInstance, SimError> {
        self.tokens.get_mut(id).ok_or_else(|| SimError::UnknownTarget(id.to_string()))
    }

    pub fn pool(&self, id: &PoolId) -> Result<&PoolInstance, SimError> {
        self.pools.get(id).ok_or_else(|| SimError::UnknownTarget(id.to_string()))
    }

    pub fn balance_of(&self, token: &TokenId, a: &Address) -> Result<BigInt, SimError> {
        self.token(token)?.balance_of(a, self.step_budget)
    }

    pub fn transfer(&mut self, token: &TokenId, from: &Address, to: &Address, amount: &BigInt) -> Result<(), SimError> {
        let budget = self.step_budget;
        self.token_mut(token)?.transfer(from, to, amount, budget)
    }

    /// Native accounts, pool addresses, and every account the token records.
    pub fn known_accounts(&self, token: &TokenId) -> BTreeSet<Address> {
        let mut s = self.native_accounts.clone();
        s.extend(self.pools.keys().map(Address::from));
        if let Some(t) = self.tokens.get(token) {
            s.extend(t.accounts());
        }
        s
    }

    /// Nonzero balances over the known accounts.
    pub fn holders(&self, token: &TokenId) -> Result<BTreeMap<Address, BigInt>, SimError> {
        let mut out = BTreeMap::new();
        for a in self.known_accounts(token) {
            let b = self.balance_of(token, &a)?;
            if !b.is_zero() {
                out.insert(a, b);
            }
        }
        Ok(out)
    }

    pub fn supply(&self, token: &TokenId) -> Result<BigInt, SimError> {
        Ok(self.holders(token)?.values().sum())
    }

    fn pool_addr(pool: &PoolId) -> Address {
        Address::from(pool)
    }

    /// Constant-product swap on any pool kind with a constant-product leg.
    /// Lending pools accept `swap_xy`/`swap_yx` as borrow/repay.
    pub fn swap(&mut self, pool: &PoolId, sender: &Address, x_to_y: bool, amount: &BigInt) -> Result<BigInt, SimError> {
        let p = self.pool(pool)?.clone();
        if let PoolState::LendingFixed { .. } = p.state {
            return self.lend(pool, sender, x_to_y, amount);
        }
        if !amount.is_positive() {
            return Err(SimError::InsufficientTrade);
        }
        let pa = Self::pool_addr(pool);
        let (tin, tout) = if x_to_y { (&p.token_x, &p.token_y) } else { (&p.token_y, &p.token_x) };
        let (r_in, r_out) = match &p.state {
            PoolState::ReserveCpmm { rx, ry } => {
                if x_to_y {
                    (rx.clone(), ry.clone())
                } else {
                    (ry.clone(), rx.clone())
                }
            }
            PoolState::BalanceCpmm => (self.balance_of(tin, &pa)?, self.balance_of(tout, &pa)?),
            PoolState::ConcTick { parked_y, .. } => {
                let bx = self.balance_of(&p.token_x, &pa)?;
                let by = (self.balance_of(&p.token_y, &pa)? - parked_y).max(BigInt::zero());
                if x_to_y {
                    (bx, by)
                } else {
                    (by, bx)
                }
            }
            PoolState::LendingFixed { .. } => unreachable!(),
        };
        if r_in.is_zero() || r_out.is_zero() {
            return Err(SimError::EmptyPool(pool.clone()));
        }
        let eff = after_fee(amount, p.fee_bps);
        let out = cpmm_out(&r_in, &r_out, &eff);
        self.transfer(tin, sender, &pa, amount)?;
        self.transfer(tout, &pa, sender, &out)?;
        if let Some(PoolInstance { state: PoolState::ReserveCpmm { rx, ry }, .. }) = self.pools.get_mut(pool) {
            if x_to_y {
                *rx += &eff;
                *ry -= &out;
            } else {
                *ry += &eff;
                *rx -= &out;
            }
        }
        Ok(out)
    }

    /// Fixed-price exchange: `borrow` sends X in and Y out, `repay` the reverse.
    pub fn lend(&mut self, pool: &PoolId, sender: &Address, borrow: bool, amount: &BigInt) -> Result<BigInt, SimError> {
        let p = self.pool(pool)?.clone();
        let PoolState::LendingFixed { price_num, price_den } = &p.state else {
            return Err(SimError::UnknownFunction {
                target: pool.to_string(),
                function: if borrow { "borrow" } else { "repay" }.into(),
            });
        };
        if !amount.is_positive() {
            return Err(SimError::InsufficientTrade);
        }
        let pa = Self::pool_addr(pool);
        let (tin, tout, out) = if borrow {
            (&p.token_x, &p.token_y, amount * price_num / price_den)
        } else {
            (&p.token_y, &p.token_x, amount * price_den / price_num)
        };
        if self.balance_of(tout, &pa)? < out {
            return Err(SimError::InsufficientPoolLiquidity(pool.clone()));
        }
        self.transfer(tin, sender, &pa, amount)?;
        self.transfer(tout, &pa, sender, &out)?;
        Ok(out)
    }

    fn check_tick(pool: &PoolId, tick: u32) -> Result<(), SimError> {
        match tick {
            ACTIVE_TICK => Err(SimError::ActiveTickError(pool.clone())),
            INACTIVE_TICK => Ok(()),
            t => Err(SimError::BadArguments(format!("pool {pool} has no tick {t}"))),
        }
    }

    /// Single-sided Y deposit at the inactive tick; returns L minted.
    pub fn add_liquidity(&mut self, pool: &PoolId, sender: &Address, tick: u32, dy: &BigInt) -> Result<BigInt, SimError> {
        let p = self.pool(pool)?.clone();
        let PoolState::ConcTick { tick_price_num, tick_price_den, liquidity_token, .. } = &p.state else {
            return Err(SimError::UnknownFunction { target: pool.to_string(), function: "add_liquidity".into() });
        };
        Self::check_tick(pool, tick)?;
        if !dy.is_positive() {
            return Err(SimError::InsufficientTrade);
        }
        let dl = dy * tick_price_num / tick_price_den;
        self.transfer(&p.token_y, sender, &Self::pool_addr(pool), dy)?;
        self.token_mut(liquidity_token)?.mint(sender, &dl)?;
        if let Some(PoolInstance { state: PoolState::ConcTick { parked_y, .. }, .. }) = self.pools.get_mut(pool) {
            *parked_y += dy;
        }
        Ok(dl)
    }

    /// Exact inverse of `add_liquidity` at the same tick; returns Y paid out.
    pub fn remove_liquidity(&mut self, pool: &PoolId, sender: &Address, tick: u32, dl: &BigInt) -> Result<BigInt, SimError> {
        let p = self.pool(pool)?.clone();
        let PoolState::ConcTick { tick_price_num, tick_price_den, liquidity_token, parked_y } = &p.state else {
            return Err(SimError::UnknownFunction { target: pool.to_string(), function: "remove_liquidity".into() });
        };
        Self::check_tick(pool, tick)?;
        if !dl.is_positive() {
            return Err(SimError::InsufficientTrade);
        }
        let dy = dl * tick_price_den / tick_price_num;
        if &dy > parked_y {
            return Err(SimError::InsufficientPoolLiquidity(pool.clone()));
        }
        self.token_mut(liquidity_token)?.burn(sender, dl)?;
        self.transfer(&p.token_y, &Self::pool_addr(pool), sender, &dy)?;
        if let Some(PoolInstance { state: PoolState::ConcTick { parked_y, .. }, .. }) = self.pools.get_mut(pool) {
            *parked_y -= &dy;
        }
        Ok(dy)
    }

    fn dispatch(&mut self, tx: &Tx) -> Result<Vec<Value>, SimError> {
        let budget = self.step_budget;
        if let Some(t) = self.tokens.get_mut(&TokenId::new(tx.target.as_str())) {
            return t.call(&tx.sender, &tx.function, &tx.args, budget);
        }
        let pool = PoolId::new(tx.target.as_str());
        if !self.pools.contains_key(&pool) {
            return Err(SimError::UnknownTarget(tx.target.clone()));
        }
        let int = |i: usize| -> Result<BigInt, SimError> {
            tx.args.get(i).and_then(Value::as_int).ok_or_else(|| SimError::BadArguments(format!("{} needs a numeric argument {i}", tx.function)))
        };
        let want = |n: usize| -> Result<(), SimError> {
            if tx.args.len() == n {
                Ok(())
            } else {
                Err(SimError::BadArguments(format!("{} takes {n} argument(s)", tx.function)))
            }
        };
        let tick = |v: BigInt| -> Result<u32, SimError> {
            u32::try_from(v).map_err(|_| SimError::BadArguments("bad tick index".into()))
        };
        let out = match tx.function.as_str() {
            "swap_xy" | "swap_yx" => {
                want(1)?;
                self.swap(&pool, &tx.sender, tx.function == "swap_xy", &int(0)?)?
            }
            "borrow" | "repay" => {
                want(1)?;
                self.lend(&pool, &tx.sender, tx.function == "borrow", &int(0)?)?
            }
            "add_liquidity" => {
                want(2)?;
                self.add_liquidity(&pool, &tx.sender, tick(int(0)?)?, &int(1)?)?
            }
            "remove_liquidity" => {
                want(2)?;
                self.remove_liquidity(&pool, &tx.sender, tick(int(0)?)?, &int(1)?)?
            }
            _ => return Err(SimError::UnknownFunction { target: tx.target.clone(), function: tx.function.clone() }),
        };
        Ok(vec![Value::Int(out)])
    }

    fn snapshot_balances(&self) -> Result<BTreeMap<(Address, TokenId), BigInt>, SimError> {
        let mut out = BTreeMap::new();
        for id in self.tokens.keys() {
            for a in self.known_accounts(id) {
                out.insert((a.clone(), id.clone()), self.balance_of(id, &a)?);
            }
        }
        Ok(out)
    }

    fn ledger_sums(&self) -> BTreeMap<TokenId, BigInt> {
        self.tokens
            .iter()
            .filter(|(_, t)| t.minter.is_none())
            .filter_map(|(id, t)| t.ledger().map(|l| (id.clone(), l.values().sum())))
            .collect()
    }

    /// Execute one transaction in place. On error the state may be partially
    /// updated; callers that need atomicity work on a copy.
    pub fn exec_tx(&mut self, tx: &Tx) -> Result<ExecReceipt, SimError> {
        let before = self.snapshot_balances()?;
        let ledgers = self.ledger_sums();
        let outputs = self.dispatch(tx)?;
        let target = TokenId::new(tx.target.as_str());
        for (id, sum) in self.ledger_sums() {
            let supply_call = id == target && self.tokens[&id].is_supply_call(&tx.function);
            if !supply_call && ledgers.get(&id) != Some(&sum) {
                return Err(SimError::ConservationViolated(id));
            }
        }
        let after = self.snapshot_balances()?;
        let mut deltas = BTreeMap::new();
        let keys: BTreeSet<&(Address, TokenId)> = before.keys().chain(after.keys()).collect();
        for k in keys {
            let d = after.get(k).cloned().unwrap_or_default() - before.get(k).cloned().unwrap_or_default();
            if !d.is_zero() {
                deltas.insert(k.clone(), d);
            }
        }
        Ok(ExecReceipt { ok: true, outputs, balance_deltas: deltas })
    }

    /// Execute `txs` in order on a copy. Any fault reverts the whole bundle
    /// and leaves `self` untouched.
    pub fn exec_bundle(&self, txs: &[Tx]) -> Result<(ChainState, Vec<ExecReceipt>), SimError> {
        if txs.is_empty() {
            return Err(SimError::EmptyBundle);
        }
        let mut next = self.clone();
        let mut receipts = Vec::with_capacity(txs.len());
        for (index, tx) in txs.iter().enumerate() {
            match next.exec_tx(tx) {
                Ok(r) => receipts.push(r),
                Err(cause) => return Err(SimError::BundleReverted { index, cause: Box::new(cause) }),
            }
        }
        next.block_number += 1;
        Ok((next, receipts))
    }

    /// Deterministic text rendering of the full state.
    pub fn canonical_text(&self) -> String {
        let mut s = format!("block {}\n", self.block_number);
        for a in &self.native_accounts {
            s.push_str(&format!("account {a}\n"));
        }
        for (id, t) in &self.tokens {
            s.push_str(&format!("token {id} {} owner={}\n", t.model.kind_name(), t.owner));
            match &t.model {
                TokenModel::Erc20 { balances } => {
                    for (a, b) in balances {
                        s.push_str(&format!("  {a} {b}\n"));
                    }
                }
                TokenModel::Rebase { scale, base } => {
                    s.push_str(&format!("  scale {scale}\n"));
                    for (a, b) in base {
                        s.push_str(&format!("  {a} {b}\n"));
                    }
                }
                TokenModel::Interpreted { contract, storage } => {
                    s.push_str(&format!("  contract {}\n", contract.name));
                    for (k, v) in &storage.scalars {
                        s.push_str(&format!("  {k} = {v}\n"));
                    }
                    for (m, entries) in &storage.maps {
                        for (a, b) in entries {
                            s.push_str(&format!("  {m}[{a}] = {b}\n"));
                        }
                    }
                }
            }
        }
        for (id, p) in &self.pools {
            s.push_str(&format!("pool {id} {} {}/{} fee={}\n", p.kind().as_str(), p.token_x, p.token_y, p.fee_bps));
            match &p.state {
                PoolState::ReserveCpmm { rx, ry } => s.push_str(&format!("  reserves {rx} {ry}\n")),
                PoolState::BalanceCpmm => {}
                PoolState::LendingFixed { price_num, price_den } => s.push_str(&format!("  price {price_num}/{price_den}\n")),
                PoolState::ConcTick { tick_price_num, tick_price_den, parked_y, liquidity_token } => s.push_str(&format!(
                    "  tick {tick_price_num}/{tick_price_den} parked {parked_y} L={liquidity_token}\n"
                )),
            }
        }
        s
    }

    /// SHA-256 of `canonical_text`, hex encoded.
    pub fn fingerprint(&self) -> String {
        hex::encode(Sha256::digest(self.canonical_text().as_bytes()))
    }

    /// Spot price of Y in X as (num, den), ignoring slippage.
    pub fn spot_price_y_in_x(&self, pool: &PoolId) -> Result<(BigInt, BigInt), SimError> {
        let p = self.pool(pool)?;
        let pa = Self::pool_addr(pool);
        Ok(match &p.state {
            PoolState::ReserveCpmm { rx, ry } => (rx.clone(), ry.clone()),
            PoolState::BalanceCpmm => (self.balance_of(&p.token_x, &pa)?, self.balance_of(&p.token_y, &pa)?),
            PoolState::LendingFixed { price_num, price_den } => (price_den.clone(), price_num.clone()),
            PoolState::ConcTick { parked_y, .. } => (
                self.balance_of(&p.token_x, &pa)?,
                (self.balance_of(&p.token_y, &pa)? - parked_y).max(BigInt::zero()),
            ),
        })
    }

    pub fn pool_kind(&self, pool: &PoolId) -> Result<PoolKind, SimError> {
        Ok(self.pool(pool)?.kind())
    }
}
