//! Scenario fixtures (`.scn`, TOML) and bundle files (`.txs`).

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;
use std::sync::Arc;

use num_bigint::BigInt;
use serde::Deserialize;

use super::interp::coerce;
use super::pool::{PoolInstance, PoolKind, PoolState};
use super::token::{scale_one, TokenInstance, TokenModel};
use super::{Address, ChainState, PoolId, SimError, TokenId, Tx, Value};
use crate::lang::{self, Kind};

#[derive(Debug, Clone, PartialEq)]
pub struct Fixture {
    pub state: ChainState,
    pub searcher: Address,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum Amount {
    Int(i64),
    Text(String),
}

impl Amount {
    fn value(&self) -> Result<BigInt, SimError> {
        match self {
            Amount::Int(n) => Ok(BigInt::from(*n)),
            Amount::Text(s) => parse_amount(s),
        }
    }
}

/// Decimal integer with an optional `eN` exponent, as in `1e18`.
pub fn parse_amount(s: &str) -> Result<BigInt, SimError> {
    let bad = || SimError::Fixture(format!("bad amount `{s}`"));
    let s = s.trim().replace('_', "");
    match s.split_once(['e', 'E']) {
        Some((m, e)) => {
            let m: BigInt = m.parse().map_err(|_| bad())?;
            let e: u32 = e.parse().ok().filter(|e| *e <= 1000).ok_or_else(bad)?;
            Ok(m * BigInt::from(10u32).pow(e))
        }
        None => s.parse().map_err(|_| bad()),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFixture {
    searcher: Option<String>,
    #[serde(default)]
    accounts: Vec<String>,
    #[serde(default)]
    block_number: u64,
    step_budget: Option<u64>,
    #[serde(default, rename = "token")]
    tokens: Vec<RawToken>,
    #[serde(default, rename = "pool")]
    pools: Vec<RawPool>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawToken {
    id: String,
    model: String,
    owner: Option<String>,
    contract: Option<String>,
    scale: Option<Amount>,
    source: Option<String>,
    #[serde(default)]
    balances: BTreeMap<String, Amount>,
    #[serde(default)]
    storage: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPool {
    id: String,
    kind: PoolKind,
    token_x: String,
    token_y: String,
    #[serde(default)]
    fee_bps: u32,
    reserve_x: Option<Amount>,
    reserve_y: Option<Amount>,
    price_num: Option<Amount>,
    price_den: Option<Amount>,
    tick_price_num: Option<Amount>,
    tick_price_den: Option<Amount>,
}

fn opt_amount(a: &Option<Amount>, what: &str, pool: &str) -> Result<BigInt, SimError> {
    a.as_ref().ok_or_else(|| SimError::Fixture(format!("pool {pool} needs `{what}`")))?.value()
}

fn toml_scalar(v: &toml::Value, what: &str) -> Result<Value, SimError> {
    match v {
        toml::Value::Integer(n) => Ok(Value::int(*n)),
        toml::Value::Boolean(b) => Ok(Value::Bool(*b)),
        toml::Value::String(s) => match s.as_str() {
            "true" | "false" => Ok(Value::parse(s)),
            _ => parse_amount(s).map(Value::Int),
        },
        _ => Err(SimError::Fixture(format!("`{what}` must be a number or bool"))),
    }
}

fn build_token(raw: &RawToken, base_dir: &Path) -> Result<TokenInstance, SimError> {
    let mut balances = BTreeMap::new();
    for (a, amt) in &raw.balances {
        balances.insert(Address::new(a.as_str()), amt.value()?);
    }
    let owner = raw.owner.clone().unwrap_or_else(|| "owner".into());
    let mut t = match raw.model.as_str() {
        "erc20" => TokenInstance::erc20(&raw.id, balances),
        "rebase" => {
            let scale = match &raw.scale {
                Some(s) => s.value()?,
                None => scale_one(),
            };
            let base = balances.into_iter().map(|(a, b)| (a, b * scale_one() / &scale)).collect();
            let mut t = TokenInstance::rebase(&raw.id, &owner, BTreeMap::new());
            t.model = TokenModel::Rebase { scale, base };
            t
        }
        "interpreted" => {
            let src_rel = raw.source.as_ref().ok_or_else(|| SimError::Fixture(format!("token {} needs `source`", raw.id)))?;
            let path = base_dir.join(src_rel);
            let text = std::fs::read_to_string(&path).map_err(|e| SimError::Fixture(format!("{}: {e}", path.display())))?;
            let unit = lang::parse_named(&path.display().to_string(), &text).map_err(|e| SimError::Fixture(e.to_string()))?;
            let contract = match &raw.contract {
                Some(name) => unit.contract(name).cloned().ok_or_else(|| SimError::Fixture(format!("no contract {name} in {src_rel}")))?,
                None => unit.contracts[0].clone(),
            };
            if !raw.balances.is_empty() {
                return Err(SimError::Fixture(format!("interpreted token {} is seeded through `storage`", raw.id)));
            }
            let mut t = TokenInstance::interpreted(&raw.id, &owner, Arc::new(contract));
            seed_storage(&mut t, &raw.storage)?;
            t
        }
        other => return Err(SimError::Fixture(format!("unknown token model `{other}`"))),
    };
    t.owner = Address::new(owner);
    t.contract = raw.contract.clone();
    Ok(t)
}

fn seed_storage(t: &mut TokenInstance, seeds: &BTreeMap<String, toml::Value>) -> Result<(), SimError> {
    let TokenModel::Interpreted { contract, storage } = &mut t.model else { unreachable!() };
    for (name, v) in seeds {
        let var = contract.state_var(name).ok_or_else(|| SimError::Fixture(format!("no state variable `{name}`")))?;
        if var.kind == Kind::MapAddressToUint {
            let toml::Value::Table(entries) = v else {
                return Err(SimError::Fixture(format!("mapping `{name}` needs a table")));
            };
            for (a, amt) in entries {
                let Value::Int(n) = coerce(Kind::Uint, toml_scalar(amt, name)?, name)? else { unreachable!() };
                storage.map_set(name, &Address::new(a.as_str()), n);
            }
        } else {
            let value = coerce(var.kind, toml_scalar(v, name)?, name)?;
            storage.scalars.insert(name.clone(), value);
        }
    }
    Ok(())
}

fn build_pool(raw: &RawPool, state: &mut ChainState) -> Result<PoolInstance, SimError> {
    let id = PoolId::new(raw.id.as_str());
    let (tx, ty) = (TokenId::new(raw.token_x.as_str()), TokenId::new(raw.token_y.as_str()));
    for t in [&tx, &ty] {
        if !state.tokens.contains_key(t) {
            return Err(SimError::Fixture(format!("pool {} references unknown token {t}", raw.id)));
        }
    }
    if raw.fee_bps >= 10_000 {
        return Err(SimError::Fixture(format!("pool {} fee_bps out of range", raw.id)));
    }
    let pa = Address::from(&id);
    let state_of = match raw.kind {
        PoolKind::ReserveCpmm => {
            let rx = match &raw.reserve_x {
                Some(a) => a.value()?,
                None => state.balance_of(&tx, &pa)?,
            };
            let ry = match &raw.reserve_y {
                Some(a) => a.value()?,
                None => state.balance_of(&ty, &pa)?,
            };
            PoolState::ReserveCpmm { rx, ry }
        }
        PoolKind::BalanceCpmm => PoolState::BalanceCpmm,
        PoolKind::LendingFixed => PoolState::LendingFixed {
            price_num: opt_amount(&raw.price_num, "price_num", &raw.id)?,
            price_den: opt_amount(&raw.price_den, "price_den", &raw.id)?,
        },
        PoolKind::ConcTick => {
            let l = TokenId::new(format!("{}.L", raw.id));
            let mut lt = TokenInstance::erc20(l.as_str(), BTreeMap::new());
            lt.minter = Some(id.clone());
            state.tokens.insert(l.clone(), lt);
            PoolState::ConcTick {
                tick_price_num: opt_amount(&raw.tick_price_num, "tick_price_num", &raw.id)?,
                tick_price_den: opt_amount(&raw.tick_price_den, "tick_price_den", &raw.id)?,
                parked_y: BigInt::default(),
                liquidity_token: l,
            }
        }
    };
    if let PoolState::LendingFixed { price_num: n, price_den: d } | PoolState::ConcTick { tick_price_num: n, tick_price_den: d, .. } =
        &state_of
    {
        if n <= &BigInt::default() || d <= &BigInt::default() {
            return Err(SimError::Fixture(format!("pool {} price must be positive", raw.id)));
        }
    }
    Ok(PoolInstance { id, token_x: tx, token_y: ty, fee_bps: raw.fee_bps, state: state_of })
}

/// Parse fixture text. Relative `source` paths resolve against `base_dir`.
pub fn parse_fixture(text: &str, base_dir: &Path) -> Result<Fixture, SimError> {
    let raw: RawFixture = toml::from_str(text).map_err(|e| SimError::Fixture(e.to_string()))?;
    let mut state = ChainState::new(raw.step_budget.unwrap_or(10_000));
    state.block_number = raw.block_number;
    let pool_ids: BTreeSet<&str> = raw.pools.iter().map(|p| p.id.as_str()).collect();
    let mut accounts: BTreeSet<Address> = raw.accounts.iter().map(|a| Address::new(a.as_str())).collect();
    for t in &raw.tokens {
        if state.tokens.contains_key(&TokenId::new(t.id.as_str())) {
            return Err(SimError::Fixture(format!("duplicate token {}", t.id)));
        }
        let tok = build_token(t, base_dir)?;
        accounts.insert(tok.owner.clone());
        accounts.extend(tok.accounts().into_iter().filter(|a| !pool_ids.contains(a.as_str())));
        state.tokens.insert(tok.id.clone(), tok);
    }
    for p in &raw.pools {
        let pool = build_pool(p, &mut state)?;
        if state.pools.insert(pool.id.clone(), pool).is_some() {
            return Err(SimError::Fixture(format!("duplicate pool {}", p.id)));
        }
    }
    let searcher = Address::new(raw.searcher.unwrap_or_else(|| "searcher".into()));
    accounts.insert(searcher.clone());
    state.native_accounts = accounts;
    Ok(Fixture { state, searcher })
}

pub fn load_fixture(path: &Path) -> Result<Fixture, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Fixture(format!("{}: {e}", path.display())))?;
    parse_fixture(&text, path.parent().unwrap_or(Path::new(".")))
}

/// One transaction per line: `sender target function arg...`. Blank lines
/// and `#` comments are skipped.
pub fn parse_bundle(text: &str) -> Result<Vec<Tx>, SimError> {
    let mut txs = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        if parts.len() < 3 {
            return Err(SimError::Fixture(format!("line {}: expected `sender target function args...`", i + 1)));
        }
        txs.push(Tx {
            sender: Address::new(parts[0]),
            target: parts[1].to_string(),
            function: parts[2].to_string(),
            args: parts[3..].iter().map(|a| Value::parse(a)).collect(),
        });
    }
    Ok(txs)
}

pub fn load_bundle(path: &Path) -> Result<Vec<Tx>, SimError> {
    let text = std::fs::read_to_string(path).map_err(|e| SimError::Fixture(format!("{}: {e}", path.display())))?;
    parse_bundle(&text)
}
