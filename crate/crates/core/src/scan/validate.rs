use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::Zero;

use super::{Classification, ScanError, SharedG, TPath, Witness, WitnessCall};
use crate::config::Config;
use crate::lang::eval::holds;
use crate::lang::{ContractIR, Kind, Literal};
use crate::sim::{interp, Address, ChainState, SimError, TokenId, TokenInstance, TokenModel, Value};

/// Token id of the contract under test in the validation fixture.
pub const VALIDATION_TOKEN: &str = "T";
const OWNER: &str = "owner";
const CALLER: &str = "carol";
const ACCOUNTS: [&str; 5] = ["alice", "bob", "carol", "dave", OWNER];
const SEEDED: [(&str, u64); 3] = [("alice", 1000), ("bob", 2500), ("carol", 6500)];
const INT_ARGS: [i64; 5] = [1, 2, 10, 1000, 0];
const ADDR_ARGS: [&str; 4] = ["alice", "bob", "carol", "dave"];
const MAX_TRIALS: usize = 4096;

/// The contract deployed as token `T`, every mapping seeded with the same
/// three holders.
pub fn validation_fixture(contract: &ContractIR, step_budget: u64) -> ChainState {
    let mut state = ChainState::new(step_budget);
    let mut token = TokenInstance::interpreted(VALIDATION_TOKEN, OWNER, Arc::new(contract.clone()));
    token.contract = Some(contract.name.clone());
    if let TokenModel::Interpreted { storage, .. } = &mut token.model {
        for v in contract.state_vars.iter().filter(|v| v.kind == Kind::MapAddressToUint) {
            for (a, amt) in SEEDED {
                storage.map_set(&v.name, &Address::new(a), BigInt::from(amt));
            }
        }
    }
    state.tokens.insert(token.id.clone(), token);
    state.native_accounts.extend(ACCOUNTS.iter().map(|a| Address::new(*a)));
    state
}

/// Outcome of running one concrete call sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Trial {
    pub classification: Classification,
    pub supply_before: BigInt,
    pub supply_after: BigInt,
    pub shared_g: Option<SharedG>,
}

fn shared_g(before: &BTreeMap<Address, BigInt>, after: &BTreeMap<Address, BigInt>) -> Option<SharedG> {
    let accounts: BTreeSet<&Address> = before.keys().chain(after.keys()).collect();
    let pairs: Vec<(BigInt, BigInt)> = accounts
        .iter()
        .map(|a| (before.get(*a).cloned().unwrap_or_default(), after.get(*a).cloned().unwrap_or_default()))
        .collect();
    let (y0, y1) = pairs.first()?;
    if pairs.iter().all(|(b, _)| !b.is_zero()) && pairs.iter().all(|(b, a)| a * y0 == y1 * b) {
        return Some(SharedG::Ratio);
    }
    let d = y1 - y0;
    if pairs.iter().all(|(b, a)| a - b == d) {
        return Some(SharedG::Difference);
    }
    None
}

/// Run `calls` on a copy of `state` and compare token `token` balances over
/// the known accounts before and after.
pub fn validate_tsc(state: &ChainState, token: &TokenId, calls: &[WitnessCall]) -> Result<Trial, SimError> {
    let mut s = state.clone();
    let before = s.holders(token)?;
    let budget = s.step_budget;
    for c in calls {
        s.token_mut(token)?.call(&Address::new(c.sender.as_str()), &c.function, &c.args, budget)?;
    }
    let after = s.holders(token)?;
    let supply_before: BigInt = before.values().sum();
    let supply_after: BigInt = after.values().sum();
    if supply_before == supply_after {
        return Ok(Trial { classification: Classification::Rejected, supply_before, supply_after, shared_g: None });
    }
    let g = shared_g(&before, &after);
    let classification = if g.is_some() { Classification::Tsc1AndTsc2 } else { Classification::Tsc1 };
    Ok(Trial { classification, supply_before, supply_after, shared_g: g })
}

fn value_int(v: &Value) -> Option<BigInt> {
    match v {
        Value::Bool(b) => Some(BigInt::from(*b as u8)),
        other => other.as_int(),
    }
}

fn scalar_domain(kind: Kind, init: &Value) -> Vec<Value> {
    let mut out = vec![init.clone()];
    let extra: Vec<Value> = match kind {
        Kind::Bool => vec![Value::Bool(false), Value::Bool(true)],
        Kind::Uint => [0, 1, 2, 10, 1000].into_iter().map(Value::int).collect(),
        Kind::Int => [0, 1, -1, 2, 10, 1000].into_iter().map(Value::int).collect(),
        _ => vec![],
    };
    for v in extra {
        if !out.contains(&v) {
            out.push(v);
        }
    }
    out
}

fn arg_domain(kind: Kind) -> Vec<Value> {
    match kind {
        Kind::Bool => vec![Value::Bool(true), Value::Bool(false)],
        Kind::Address => ADDR_ARGS.iter().map(|a| Value::addr(a)).collect(),
        _ => INT_ARGS.iter().map(|n| Value::int(*n)).collect(),
    }
}

/// Odometer over the cartesian product of `domains`, at most `cap` tuples.
fn product<T: Clone>(domains: &[Vec<T>], cap: usize) -> Vec<Vec<T>> {
    if domains.iter().any(|d| d.is_empty()) {
        return vec![];
    }
    let mut idx = vec![0usize; domains.len()];
    let mut out = Vec::new();
    while out.len() < cap {
        out.push(idx.iter().zip(domains).map(|(i, d)| d[*i].clone()).collect());
        let mut k = domains.len();
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            idx[k] += 1;
            if idx[k] < domains[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    out
}

type CacheKey = (Vec<String>, String);

/// Dynamic validation of stitched tPaths against the validation fixture.
/// Results are cached per call sequence and initial-state seeding.
pub struct Validator {
    contract: ContractIR,
    base: ChainState,
    cache: HashMap<CacheKey, Result<(Classification, Witness), String>>,
}

impl Validator {
    pub fn new(contract: &ContractIR, cfg: &Config) -> Validator {
        Validator { contract: contract.clone(), base: validation_fixture(contract, cfg.step_budget), cache: HashMap::new() }
    }

    fn storage_scalars(&self) -> &BTreeMap<String, Value> {
        match &self.base.tokens[&TokenId::new(VALIDATION_TOKEN)].model {
            TokenModel::Interpreted { storage, .. } => &storage.scalars,
            _ => unreachable!("validation token is interpreted"),
        }
    }

    /// Initial values for version-0 scalars so every constraint mentioning
    /// only those holds. `None` when no assignment in the domain works.
    fn seed(&self, tp: &TPath) -> Option<BTreeMap<String, Value>> {
        let scalars = self.storage_scalars();
        let versioned = |n: &str| n.strip_suffix("_0").filter(|b| scalars.contains_key(*b)).map(str::to_string);
        let closed: Vec<_> = tp
            .constraints
            .iter()
            .filter(|c| {
                let reads = c.expr.read_set();
                !reads.is_empty() && reads.iter().all(|n| versioned(n).is_some())
            })
            .collect();
        let mut vars: Vec<String> = closed.iter().flat_map(|c| c.expr.read_set()).filter_map(|n| versioned(&n)).collect();
        vars.sort();
        vars.dedup();
        let domains: Vec<Vec<Value>> = vars
            .iter()
            .map(|v| {
                let kind = self.contract.state_var(v).map(|s| s.kind).unwrap_or(Kind::Uint);
                scalar_domain(kind, &scalars[v])
            })
            .collect();
        for combo in product(&domains, MAX_TRIALS) {
            let env: BTreeMap<String, BigInt> =
                vars.iter().zip(&combo).filter_map(|(n, v)| Some((format!("{n}_0"), value_int(v)?))).collect();
            let ok = closed.iter().all(|c| holds(&c.expr, &|n| env.get(n).cloned()) == Some(true));
            if ok {
                let initial: BTreeMap<&str, Value> = self
                    .contract
                    .state_vars
                    .iter()
                    .filter_map(|s| Some((s.name.as_str(), initial_value(s.kind, s.initializer.as_ref())?)))
                    .collect();
                return Some(
                    vars.into_iter()
                        .zip(combo)
                        .filter(|(n, v)| initial.get(n.as_str()) != Some(v))
                        .collect(),
                );
            }
        }
        None
    }

    fn run(&self, tp: &TPath, seeded: &BTreeMap<String, Value>) -> Result<(Classification, Witness), ScanError> {
        let token = TokenId::new(VALIDATION_TOKEN);
        let mut state = self.base.clone();
        if let TokenModel::Interpreted { storage, .. } = &mut state.token_mut(&token).expect("fixture token").model {
            for (n, v) in seeded {
                let kind = self.contract.state_var(n).map(|s| s.kind).unwrap_or(Kind::Uint);
                let v = interp::coerce(kind, v.clone(), n).map_err(ScanError::RuntimeFault)?;
                storage.scalars.insert(n.clone(), v);
            }
        }
        let triggers = tp.trigger_functions();
        let funcs: Vec<_> = triggers.iter().filter_map(|f| self.contract.function(f)).collect();
        let senders: Vec<&str> = funcs.iter().map(|f| if f.owner_only { OWNER } else { CALLER }).collect();
        let domains: Vec<Vec<Value>> = funcs.iter().flat_map(|f| f.params.iter().map(|p| arg_domain(p.kind))).collect();
        let mut best: Option<(Trial, Vec<WitnessCall>)> = None;
        let mut last_fault = None;
        for combo in product(&domains, MAX_TRIALS) {
            let mut rest = combo.into_iter();
            let calls: Vec<WitnessCall> = funcs
                .iter()
                .zip(&senders)
                .map(|(f, s)| WitnessCall {
                    sender: s.to_string(),
                    function: f.name.clone(),
                    args: rest.by_ref().take(f.params.len()).collect(),
                })
                .collect();
            match validate_tsc(&state, &token, &calls) {
                Err(e) => last_fault = Some(e),
                Ok(trial) => {
                    let better = best.as_ref().is_none_or(|(b, _)| rank(trial.classification) > rank(b.classification));
                    let done = trial.classification == Classification::Tsc1AndTsc2;
                    if better {
                        best = Some((trial, calls));
                    }
                    if done {
                        break;
                    }
                }
            }
        }
        let Some((trial, calls)) = best else {
            return Err(ScanError::RuntimeFault(last_fault.unwrap_or(SimError::EmptyBundle)));
        };
        let witness = Witness {
            seeded: seeded.clone(),
            calls,
            supply_before: trial.supply_before.to_string(),
            supply_after: trial.supply_after.to_string(),
            shared_g: trial.shared_g,
        };
        Ok((trial.classification, witness))
    }

    /// Classify a stitched tPath by concrete execution.
    pub fn classify(&mut self, tp: TPath) -> TPath {
        let Some(seeded) = self.seed(&tp) else {
            return TPath {
                classification: Classification::Rejected,
                reason: Some("no initial state satisfies the path constraints".into()),
                ..tp
            };
        };
        let key = (tp.functions(), format!("{seeded:?}"));
        if !self.cache.contains_key(&key) {
            let r = self.run(&tp, &seeded).map_err(|e| e.to_string());
            self.cache.insert(key.clone(), r);
        }
        match &self.cache[&key] {
            Ok((class, witness)) => {
                let reason = (*class == Classification::Rejected).then(|| "no trial changed the supply".to_string());
                TPath { classification: *class, reason, witness: Some(witness.clone()), ..tp }
            }
            Err(why) => TPath { classification: Classification::Rejected, reason: Some(why.clone()), ..tp },
        }
    }
}

fn initial_value(kind: Kind, init: Option<&Literal>) -> Option<Value> {
    match (kind, init) {
        (Kind::MapAddressToUint | Kind::Address, _) => None,
        (Kind::Bool, None) => Some(Value::Bool(false)),
        (Kind::Bool, Some(Literal::Bool(b))) => Some(Value::Bool(*b)),
        (Kind::Bool, Some(Literal::Int(n))) => Some(Value::Bool(!n.is_zero())),
        (_, None) => Some(Value::int(0)),
        (_, Some(Literal::Int(n))) => Some(Value::Int(n.clone())),
        (_, Some(Literal::Bool(b))) => Some(Value::int(*b as i64)),
    }
}

fn rank(c: Classification) -> u8 {
    match c {
        Classification::Candidate | Classification::Rejected => 0,
        Classification::Tsc1 => 1,
        Classification::Tsc1AndTsc2 => 2,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn product_enumerates_in_order() {
        let p = product(&[vec![1, 2], vec![3, 4, 5]], 100);
        assert_eq!(p.len(), 6);
        assert_eq!(p[0], vec![1, 3]);
        assert_eq!(p[1], vec![1, 4]);
        assert_eq!(p[5], vec![2, 5]);
        assert_eq!(product(&vec![vec![0; 10]; 5], 7).len(), 7);
        assert_eq!(product::<u8>(&[], 7), vec![Vec::<u8>::new()]);
    }

    #[test]
    fn shared_g_kinds() {
        let m = |v: &[(&str, i64)]| v.iter().map(|(a, n)| (Address::new(*a), BigInt::from(*n))).collect();
        let before = m(&[("a", 10), ("b", 30)]);
        assert_eq!(shared_g(&before, &m(&[("a", 20), ("b", 60)])), Some(SharedG::Ratio));
        assert_eq!(shared_g(&before, &m(&[("a", 15), ("b", 35)])), Some(SharedG::Difference));
        assert_eq!(shared_g(&before, &m(&[("a", 15), ("b", 30)])), None);
    }
}
