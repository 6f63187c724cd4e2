use std::collections::BTreeMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::interp::{self, CallCtx, Storage};
use super::{Address, PoolId, SimError, TokenId, Value};
use crate::lang::{ContractIR, Kind, Stmt};

/// Fixed-point unit of the rebase scale.
pub fn scale_one() -> BigInt {
    BigInt::from(10u64).pow(18)
}

#[derive(Debug, Clone, PartialEq)]
pub enum TokenModel {
    Erc20 { balances: BTreeMap<Address, BigInt> },
    /// `balanceOf(a) = base[a] * scale / 1e18`.
    Rebase { scale: BigInt, base: BTreeMap<Address, BigInt> },
    Interpreted { contract: Arc<ContractIR>, storage: Storage },
}

impl TokenModel {
    pub fn kind_name(&self) -> &'static str {
        match self {
            TokenModel::Erc20 { .. } => "erc20",
            TokenModel::Rebase { .. } => "rebase",
            TokenModel::Interpreted { .. } => "interpreted",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenInstance {
    pub id: TokenId,
    pub model: TokenModel,
    /// Account allowed to call owner-only functions.
    pub owner: Address,
    /// Pool allowed to mint and burn (liquidity tokens).
    pub minter: Option<PoolId>,
    /// Name of the analyzed contract this token instantiates, if any.
    pub contract: Option<String>,
}

fn put(map: &mut BTreeMap<Address, BigInt>, a: &Address, v: BigInt) {
    if v.is_zero() {
        map.remove(a);
    } else {
        map.insert(a.clone(), v);
    }
}

/// The mapping `balanceOf` reads its result from.
fn ledger_mapping(contract: &ContractIR) -> Option<String> {
    fn walk(body: &[Stmt], out: &mut Vec<String>) {
        for s in body {
            match s {
                Stmt::Return(Some(e)) | Stmt::LocalDecl { expr: e, .. } => e.reads(out),
                Stmt::If { then_body, else_body, .. } => {
                    walk(then_body, out);
                    walk(else_body, out);
                }
                Stmt::While { body, .. } => walk(body, out),
                _ => {}
            }
        }
    }
    let mut reads = Vec::new();
    walk(&contract.balance_of()?.body, &mut reads);
    reads
        .into_iter()
        .find(|n| contract.state_var(n).is_some_and(|v| v.kind == Kind::MapAddressToUint))
}

fn int_arg(args: &[Value], i: usize, what: &str) -> Result<BigInt, SimError> {
    args.get(i).and_then(Value::as_int).ok_or_else(|| SimError::BadArguments(format!("missing {what}")))
}

fn addr_arg(args: &[Value], i: usize, what: &str) -> Result<Address, SimError> {
    match args.get(i) {
        Some(Value::Addr(a)) => Ok(a.clone()),
        _ => Err(SimError::BadArguments(format!("missing {what}"))),
    }
}

fn arity(function: &str, args: &[Value], n: usize) -> Result<(), SimError> {
    if args.len() == n {
        Ok(())
    } else {
        Err(SimError::BadArguments(format!("{function} takes {n} argument(s), got {}", args.len())))
    }
}

impl TokenInstance {
    pub fn erc20(id: &str, balances: BTreeMap<Address, BigInt>) -> TokenInstance {
        TokenInstance {
            id: TokenId::new(id),
            model: TokenModel::Erc20 { balances },
            owner: Address::new("owner"),
            minter: None,
            contract: None,
        }
    }

    /// Builtin rebase token at scale 1e18, seeded with `balances` as balanceOf values.
    pub fn rebase(id: &str, owner: &str, balances: BTreeMap<Address, BigInt>) -> TokenInstance {
        TokenInstance {
            id: TokenId::new(id),
            model: TokenModel::Rebase { scale: scale_one(), base: balances },
            owner: Address::new(owner),
            minter: None,
            contract: None,
        }
    }

    pub fn interpreted(id: &str, owner: &str, contract: Arc<ContractIR>) -> TokenInstance {
        let storage = Storage::init(&contract);
        TokenInstance {
            id: TokenId::new(id),
            model: TokenModel::Interpreted { contract, storage },
            owner: Address::new(owner),
            minter: None,
            contract: None,
        }
    }

    pub fn balance_of(&self, a: &Address, step_budget: u64) -> Result<BigInt, SimError> {
        match &self.model {
            TokenModel::Erc20 { balances } => Ok(balances.get(a).cloned().unwrap_or_default()),
            TokenModel::Rebase { scale, base } => {
                Ok(base.get(a).cloned().unwrap_or_default() * scale / scale_one())
            }
            TokenModel::Interpreted { contract, storage } => {
                let ctx = CallCtx { sender: a, owner: &self.owner, step_budget };
                match interp::view(contract, storage, "balanceOf", &[Value::Addr(a.clone())], &ctx)? {
                    Some(v) => v.as_int().ok_or_else(|| SimError::BadArguments("balanceOf returned an address".into())),
                    None => Err(SimError::BadArguments("balanceOf returned nothing".into())),
                }
            }
        }
    }

    /// Every account the token's own state knows about.
    pub fn accounts(&self) -> Vec<Address> {
        match &self.model {
            TokenModel::Erc20 { balances } => balances.keys().cloned().collect(),
            TokenModel::Rebase { base, .. } => base.keys().cloned().collect(),
            TokenModel::Interpreted { storage, .. } => {
                let mut v: Vec<Address> = storage.maps.values().flat_map(|m| m.keys().cloned()).collect();
                v.sort();
                v.dedup();
                v
            }
        }
    }

    /// Ledger units per account for builtin models: balances for ERC-20,
    /// base balances for rebase tokens. `None` for interpreted tokens.
    pub fn ledger(&self) -> Option<&BTreeMap<Address, BigInt>> {
        match &self.model {
            TokenModel::Erc20 { balances } => Some(balances),
            TokenModel::Rebase { base, .. } => Some(base),
            TokenModel::Interpreted { .. } => None,
        }
    }

    pub fn transfer(&mut self, from: &Address, to: &Address, amount: &BigInt, step_budget: u64) -> Result<(), SimError> {
        if amount.is_negative() {
            return Err(SimError::BadArguments("negative transfer amount".into()));
        }
        let token = self.id.clone();
        let insufficient = |available: BigInt| SimError::InsufficientBalance {
            token: token.clone(),
            account: from.clone(),
            needed: amount.clone(),
            available,
        };
        match &mut self.model {
            TokenModel::Erc20 { balances } => {
                let have = balances.get(from).cloned().unwrap_or_default();
                if &have < amount {
                    return Err(insufficient(have));
                }
                put(balances, from, have - amount);
                let to_bal = balances.get(to).cloned().unwrap_or_default();
                put(balances, to, to_bal + amount);
                Ok(())
            }
            TokenModel::Rebase { scale, base } => {
                let units = amount * scale_one() / &*scale;
                let have = base.get(from).cloned().unwrap_or_default();
                if have < units {
                    return Err(insufficient(have * &*scale / scale_one()));
                }
                put(base, from, have - &units);
                let to_bal = base.get(to).cloned().unwrap_or_default();
                put(base, to, to_bal + units);
                Ok(())
            }
            TokenModel::Interpreted { contract, storage } => {
                let ctx = CallCtx { sender: from, owner: &self.owner, step_budget };
                let args = [Value::Addr(to.clone()), Value::Int(amount.clone())];
                match interp::call(contract, storage, "transfer", &args, &ctx) {
                    Ok(_) => Ok(()),
                    Err(SimError::NegativeUint(_)) => {
                        let have = self.balance_of(from, step_budget).unwrap_or_default();
                        Err(insufficient(have))
                    }
                    Err(e) => Err(e),
                }
            }
        }
    }

    /// Credit `amount` to `a` outside any contract logic. Used to fund probe
    /// accounts on scratch snapshots.
    pub fn fund(&mut self, a: &Address, amount: &BigInt) -> Result<(), SimError> {
        match &mut self.model {
            TokenModel::Erc20 { balances } => {
                let cur = balances.get(a).cloned().unwrap_or_default();
                put(balances, a, cur + amount);
                Ok(())
            }
            TokenModel::Rebase { scale, base } => {
                let units = (amount * scale_one()).div_ceil(&*scale);
                let cur = base.get(a).cloned().unwrap_or_default();
                put(base, a, cur + units);
                Ok(())
            }
            TokenModel::Interpreted { contract, .. } => {
                let Some(ledger) = ledger_mapping(contract) else {
                    return Err(SimError::Unsupported(format!("cannot fund interpreted token {}", self.id)));
                };
                self.credit_units(a, amount, &ledger)
            }
        }
    }

    /// Raise `a`'s balance by at least `amount` by writing the smallest
    /// number of raw units into `ledger`.
    fn credit_units(&mut self, a: &Address, amount: &BigInt, ledger: &str) -> Result<(), SimError> {
        let budget = u64::MAX;
        let start = self.balance_of(a, budget)?;
        let TokenModel::Interpreted { storage, .. } = &self.model else { unreachable!() };
        let raw = storage.map_get(ledger, a);
        let gain = |t: &mut TokenInstance, units: &BigInt| -> Result<BigInt, SimError> {
            let TokenModel::Interpreted { storage, .. } = &mut t.model else { unreachable!() };
            storage.map_set(ledger, a, &raw + units);
            Ok(t.balance_of(a, budget)? - &start)
        };
        let mut hi = amount.clone().max(BigInt::from(1));
        let mut doublings = 0;
        while &gain(self, &hi)? < amount {
            hi *= 2;
            doublings += 1;
            if doublings > 256 {
                return Err(SimError::Unsupported(format!("balanceOf of {} does not grow with its ledger", self.id)));
            }
        }
        let mut lo = BigInt::zero();
        while &hi - &lo > BigInt::from(1) {
            let mid: BigInt = (&lo + &hi) / 2;
            if &gain(self, &mid)? >= amount {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        gain(self, &hi)?;
        Ok(())
    }

    pub fn mint(&mut self, a: &Address, amount: &BigInt) -> Result<(), SimError> {
        match &mut self.model {
            TokenModel::Erc20 { .. } => self.fund(a, amount),
            _ => Err(SimError::Unsupported(format!("token {} is not mintable", self.id))),
        }
    }

    pub fn burn(&mut self, a: &Address, amount: &BigInt) -> Result<(), SimError> {
        let token = self.id.clone();
        match &mut self.model {
            TokenModel::Erc20 { balances } => {
                let have = balances.get(a).cloned().unwrap_or_default();
                if &have < amount {
                    return Err(SimError::InsufficientBalance {
                        token,
                        account: a.clone(),
                        needed: amount.clone(),
                        available: have,
                    });
                }
                put(balances, a, have - amount);
                Ok(())
            }
            _ => Err(SimError::Unsupported(format!("token {token} is not burnable"))),
        }
    }

    /// Does `function` change supply by design? Conservation is only checked
    /// for builtin calls where this is false.
    pub fn is_supply_call(&self, function: &str) -> bool {
        match &self.model {
            TokenModel::Erc20 { .. } => false,
            TokenModel::Rebase { .. } => matches!(function, "rebase" | "rebase_div"),
            TokenModel::Interpreted { .. } => true,
        }
    }

    pub fn functions(&self) -> Vec<String> {
        match &self.model {
            TokenModel::Erc20 { .. } => vec!["balanceOf".into(), "transfer".into()],
            TokenModel::Rebase { .. } => {
                vec!["balanceOf".into(), "rebase".into(), "rebase_div".into(), "transfer".into()]
            }
            TokenModel::Interpreted { contract, .. } => contract.functions.iter().map(|f| f.name.clone()).collect(),
        }
    }

    pub fn call(&mut self, sender: &Address, function: &str, args: &[Value], step_budget: u64) -> Result<Vec<Value>, SimError> {
        if let TokenModel::Interpreted { contract, storage } = &mut self.model {
            let ctx = CallCtx { sender, owner: &self.owner, step_budget };
            return Ok(interp::call(contract, storage, function, args, &ctx)?.into_iter().collect());
        }
        match function {
            "balanceOf" => {
                arity(function, args, 1)?;
                Ok(vec![Value::Int(self.balance_of(&addr_arg(args, 0, "account")?, step_budget)?)])
            }
            "transfer" => {
                arity(function, args, 2)?;
                let to = addr_arg(args, 0, "recipient")?;
                let amount = int_arg(args, 1, "amount")?;
                self.transfer(sender, &to, &amount, step_budget)?;
                Ok(vec![])
            }
            "rebase" | "rebase_div" if matches!(self.model, TokenModel::Rebase { .. }) => {
                arity(function, args, 1)?;
                if sender != &self.owner {
                    return Err(SimError::NotOwner { function: function.to_string() });
                }
                let k = int_arg(args, 0, "factor")?;
                let TokenModel::Rebase { scale, .. } = &mut self.model else { unreachable!() };
                if function == "rebase" {
                    if !k.is_positive() {
                        return Err(SimError::BadArguments("rebase factor must be positive".into()));
                    }
                    *scale *= k;
                } else {
                    if k.is_zero() {
                        return Err(SimError::DivisionByZero);
                    }
                    let next = &*scale / k;
                    if !next.is_positive() {
                        return Err(SimError::BadArguments("rebase_div would zero the scale".into()));
                    }
                    *scale = next;
                }
                Ok(vec![])
            }
            _ => Err(SimError::UnknownFunction { target: self.id.to_string(), function: function.to_string() }),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rebase_token() -> TokenInstance {
        let mut b = BTreeMap::new();
        b.insert(Address::new("a"), BigInt::from(100));
        b.insert(Address::new("b"), BigInt::from(250));
        TokenInstance::rebase("Y", "owner", b)
    }

    #[test]
    fn rebase_scales_every_holder() {
        let mut t = rebase_token();
        t.call(&Address::new("owner"), "rebase", &[Value::int(2)], 100).unwrap();
        assert_eq!(t.balance_of(&Address::new("a"), 100).unwrap(), BigInt::from(200));
        assert_eq!(t.balance_of(&Address::new("b"), 100).unwrap(), BigInt::from(500));
    }

    #[test]
    fn rebase_is_owner_only() {
        let mut t = rebase_token();
        let r = t.call(&Address::new("a"), "rebase", &[Value::int(2)], 100);
        assert!(matches!(r, Err(SimError::NotOwner { .. })));
    }

    #[test]
    fn transfer_after_rebase_rounds_down_in_base_units() {
        let mut t = rebase_token();
        t.call(&Address::new("owner"), "rebase", &[Value::int(3)], 100).unwrap();
        t.transfer(&Address::new("a"), &Address::new("c"), &BigInt::from(10), 100).unwrap();
        // 10 * 1e18 / 3e18 = 3 base units move, worth 9 after scaling
        assert_eq!(t.balance_of(&Address::new("c"), 100).unwrap(), BigInt::from(9));
    }
}
