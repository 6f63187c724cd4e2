//! Tree-walking interpreter for TokenLang functions.

use std::collections::{BTreeMap, HashMap};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, Zero};

use super::{Address, SimError, Value};
use crate::lang::types::{is_signed, type_of};
use crate::lang::{BinOp, ContractIR, Expr, Kind, LValue, Literal, Stmt, UnOp};

/// Contract storage. Mapping entries that were never written read as zero.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Storage {
    pub scalars: BTreeMap<String, Value>,
    pub maps: BTreeMap<String, BTreeMap<Address, BigInt>>,
}

impl Storage {
    pub fn init(contract: &ContractIR) -> Storage {
        let mut s = Storage::default();
        for v in &contract.state_vars {
            match v.kind {
                Kind::MapAddressToUint => {
                    s.maps.insert(v.name.clone(), BTreeMap::new());
                }
                k => {
                    let value = match &v.initializer {
                        Some(Literal::Int(n)) => Value::Int(n.clone()),
                        Some(Literal::Bool(b)) => Value::Bool(*b),
                        None => zero_of(k),
                    };
                    s.scalars.insert(v.name.clone(), coerce(k, value, &v.name).expect("validated initializer"));
                }
            }
        }
        s
    }

    pub fn map_get(&self, map: &str, key: &Address) -> BigInt {
        self.maps.get(map).and_then(|m| m.get(key)).cloned().unwrap_or_default()
    }

    /// Set a mapping entry, dropping zero entries so equal ledgers compare equal.
    pub fn map_set(&mut self, map: &str, key: &Address, v: BigInt) {
        let m = self.maps.entry(map.to_string()).or_default();
        if v.is_zero() {
            m.remove(key);
        } else {
            m.insert(key.clone(), v);
        }
    }
}

fn zero_of(k: Kind) -> Value {
    match k {
        Kind::Bool => Value::Bool(false),
        Kind::Address => Value::addr("0x0"),
        _ => Value::Int(BigInt::zero()),
    }
}

/// Convert a value for storage into a slot of kind `k`.
pub fn coerce(k: Kind, v: Value, slot: &str) -> Result<Value, SimError> {
    match (k, v) {
        (Kind::Bool, v) => Ok(Value::Bool(v.truthy())),
        (Kind::Address, Value::Addr(a)) => Ok(Value::Addr(a)),
        (Kind::Int, v) => v.as_int().map(Value::Int).ok_or_else(|| SimError::BadArguments(format!("`{slot}` needs a number"))),
        (Kind::Uint | Kind::MapAddressToUint, v) => {
            let n = v.as_int().ok_or_else(|| SimError::BadArguments(format!("`{slot}` needs a number")))?;
            if n.is_negative() {
                Err(SimError::NegativeUint(slot.to_string()))
            } else {
                Ok(Value::Int(n))
            }
        }
        (Kind::Address, _) => Err(SimError::BadArguments(format!("`{slot}` needs an address"))),
    }
}

pub struct CallCtx<'a> {
    pub sender: &'a Address,
    pub owner: &'a Address,
    pub step_budget: u64,
}

/// Run `function` against `storage`. Storage is only updated when the call
/// completes without a fault.
pub fn call(
    contract: &ContractIR,
    storage: &mut Storage,
    function: &str,
    args: &[Value],
    ctx: &CallCtx,
) -> Result<Option<Value>, SimError> {
    let f = contract.function(function).ok_or_else(|| SimError::UnknownFunction {
        target: contract.name.clone(),
        function: function.to_string(),
    })?;
    if f.owner_only && ctx.sender != ctx.owner {
        return Err(SimError::NotOwner { function: function.to_string() });
    }
    if args.len() != f.params.len() {
        return Err(SimError::BadArguments(format!(
            "{function} takes {} argument(s), got {}",
            f.params.len(),
            args.len()
        )));
    }
    let mut params = HashMap::new();
    for (p, a) in f.params.iter().zip(args) {
        params.insert(p.name.clone(), (p.kind, coerce(p.kind, a.clone(), &p.name)?));
    }
    let mut work = storage.clone();
    let mut m = Machine { contract, storage: &mut work, sender: ctx.sender, steps: 0, budget: ctx.step_budget, params, locals: vec![] };
    let out = match m.block(&f.body)? {
        Flow::Return(v) => v,
        Flow::Next => None,
    };
    let out = match (f.returns, out) {
        (Some(k), Some(v)) => Some(coerce(k, v, "return value")?),
        (_, v) => v,
    };
    *storage = work;
    Ok(out)
}

/// Evaluate a view call on a scratch copy of storage.
pub fn view(contract: &ContractIR, storage: &Storage, function: &str, args: &[Value], ctx: &CallCtx) -> Result<Option<Value>, SimError> {
    let mut scratch = storage.clone();
    call(contract, &mut scratch, function, args, ctx)
}

enum Flow {
    Next,
    Return(Option<Value>),
}

struct Machine<'a> {
    contract: &'a ContractIR,
    storage: &'a mut Storage,
    sender: &'a Address,
    steps: u64,
    budget: u64,
    params: HashMap<String, (Kind, Value)>,
    locals: Vec<HashMap<String, (Kind, Value)>>,
}

impl Machine<'_> {
    fn tick(&mut self) -> Result<(), SimError> {
        self.steps += 1;
        if self.steps > self.budget {
            Err(SimError::StepBudgetExceeded(self.budget))
        } else {
            Ok(())
        }
    }

    fn kind_of(&self, n: &str) -> Option<Kind> {
        for fr in self.locals.iter().rev() {
            if let Some((k, _)) = fr.get(n) {
                return Some(*k);
            }
        }
        if let Some((k, _)) = self.params.get(n) {
            return Some(*k);
        }
        self.contract.state_var(n).map(|v| v.kind)
    }

    fn block(&mut self, body: &[Stmt]) -> Result<Flow, SimError> {
        self.locals.push(HashMap::new());
        let mut flow = Flow::Next;
        for s in body {
            flow = self.stmt(s)?;
            if matches!(flow, Flow::Return(_)) {
                break;
            }
        }
        self.locals.pop();
        Ok(flow)
    }

    fn stmt(&mut self, s: &Stmt) -> Result<Flow, SimError> {
        self.tick()?;
        match s {
            Stmt::Assign { lhs, expr } => {
                let v = self.eval(expr)?;
                self.store(lhs, v)?;
            }
            Stmt::Compound { lhs, op, expr } => {
                let cur = self.load(lhs)?;
                let rhs = self.eval(expr)?;
                let e = Expr::Binary(op.binop(), Box::new(lvalue_expr(lhs)), Box::new(expr.clone()));
                let v = self.arith(op.binop(), &cur, &rhs, &e)?;
                self.store(lhs, v)?;
            }
            Stmt::LocalDecl { kind, name, expr } => {
                let v = coerce(*kind, self.eval(expr)?, name)?;
                self.locals.last_mut().expect("frame").insert(name.clone(), (*kind, v));
            }
            Stmt::If { cond, then_body, else_body } => {
                let body = if self.eval(cond)?.truthy() { then_body } else { else_body };
                return self.block(body);
            }
            Stmt::While { cond, body } => {
                while self.eval(cond)?.truthy() {
                    if let Flow::Return(v) = self.block(body)? {
                        return Ok(Flow::Return(v));
                    }
                    self.tick()?;
                }
            }
            Stmt::Return(e) => {
                let v = e.as_ref().map(|e| self.eval(e)).transpose()?;
                return Ok(Flow::Return(v));
            }
        }
        Ok(Flow::Next)
    }

    fn load(&mut self, l: &LValue) -> Result<Value, SimError> {
        self.eval(&lvalue_expr(l))
    }

    fn store(&mut self, l: &LValue, v: Value) -> Result<(), SimError> {
        match l {
            LValue::Var(n) => {
                for fr in self.locals.iter_mut().rev() {
                    if let Some((k, slot)) = fr.get_mut(n) {
                        *slot = coerce(*k, v, n)?;
                        return Ok(());
                    }
                }
                let k = self.contract.state_var(n).map(|s| s.kind).ok_or_else(|| SimError::BadArguments(format!("no slot `{n}`")))?;
                let v = coerce(k, v, n)?;
                self.storage.scalars.insert(n.clone(), v);
                Ok(())
            }
            LValue::Index(m, key) => {
                let key = self.address(key)?;
                let Value::Int(n) = coerce(Kind::MapAddressToUint, v, m)? else { unreachable!() };
                self.storage.map_set(m, &key, n);
                Ok(())
            }
        }
    }

    fn address(&mut self, e: &Expr) -> Result<Address, SimError> {
        match self.eval(e)? {
            Value::Addr(a) => Ok(a),
            other => Err(SimError::BadArguments(format!("expected an address, got {other}"))),
        }
    }

    fn eval(&mut self, e: &Expr) -> Result<Value, SimError> {
        Ok(match e {
            Expr::Int(n) => Value::Int(n.clone()),
            Expr::Bool(b) => Value::Bool(*b),
            Expr::MsgSender => Value::Addr(self.sender.clone()),
            Expr::Var(n) => self.read_var(n)?,
            Expr::Index(m, key) => {
                let key = self.address(key)?;
                Value::Int(self.storage.map_get(m, &key))
            }
            Expr::Unary(UnOp::Neg, inner) => {
                let v = self.eval(inner)?;
                Value::Int(-v.as_int().ok_or_else(|| SimError::BadArguments("negating an address".into()))?)
            }
            Expr::Unary(UnOp::Not, inner) => Value::Bool(!self.eval(inner)?.truthy()),
            Expr::Binary(BinOp::And, l, r) => Value::Bool(self.eval(l)?.truthy() && self.eval(r)?.truthy()),
            Expr::Binary(BinOp::Or, l, r) => Value::Bool(self.eval(l)?.truthy() || self.eval(r)?.truthy()),
            Expr::Binary(op, l, r) => {
                let (a, b) = (self.eval(l)?, self.eval(r)?);
                self.arith(*op, &a, &b, e)?
            }
        })
    }

    fn read_var(&self, n: &str) -> Result<Value, SimError> {
        for fr in self.locals.iter().rev() {
            if let Some((_, v)) = fr.get(n) {
                return Ok(v.clone());
            }
        }
        if let Some((_, v)) = self.params.get(n) {
            return Ok(v.clone());
        }
        self.storage.scalars.get(n).cloned().ok_or_else(|| SimError::BadArguments(format!("no slot `{n}`")))
    }

    fn arith(&self, op: BinOp, a: &Value, b: &Value, whole: &Expr) -> Result<Value, SimError> {
        if matches!(op, BinOp::Eq | BinOp::Ne) {
            let same = match (a, b) {
                (Value::Addr(x), Value::Addr(y)) => x == y,
                _ => a.as_int() == b.as_int(),
            };
            return Ok(Value::Bool(same == (op == BinOp::Eq)));
        }
        let (Some(x), Some(y)) = (a.as_int(), b.as_int()) else {
            return Err(SimError::BadArguments(format!("`{}` on an address", op.symbol())));
        };
        Ok(match op {
            BinOp::Add => Value::Int(x + y),
            BinOp::Sub => Value::Int(x - y),
            BinOp::Mul => Value::Int(x * y),
            BinOp::Div | BinOp::Mod => {
                if y.is_zero() {
                    return Err(SimError::DivisionByZero);
                }
                let floor = (x.is_negative() || y.is_negative()) && self.signed(whole);
                Value::Int(match (op, floor) {
                    (BinOp::Div, true) => x.div_floor(&y),
                    (BinOp::Div, false) => x / y,
                    (_, true) => x.mod_floor(&y),
                    (_, false) => x % y,
                })
            }
            BinOp::Lt => Value::Bool(x < y),
            BinOp::Le => Value::Bool(x <= y),
            BinOp::Gt => Value::Bool(x > y),
            BinOp::Ge => Value::Bool(x >= y),
            BinOp::Eq | BinOp::Ne | BinOp::And | BinOp::Or => unreachable!("handled above"),
        })
    }

    fn signed(&self, e: &Expr) -> bool {
        type_of(e, &|n| self.kind_of(n)).map(is_signed).unwrap_or(true)
    }
}

fn lvalue_expr(l: &LValue) -> Expr {
    match l {
        LValue::Var(n) => Expr::Var(n.clone()),
        LValue::Index(m, k) => Expr::Index(m.clone(), Box::new(k.clone())),
    }
}
