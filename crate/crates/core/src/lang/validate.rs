use std::collections::{BTreeSet, HashMap};

use super::ast::*;
use super::types::{assignable, type_of, Ty};
use super::LangError;

fn invalid(msg: impl Into<String>) -> LangError {
    LangError::Validation(msg.into())
}

pub fn validate_unit(unit: &SourceUnit) -> Result<(), LangError> {
    if unit.contracts.is_empty() {
        return Err(invalid("source unit declares no contract"));
    }
    let mut names = BTreeSet::new();
    for c in &unit.contracts {
        if !names.insert(c.name.as_str()) {
            return Err(invalid(format!("duplicate contract `{}`", c.name)));
        }
        validate_contract(c)?;
    }
    Ok(())
}

pub fn validate_contract(c: &ContractIR) -> Result<(), LangError> {
    let mut globals: HashMap<&str, Kind> = HashMap::new();
    for v in &c.state_vars {
        if globals.insert(&v.name, v.kind).is_some() {
            return Err(invalid(format!("{}: duplicate state variable `{}`", c.name, v.name)));
        }
        match (&v.initializer, v.kind) {
            (None, _) => {}
            (Some(_), Kind::MapAddressToUint) => {
                return Err(invalid(format!("{}: mapping `{}` cannot have an initializer", c.name, v.name)))
            }
            (Some(Literal::Int(n)), Kind::Uint) if n.sign() == num_bigint::Sign::Minus => {
                return Err(invalid(format!("{}: uint `{}` initialized with a negative value", c.name, v.name)))
            }
            (Some(_), _) => {}
        }
    }
    let mut fnames = BTreeSet::new();
    for f in &c.functions {
        if !fnames.insert(f.name.as_str()) {
            return Err(invalid(format!("{}: duplicate function `{}`", c.name, f.name)));
        }
        validate_function(&globals, f).map_err(|m| invalid(format!("{}.{}: {m}", c.name, f.name)))?;
    }
    Ok(())
}

struct Scope<'a> {
    globals: &'a HashMap<&'a str, Kind>,
    params: HashMap<String, Kind>,
    locals: Vec<HashMap<String, Kind>>,
}

impl Scope<'_> {
    fn lookup(&self, n: &str) -> Option<Kind> {
        for frame in self.locals.iter().rev() {
            if let Some(k) = frame.get(n) {
                return Some(*k);
            }
        }
        self.params.get(n).copied().or_else(|| self.globals.get(n).copied())
    }

    fn ty(&self, e: &Expr) -> Result<Ty, String> {
        type_of(e, &|n| self.lookup(n))
    }
}

fn validate_function(globals: &HashMap<&str, Kind>, f: &FunctionIR) -> Result<(), String> {
    let mut params = HashMap::new();
    for p in &f.params {
        if params.insert(p.name.clone(), p.kind).is_some() {
            return Err(format!("duplicate parameter `{}`", p.name));
        }
        if globals.contains_key(p.name.as_str()) {
            return Err(format!("parameter `{}` shadows a state variable", p.name));
        }
    }
    let mut scope = Scope { globals, params, locals: vec![HashMap::new()] };
    check_block(&mut scope, f, &f.body)?;
    if f.returns.is_some() && !definitely_returns(&f.body) {
        return Err("not every path ends in `return`".into());
    }
    Ok(())
}

fn check_block(scope: &mut Scope, f: &FunctionIR, body: &[Stmt]) -> Result<(), String> {
    scope.locals.push(HashMap::new());
    let r = body.iter().try_for_each(|s| check_stmt(scope, f, s));
    scope.locals.pop();
    r
}

fn check_lvalue(scope: &Scope, l: &LValue) -> Result<Kind, String> {
    match l {
        LValue::Var(n) => {
            if scope.params.contains_key(n) && !scope.locals.iter().any(|fr| fr.contains_key(n)) {
                return Err(format!("cannot assign to parameter `{n}`"));
            }
            match scope.lookup(n) {
                None => Err(format!("undeclared name `{n}`")),
                Some(Kind::MapAddressToUint) => Err(format!("mapping `{n}` assigned without a key")),
                Some(k) => Ok(k),
            }
        }
        LValue::Index(n, key) => {
            match scope.lookup(n) {
                None => return Err(format!("undeclared name `{n}`")),
                Some(Kind::MapAddressToUint) => {}
                Some(_) => return Err(format!("`{n}` is not a mapping")),
            }
            if scope.ty(key)? != Ty::Address {
                return Err(format!("mapping `{n}` must be keyed by an address"));
            }
            Ok(Kind::Uint)
        }
    }
}

fn check_cond(scope: &Scope, cond: &Expr) -> Result<(), String> {
    match scope.ty(cond)? {
        Ty::Bool | Ty::Num(_) => Ok(()),
        _ => Err("condition must be a bool or number".into()),
    }
}

fn check_stmt(scope: &mut Scope, f: &FunctionIR, s: &Stmt) -> Result<(), String> {
    match s {
        Stmt::Assign { lhs, expr } => {
            let k = check_lvalue(scope, lhs)?;
            let t = scope.ty(expr)?;
            if !assignable(k, t) {
                return Err(format!("type mismatch assigning to `{}`", lhs.base()));
            }
        }
        Stmt::Compound { lhs, expr, .. } => {
            let k = check_lvalue(scope, lhs)?;
            if !k.is_numeric() {
                return Err(format!("compound assignment to non-numeric `{}`", lhs.base()));
            }
            if !matches!(scope.ty(expr)?, Ty::Num(_)) {
                return Err("compound assignment needs a numeric right-hand side".into());
            }
        }
        Stmt::LocalDecl { kind, name, expr } => {
            if scope.lookup(name).is_some() {
                return Err(format!("local `{name}` shadows an existing name"));
            }
            if *kind == Kind::MapAddressToUint {
                return Err("local mappings are not supported".into());
            }
            let t = scope.ty(expr)?;
            if !assignable(*kind, t) {
                return Err(format!("type mismatch initializing `{name}`"));
            }
            scope.locals.last_mut().expect("frame").insert(name.clone(), *kind);
        }
        Stmt::If { cond, then_body, else_body } => {
            check_cond(scope, cond)?;
            check_block(scope, f, then_body)?;
            check_block(scope, f, else_body)?;
        }
        Stmt::While { cond, body } => {
            check_cond(scope, cond)?;
            check_block(scope, f, body)?;
        }
        Stmt::Return(value) => match (f.returns, value) {
            (None, _) => return Err("`return` in a function without a `returns` clause".into()),
            (Some(_), None) => return Err("`return` without a value".into()),
            (Some(k), Some(e)) => {
                if !assignable(k, scope.ty(e)?) {
                    return Err("returned value does not match the declared type".into());
                }
            }
        },
    }
    Ok(())
}

/// Structural check: the block ends in a return on every path. Loops never
/// count since their body may not execute.
pub fn definitely_returns(body: &[Stmt]) -> bool {
    body.iter().any(|s| match s {
        Stmt::Return(_) => true,
        Stmt::If { then_body, else_body, .. } => definitely_returns(then_body) && definitely_returns(else_body),
        _ => false,
    })
}
