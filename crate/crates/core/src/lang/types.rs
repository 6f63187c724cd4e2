//! Expression typing for TokenLang.
//!
//! Numbers and booleans are inter-assignable (booleans coerce to 0/1 and
//! numbers are truthy when nonzero); addresses only flow into address slots
//! and mapping keys.

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Signedness {
    Signed,
    Unsigned,
    /// Integer literal; adopts the signedness of the other operand.
    Free,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ty {
    Num(Signedness),
    Bool,
    Address,
    Map,
}

impl Ty {
    pub fn of_kind(k: Kind) -> Ty {
        match k {
            Kind::Int => Ty::Num(Signedness::Signed),
            Kind::Uint => Ty::Num(Signedness::Unsigned),
            Kind::Bool => Ty::Bool,
            Kind::Address => Ty::Address,
            Kind::MapAddressToUint => Ty::Map,
        }
    }

    fn scalar(self) -> bool {
        matches!(self, Ty::Num(_) | Ty::Bool)
    }
}

fn join(a: Signedness, b: Signedness) -> Signedness {
    use Signedness::*;
    match (a, b) {
        (Signed, _) | (_, Signed) => Signed,
        (Unsigned, _) | (_, Unsigned) => Unsigned,
        (Free, Free) => Free,
    }
}

pub fn type_of(e: &Expr, lookup: &dyn Fn(&str) -> Option<Kind>) -> Result<Ty, String> {
    match e {
        Expr::Int(_) => Ok(Ty::Num(Signedness::Free)),
        Expr::Bool(_) => Ok(Ty::Bool),
        Expr::MsgSender => Ok(Ty::Address),
        Expr::Var(n) => match lookup(n) {
            None => Err(format!("undeclared name `{n}`")),
            Some(Kind::MapAddressToUint) => Err(format!("mapping `{n}` used without a key")),
            Some(k) => Ok(Ty::of_kind(k)),
        },
        Expr::Index(n, key) => {
            match lookup(n) {
                None => return Err(format!("undeclared name `{n}`")),
                Some(Kind::MapAddressToUint) => {}
                Some(_) => return Err(format!("`{n}` is not a mapping")),
            }
            match type_of(key, lookup)? {
                Ty::Address => Ok(Ty::Num(Signedness::Unsigned)),
                _ => Err(format!("mapping `{n}` must be keyed by an address")),
            }
        }
        Expr::Unary(UnOp::Neg, inner) => match type_of(inner, lookup)? {
            Ty::Num(_) => Ok(Ty::Num(Signedness::Signed)),
            _ => Err("unary `-` needs a number".into()),
        },
        Expr::Unary(UnOp::Not, inner) => {
            if type_of(inner, lookup)?.scalar() {
                Ok(Ty::Bool)
            } else {
                Err("`!` needs a bool or number".into())
            }
        }
        Expr::Binary(op, l, r) => {
            let (lt, rt) = (type_of(l, lookup)?, type_of(r, lookup)?);
            if op.is_logical() {
                if lt.scalar() && rt.scalar() {
                    Ok(Ty::Bool)
                } else {
                    Err(format!("`{}` needs bool or number operands", op.symbol()))
                }
            } else if matches!(op, BinOp::Eq | BinOp::Ne) {
                let ok = (lt.scalar() && rt.scalar()) || (lt == Ty::Address && rt == Ty::Address);
                if ok {
                    Ok(Ty::Bool)
                } else {
                    Err(format!("cannot compare these operands with `{}`", op.symbol()))
                }
            } else {
                match (lt, rt) {
                    (Ty::Num(a), Ty::Num(b)) => {
                        if op.is_comparison() {
                            Ok(Ty::Bool)
                        } else {
                            Ok(Ty::Num(join(a, b)))
                        }
                    }
                    _ => Err(format!("`{}` needs number operands", op.symbol())),
                }
            }
        }
    }
}

/// Can a value of type `t` be stored into a slot of kind `k`?
pub fn assignable(k: Kind, t: Ty) -> bool {
    match k {
        Kind::Int | Kind::Uint | Kind::Bool => t.scalar(),
        Kind::Address => t == Ty::Address,
        Kind::MapAddressToUint => false,
    }
}

/// Division rounds toward negative infinity when either side is signed and
/// truncates otherwise.
pub fn is_signed(t: Ty) -> bool {
    !matches!(t, Ty::Num(Signedness::Unsigned))
}
