//! Evaluation of closed expressions over integer bindings. Booleans are 0/1;
//! anything involving addresses, mappings or division by zero is undefined.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Zero};

use super::ast::{BinOp, Expr, UnOp};

fn truth(b: bool) -> BigInt {
    if b {
        BigInt::one()
    } else {
        BigInt::zero()
    }
}

pub fn eval_int(e: &Expr, env: &dyn Fn(&str) -> Option<BigInt>) -> Option<BigInt> {
    Some(match e {
        Expr::Int(n) => n.clone(),
        Expr::Bool(b) => truth(*b),
        Expr::Var(n) => env(n)?,
        Expr::Index(..) | Expr::MsgSender => return None,
        Expr::Unary(UnOp::Neg, x) => -eval_int(x, env)?,
        Expr::Unary(UnOp::Not, x) => truth(eval_int(x, env)?.is_zero()),
        Expr::Binary(op, l, r) => {
            let a = eval_int(l, env)?;
            let b = eval_int(r, env)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div if b.is_zero() => return None,
                BinOp::Mod if b.is_zero() => return None,
                BinOp::Div => a.div_floor(&b),
                BinOp::Mod => a.mod_floor(&b),
                BinOp::Lt => truth(a < b),
                BinOp::Le => truth(a <= b),
                BinOp::Gt => truth(a > b),
                BinOp::Ge => truth(a >= b),
                BinOp::Eq => truth(a == b),
                BinOp::Ne => truth(a != b),
                BinOp::And => truth(!a.is_zero() && !b.is_zero()),
                BinOp::Or => truth(!a.is_zero() || !b.is_zero()),
            }
        }
    })
}

/// `Some(true)` when the expression evaluates to a nonzero value.
pub fn holds(e: &Expr, env: &dyn Fn(&str) -> Option<BigInt>) -> Option<bool> {
    eval_int(e, env).map(|v| !v.is_zero())
}
