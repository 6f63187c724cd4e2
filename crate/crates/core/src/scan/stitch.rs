use std::collections::{BTreeMap, BTreeSet};

use num_traits::Zero;

use super::discover::call_runs;
use super::{PathConstraint, ScanError, TPath};
use crate::graph::{Guard, Payload, Tsdg};
use crate::lang::{self, BinOp, ContractIR, Expr, UnOp};

/// Logical negation, pushed through comparisons: `!x` becomes `x != 0`.
pub fn negate(e: &Expr) -> Expr {
    let flip = |op: BinOp| match op {
        BinOp::Eq => Some(BinOp::Ne),
        BinOp::Ne => Some(BinOp::Eq),
        BinOp::Lt => Some(BinOp::Ge),
        BinOp::Le => Some(BinOp::Gt),
        BinOp::Gt => Some(BinOp::Le),
        BinOp::Ge => Some(BinOp::Lt),
        _ => None,
    };
    match e {
        Expr::Unary(UnOp::Not, inner) => Expr::binary(BinOp::Ne, (**inner).clone(), Expr::int(0)),
        Expr::Bool(b) => Expr::Bool(!b),
        Expr::Binary(op, l, r) => match flip(*op) {
            Some(f) => Expr::Binary(f, l.clone(), r.clone()),
            None => Expr::negate(e.clone()),
        },
        _ => Expr::negate(e.clone()),
    }
}

/// Canonical (atom, polarity) form used to spot direct contradictions.
fn literal(e: &Expr) -> (String, bool) {
    let is_zero = |x: &Expr| matches!(x, Expr::Int(n) if n.is_zero());
    match e {
        Expr::Unary(UnOp::Not, inner) => {
            let (a, p) = literal(inner);
            (a, !p)
        }
        Expr::Binary(BinOp::Eq, l, r) if is_zero(r) => {
            let (a, p) = literal(l);
            (a, !p)
        }
        Expr::Binary(BinOp::Ne, l, r) if is_zero(r) => literal(l),
        Expr::Binary(op @ (BinOp::Ne | BinOp::Ge | BinOp::Gt), l, r) => {
            let base = match op {
                BinOp::Ne => BinOp::Eq,
                BinOp::Ge => BinOp::Lt,
                _ => BinOp::Le,
            };
            (lang::expr_text(&Expr::Binary(base, l.clone(), r.clone())), false)
        }
        _ => (lang::expr_text(e), true),
    }
}

/// Attach the branch conditions each call must satisfy for the chain to
/// execute, renaming state variables with per-call versions, parameters as
/// `<p>_a<call>` and locals as `<l>_l<call>`.
pub fn stitch_execution_path(tp: &TPath, contract: &ContractIR, tsdg: &Tsdg) -> Result<TPath, ScanError> {
    let state: BTreeSet<&str> = contract.state_vars.iter().map(|v| v.name.as_str()).collect();
    let mut versions: BTreeMap<&str, usize> = state.iter().map(|v| (*v, 0)).collect();
    let mut constraints = Vec::new();
    for (call, (func, nodes)) in call_runs(tsdg, &tp.node_chain).into_iter().enumerate() {
        let f = &contract.functions[func];
        let mut guards: Vec<Guard> = Vec::new();
        for id in &nodes {
            for g in &tsdg.node(*id).expect("chain node in graph").guards {
                if !guards.contains(g) {
                    guards.push(*g);
                }
            }
        }
        let rename = |n: &str| {
            if let Some(v) = versions.get(n) {
                format!("{n}_{v}")
            } else if f.param(n).is_some() {
                format!("{n}_a{call}")
            } else {
                format!("{n}_l{call}")
            }
        };
        for g in guards {
            let Some(Payload::Branch { cond }) = tsdg.node(g.branch).map(|n| &n.payload) else {
                continue;
            };
            let c = cond.rename(&rename);
            let expr = if g.taken { c } else { negate(&c) };
            constraints.push(PathConstraint { call_index: call, function: f.name.clone(), expr });
        }
        for id in &nodes {
            for d in &tsdg.node(*id).expect("chain node in graph").defs {
                if let Some(v) = versions.get_mut(d.as_str()) {
                    if !id.is_entry() {
                        *v += 1;
                    }
                }
            }
        }
    }
    let mut seen: BTreeMap<String, bool> = BTreeMap::new();
    for c in &constraints {
        let (atom, pol) = literal(&c.expr);
        if let Some(prev) = seen.insert(atom.clone(), pol) {
            if prev != pol {
                return Err(ScanError::InfeasibleStitch(format!("`{atom}` required both true and false")));
            }
        }
    }
    Ok(TPath { constraints, ..tp.clone() })
}
