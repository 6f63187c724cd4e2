use std::fmt::Write;

use super::ast::*;

const INDENT: &str = "    ";

pub fn pretty_print(unit: &SourceUnit) -> String {
    let mut out = String::new();
    for (i, c) in unit.contracts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        print_contract(&mut out, c);
    }
    out
}

pub fn kind_text(k: Kind) -> &'static str {
    match k {
        Kind::Int => "int",
        Kind::Uint => "uint",
        Kind::Bool => "bool",
        Kind::Address => "address",
        Kind::MapAddressToUint => "mapping(address => uint)",
    }
}

fn print_contract(out: &mut String, c: &ContractIR) {
    let _ = writeln!(out, "contract {} {{", c.name);
    for v in &c.state_vars {
        let _ = write!(out, "{INDENT}{} {}", kind_text(v.kind), v.name);
        match &v.initializer {
            Some(Literal::Int(n)) => {
                let _ = write!(out, " = {n}");
            }
            Some(Literal::Bool(b)) => {
                let _ = write!(out, " = {b}");
            }
            None => {}
        }
        out.push_str(";\n");
    }
    for f in &c.functions {
        if !out.ends_with("{\n") {
            out.push('\n');
        }
        print_function(out, f);
    }
    out.push_str("}\n");
}

fn print_function(out: &mut String, f: &FunctionIR) {
    out.push_str(INDENT);
    if f.owner_only {
        out.push_str("@owner_only ");
    }
    let params: Vec<String> = f.params.iter().map(|p| format!("{} {}", kind_text(p.kind), p.name)).collect();
    let _ = write!(out, "{}({})", f.name, params.join(", "));
    if let Some(k) = f.returns {
        let _ = write!(out, " returns ({})", kind_text(k));
    }
    out.push_str(" {\n");
    print_block(out, &f.body, 2);
    let _ = writeln!(out, "{INDENT}}}");
}

fn print_block(out: &mut String, body: &[Stmt], depth: usize) {
    for s in body {
        print_stmt(out, s, depth);
    }
}

fn print_stmt(out: &mut String, s: &Stmt, depth: usize) {
    let pad = INDENT.repeat(depth);
    match s {
        Stmt::Assign { lhs, expr } => {
            let _ = writeln!(out, "{pad}{} = {};", lvalue_text(lhs), expr_text(expr));
        }
        Stmt::Compound { lhs, op, expr } => {
            let _ = writeln!(out, "{pad}{} {} {};", lvalue_text(lhs), op.symbol(), expr_text(expr));
        }
        Stmt::LocalDecl { kind, name, expr } => {
            let _ = writeln!(out, "{pad}{} {} = {};", kind_text(*kind), name, expr_text(expr));
        }
        Stmt::Return(Some(e)) => {
            let _ = writeln!(out, "{pad}return {};", expr_text(e));
        }
        Stmt::Return(None) => {
            let _ = writeln!(out, "{pad}return;");
        }
        Stmt::If { cond, then_body, else_body } => {
            let _ = writeln!(out, "{pad}if ({}) {{", expr_text(cond));
            print_block(out, then_body, depth + 1);
            if else_body.is_empty() {
                let _ = writeln!(out, "{pad}}}");
            } else {
                let _ = writeln!(out, "{pad}}} else {{");
                print_block(out, else_body, depth + 1);
                let _ = writeln!(out, "{pad}}}");
            }
        }
        Stmt::While { cond, body } => {
            let _ = writeln!(out, "{pad}while ({}) {{", expr_text(cond));
            print_block(out, body, depth + 1);
            let _ = writeln!(out, "{pad}}}");
        }
    }
}

pub fn lvalue_text(l: &LValue) -> String {
    match l {
        LValue::Var(n) => n.clone(),
        LValue::Index(n, k) => format!("{n}[{}]", expr_text(k)),
    }
}

/// Render an expression with the minimum parentheses needed to re-parse to
/// the same tree.
pub fn expr_text(e: &Expr) -> String {
    let mut s = String::new();
    write_expr(&mut s, e);
    s
}

fn write_expr(out: &mut String, e: &Expr) {
    match e {
        Expr::Int(n) if n.sign() == num_bigint::Sign::Minus => {
            let _ = write!(out, "({n})");
        }
        Expr::Int(n) => {
            let _ = write!(out, "{n}");
        }
        Expr::Bool(b) => {
            let _ = write!(out, "{b}");
        }
        Expr::Var(n) => out.push_str(n),
        Expr::MsgSender => out.push_str("msg.sender"),
        Expr::Index(n, k) => {
            out.push_str(n);
            out.push('[');
            write_expr(out, k);
            out.push(']');
        }
        Expr::Unary(op, inner) => {
            out.push_str(match op {
                UnOp::Neg => "-",
                UnOp::Not => "!",
            });
            if matches!(**inner, Expr::Binary(..)) {
                out.push('(');
                write_expr(out, inner);
                out.push(')');
            } else {
                write_expr(out, inner);
            }
        }
        Expr::Binary(op, l, r) => {
            let p = op.precedence();
            let lp = matches!(**l, Expr::Binary(lo, ..) if lo.precedence() < p);
            let rp = matches!(**r, Expr::Binary(ro, ..) if ro.precedence() <= p);
            wrap(out, l, lp);
            let _ = write!(out, " {} ", op.symbol());
            wrap(out, r, rp);
        }
    }
}

fn wrap(out: &mut String, e: &Expr, parens: bool) {
    if parens {
        out.push('(');
        write_expr(out, e);
        out.push(')');
    } else {
        write_expr(out, e);
    }
}
