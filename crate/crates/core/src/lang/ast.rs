//! TokenLang syntax tree.
//!
//! Numbers are arbitrary-precision signed integers at this level; width and
//! signedness are enforced by the simulator when values are stored.

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kind {
    Int,
    Uint,
    Bool,
    Address,
    /// `mapping(address => uint)`
    MapAddressToUint,
}

impl Kind {
    pub fn is_numeric(self) -> bool {
        matches!(self, Kind::Int | Kind::Uint)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceUnit {
    pub source_name: String,
    pub contracts: Vec<ContractIR>,
}

impl SourceUnit {
    pub fn contract(&self, name: &str) -> Option<&ContractIR> {
        self.contracts.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContractIR {
    pub name: String,
    pub state_vars: Vec<StateVar>,
    pub functions: Vec<FunctionIR>,
}

impl ContractIR {
    pub fn function(&self, name: &str) -> Option<&FunctionIR> {
        self.functions.iter().find(|f| f.name == name)
    }

    pub fn function_index(&self, name: &str) -> Option<usize> {
        self.functions.iter().position(|f| f.name == name)
    }

    pub fn state_var(&self, name: &str) -> Option<&StateVar> {
        self.state_vars.iter().find(|v| v.name == name)
    }

    pub fn balance_of(&self) -> Option<&FunctionIR> {
        self.function(BALANCE_OF)
    }
}

pub const BALANCE_OF: &str = "balanceOf";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateVar {
    pub name: String,
    pub kind: Kind,
    pub initializer: Option<Literal>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Literal {
    Int(BigInt),
    Bool(bool),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Param {
    pub name: String,
    pub kind: Kind,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionIR {
    pub name: String,
    pub params: Vec<Param>,
    pub body: Vec<Stmt>,
    pub returns: Option<Kind>,
    /// Side annotation `@owner_only`: only the token owner may call.
    pub owner_only: bool,
}

impl FunctionIR {
    pub fn param(&self, name: &str) -> Option<&Param> {
        self.params.iter().find(|p| p.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CompoundOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl CompoundOp {
    pub fn symbol(self) -> &'static str {
        match self {
            CompoundOp::Add => "+=",
            CompoundOp::Sub => "-=",
            CompoundOp::Mul => "*=",
            CompoundOp::Div => "/=",
        }
    }

    pub fn binop(self) -> BinOp {
        match self {
            CompoundOp::Add => BinOp::Add,
            CompoundOp::Sub => BinOp::Sub,
            CompoundOp::Mul => BinOp::Mul,
            CompoundOp::Div => BinOp::Div,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LValue {
    Var(String),
    Index(String, Expr),
}

impl LValue {
    /// Name of the variable written, ignoring any mapping key.
    pub fn base(&self) -> &str {
        match self {
            LValue::Var(n) | LValue::Index(n, _) => n,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Stmt {
    Assign { lhs: LValue, expr: Expr },
    Compound { lhs: LValue, op: CompoundOp, expr: Expr },
    If { cond: Expr, then_body: Vec<Stmt>, else_body: Vec<Stmt> },
    While { cond: Expr, body: Vec<Stmt> },
    /// A bare `return` is representable so validation can reject it.
    Return(Option<Expr>),
    LocalDecl { kind: Kind, name: String, expr: Expr },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum UnOp {
    Neg,
    Not,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
}

impl BinOp {
    pub fn symbol(self) -> &'static str {
        match self {
            BinOp::Add => "+",
            BinOp::Sub => "-",
            BinOp::Mul => "*",
            BinOp::Div => "/",
            BinOp::Mod => "%",
            BinOp::Eq => "==",
            BinOp::Ne => "!=",
            BinOp::Lt => "<",
            BinOp::Le => "<=",
            BinOp::Gt => ">",
            BinOp::Ge => ">=",
            BinOp::And => "&&",
            BinOp::Or => "||",
        }
    }

    /// Binding power; higher binds tighter.
    pub fn precedence(self) -> u8 {
        match self {
            BinOp::Or => 1,
            BinOp::And => 2,
            BinOp::Eq | BinOp::Ne => 3,
            BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge => 4,
            BinOp::Add | BinOp::Sub => 5,
            BinOp::Mul | BinOp::Div | BinOp::Mod => 6,
        }
    }

    pub fn is_comparison(self) -> bool {
        matches!(
            self,
            BinOp::Eq | BinOp::Ne | BinOp::Lt | BinOp::Le | BinOp::Gt | BinOp::Ge
        )
    }

    pub fn is_logical(self) -> bool {
        matches!(self, BinOp::And | BinOp::Or)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Expr {
    Int(BigInt),
    Bool(bool),
    Var(String),
    Index(String, Box<Expr>),
    MsgSender,
    Unary(UnOp, Box<Expr>),
    Binary(BinOp, Box<Expr>, Box<Expr>),
}

impl Expr {
    pub fn int(v: i64) -> Expr {
        Expr::Int(BigInt::from(v))
    }

    pub fn var(name: &str) -> Expr {
        Expr::Var(name.to_string())
    }

    pub fn negate(e: Expr) -> Expr {
        Expr::Unary(UnOp::Not, Box::new(e))
    }

    pub fn binary(op: BinOp, l: Expr, r: Expr) -> Expr {
        Expr::Binary(op, Box::new(l), Box::new(r))
    }

    /// Every plain or indexed variable name read by this expression.
    pub fn reads(&self, out: &mut Vec<String>) {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::MsgSender => {}
            Expr::Var(n) => out.push(n.clone()),
            Expr::Index(n, k) => {
                out.push(n.clone());
                k.reads(out);
            }
            Expr::Unary(_, e) => e.reads(out),
            Expr::Binary(_, l, r) => {
                l.reads(out);
                r.reads(out);
            }
        }
    }

    pub fn read_set(&self) -> Vec<String> {
        let mut v = Vec::new();
        self.reads(&mut v);
        v.sort();
        v.dedup();
        v
    }

    /// Rename every variable (plain or mapping base) through `f`.
    pub fn rename(&self, f: &impl Fn(&str) -> String) -> Expr {
        match self {
            Expr::Int(_) | Expr::Bool(_) | Expr::MsgSender => self.clone(),
            Expr::Var(n) => Expr::Var(f(n)),
            Expr::Index(n, k) => Expr::Index(f(n), Box::new(k.rename(f))),
            Expr::Unary(op, e) => Expr::Unary(*op, Box::new(e.rename(f))),
            Expr::Binary(op, l, r) => Expr::Binary(*op, Box::new(l.rename(f)), Box::new(r.rename(f))),
        }
    }
}
