//! Recursive-descent parser producing an unvalidated [`SourceUnit`].

use super::ast::*;
use super::lexer::{tokenize, Spanned, Tok};
use super::LangError;

pub fn parse_unit(source_name: &str, src: &str) -> Result<SourceUnit, LangError> {
    let mut p = Parser::new(tokenize(src)?);
    let mut contracts = Vec::new();
    while p.peek() != &Tok::Eof {
        contracts.push(p.contract()?);
    }
    if contracts.is_empty() {
        return Err(p.err_here("expected `contract`"));
    }
    Ok(SourceUnit { source_name: source_name.to_string(), contracts })
}

/// Parse a standalone expression (used for stored path conditions).
pub fn parse_expr(src: &str) -> Result<Expr, LangError> {
    let mut p = Parser::new(tokenize(src)?);
    let e = p.expr()?;
    p.expect(&Tok::Eof)?;
    Ok(e)
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn new(toks: Vec<Spanned>) -> Self {
        Parser { toks, pos: 0 }
    }

    fn peek(&self) -> &Tok {
        &self.toks[self.pos].tok
    }

    fn advance(&mut self) -> Tok {
        let t = self.toks[self.pos].tok.clone();
        if self.pos < self.toks.len() - 1 {
            self.pos += 1;
        }
        t
    }

    fn eat(&mut self, t: &Tok) -> bool {
        if self.peek() == t {
            self.advance();
            true
        } else {
            false
        }
    }

    fn err_here(&self, msg: impl Into<String>) -> LangError {
        let s = &self.toks[self.pos];
        LangError::Syntax { line: s.line, col: s.col, message: msg.into() }
    }

    fn expect(&mut self, t: &Tok) -> Result<(), LangError> {
        if self.eat(t) {
            Ok(())
        } else {
            Err(self.err_here(format!("expected {}, found {}", t.describe(), self.peek().describe())))
        }
    }

    fn ident(&mut self, what: &str) -> Result<String, LangError> {
        match self.peek().clone() {
            Tok::Ident(s) => {
                self.advance();
                Ok(s)
            }
            other => Err(self.err_here(format!("expected {what}, found {}", other.describe()))),
        }
    }

    /// Statement terminator; optional directly before `}`.
    fn terminator(&mut self) -> Result<(), LangError> {
        if self.peek() == &Tok::RBrace {
            Ok(())
        } else {
            self.expect(&Tok::Semi)
        }
    }

    fn contract(&mut self) -> Result<ContractIR, LangError> {
        self.expect(&Tok::Contract)?;
        let name = self.ident("contract name")?;
        self.expect(&Tok::LBrace)?;
        let mut state_vars = Vec::new();
        let mut functions = Vec::new();
        loop {
            match self.peek() {
                Tok::RBrace => {
                    self.advance();
                    break;
                }
                Tok::Int | Tok::Uint | Tok::Bool | Tok::Mapping => state_vars.push(self.state_var()?),
                Tok::Ident(_) | Tok::OwnerOnly => functions.push(self.function()?),
                other => {
                    return Err(self.err_here(format!(
                        "expected state variable or function, found {}",
                        other.describe()
                    )))
                }
            }
        }
        Ok(ContractIR { name, state_vars, functions })
    }

    fn state_type(&mut self) -> Result<Kind, LangError> {
        match self.advance() {
            Tok::Int => Ok(Kind::Int),
            Tok::Uint => Ok(Kind::Uint),
            Tok::Bool => Ok(Kind::Bool),
            Tok::Mapping => {
                self.expect(&Tok::LParen)?;
                self.expect(&Tok::Address)?;
                self.expect(&Tok::Arrow)?;
                self.expect(&Tok::Uint)?;
                self.expect(&Tok::RParen)?;
                Ok(Kind::MapAddressToUint)
            }
            _ => unreachable!("caller checked the type keyword"),
        }
    }

    fn value_type(&mut self, what: &str) -> Result<Kind, LangError> {
        let k = match self.peek() {
            Tok::Int => Kind::Int,
            Tok::Uint => Kind::Uint,
            Tok::Bool => Kind::Bool,
            Tok::Address => Kind::Address,
            other => return Err(self.err_here(format!("expected {what}, found {}", other.describe()))),
        };
        self.advance();
        Ok(k)
    }

    fn state_var(&mut self) -> Result<StateVar, LangError> {
        let kind = self.state_type()?;
        let name = self.ident("state variable name")?;
        let initializer = if self.eat(&Tok::Assign) { Some(self.literal()?) } else { None };
        self.expect(&Tok::Semi)?;
        Ok(StateVar { name, kind, initializer })
    }

    fn literal(&mut self) -> Result<Literal, LangError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Literal::Int(n))
            }
            Tok::Minus => {
                self.advance();
                match self.advance() {
                    Tok::Number(n) => Ok(Literal::Int(-n)),
                    _ => {
                        self.pos -= 1;
                        Err(self.err_here("expected number after `-`"))
                    }
                }
            }
            Tok::True => {
                self.advance();
                Ok(Literal::Bool(true))
            }
            Tok::False => {
                self.advance();
                Ok(Literal::Bool(false))
            }
            other => Err(self.err_here(format!("expected literal, found {}", other.describe()))),
        }
    }

    fn function(&mut self) -> Result<FunctionIR, LangError> {
        let owner_only = self.eat(&Tok::OwnerOnly);
        let name = self.ident("function name")?;
        self.expect(&Tok::LParen)?;
        let mut params = Vec::new();
        if self.peek() != &Tok::RParen {
            loop {
                let kind = self.value_type("parameter type")?;
                let pname = self.ident("parameter name")?;
                params.push(Param { name: pname, kind });
                if !self.eat(&Tok::Comma) {
                    break;
                }
            }
        }
        self.expect(&Tok::RParen)?;
        let returns = if self.eat(&Tok::Returns) {
            self.expect(&Tok::LParen)?;
            let k = self.value_type("return type")?;
            self.expect(&Tok::RParen)?;
            Some(k)
        } else {
            None
        };
        let body = self.block()?;
        Ok(FunctionIR { name, params, body, returns, owner_only })
    }

    fn block(&mut self) -> Result<Vec<Stmt>, LangError> {
        self.expect(&Tok::LBrace)?;
        let mut out = Vec::new();
        while !self.eat(&Tok::RBrace) {
            if self.peek() == &Tok::Eof {
                return Err(self.err_here("expected `}`, found end of input"));
            }
            out.push(self.stmt()?);
        }
        Ok(out)
    }

    /// Branch bodies accept either a block or a single statement.
    fn branch_body(&mut self) -> Result<Vec<Stmt>, LangError> {
        if self.peek() == &Tok::LBrace {
            self.block()
        } else {
            Ok(vec![self.stmt()?])
        }
    }

    fn stmt(&mut self) -> Result<Stmt, LangError> {
        match self.peek().clone() {
            Tok::Int | Tok::Uint | Tok::Bool | Tok::Address => {
                let kind = self.value_type("type")?;
                let name = self.ident("local variable name")?;
                self.expect(&Tok::Assign)?;
                let expr = self.expr()?;
                self.terminator()?;
                Ok(Stmt::LocalDecl { kind, name, expr })
            }
            Tok::If => {
                self.advance();
                self.expect(&Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(&Tok::RParen)?;
                let then_body = self.branch_body()?;
                let else_body = if self.eat(&Tok::Else) { self.branch_body()? } else { Vec::new() };
                Ok(Stmt::If { cond, then_body, else_body })
            }
            Tok::While => {
                self.advance();
                self.expect(&Tok::LParen)?;
                let cond = self.expr()?;
                self.expect(&Tok::RParen)?;
                let body = self.branch_body()?;
                Ok(Stmt::While { cond, body })
            }
            Tok::Return => {
                self.advance();
                let value = if matches!(self.peek(), Tok::Semi | Tok::RBrace) { None } else { Some(self.expr()?) };
                self.terminator()?;
                Ok(Stmt::Return(value))
            }
            Tok::Ident(name) => {
                self.advance();
                let lhs = if self.eat(&Tok::LBracket) {
                    let key = self.expr()?;
                    self.expect(&Tok::RBracket)?;
                    LValue::Index(name, key)
                } else {
                    LValue::Var(name)
                };
                let op = match self.peek() {
                    Tok::Assign => None,
                    Tok::PlusEq => Some(CompoundOp::Add),
                    Tok::MinusEq => Some(CompoundOp::Sub),
                    Tok::StarEq => Some(CompoundOp::Mul),
                    Tok::SlashEq => Some(CompoundOp::Div),
                    other => {
                        return Err(self.err_here(format!("expected assignment operator, found {}", other.describe())))
                    }
                };
                self.advance();
                let expr = self.expr()?;
                self.terminator()?;
                Ok(match op {
                    None => Stmt::Assign { lhs, expr },
                    Some(op) => Stmt::Compound { lhs, op, expr },
                })
            }
            other => Err(self.err_here(format!("expected statement, found {}", other.describe()))),
        }
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        self.binary(1)
    }

    fn binop(&self) -> Option<BinOp> {
        Some(match self.peek() {
            Tok::OrOr => BinOp::Or,
            Tok::AndAnd => BinOp::And,
            Tok::EqEq => BinOp::Eq,
            Tok::NotEq => BinOp::Ne,
            Tok::Lt => BinOp::Lt,
            Tok::Le => BinOp::Le,
            Tok::Gt => BinOp::Gt,
            Tok::Ge => BinOp::Ge,
            Tok::Plus => BinOp::Add,
            Tok::Minus => BinOp::Sub,
            Tok::Star => BinOp::Mul,
            Tok::Slash => BinOp::Div,
            Tok::Percent => BinOp::Mod,
            _ => return None,
        })
    }

    /// Precedence climbing; all binary operators are left-associative.
    fn binary(&mut self, min_prec: u8) -> Result<Expr, LangError> {
        let mut lhs = self.unary()?;
        while let Some(op) = self.binop() {
            let prec = op.precedence();
            if prec < min_prec {
                break;
            }
            self.advance();
            let rhs = self.binary(prec + 1)?;
            lhs = Expr::binary(op, lhs, rhs);
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        match self.peek() {
            Tok::Bang => {
                self.advance();
                Ok(Expr::Unary(UnOp::Not, Box::new(self.unary()?)))
            }
            Tok::Minus => {
                self.advance();
                Ok(Expr::Unary(UnOp::Neg, Box::new(self.unary()?)))
            }
            _ => self.primary(),
        }
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        match self.peek().clone() {
            Tok::Number(n) => {
                self.advance();
                Ok(Expr::Int(n))
            }
            Tok::True => {
                self.advance();
                Ok(Expr::Bool(true))
            }
            Tok::False => {
                self.advance();
                Ok(Expr::Bool(false))
            }
            Tok::MsgSender => {
                self.advance();
                Ok(Expr::MsgSender)
            }
            Tok::Ident(name) => {
                self.advance();
                if self.eat(&Tok::LBracket) {
                    let key = self.expr()?;
                    self.expect(&Tok::RBracket)?;
                    Ok(Expr::Index(name, Box::new(key)))
                } else {
                    Ok(Expr::Var(name))
                }
            }
            Tok::LParen => {
                self.advance();
                let e = self.expr()?;
                self.expect(&Tok::RParen)?;
                Ok(e)
            }
            other => Err(self.err_here(format!("expected expression, found {}", other.describe()))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_associativity() {
        let e = parse_expr("a - b - c * d").unwrap();
        let expected = Expr::binary(
            BinOp::Sub,
            Expr::binary(BinOp::Sub, Expr::var("a"), Expr::var("b")),
            Expr::binary(BinOp::Mul, Expr::var("c"), Expr::var("d")),
        );
        assert_eq!(e, expected);
    }

    #[test]
    fn missing_semicolon_points_at_next_token() {
        let err = parse_unit("t", "contract A { int x = 1 int y; }").unwrap_err();
        match err {
            LangError::Syntax { line, col, .. } => assert_eq!((line, col), (1, 24)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bare_return_parses() {
        let unit = parse_unit("t", "contract X { f(){ return } }").unwrap();
        assert_eq!(unit.contracts[0].functions[0].body, vec![Stmt::Return(None)]);
    }
}
