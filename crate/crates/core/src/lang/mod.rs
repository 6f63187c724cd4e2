//! TokenLang front end: lexer, parser, validator and pretty-printer.
//!
//! ```
//! let unit = tmev_core::lang::parse("contract E {}").unwrap();
//! assert!(unit.contracts[0].functions.is_empty());
//! ```

pub mod ast;
pub mod eval;
mod lexer;
mod parser;
mod printer;
pub mod types;
mod validate;

pub use ast::*;
pub use printer::{expr_text, kind_text, lvalue_text, pretty_print};
pub use validate::definitely_returns;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum LangError {
    #[error("syntax error at {line}:{col}: {message}")]
    Syntax { line: usize, col: usize, message: String },
    #[error("validation error: {0}")]
    Validation(String),
}

/// Parse and validate TokenLang source.
pub fn parse(source: &str) -> Result<SourceUnit, LangError> {
    parse_named("<input>", source)
}

pub fn parse_named(source_name: &str, source: &str) -> Result<SourceUnit, LangError> {
    let unit = parser::parse_unit(source_name, source)?;
    validate::validate_unit(&unit)?;
    Ok(unit)
}

/// Parse a single expression; names are not resolved.
pub fn parse_expr(source: &str) -> Result<Expr, LangError> {
    parser::parse_expr(source)
}
