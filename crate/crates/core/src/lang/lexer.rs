use num_bigint::BigInt;

use super::LangError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Tok {
    Ident(String),
    Number(BigInt),
    // keywords
    Contract,
    Int,
    Uint,
    Bool,
    Address,
    Mapping,
    Returns,
    If,
    Else,
    While,
    Return,
    True,
    False,
    /// `msg.sender`, lexed as one token.
    MsgSender,
    /// `@owner_only`
    OwnerOnly,
    // punctuation
    LBrace,
    RBrace,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Semi,
    Comma,
    Arrow,
    Assign,
    PlusEq,
    MinusEq,
    StarEq,
    SlashEq,
    Plus,
    Minus,
    Star,
    Slash,
    Percent,
    EqEq,
    NotEq,
    Lt,
    Le,
    Gt,
    Ge,
    AndAnd,
    OrOr,
    Bang,
    Eof,
}

impl Tok {
    pub fn describe(&self) -> String {
        match self {
            Tok::Ident(s) => format!("identifier `{s}`"),
            Tok::Number(n) => format!("number `{n}`"),
            Tok::Eof => "end of input".to_string(),
            other => format!("`{}`", other.text()),
        }
    }

    fn text(&self) -> &'static str {
        match self {
            Tok::Contract => "contract",
            Tok::Int => "int",
            Tok::Uint => "uint",
            Tok::Bool => "bool",
            Tok::Address => "address",
            Tok::Mapping => "mapping",
            Tok::Returns => "returns",
            Tok::If => "if",
            Tok::Else => "else",
            Tok::While => "while",
            Tok::Return => "return",
            Tok::True => "true",
            Tok::False => "false",
            Tok::MsgSender => "msg.sender",
            Tok::OwnerOnly => "@owner_only",
            Tok::LBrace => "{",
            Tok::RBrace => "}",
            Tok::LParen => "(",
            Tok::RParen => ")",
            Tok::LBracket => "[",
            Tok::RBracket => "]",
            Tok::Semi => ";",
            Tok::Comma => ",",
            Tok::Arrow => "=>",
            Tok::Assign => "=",
            Tok::PlusEq => "+=",
            Tok::MinusEq => "-=",
            Tok::StarEq => "*=",
            Tok::SlashEq => "/=",
            Tok::Plus => "+",
            Tok::Minus => "-",
            Tok::Star => "*",
            Tok::Slash => "/",
            Tok::Percent => "%",
            Tok::EqEq => "==",
            Tok::NotEq => "!=",
            Tok::Lt => "<",
            Tok::Le => "<=",
            Tok::Gt => ">",
            Tok::Ge => ">=",
            Tok::AndAnd => "&&",
            Tok::OrOr => "||",
            Tok::Bang => "!",
            Tok::Ident(_) | Tok::Number(_) | Tok::Eof => "",
        }
    }
}

/// A token with its 1-based start position.
#[derive(Debug, Clone)]
pub struct Spanned {
    pub tok: Tok,
    pub line: usize,
    pub col: usize,
}

pub fn tokenize(src: &str) -> Result<Vec<Spanned>, LangError> {
    Lexer::new(src).run()
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Lexer {
    fn new(src: &str) -> Self {
        Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1 }
    }

    fn peek(&self, off: usize) -> Option<char> {
        self.chars.get(self.pos + off).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, col: usize, msg: impl Into<String>) -> LangError {
        LangError::Syntax { line, col, message: msg.into() }
    }

    fn run(mut self) -> Result<Vec<Spanned>, LangError> {
        let mut out = Vec::new();
        loop {
            self.skip_trivia()?;
            let (line, col) = (self.line, self.col);
            let Some(c) = self.peek(0) else {
                out.push(Spanned { tok: Tok::Eof, line, col });
                return Ok(out);
            };
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                self.word()?
            } else if c.is_ascii_digit() {
                self.number(line, col)?
            } else if c == '@' {
                self.bump();
                self.expect_word("owner_only", "@owner_only")?;
                Tok::OwnerOnly
            } else {
                self.punct(line, col)?
            };
            out.push(Spanned { tok, line, col });
        }
    }

    fn skip_trivia(&mut self) -> Result<(), LangError> {
        loop {
            match (self.peek(0), self.peek(1)) {
                (Some(c), _) if c.is_whitespace() => {
                    self.bump();
                }
                (Some('/'), Some('/')) => {
                    while let Some(c) = self.peek(0) {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                }
                (Some('/'), Some('*')) => {
                    let (line, col) = (self.line, self.col);
                    self.bump();
                    self.bump();
                    loop {
                        match (self.peek(0), self.peek(1)) {
                            (Some('*'), Some('/')) => {
                                self.bump();
                                self.bump();
                                break;
                            }
                            (Some(_), _) => {
                                self.bump();
                            }
                            (None, _) => return Err(self.error(line, col, "unterminated block comment")),
                        }
                    }
                }
                _ => return Ok(()),
            }
        }
    }

    fn ident_text(&mut self) -> String {
        let mut s = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_alphanumeric() || c == '_' {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s
    }

    /// Consume exactly `rest` as a whole word, erroring at the first
    /// character that differs.
    fn expect_word(&mut self, rest: &str, what: &str) -> Result<(), LangError> {
        for want in rest.chars().map(Some).chain([None]) {
            let got = self.peek(0).filter(|c| c.is_ascii_alphanumeric() || *c == '_');
            if got != want {
                return Err(self.error(self.line, self.col, format!("expected `{what}`")));
            }
            if want.is_some() {
                self.bump();
            }
        }
        Ok(())
    }

    fn word(&mut self) -> Result<Tok, LangError> {
        let w = self.ident_text();
        Ok(match w.as_str() {
            "contract" => Tok::Contract,
            "int" => Tok::Int,
            "uint" => Tok::Uint,
            "bool" => Tok::Bool,
            "address" => Tok::Address,
            "mapping" => Tok::Mapping,
            "returns" => Tok::Returns,
            "if" => Tok::If,
            "else" => Tok::Else,
            "while" => Tok::While,
            "return" => Tok::Return,
            "true" => Tok::True,
            "false" => Tok::False,
            "msg" if self.peek(0) == Some('.') => {
                self.bump();
                self.expect_word("sender", "msg.sender")?;
                Tok::MsgSender
            }
            _ => Tok::Ident(w),
        })
    }

    /// Decimal integer with an optional `eN` exponent (`1e18`).
    fn number(&mut self, line: usize, col: usize) -> Result<Tok, LangError> {
        let mut digits = String::new();
        while let Some(c) = self.peek(0) {
            if c.is_ascii_digit() {
                digits.push(c);
                self.bump();
            } else {
                break;
            }
        }
        let mut value: BigInt = digits.parse().expect("ascii digits");
        if matches!(self.peek(0), Some('e') | Some('E')) {
            self.bump();
            if !self.peek(0).is_some_and(|c| c.is_ascii_digit()) {
                return Err(self.error(self.line, self.col, "expected exponent digits"));
            }
            let mut exp = String::new();
            while let Some(c) = self.peek(0) {
                if c.is_ascii_digit() {
                    exp.push(c);
                    self.bump();
                } else {
                    break;
                }
            }
            let exp: u32 = exp
                .parse()
                .ok()
                .filter(|e| *e <= 1000)
                .ok_or_else(|| self.error(line, col, "exponent out of range"))?;
            value *= num_traits::pow(BigInt::from(10), exp as usize);
        }
        if self.peek(0).is_some_and(|c| c.is_ascii_alphabetic() || c == '_') {
            return Err(self.error(self.line, self.col, "invalid character in number literal"));
        }
        Ok(Tok::Number(value))
    }

    fn punct(&mut self, line: usize, col: usize) -> Result<Tok, LangError> {
        let c = self.bump().expect("peeked");
        let next = self.peek(0);
        let two = |s: &mut Self, t: Tok| {
            s.bump();
            t
        };
        Ok(match (c, next) {
            ('{', _) => Tok::LBrace,
            ('}', _) => Tok::RBrace,
            ('(', _) => Tok::LParen,
            (')', _) => Tok::RParen,
            ('[', _) => Tok::LBracket,
            (']', _) => Tok::RBracket,
            (';', _) => Tok::Semi,
            (',', _) => Tok::Comma,
            ('=', Some('>')) => two(self, Tok::Arrow),
            ('=', Some('=')) => two(self, Tok::EqEq),
            ('=', _) => Tok::Assign,
            ('+', Some('=')) => two(self, Tok::PlusEq),
            ('-', Some('=')) => two(self, Tok::MinusEq),
            ('*', Some('=')) => two(self, Tok::StarEq),
            ('/', Some('=')) => two(self, Tok::SlashEq),
            ('+', _) => Tok::Plus,
            ('-', _) => Tok::Minus,
            ('*', _) => Tok::Star,
            ('/', _) => Tok::Slash,
            ('%', _) => Tok::Percent,
            ('!', Some('=')) => two(self, Tok::NotEq),
            ('!', _) => Tok::Bang,
            ('<', Some('=')) => two(self, Tok::Le),
            ('<', _) => Tok::Lt,
            ('>', Some('=')) => two(self, Tok::Ge),
            ('>', _) => Tok::Gt,
            ('&', Some('&')) => two(self, Tok::AndAnd),
            ('|', Some('|')) => two(self, Tok::OrOr),
            _ => return Err(self.error(line, col, format!("unexpected character `{c}`"))),
        })
    }
}
