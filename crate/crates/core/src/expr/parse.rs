//! Tokenizer and precedence-climbing parser for the `F` expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' unary)?
//! primary := number | 'i' | phiN | func '(' expr ')' | '(' expr ')'
//! ```
//!
//! The exponent of `^` must fold to an integer constant.

use super::{Expr, ExprError, Func};
use crate::{c64, Complex};

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    pos: usize,
}

/// Names that are recognized so they can be refused with a clear diagnostic.
const NON_HOLOMORPHIC: &[&str] = &["conj", "re", "im", "abs", "arg", "norm", "real", "imag"];

fn tokenize(src: &str) -> Result<Vec<Spanned>, ExprError> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let single = match c {
            '+' => Some(Tok::Plus),
            '-' => Some(Tok::Minus),
            '*' => Some(Tok::Star),
            '/' => Some(Tok::Slash),
            '^' => Some(Tok::Caret),
            '(' => Some(Tok::LParen),
            ')' => Some(Tok::RParen),
            _ => None,
        };
        if let Some(tok) = single {
            out.push(Spanned { tok, pos: i });
            i += 1;
            continue;
        }
        if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let text = &src[start..i];
            let value: f64 = text
                .parse()
                .map_err(|_| ExprError::Syntax { position: start, message: format!("malformed number `{text}`") })?;
            if !value.is_finite() {
                return Err(ExprError::Syntax { position: start, message: format!("number `{text}` is not finite") });
            }
            out.push(Spanned { tok: Tok::Num(value), pos: start });
            continue;
        }
        if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push(Spanned { tok: Tok::Ident(src[start..i].to_string()), pos: start });
            continue;
        }
        return Err(ExprError::Syntax { position: i, message: format!("unexpected character `{c}`") });
    }
    Ok(out)
}

struct Parser<'a> {
    toks: Vec<Spanned>,
    at: usize,
    arity: usize,
    src: &'a str,
}

pub(super) fn parse(src: &str, arity: usize) -> Result<Expr, ExprError> {
    if src.trim().is_empty() {
        return Err(ExprError::Syntax { position: 0, message: "empty expression".into() });
    }
    let toks = tokenize(src)?;
    let mut p = Parser { toks, at: 0, arity, src };
    let e = p.expr()?;
    if let Some(t) = p.toks.get(p.at) {
        return Err(ExprError::Syntax { position: t.pos, message: format!("unexpected trailing {:?}", t.tok) });
    }
    Ok(e)
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.at).map(|s| &s.tok)
    }

    fn pos(&self) -> usize {
        self.toks.get(self.at).map_or(self.src.len(), |s| s.pos)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.toks.get(self.at).cloned();
        self.at += 1;
        t
    }

    fn expect(&mut self, want: Tok) -> Result<(), ExprError> {
        let pos = self.pos();
        match self.bump() {
            Some(s) if s.tok == want => Ok(()),
            Some(s) => Err(ExprError::Syntax { position: pos, message: format!("expected {want:?}, found {:?}", s.tok) }),
            None => Err(ExprError::Syntax { position: pos, message: format!("expected {want:?}, found end of input") }),
        }
    }

    fn expr(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.at += 1;
                    lhs = Expr::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Tok::Minus) => {
                    self.at += 1;
                    lhs = Expr::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ExprError> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.at += 1;
                    lhs = Expr::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Tok::Slash) => {
                    self.at += 1;
                    lhs = Expr::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, ExprError> {
        if self.peek() == Some(&Tok::Minus) {
            self.at += 1;
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr, ExprError> {
        let base = self.primary()?;
        if self.peek() != Some(&Tok::Caret) {
            return Ok(base);
        }
        self.at += 1;
        let pos = self.pos();
        let exponent = self.unary()?;
        let n = fold_integer(&exponent).ok_or(ExprError::NonIntegerExponent { position: pos })?;
        Ok(Expr::Pow(Box::new(base), n))
    }

    fn primary(&mut self) -> Result<Expr, ExprError> {
        let pos = self.pos();
        let Some(tok) = self.bump() else {
            return Err(ExprError::Syntax { position: pos, message: "unexpected end of input".into() });
        };
        match tok.tok {
            Tok::Num(v) => Ok(Expr::Const(c64(v, 0.0))),
            Tok::LParen => {
                let e = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(e)
            }
            Tok::Ident(name) => self.identifier(&name, pos),
            other => Err(ExprError::Syntax { position: pos, message: format!("unexpected {other:?}") }),
        }
    }

    fn identifier(&mut self, name: &str, pos: usize) -> Result<Expr, ExprError> {
        if name == "i" {
            return Ok(Expr::Const(c64(0.0, 1.0)));
        }
        if let Some(digits) = name.strip_prefix("phi") {
            if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                let index: usize = digits.parse().unwrap_or(usize::MAX);
                if index == 0 || index > self.arity {
                    return Err(ExprError::Arity { position: pos, index, arity: self.arity });
                }
                return Ok(Expr::Var(index - 1));
            }
        }
        let is_call = self.peek() == Some(&Tok::LParen);
        let func = match name {
            "exp" => Some(Func::Exp),
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "log" => Some(Func::Log),
            _ => None,
        };
        match func {
            Some(func) if is_call => {
                self.at += 1;
                let arg = self.expr()?;
                self.expect(Tok::RParen)?;
                Ok(Expr::Call(func, Box::new(arg)))
            }
            Some(_) => Err(ExprError::Syntax { position: pos, message: format!("function `{name}` needs an argument") }),
            None if is_call || NON_HOLOMORPHIC.contains(&name.to_ascii_lowercase().as_str()) => {
                Err(ExprError::NonHolomorphic { position: pos, name: name.to_string() })
            }
            None => Err(ExprError::Syntax { position: pos, message: format!("unknown identifier `{name}`") }),
        }
    }
}

/// Folds a constant exponent expression to an integer, if it is one.
fn fold_integer(e: &Expr) -> Option<i64> {
    let v = fold_constant(e)?;
    if v.im != 0.0 || v.re.fract() != 0.0 || v.re.abs() > 1e6 {
        return None;
    }
    Some(v.re as i64)
}

fn fold_constant(e: &Expr) -> Option<Complex> {
    Some(match e {
        Expr::Const(c) => *c,
        Expr::Var(_) | Expr::Call(..) => return None,
        Expr::Neg(a) => -fold_constant(a)?,
        Expr::Add(a, b) => fold_constant(a)? + fold_constant(b)?,
        Expr::Sub(a, b) => fold_constant(a)? - fold_constant(b)?,
        Expr::Mul(a, b) => fold_constant(a)? * fold_constant(b)?,
        Expr::Div(a, b) => fold_constant(a)? / fold_constant(b)?,
        Expr::Pow(a, n) => super::dual::powi(fold_constant(a)?, *n),
    })
}
