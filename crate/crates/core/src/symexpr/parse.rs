//! Recursive-descent parser for the expression grammar (see README for the
//! EBNF). The canonical printer emits the same grammar, so
//! `parse(print(e)) == e` on canonical forms.

use super::expr::Expr;
use super::registry::{self, SymRef, VarId};
use crate::error::{Error, Result};

/// How the parser resolves identifiers it has not seen before.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum UnknownPolicy {
    /// Auto-declare unknown identifiers as plain variables.
    DeclareVars,
    /// Reject unknown identifiers (CLI mode: symbols must be declared in the
    /// problem spec).
    Reject,
}

pub fn parse(text: &str) -> Result<Expr> {
    parse_with(text, UnknownPolicy::DeclareVars)
}

pub fn parse_strict(text: &str) -> Result<Expr> {
    parse_with(text, UnknownPolicy::Reject)
}

pub fn parse_with(text: &str, policy: UnknownPolicy) -> Result<Expr> {
    let tokens = lex(text)?;
    let mut p = Parser { tokens, pos: 0, policy };
    let e = p.expr()?;
    if p.pos != p.tokens.len() {
        return Err(p.err_here("unexpected trailing input"));
    }
    Ok(e)
}

#[derive(Clone, PartialEq, Debug)]
enum Tok {
    Int(i64),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
}

fn lex(text: &str) -> Result<Vec<(Tok, usize)>> {
    let mut out = Vec::new();
    let bytes = text.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        match c {
            ' ' | '\t' | '\n' | '\r' => i += 1,
            '+' => { out.push((Tok::Plus, i)); i += 1; }
            '-' | '\u{2212}' => { out.push((Tok::Minus, i)); i += c.len_utf8(); }
            '*' => { out.push((Tok::Star, i)); i += 1; }
            '/' => { out.push((Tok::Slash, i)); i += 1; }
            '^' => { out.push((Tok::Caret, i)); i += 1; }
            '(' => { out.push((Tok::LParen, i)); i += 1; }
            ')' => { out.push((Tok::RParen, i)); i += 1; }
            '[' => { out.push((Tok::LBracket, i)); i += 1; }
            ']' => { out.push((Tok::RBracket, i)); i += 1; }
            ',' => { out.push((Tok::Comma, i)); i += 1; }
            '0'..='9' => {
                let start = i;
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                let v: i64 = text[start..i]
                    .parse()
                    .map_err(|_| Error::Parse { pos: start, msg: "integer literal overflows".into() })?;
                out.push((Tok::Int(v), start));
            }
            c if c.is_ascii_alphabetic() || c == '_' || c == '#' => {
                let start = i;
                while i < bytes.len() {
                    let c = bytes[i] as char;
                    if c.is_ascii_alphanumeric() || c == '_' || c == '#' {
                        i += 1;
                    } else {
                        break;
                    }
                }
                out.push((Tok::Ident(text[start..i].to_string()), start));
            }
            _ => {
                return Err(Error::Parse { pos: i, msg: format!("unknown token `{c}`") });
            }
        }
    }
    Ok(out)
}

struct Parser {
    tokens: Vec<(Tok, usize)>,
    pos: usize,
    policy: UnknownPolicy,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.tokens.get(self.pos).map(|(t, _)| t)
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.tokens.get(self.pos).map(|(t, _)| t.clone());
        if t.is_some() {
            self.pos += 1;
        }
        t
    }

    fn here(&self) -> usize {
        self.tokens
            .get(self.pos)
            .or_else(|| self.tokens.last())
            .map(|(_, p)| *p)
            .unwrap_or(0)
    }

    fn err_here(&self, msg: &str) -> Error {
        Error::Parse { pos: self.here(), msg: msg.to_string() }
    }

    fn expect(&mut self, t: Tok, what: &str) -> Result<()> {
        if self.peek() == Some(&t) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err_here(&format!("expected {what}")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut acc = self.term()?;
        loop {
            match self.peek() {
                Some(Tok::Plus) => {
                    self.pos += 1;
                    acc = acc + self.term()?;
                }
                Some(Tok::Minus) => {
                    self.pos += 1;
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some(Tok::Star) => {
                    self.pos += 1;
                    acc = acc * self.unary()?;
                }
                Some(Tok::Slash) => {
                    self.pos += 1;
                    let d = self.unary()?;
                    if d.is_zero() {
                        return Err(self.err_here("division by zero"));
                    }
                    acc = acc / d;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        match self.peek() {
            Some(Tok::Minus) => {
                self.pos += 1;
                Ok(-self.unary()?)
            }
            Some(Tok::Plus) => {
                self.pos += 1;
                self.unary()
            }
            _ => self.power(),
        }
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.peek() == Some(&Tok::Caret) {
            self.pos += 1;
            let e = self.exponent()?;
            return base
                .pow(e)
                .map_err(|_| self.err_here("zero raised to a negative power"));
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<i64> {
        // integer, -integer, or a parenthesized form of either
        match self.next() {
            Some(Tok::Int(n)) => Ok(n),
            Some(Tok::Minus) => match self.next() {
                Some(Tok::Int(n)) => Ok(-n),
                _ => Err(self.err_here("expected integer exponent")),
            },
            Some(Tok::LParen) => {
                let e = self.exponent()?;
                self.expect(Tok::RParen, "`)` after exponent")?;
                Ok(e)
            }
            _ => Err(self.err_here("expected integer exponent")),
        }
    }

    fn atom(&mut self) -> Result<Expr> {
        match self.next() {
            Some(Tok::Int(n)) => Ok(Expr::int(n)),
            Some(Tok::LParen) => {
                let e = self.expr()?;
                self.expect(Tok::RParen, "`)`")?;
                Ok(e)
            }
            Some(Tok::Ident(name)) if name == "D" && self.peek() == Some(&Tok::LBracket) => {
                self.derivative_form()
            }
            Some(Tok::Ident(name)) => self.identifier(&name),
            _ => Err(self.err_here("expected expression")),
        }
    }

    /// `D[f, v1, v2, ...]` — formal partial derivative of an opaque symbol.
    fn derivative_form(&mut self) -> Result<Expr> {
        self.expect(Tok::LBracket, "`[`")?;
        let fname = match self.next() {
            Some(Tok::Ident(n)) => n,
            _ => return Err(self.err_here("expected function name in D[...]")),
        };
        let f = match registry::lookup(&fname) {
            Some(SymRef::Fn(f)) => f,
            _ => {
                return Err(self.err_here(&format!(
                    "`{fname}` is not a declared function symbol"
                )))
            }
        };
        let args = registry::fn_args(f);
        let mut derivs: Vec<u8> = Vec::new();
        while self.peek() == Some(&Tok::Comma) {
            self.pos += 1;
            let vname = match self.next() {
                Some(Tok::Ident(n)) => n,
                _ => return Err(self.err_here("expected variable name in D[...]")),
            };
            let v = match registry::lookup(&vname) {
                Some(SymRef::Var(v)) => v,
                _ => return Err(self.err_here(&format!("`{vname}` is not a variable"))),
            };
            let pos = args.iter().position(|a| *a == v).ok_or_else(|| {
                self.err_here(&format!("`{vname}` is not an argument of `{fname}`"))
            })?;
            derivs.push(pos as u8);
        }
        self.expect(Tok::RBracket, "`]`")?;
        if derivs.is_empty() {
            return Err(self.err_here("D[...] needs at least one differentiation variable"));
        }
        Ok(Expr::atom(registry::deriv_atom(f, derivs)))
    }

    fn identifier(&mut self, name: &str) -> Result<Expr> {
        match registry::lookup(name) {
            Some(SymRef::Var(v)) => Ok(Expr::var(v)),
            Some(SymRef::Fn(f)) => {
                let args = registry::fn_args(f);
                if args.is_empty() {
                    return Ok(Expr::atom(registry::fn_atom(f)));
                }
                // application must list exactly the declared plain-variable
                // arguments, in order
                self.expect(Tok::LParen, &format!("`(` after function `{name}`"))?;
                for (k, a) in args.iter().enumerate() {
                    if k > 0 {
                        self.expect(Tok::Comma, "`,`")?;
                    }
                    let got = match self.next() {
                        Some(Tok::Ident(n)) => n,
                        _ => return Err(self.err_here("expected variable argument")),
                    };
                    if registry::lookup(&got) != Some(SymRef::Var(*a)) {
                        return Err(self.err_here(&format!(
                            "function `{name}` must be applied to its declared arguments"
                        )));
                    }
                }
                self.expect(Tok::RParen, "`)`")?;
                Ok(Expr::atom(registry::fn_atom(f)))
            }
            None => match self.policy {
                UnknownPolicy::DeclareVars => {
                    let v = registry::var(name)?;
                    Ok(Expr::var(v))
                }
                UnknownPolicy::Reject => {
                    Err(self.err_here(&format!("unknown symbol `{name}`")))
                }
            },
        }
    }
}

/// Convenience: parse in auto-declare mode and panic on failure (tests).
pub fn expr(text: &str) -> Expr {
    parse(text).unwrap_or_else(|e| panic!("parse error in `{text}`: {e}"))
}

/// Declared variable handle by name, declaring it when missing.
pub fn v(name: &str) -> VarId {
    registry::var(name).expect("variable declaration")
}
