//! Canonical pretty-printer. Output conforms to the parser grammar and is
//! deterministic: terms appear in descending graded-lex order, so
//! `parse(print(e)) == e`.

use std::fmt;

use num::{One, Signed};

use super::expr::Expr;
use super::poly::{Monomial, Poly, Rat};
use super::registry;

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        if self.is_polynomial() {
            return write!(f, "{}", poly_string(self.numerator()));
        }
        let num = self.numerator();
        let den = self.denominator();
        let ns = if num.terms.len() == 1 && !num.terms[0].1.is_negative() {
            poly_string(num)
        } else {
            format!("({})", poly_string(num))
        };
        write!(f, "{}/({})", ns, poly_string(den))
    }
}

fn rat_string(c: &Rat) -> String {
    if c.denom().is_one() {
        c.numer().to_string()
    } else {
        format!("{}/{}", c.numer(), c.denom())
    }
}

fn monomial_string(m: &Monomial) -> String {
    let parts: Vec<String> = m
        .0
        .iter()
        .map(|(a, e)| {
            let name = registry::atom_display(*a);
            if *e == 1 {
                name
            } else {
                format!("{name}^{e}")
            }
        })
        .collect();
    parts.join("*")
}

pub(crate) fn poly_string(p: &Poly) -> String {
    if p.is_zero() {
        return "0".to_string();
    }
    let mut out = String::new();
    for (idx, (m, c)) in p.terms.iter().enumerate() {
        let neg = c.is_negative();
        let mag = if neg { -c.clone() } else { c.clone() };
        if idx == 0 {
            if neg {
                out.push('-');
            }
        } else if neg {
            out.push_str(" - ");
        } else {
            out.push_str(" + ");
        }
        if m.is_one() {
            out.push_str(&rat_string(&mag));
        } else if mag.is_one() {
            out.push_str(&monomial_string(m));
        } else {
            out.push_str(&rat_string(&mag));
            out.push('*');
            out.push_str(&monomial_string(m));
        }
    }
    out
}
