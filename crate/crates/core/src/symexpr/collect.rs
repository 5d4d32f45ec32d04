//! Decomposition of expressions into monomials over a chosen set of
//! indeterminates, with expression coefficients. This is the workhorse behind
//! splitting symmetry conditions by jet-variable monomials.

use std::collections::BTreeMap;

use super::expr::Expr;
use super::poly::{Monomial, Poly};
use super::registry::{self, AtomId, VarId};
use crate::error::{Error, Result};

/// Monomial in the selected variables, canonically ordered.
pub type KeyMonomial = Vec<(AtomId, u32)>;

/// Split `e` into a map from monomials in `vars` to expression coefficients.
/// `e` must be polynomial in `vars` (denominator free of them);
/// `sum(monomial * coeff)` reconstructs `e` exactly.
pub fn collect_monomials(e: &Expr, vars: &[VarId]) -> Result<BTreeMap<KeyMonomial, Expr>> {
    let atoms: Vec<AtomId> = vars.iter().map(|v| registry::var_atom(*v)).collect();
    collect_atom_monomials(e, &atoms)
}

pub fn collect_atom_monomials(
    e: &Expr,
    atoms: &[AtomId],
) -> Result<BTreeMap<KeyMonomial, Expr>> {
    for a in atoms {
        if e.denominator().contains_atom(*a) {
            return Err(Error::NotPolynomial(format!(
                "denominator contains `{}`",
                registry::atom_display(*a)
            )));
        }
    }
    let den = Expr::from_poly(e.denominator().clone());
    let mut out: BTreeMap<KeyMonomial, Expr> = BTreeMap::new();
    for (m, c) in &e.numerator().terms {
        let mut key: KeyMonomial = Vec::new();
        let mut rest: Vec<(AtomId, u32)> = Vec::new();
        for (a, p) in &m.0 {
            if atoms.contains(a) {
                key.push((*a, *p));
            } else {
                rest.push((*a, *p));
            }
        }
        let coeff = Expr::from_poly(Poly::term(Monomial(rest), c.clone())) / den.clone();
        let entry = out.entry(key).or_insert_with(Expr::zero);
        *entry = entry.clone() + coeff;
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

/// Coefficient of a single monomial (empty key = the part free of `vars`).
pub fn coefficient_of(e: &Expr, vars: &[VarId], key: &[(VarId, u32)]) -> Result<Expr> {
    let map = collect_monomials(e, vars)?;
    let k: KeyMonomial = {
        let mut k: KeyMonomial = key
            .iter()
            .map(|(v, p)| (registry::var_atom(*v), *p))
            .collect();
        k.sort_unstable();
        k
    };
    Ok(map.get(&k).cloned().unwrap_or_else(Expr::zero))
}

/// Clear the denominator of an `= 0` equation: returns the numerator as a
/// polynomial equation with the same zero set (denominator assumed nonzero).
pub fn clear_denominator(e: &Expr) -> Poly {
    e.numerator().clone()
}

/// Rebuild an expression from a collected decomposition (test helper).
pub fn recombine(map: &BTreeMap<KeyMonomial, Expr>) -> Expr {
    let mut acc = Expr::zero();
    for (key, coeff) in map {
        let m = Expr::from_poly(Poly::term(Monomial(key.clone()), num::One::one()));
        acc = acc + m * coeff.clone();
    }
    acc
}
