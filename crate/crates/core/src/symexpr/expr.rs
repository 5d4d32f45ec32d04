//! Canonical symbolic expressions: rational functions over the atom
//! polynomial ring. Two `Expr` values compare equal iff they are
//! mathematically equal within this fragment, so `is_zero` is a decision
//! procedure. No floating point anywhere; floats exist only in test harness
//! evaluation.

use std::collections::HashMap;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num::{BigInt, One, ToPrimitive};

use super::poly::{gcd, rat, Monomial, Poly, Rat};
use super::registry::{self, AtomDiff, AtomId, VarId};
use crate::error::{Error, Result};

/// Rational function `num/den` in canonical form: `den` is primitive with
/// positive leading coefficient and shares no polynomial factor with `num`.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Expr {
    num: Poly,
    den: Poly,
}

impl Expr {
    pub fn zero() -> Self {
        Expr { num: Poly::zero(), den: Poly::one() }
    }

    pub fn one() -> Self {
        Expr::from_poly(Poly::one())
    }

    pub fn int(n: i64) -> Self {
        Expr::from_poly(Poly::constant(rat(n, 1)))
    }

    pub fn rational(n: i64, d: i64) -> Self {
        Expr::from_poly(Poly::constant(rat(n, d)))
    }

    pub fn from_rat(c: Rat) -> Self {
        Expr::from_poly(Poly::constant(c))
    }

    pub fn var(v: VarId) -> Self {
        Expr::from_poly(Poly::atom(registry::var_atom(v)))
    }

    pub fn sym(name: &str) -> Result<Self> {
        match registry::lookup(name) {
            Some(registry::SymRef::Var(v)) => Ok(Expr::var(v)),
            Some(registry::SymRef::Fn(f)) => Ok(Expr::atom(registry::fn_atom(f))),
            None => Err(Error::Registry(format!("unknown symbol `{name}`"))),
        }
    }

    pub fn atom(a: AtomId) -> Self {
        Expr::from_poly(Poly::atom(a))
    }

    pub fn from_poly(p: Poly) -> Self {
        Expr { num: p, den: Poly::one() }
    }

    pub fn new(num: Poly, den: Poly) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::DivisionByZero);
        }
        Ok(Self::reduced(num, den))
    }

    fn reduced(num: Poly, den: Poly) -> Self {
        if num.is_zero() {
            return Expr::zero();
        }
        let (num, den) = if den.is_constant() {
            (num.scale(&den.as_constant().unwrap().recip()), Poly::one())
        } else {
            let g = gcd(&num, &den);
            if g.is_constant() {
                (num, den)
            } else {
                (
                    num.div_exact(&g).expect("gcd divides numerator"),
                    den.div_exact(&g).expect("gcd divides denominator"),
                )
            }
        };
        // Pin the constant: denominator primitive with positive leading coeff.
        let (c, den) = den.content_and_primitive();
        let num = num.scale(&c.recip());
        Expr { num, den }
    }

    pub fn numerator(&self) -> &Poly {
        &self.num
    }

    pub fn denominator(&self) -> &Poly {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.den.is_one_poly() && self.num.as_constant().map_or(false, |c| c.is_one())
    }

    pub fn as_rational(&self) -> Option<Rat> {
        if !self.den.is_one_poly() {
            return None;
        }
        self.num.as_constant()
    }

    /// Constant in the sense of "free of all indeterminates": a plain rational.
    pub fn is_rational_constant(&self) -> bool {
        self.as_rational().is_some()
    }

    pub fn is_polynomial(&self) -> bool {
        self.den.is_one_poly()
    }

    pub fn pow(&self, e: i64) -> Result<Self> {
        if e == 0 {
            return Ok(Expr::one());
        }
        if self.is_zero() && e < 0 {
            return Err(Error::DivisionByZero);
        }
        let p = e.unsigned_abs() as u32;
        let (n, d) = (self.num.pow(p), self.den.pow(p));
        if e > 0 {
            Ok(Expr::reduced(n, d))
        } else {
            Ok(Expr::reduced(d, n))
        }
    }

    pub fn atoms(&self) -> Vec<AtomId> {
        let mut a = self.num.atoms();
        a.extend(self.den.atoms());
        a.sort_unstable();
        a.dedup();
        a
    }

    pub fn contains_atom(&self, a: AtomId) -> bool {
        self.num.contains_atom(a) || self.den.contains_atom(a)
    }

    pub fn contains_var(&self, v: VarId) -> bool {
        self.contains_atom(registry::var_atom(v))
    }

    /// Free of every listed variable (and of formal derivatives in them is not
    /// checked here; opaque symbols are atoms of their own).
    pub fn free_of_vars(&self, vars: &[VarId]) -> bool {
        vars.iter().all(|v| !self.contains_var(*v))
    }

    /// Exact partial derivative. Opaque symbols differentiate through their
    /// declared arguments only; ruled symbols expand their rule.
    pub fn diff(&self, v: VarId) -> Expr {
        let dn = poly_diff(&self.num, v);
        let dd = poly_diff(&self.den, v);
        if dd.is_zero() {
            // common case: denominator free of v
            return dn * Expr::reduced(Poly::one(), self.den.clone());
        }
        let num_e = Expr::from_poly(self.num.clone());
        let den_e = Expr::from_poly(self.den.clone());
        (dn * den_e.clone() - num_e * dd) / (den_e.clone() * den_e)
    }

    /// Replace every occurrence of an atom by an expression.
    pub fn substitute(&self, a: AtomId, value: &Expr) -> Expr {
        let n = poly_substitute(&self.num, a, value);
        let d = poly_substitute(&self.den, a, value);
        n / d
    }

    pub fn substitute_var(&self, v: VarId, value: &Expr) -> Expr {
        self.substitute(registry::var_atom(v), value)
    }

    /// Float evaluation for test cross-checks; fails on opaque symbols.
    pub fn eval_f64(&self, point: &HashMap<VarId, f64>) -> Result<f64> {
        let n = poly_eval(&self.num, point)?;
        let d = poly_eval(&self.den, point)?;
        if d == 0.0 {
            return Err(Error::DivisionByZero);
        }
        Ok(n / d)
    }

    /// Antiderivative with respect to `v` inside the rational fragment.
    /// Supported shapes: numerator polynomial in `v` over a denominator of the
    /// form `v^m * d0` with `d0` free of `v`. Returns `None` when the result
    /// leaves the fragment (a `1/v` term).
    pub fn antiderivative(&self, v: VarId) -> Option<Expr> {
        let a = registry::var_atom(v);
        let (vpow, d0) = {
            let m = self.den.max_exponent(a);
            if m == 0 {
                (0i64, self.den.clone())
            } else {
                let divisor = Poly::term(Monomial(vec![(a, m)]), Rat::one());
                let d0 = self.den.div_exact(&divisor)?;
                if d0.contains_atom(a) {
                    return None;
                }
                (m as i64, d0)
            }
        };
        let coeffs = self.num.to_univariate(a);
        let mut acc = Expr::zero();
        let d0e = Expr::from_poly(d0);
        for (e, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if c.contains_atom(a) {
                return None;
            }
            let k = e as i64 - vpow; // effective power of v in this term
            if k == -1 {
                return None;
            }
            let term = Expr::from_poly(c.clone()) / d0e.clone()
                * Expr::atom(a).pow(k + 1).ok()?
                * Expr::rational(1, k + 1);
            acc = acc + term;
        }
        Some(acc)
    }
}

trait PolyIsOne {
    fn is_one_poly(&self) -> bool;
}

impl PolyIsOne for Poly {
    fn is_one_poly(&self) -> bool {
        self.as_constant().map_or(false, |c| c.is_one())
    }
}

/// Derivative of a polynomial; the result can be rational when an atom
/// carries a rational derivative rule.
fn poly_diff(p: &Poly, v: VarId) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in &p.terms {
        for (idx, (a, e)) in m.0.iter().enumerate() {
            let da = match registry::diff_atom(*a, v) {
                AtomDiff::Zero => continue,
                AtomDiff::One => Expr::one(),
                AtomDiff::Atom(b) => Expr::atom(b),
                AtomDiff::Rule(r) => r,
            };
            // term / a * e * da
            let mut rest = m.0.clone();
            if *e > 1 {
                rest[idx].1 -= 1;
            } else {
                rest.remove(idx);
            }
            let base = Poly::term(Monomial(rest), c * rat(*e as i64, 1));
            acc = acc + Expr::from_poly(base) * da;
        }
    }
    acc
}

fn poly_substitute(p: &Poly, a: AtomId, value: &Expr) -> Expr {
    let mut acc = Expr::zero();
    for (m, c) in &p.terms {
        let mut term = Expr::from_rat(c.clone());
        for (b, e) in &m.0 {
            let factor = if *b == a {
                value.clone()
            } else {
                Expr::atom(*b)
            };
            term = term * factor.pow(*e as i64).expect("positive power");
        }
        acc = acc + term;
    }
    acc
}

fn poly_eval(p: &Poly, point: &HashMap<VarId, f64>) -> Result<f64> {
    let mut acc = 0.0;
    for (m, c) in &p.terms {
        let mut t = rat_to_f64(c);
        for (a, e) in &m.0 {
            match registry::atom_data(*a) {
                registry::AtomData::Var(v) => {
                    let x = point.get(&v).copied().ok_or_else(|| {
                        Error::Eval(format!("no value for variable `{}`", registry::var_name(v)))
                    })?;
                    t *= x.powi(*e as i32);
                }
                registry::AtomData::Fn { .. } => {
                    return Err(Error::Eval(
                        "cannot evaluate opaque function symbol numerically".into(),
                    ))
                }
            }
        }
        acc += t;
    }
    Ok(acc)
}

fn rat_to_f64(c: &Rat) -> f64 {
    let n = c.numer().to_f64().unwrap_or_else(|| {
        // Extremely large intermediate; fall back through string parse.
        c.numer().to_string().parse().unwrap()
    });
    let d = c.denom().to_f64().unwrap();
    n / d
}

pub fn bigint_to_f64(b: &BigInt) -> f64 {
    b.to_f64().unwrap()
}

impl Add for Expr {
    type Output = Expr;
    fn add(self, rhs: Expr) -> Expr {
        // num1/den1 + num2/den2 over the product denominator; reduction
        // restores lowest terms.
        let num = self.num.mul(&rhs.den).add(&rhs.num.mul(&self.den));
        let den = self.den.mul(&rhs.den);
        Expr::reduced(num, den)
    }
}

impl Sub for Expr {
    type Output = Expr;
    fn sub(self, rhs: Expr) -> Expr {
        self + (-rhs)
    }
}

impl Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr { num: self.num.neg(), den: self.den }
    }
}

impl Mul for Expr {
    type Output = Expr;
    fn mul(self, rhs: Expr) -> Expr {
        Expr::reduced(self.num.mul(&rhs.num), self.den.mul(&rhs.den))
    }
}

impl Div for Expr {
    type Output = Expr;
    fn div(self, rhs: Expr) -> Expr {
        assert!(!rhs.is_zero(), "division by zero expression");
        Expr::reduced(self.num.mul(&rhs.den), self.den.mul(&rhs.num))
    }
}

impl std::iter::Sum for Expr {
    fn sum<I: Iterator<Item = Expr>>(iter: I) -> Expr {
        iter.fold(Expr::zero(), |a, b| a + b)
    }
}
