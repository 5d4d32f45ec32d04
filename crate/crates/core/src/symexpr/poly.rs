//! Sparse multivariate polynomials with exact rational coefficients over
//! interned atoms, ordered by graded lexicographic order on the global
//! registry. Canonical form: terms sorted descending, no zero coefficients.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use num::{BigInt, BigRational, One, Signed, Zero};

use super::registry::AtomId;

pub type Rat = BigRational;

pub fn rat(n: i64, d: i64) -> Rat {
    Rat::new(BigInt::from(n), BigInt::from(d))
}

/// Product of atom powers; exponents are positive, atoms sorted ascending.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Default)]
pub struct Monomial(pub Vec<(AtomId, u32)>);

impl Monomial {
    pub fn one() -> Self {
        Monomial(Vec::new())
    }

    pub fn atom(a: AtomId) -> Self {
        Monomial(vec![(a, 1)])
    }

    pub fn is_one(&self) -> bool {
        self.0.is_empty()
    }

    pub fn degree(&self) -> u64 {
        self.0.iter().map(|(_, e)| *e as u64).sum()
    }

    pub fn exponent(&self, a: AtomId) -> u32 {
        self.0
            .iter()
            .find(|(b, _)| *b == a)
            .map(|(_, e)| *e)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        let mut out = Vec::with_capacity(self.0.len() + other.0.len());
        let (mut i, mut j) = (0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].0.cmp(&other.0[j].0) {
                Ordering::Less => {
                    out.push(self.0[i]);
                    i += 1;
                }
                Ordering::Greater => {
                    out.push(other.0[j]);
                    j += 1;
                }
                Ordering::Equal => {
                    out.push((self.0[i].0, self.0[i].1 + other.0[j].1));
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        out.extend_from_slice(&other.0[j..]);
        Monomial(out)
    }

    /// Exact monomial quotient, `None` if not divisible.
    pub fn div(&self, other: &Monomial) -> Option<Monomial> {
        let mut out = Vec::with_capacity(self.0.len());
        let mut i = 0;
        for (a, e) in &other.0 {
            loop {
                if i >= self.0.len() {
                    return None;
                }
                let (b, f) = self.0[i];
                match b.cmp(a) {
                    Ordering::Less => {
                        out.push((b, f));
                        i += 1;
                    }
                    Ordering::Equal => {
                        if f < *e {
                            return None;
                        }
                        if f > *e {
                            out.push((b, f - e));
                        }
                        i += 1;
                        break;
                    }
                    Ordering::Greater => return None,
                }
            }
        }
        out.extend_from_slice(&self.0[i..]);
        Some(Monomial(out))
    }

    /// Graded lexicographic order: compare total degree first, then the
    /// exponent vector with earlier-registered atoms more significant.
    pub fn cmp_grlex(&self, other: &Monomial) -> Ordering {
        match self.degree().cmp(&other.degree()) {
            Ordering::Equal => {}
            o => return o,
        }
        let (mut i, mut j) = (0, 0);
        loop {
            match (self.0.get(i), other.0.get(j)) {
                (None, None) => return Ordering::Equal,
                // Remaining factors on one side only: that side has positive
                // exponent on a later atom; with equal degrees the side that
                // exhausts earlier atoms first is smaller in lex.
                (None, Some(_)) => return Ordering::Less,
                (Some(_), None) => return Ordering::Greater,
                (Some((a, e)), Some((b, f))) => match a.cmp(b) {
                    Ordering::Less => return Ordering::Greater,
                    Ordering::Greater => return Ordering::Less,
                    Ordering::Equal => match e.cmp(f) {
                        Ordering::Equal => {
                            i += 1;
                            j += 1;
                        }
                        o => return o,
                    },
                },
            }
        }
    }
}

/// Canonical sparse polynomial: term list sorted grlex-descending.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct Poly {
    pub terms: Vec<(Monomial, Rat)>,
}

impl Poly {
    pub fn zero() -> Self {
        Poly { terms: Vec::new() }
    }

    pub fn one() -> Self {
        Poly::constant(Rat::one())
    }

    pub fn constant(c: Rat) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly {
                terms: vec![(Monomial::one(), c)],
            }
        }
    }

    pub fn atom(a: AtomId) -> Self {
        Poly {
            terms: vec![(Monomial::atom(a), Rat::one())],
        }
    }

    pub fn term(m: Monomial, c: Rat) -> Self {
        if c.is_zero() {
            Poly::zero()
        } else {
            Poly { terms: vec![(m, c)] }
        }
    }

    pub fn from_terms(terms: impl IntoIterator<Item = (Monomial, Rat)>) -> Self {
        let mut map: BTreeMap<MonoKey, Rat> = BTreeMap::new();
        for (m, c) in terms {
            if c.is_zero() {
                continue;
            }
            let e = map.entry(MonoKey(m)).or_insert_with(Rat::zero);
            *e += c;
        }
        let mut out: Vec<(Monomial, Rat)> = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (k.0, c))
            .collect();
        out.reverse();
        Poly { terms: out }
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    pub fn as_constant(&self) -> Option<Rat> {
        if self.terms.is_empty() {
            Some(Rat::zero())
        } else if self.terms.len() == 1 && self.terms[0].0.is_one() {
            Some(self.terms[0].1.clone())
        } else {
            None
        }
    }

    pub fn leading(&self) -> Option<&(Monomial, Rat)> {
        self.terms.first()
    }

    pub fn degree(&self) -> u64 {
        self.terms.first().map(|(m, _)| m.degree()).unwrap_or(0)
    }

    pub fn add(&self, other: &Poly) -> Poly {
        let mut out = Vec::with_capacity(self.terms.len() + other.terms.len());
        let (mut i, mut j) = (0, 0);
        while i < self.terms.len() && j < other.terms.len() {
            match self.terms[i].0.cmp_grlex(&other.terms[j].0) {
                Ordering::Greater => {
                    out.push(self.terms[i].clone());
                    i += 1;
                }
                Ordering::Less => {
                    out.push(other.terms[j].clone());
                    j += 1;
                }
                Ordering::Equal => {
                    let c = &self.terms[i].1 + &other.terms[j].1;
                    if !c.is_zero() {
                        out.push((self.terms[i].0.clone(), c));
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        out.extend_from_slice(&self.terms[i..]);
        out.extend_from_slice(&other.terms[j..]);
        Poly { terms: out }
    }

    pub fn neg(&self) -> Poly {
        Poly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn sub(&self, other: &Poly) -> Poly {
        self.add(&other.neg())
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.is_zero() || other.is_zero() {
            return Poly::zero();
        }
        let mut map: BTreeMap<MonoKey, Rat> = BTreeMap::new();
        for (m1, c1) in &self.terms {
            for (m2, c2) in &other.terms {
                let m = m1.mul(m2);
                let e = map.entry(MonoKey(m)).or_insert_with(Rat::zero);
                *e += c1 * c2;
            }
        }
        let mut out: Vec<(Monomial, Rat)> = map
            .into_iter()
            .filter(|(_, c)| !c.is_zero())
            .map(|(k, c)| (k.0, c))
            .collect();
        out.reverse();
        Poly { terms: out }
    }

    pub fn scale(&self, c: &Rat) -> Poly {
        if c.is_zero() {
            return Poly::zero();
        }
        Poly {
            terms: self.terms.iter().map(|(m, k)| (m.clone(), k * c)).collect(),
        }
    }

    pub fn mul_monomial(&self, m: &Monomial) -> Poly {
        Poly {
            terms: self
                .terms
                .iter()
                .map(|(n, c)| (n.mul(m), c.clone()))
                .collect(),
        }
    }

    pub fn pow(&self, e: u32) -> Poly {
        let mut acc = Poly::one();
        let mut base = self.clone();
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&base);
            }
            e >>= 1;
            if e > 0 {
                base = base.mul(&base);
            }
        }
        acc
    }

    /// Exact multivariate division; `None` if the remainder is nonzero.
    pub fn div_exact(&self, d: &Poly) -> Option<Poly> {
        assert!(!d.is_zero(), "division by zero polynomial");
        let mut rem = self.clone();
        let mut q: Vec<(Monomial, Rat)> = Vec::new();
        let (dm, dc) = d.leading().unwrap();
        while !rem.is_zero() {
            let (rm, rc) = rem.leading().unwrap();
            let m = rm.div(dm)?;
            let c = rc / dc;
            rem = rem.sub(&d.mul(&Poly::term(m.clone(), c.clone())));
            q.push((m, c));
        }
        Some(Poly::from_terms(q))
    }

    pub fn atoms(&self) -> Vec<AtomId> {
        let mut set: Vec<AtomId> = Vec::new();
        for (m, _) in &self.terms {
            for (a, _) in &m.0 {
                if !set.contains(a) {
                    set.push(*a);
                }
            }
        }
        set.sort_unstable();
        set
    }

    pub fn contains_atom(&self, a: AtomId) -> bool {
        self.terms.iter().any(|(m, _)| m.exponent(a) > 0)
    }

    pub fn max_exponent(&self, a: AtomId) -> u32 {
        self.terms.iter().map(|(m, _)| m.exponent(a)).max().unwrap_or(0)
    }

    /// Rational content together with the primitive part (integer coefficients,
    /// gcd 1, positive leading coefficient).
    pub fn content_and_primitive(&self) -> (Rat, Poly) {
        if self.is_zero() {
            return (Rat::zero(), Poly::zero());
        }
        let mut num_gcd = BigInt::zero();
        let mut den_lcm = BigInt::one();
        for (_, c) in &self.terms {
            num_gcd = num::integer::gcd(num_gcd, c.numer().abs());
            den_lcm = num::integer::lcm(den_lcm, c.denom().clone());
        }
        let mut content = Rat::new(num_gcd, den_lcm);
        if self.terms[0].1.is_negative() {
            content = -content;
        }
        let prim = self.scale(&content.recip());
        (content, prim)
    }

    /// Coefficient vector with respect to one atom: dense by exponent, each
    /// coefficient a polynomial in the remaining atoms.
    pub fn to_univariate(&self, a: AtomId) -> Vec<Poly> {
        let deg = self.max_exponent(a) as usize;
        let mut out = vec![Poly::zero(); deg + 1];
        for (m, c) in &self.terms {
            let e = m.exponent(a) as usize;
            let rest = Monomial(
                m.0.iter()
                    .filter(|(b, _)| *b != a)
                    .cloned()
                    .collect(),
            );
            out[e] = out[e].add(&Poly::term(rest, c.clone()));
        }
        out
    }

    pub fn from_univariate(coeffs: &[Poly], a: AtomId) -> Poly {
        let mut acc = Poly::zero();
        for (e, c) in coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            let m = if e == 0 {
                Monomial::one()
            } else {
                Monomial(vec![(a, e as u32)])
            };
            acc = acc.add(&c.mul_monomial(&m));
        }
        acc
    }
}

/// Ordering key wrapper so `BTreeMap` sorts monomials in grlex order.
#[derive(PartialEq, Eq)]
struct MonoKey(Monomial);

impl PartialOrd for MonoKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MonoKey {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.cmp_grlex(&other.0)
    }
}

// ---------------------------------------------------------------------------
// Multivariate gcd via primitive pseudo-remainder sequences.
// ---------------------------------------------------------------------------

fn univ_degree(u: &[Poly]) -> usize {
    u.iter().rposition(|c| !c.is_zero()).unwrap_or(0)
}

fn univ_scale(u: &[Poly], f: &Poly) -> Vec<Poly> {
    u.iter().map(|c| c.mul(f)).collect()
}

fn univ_sub(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let n = a.len().max(b.len());
    (0..n)
        .map(|i| {
            let x = a.get(i).cloned().unwrap_or_else(Poly::zero);
            let y = b.get(i).cloned().unwrap_or_else(Poly::zero);
            x.sub(&y)
        })
        .collect()
}

fn univ_is_zero(u: &[Poly]) -> bool {
    u.iter().all(|c| c.is_zero())
}

/// Pseudo-remainder of `a` by `b` (as univariate with polynomial coefficients).
fn pseudo_rem(a: &[Poly], b: &[Poly]) -> Vec<Poly> {
    let db = univ_degree(b);
    let lb = b[db].clone();
    let mut r: Vec<Poly> = a.to_vec();
    loop {
        if univ_is_zero(&r) {
            return r;
        }
        let dr = univ_degree(&r);
        if dr < db {
            return r;
        }
        // r = lb * r - lead(r) * x^(dr-db) * b
        let lead = r[dr].clone();
        let mut shifted = vec![Poly::zero(); dr - db];
        shifted.extend(b.iter().cloned());
        r = univ_sub(&univ_scale(&r, &lb), &univ_scale(&shifted, &lead));
        debug_assert!(univ_is_zero(&r) || univ_degree(&r) < dr);
    }
}

fn vec_gcd(polys: &[Poly]) -> Poly {
    let mut acc = Poly::zero();
    for p in polys {
        if p.is_zero() {
            continue;
        }
        acc = if acc.is_zero() { p.clone() } else { gcd(&acc, p) };
        if acc.is_constant() {
            return Poly::one();
        }
    }
    if acc.is_zero() {
        Poly::zero()
    } else {
        acc
    }
}

/// Gcd of two polynomials, returned primitive with positive leading
/// coefficient. Constants have gcd 1.
///
/// Strategy: divisibility shortcuts, then the evaluation-based heuristic,
/// falling back to primitive pseudo-remainder sequences only when the
/// heuristic gives up.
pub fn gcd(a: &Poly, b: &Poly) -> Poly {
    if a.is_zero() {
        return b.content_and_primitive().1;
    }
    if b.is_zero() {
        return a.content_and_primitive().1;
    }
    if a.is_constant() || b.is_constant() {
        return Poly::one();
    }
    let pa = a.content_and_primitive().1;
    let pb = b.content_and_primitive().1;
    if pa == pb {
        return pa;
    }
    // split off the common monomial factor first
    let (ma, pa) = monomial_content(&pa);
    let (mb, pb) = monomial_content(&pb);
    let common = mono_min(&ma, &mb);
    let rest = gcd_primitive(&pa, &pb);
    if common.is_one() {
        rest
    } else {
        rest.mul_monomial(&common)
    }
}

/// Gcd of two primitive polynomials with trivial monomial content.
fn gcd_primitive(pa: &Poly, pb: &Poly) -> Poly {
    if pa == pb {
        return pa.clone();
    }
    if pa.is_constant() || pb.is_constant() {
        return Poly::one();
    }
    // cheap certificate that the gcd is constant
    if modular_coprime(pa, pb) {
        return Poly::one();
    }
    if pb.div_exact(pa).is_some() {
        return pa.clone();
    }
    if pa.div_exact(pb).is_some() {
        return pb.clone();
    }
    // Modular interpolation finds (and certifies by division) a common
    // divisor; the remaining gcd comes from recursing on the quotients.
    if let Some(g) = super::modgcd::certified_common_divisor(pa, pb) {
        let qa = pa.div_exact(&g).expect("certified divisor").content_and_primitive().1;
        let qb = pb.div_exact(&g).expect("certified divisor").content_and_primitive().1;
        return g.mul(&gcd_primitive(&qa, &qb)).content_and_primitive().1;
    }
    // Pull common factors out via a square-free split of the structurally
    // smaller side (denominators are small and highly structured), then
    // recurse on what is left.
    let (small, big, small_is_a) = if poly_size(pa) <= poly_size(pb) {
        (pa, pb, true)
    } else {
        (pb, pa, false)
    };
    let facs = if poly_size(small) <= 5_000 {
        squarefree_split(small)
    } else {
        Vec::new()
    };
    if facs.len() > 1 || facs.first().map(|(_, m)| *m > 1).unwrap_or(false) {
        let mut g = Poly::one();
        let mut rs = small.clone();
        let mut rb = big.clone();
        for (f, ms) in &facs {
            if f.is_constant() {
                continue;
            }
            let mb = divide_out(&mut rb, f);
            let k = (*ms).min(mb);
            if k > 0 {
                divide_out_upto(&mut rs, f, k);
                // put back the excess pulled from the big side
                for _ in k..mb {
                    rb = rb.mul(f);
                }
                g = g.mul(&f.pow(k));
            } else {
                for _ in 0..mb {
                    rb = rb.mul(f);
                }
            }
        }
        if !g.is_constant() {
            let (ra, rbb) = if small_is_a { (rs, rb) } else { (rb, rs) };
            let rest = gcd_primitive(
                &ra.content_and_primitive().1,
                &rbb.content_and_primitive().1,
            );
            return g.mul(&rest).content_and_primitive().1;
        }
    }
    if let Some(g) = heuristic_gcd(pa, pb) {
        return g;
    }
    gcd_prs(pa, pb)
}

/// Gcd avoiding the square-free factor extraction (used inside the
/// extraction itself to keep the recursion well-founded).
fn gcd_no_factor(pa: &Poly, pb: &Poly) -> Poly {
    let (_, pa) = pa.content_and_primitive();
    let (_, pb) = pb.content_and_primitive();
    if pa == pb {
        return pa;
    }
    if pa.is_constant() || pb.is_constant() {
        return Poly::one();
    }
    let (ma, qa) = monomial_content(&pa);
    let (mb, qb) = monomial_content(&pb);
    let common = mono_min(&ma, &mb);
    let inner = if modular_coprime(&qa, &qb) {
        Poly::one()
    } else if qb.div_exact(&qa).is_some() {
        qa.clone()
    } else if qa.div_exact(&qb).is_some() {
        qb.clone()
    } else if let Some(g) = super::modgcd::certified_common_divisor(&qa, &qb) {
        let ra = qa.div_exact(&g).expect("certified divisor").content_and_primitive().1;
        let rb = qb.div_exact(&g).expect("certified divisor").content_and_primitive().1;
        g.mul(&gcd_no_factor(&ra, &rb)).content_and_primitive().1
    } else if let Some(g) = heuristic_gcd(&qa, &qb) {
        g
    } else {
        gcd_prs(&qa, &qb)
    };
    inner.mul_monomial(&common)
}

fn poly_size(p: &Poly) -> u64 {
    p.terms.len() as u64 * (1 + p.degree())
}

/// Divide `f` out of `p` as many times as it divides exactly; returns the
/// multiplicity.
fn divide_out(p: &mut Poly, f: &Poly) -> u32 {
    let mut m = 0;
    while let Some(q) = p.div_exact(f) {
        *p = q;
        m += 1;
        if m > 512 {
            break;
        }
    }
    m
}

fn divide_out_upto(p: &mut Poly, f: &Poly, k: u32) {
    for _ in 0..k {
        match p.div_exact(f) {
            Some(q) => *p = q,
            None => break,
        }
    }
}

/// Formal derivative of `p` with respect to one atom, treating all atoms as
/// independent indeterminates (no chain rules; this is factor bookkeeping,
/// not calculus).
fn formal_diff(p: &Poly, v: AtomId) -> Poly {
    let terms = p.terms.iter().filter_map(|(m, c)| {
        let e = m.exponent(v);
        if e == 0 {
            return None;
        }
        let mut rest: Vec<(AtomId, u32)> = Vec::with_capacity(m.0.len());
        for (a, k) in &m.0 {
            if *a == v {
                if *k > 1 {
                    rest.push((*a, *k - 1));
                }
            } else {
                rest.push((*a, *k));
            }
        }
        Some((Monomial(rest), c * Rat::from_integer(BigInt::from(e))))
    });
    Poly::from_terms(terms)
}

/// Partial square-free splitting: factors with multiplicities whose product
/// is `p` (up to content). Factors need not be irreducible; multiplicities
/// are exact for the returned factors.
fn squarefree_split(p: &Poly) -> Vec<(Poly, u32)> {
    let mut out: Vec<(Poly, u32)> = Vec::new();
    let mut rest = p.content_and_primitive().1;
    let mut guard = 0;
    while !rest.is_constant() {
        guard += 1;
        if guard > 64 {
            out.push((rest, 1));
            return out;
        }
        let v = *rest.atoms().first().expect("non-constant poly has atoms");
        let d = formal_diff(&rest, v);
        let g = gcd_no_factor(&rest, &d);
        if g.is_constant() {
            out.push((rest, 1));
            return out;
        }
        let w = match rest.div_exact(&g) {
            Some(w) => w.content_and_primitive().1,
            None => {
                out.push((rest, 1));
                return out;
            }
        };
        if w.is_constant() {
            out.push((rest, 1));
            return out;
        }
        let m = divide_out(&mut rest, &w);
        out.push((w, m));
        rest = rest.content_and_primitive().1;
    }
    out
}

/// Monomial content (atom-wise minimum exponent) and the cofactor.
fn monomial_content(p: &Poly) -> (Monomial, Poly) {
    let mut acc: Option<Vec<(AtomId, u32)>> = None;
    for (m, _) in &p.terms {
        acc = Some(match acc {
            None => m.0.clone(),
            Some(prev) => {
                let mut out = Vec::with_capacity(prev.len());
                for (a, e) in &prev {
                    let f = m.exponent(*a);
                    if f > 0 {
                        out.push((*a, (*e).min(f)));
                    }
                }
                out
            }
        });
        if acc.as_ref().map(|v| v.is_empty()).unwrap_or(false) {
            break;
        }
    }
    let content = Monomial(acc.unwrap_or_default());
    if content.is_one() {
        return (content, p.clone());
    }
    let cof = Poly {
        terms: p
            .terms
            .iter()
            .map(|(m, c)| (m.div(&content).expect("content divides"), c.clone()))
            .collect(),
    };
    (content, cof)
}

fn mono_min(a: &Monomial, b: &Monomial) -> Monomial {
    let mut out = Vec::new();
    for (atom, e) in &a.0 {
        let f = b.exponent(*atom);
        if f > 0 {
            out.push((*atom, (*e).min(f)));
        }
    }
    Monomial(out)
}

// ---------------------------------------------------------------------------
// Modular coprimality certificate: for each variable, evaluate all other
// atoms at pseudo-random residues mod a word-size prime and take the gcd of
// the univariate images. If every image gcd is constant (with the image
// degrees matching the true degrees), the polynomial gcd is constant.
// ---------------------------------------------------------------------------

const MODP: u64 = 2_147_483_647; // 2^31 - 1

fn pow_mod(mut b: u64, mut e: u64) -> u64 {
    let mut acc = 1u64;
    b %= MODP;
    while e > 0 {
        if e & 1 == 1 {
            acc = (acc as u128 * b as u128 % MODP as u128) as u64;
        }
        b = (b as u128 * b as u128 % MODP as u128) as u64;
        e >>= 1;
    }
    acc
}

fn coeff_mod(c: &Rat) -> u64 {
    // primitive polynomials have integer coefficients
    debug_assert!(c.denom().is_one());
    let m = num::Integer::mod_floor(c.numer(), &BigInt::from(MODP));
    let (_, digits) = m.to_u64_digits();
    digits.first().copied().unwrap_or(0)
}

/// Pseudo-random nonzero residue for (atom, trial), deterministic.
fn residue(a: AtomId, trial: u64) -> u64 {
    let mut x = (u64::from(a.0) + 1)
        .wrapping_mul(0x9e3779b97f4a7c15)
        .wrapping_add(trial.wrapping_mul(0xbf58476d1ce4e5b9));
    x ^= x >> 31;
    x = x.wrapping_mul(0x94d049bb133111eb);
    x ^= x >> 29;
    x % (MODP - 2) + 1
}

/// Univariate image of `p` in the variable `v` with all other atoms fixed.
fn univ_image_mod(p: &Poly, v: AtomId, trial: u64) -> Vec<u64> {
    let deg = p.max_exponent(v) as usize;
    let mut out = vec![0u64; deg + 1];
    for (m, c) in &p.terms {
        let mut val = coeff_mod(c);
        let mut e_v = 0usize;
        for (a, e) in &m.0 {
            if *a == v {
                e_v = *e as usize;
            } else {
                val = (val as u128 * pow_mod(residue(*a, trial), u64::from(*e)) as u128
                    % MODP as u128) as u64;
            }
        }
        out[e_v] = ((out[e_v] as u128 + val as u128) % MODP as u128) as u64;
    }
    out
}

fn univ_deg(u: &[u64]) -> usize {
    u.iter().rposition(|x| *x != 0).unwrap_or(0)
}

fn univ_gcd_mod(mut a: Vec<u64>, mut b: Vec<u64>) -> Vec<u64> {
    loop {
        if b.iter().all(|x| *x == 0) {
            return a;
        }
        let db = univ_deg(&b);
        let lb_inv = pow_mod(b[db], MODP - 2);
        // a mod b
        loop {
            let da = univ_deg(&a);
            if a.iter().all(|x| *x == 0) || da < db {
                break;
            }
            let f = (a[da] as u128 * lb_inv as u128 % MODP as u128) as u64;
            for i in 0..=db {
                let sub = (f as u128 * b[i] as u128 % MODP as u128) as u64;
                let idx = da - db + i;
                a[idx] = ((a[idx] as u128 + (MODP - sub) as u128) % MODP as u128) as u64;
            }
        }
        std::mem::swap(&mut a, &mut b);
    }
}

fn modular_coprime(a: &Poly, b: &Poly) -> bool {
    let mut atoms = a.atoms();
    atoms.extend(b.atoms());
    atoms.sort_unstable();
    atoms.dedup();
    for v in atoms {
        let da = a.max_exponent(v) as usize;
        let db = b.max_exponent(v) as usize;
        if da == 0 || db == 0 {
            continue; // the gcd cannot contain v
        }
        let mut certified = false;
        for trial in 0..4u64 {
            let ua = univ_image_mod(a, v, trial);
            let ub = univ_image_mod(b, v, trial);
            if univ_deg(&ua) != da || univ_deg(&ub) != db {
                continue; // unlucky evaluation, degree dropped
            }
            let g = univ_gcd_mod(ua, ub);
            if univ_deg(&g) == 0 && g.iter().any(|x| *x != 0) {
                certified = true;
                break;
            } else {
                return false; // plausible common factor involving v
            }
        }
        if !certified {
            return false;
        }
    }
    true
}

fn gcd_prs(a: &Poly, b: &Poly) -> Poly {
    // Main variable: smallest atom present in either operand.
    let main = {
        let mut atoms = a.atoms();
        atoms.extend(b.atoms());
        *atoms.iter().min().unwrap()
    };
    let ua = a.to_univariate(main);
    let ub = b.to_univariate(main);
    let ca = vec_gcd(&ua);
    let cb = vec_gcd(&ub);
    let pa: Vec<Poly> = ua.iter().map(|c| c.div_exact(&ca).expect("content divides")).collect();
    let pb: Vec<Poly> = ub.iter().map(|c| c.div_exact(&cb).expect("content divides")).collect();
    let cont = gcd(&ca, &cb);

    let (mut f, mut g) = if univ_degree(&pa) >= univ_degree(&pb) {
        (pa, pb)
    } else {
        (pb, pa)
    };
    let prim = loop {
        let r = pseudo_rem(&f, &g);
        if univ_is_zero(&r) {
            break g;
        }
        if univ_degree(&r) == 0 {
            break vec![Poly::one()];
        }
        let rc = vec_gcd(&r);
        let rp: Vec<Poly> = r
            .iter()
            .map(|c| c.div_exact(&rc).expect("content divides"))
            .collect();
        f = g;
        g = rp;
    };
    // Make the univariate gcd primitive in its coefficients before recombining.
    let pc = vec_gcd(&prim);
    let prim: Vec<Poly> = prim
        .iter()
        .map(|c| c.div_exact(&pc).expect("content divides"))
        .collect();
    let combined = cont.mul(&Poly::from_univariate(&prim, main));
    combined.content_and_primitive().1
}

// ---------------------------------------------------------------------------
// Heuristic gcd: evaluate one variable at a large integer, recurse, and lift
// the result back by xi-adic expansion; verified by exact division.
// ---------------------------------------------------------------------------

fn height(p: &Poly) -> BigInt {
    p.terms
        .iter()
        .map(|(_, c)| c.numer().abs())
        .max()
        .unwrap_or_else(BigInt::zero)
}

/// Substitute `v := xi` (an integer) into a primitive integer polynomial.
fn eval_atom(p: &Poly, v: AtomId, xi: &BigInt) -> Poly {
    let terms = p.terms.iter().map(|(m, c)| {
        let e = m.exponent(v);
        let rest = Monomial(m.0.iter().filter(|(a, _)| *a != v).cloned().collect());
        let factor = num::pow::pow(xi.clone(), e as usize);
        (rest, c * Rat::from_integer(factor))
    });
    Poly::from_terms(terms)
}

/// Coefficient-wise symmetric remainder mod `xi`, mapping into (-xi/2, xi/2].
fn symmetric_mod(p: &Poly, xi: &BigInt) -> Poly {
    let half = xi / BigInt::from(2);
    let terms = p.terms.iter().map(|(m, c)| {
        let mut r = num::Integer::mod_floor(c.numer(), xi);
        if r > half {
            r -= xi;
        }
        (m.clone(), Rat::from_integer(r))
    });
    Poly::from_terms(terms)
}

fn div_coeffs(p: &Poly, xi: &BigInt) -> Option<Poly> {
    let mut terms = Vec::with_capacity(p.terms.len());
    for (m, c) in &p.terms {
        let (q, r) = num::Integer::div_rem(c.numer(), xi);
        if !r.is_zero() {
            return None;
        }
        terms.push((m.clone(), Rat::from_integer(q)));
    }
    Some(Poly { terms })
}

/// Lift an evaluated gcd back to a polynomial in `v` by xi-adic expansion.
fn lift(g_eval: &Poly, v: AtomId, xi: &BigInt) -> Option<Poly> {
    let mut acc = Poly::zero();
    let mut rest = g_eval.clone();
    let mut e: u32 = 0;
    while !rest.is_zero() {
        if e > 4096 {
            return None;
        }
        let c = symmetric_mod(&rest, xi);
        if !c.is_zero() {
            let m = Monomial(vec![(v, e)]);
            let shifted = if e == 0 { c.clone() } else { c.mul_monomial(&m) };
            acc = acc.add(&shifted);
        }
        rest = div_coeffs(&rest.sub(&c), xi)?;
        e += 1;
    }
    Some(acc)
}

/// Evaluation-based gcd of two primitive integer polynomials; `None` when it
/// fails to certify a result (caller falls back to the remainder sequence).
fn heuristic_gcd(a: &Poly, b: &Poly) -> Option<Poly> {
    fn inner(a: &Poly, b: &Poly, depth: u32) -> Option<Poly> {
        if depth > 16 {
            return None;
        }
        if a.is_zero() {
            return Some(b.content_and_primitive().1);
        }
        if b.is_zero() {
            return Some(a.content_and_primitive().1);
        }
        if let (Some(ca), Some(cb)) = (a.as_constant(), b.as_constant()) {
            let g = num::integer::gcd(ca.numer().abs(), cb.numer().abs());
            return Some(Poly::constant(Rat::from_integer(g)));
        }
        let v = {
            let mut atoms = a.atoms();
            atoms.extend(b.atoms());
            *atoms.iter().min().unwrap()
        };
        let hmin = height(a).min(height(b));
        let mut xi = BigInt::from(2) * hmin + BigInt::from(29);
        for _ in 0..6 {
            // abort when the xi-adic sizes would explode
            if xi.bits() * a.degree().max(b.degree()) > 16_000 {
                return None;
            }
            let ea = eval_atom(a, v, &xi);
            let eb = eval_atom(b, v, &xi);
            if !ea.is_zero() && !eb.is_zero() {
                if let Some(ge) = inner(&ea, &eb, depth + 1) {
                    if let Some(g0) = lift(&ge, v, &xi) {
                        let g = g0.content_and_primitive().1;
                        if !g.is_zero()
                            && a.div_exact(&g).is_some()
                            && b.div_exact(&g).is_some()
                        {
                            return Some(g);
                        }
                    }
                }
            }
            // grow the evaluation point and retry
            xi = &xi * BigInt::from(73794) / BigInt::from(27011) + BigInt::from(37);
        }
        None
    }
    inner(a, b, 0)
}
