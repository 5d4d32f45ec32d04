//! Modular multivariate gcd: dense interpolation of univariate gcd images
//! over the prime field F_p with p = 2^61 - 1 (Brown's algorithm), followed
//! by a rational reconstruction that is certified by exact trial division
//! over the integers. The caller treats a returned polynomial as a verified
//! common divisor; completeness is restored by recursing on the quotients.

use num::{BigInt, Integer, One, Signed, ToPrimitive};

use super::poly::{Monomial, Poly, Rat};
use super::registry::AtomId;

const P: u64 = 2_305_843_009_213_693_951; // 2^61 - 1

fn addm(a: u64, b: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % P as u128) as u64
}

fn subm(a: u64, b: u64) -> u64 {
    addm(a, P - b % P)
}

fn mulm(a: u64, b: u64) -> u64 {
    ((a as u128 * b as u128) % P as u128) as u64
}

fn powm(mut a: u64, mut e: u64) -> u64 {
    let mut r = 1u64;
    a %= P;
    while e > 0 {
        if e & 1 == 1 {
            r = mulm(r, a);
        }
        a = mulm(a, a);
        e >>= 1;
    }
    r
}

fn invm(a: u64) -> u64 {
    debug_assert!(a % P != 0);
    powm(a, P - 2)
}

/// Sparse polynomial over F_p, terms grlex-descending with nonzero coeffs.
#[derive(Clone, Debug, PartialEq)]
struct MPoly {
    terms: Vec<(Monomial, u64)>,
}

impl MPoly {
    fn zero() -> Self {
        MPoly { terms: Vec::new() }
    }

    fn constant(c: u64) -> Self {
        let c = c % P;
        if c == 0 {
            MPoly::zero()
        } else {
            MPoly {
                terms: vec![(Monomial::one(), c)],
            }
        }
    }

    fn one() -> Self {
        MPoly::constant(1)
    }

    fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    fn is_constant(&self) -> bool {
        self.terms.is_empty() || (self.terms.len() == 1 && self.terms[0].0.is_one())
    }

    fn from_terms(terms: impl IntoIterator<Item = (Monomial, u64)>) -> Self {
        let mut items: Vec<(Monomial, u64)> = Vec::new();
        for (m, c) in terms {
            let c = c % P;
            if c == 0 {
                continue;
            }
            items.push((m, c));
        }
        items.sort_by(|a, b| b.0.cmp_grlex(&a.0));
        let mut out: Vec<(Monomial, u64)> = Vec::with_capacity(items.len());
        for (m, c) in items {
            match out.last_mut() {
                Some((lm, lc)) if *lm == m => *lc = addm(*lc, c),
                _ => out.push((m, c)),
            }
        }
        out.retain(|(_, c)| *c != 0);
        MPoly { terms: out }
    }

    /// Reduce an integer-coefficient polynomial mod p; `None` when a
    /// coefficient is not an integer.
    fn from_int_poly(p: &Poly) -> Option<MPoly> {
        let mut terms = Vec::with_capacity(p.terms.len());
        for (m, c) in &p.terms {
            if !c.denom().is_one() {
                return None;
            }
            let r = c.numer().mod_floor(&BigInt::from(P)).to_u64()?;
            terms.push((m.clone(), r));
        }
        Some(MPoly::from_terms(terms))
    }

    fn deg_in(&self, v: AtomId) -> u32 {
        self.terms.iter().map(|(m, _)| m.exponent(v)).max().unwrap_or(0)
    }

    fn vars(&self) -> Vec<AtomId> {
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

    fn sub(&self, o: &MPoly) -> MPoly {
        MPoly::from_terms(
            self.terms
                .iter()
                .cloned()
                .chain(o.terms.iter().map(|(m, c)| (m.clone(), P - c))),
        )
    }

    fn scale(&self, c: u64) -> MPoly {
        MPoly::from_terms(self.terms.iter().map(|(m, k)| (m.clone(), mulm(*k, c))))
    }

    fn mul(&self, o: &MPoly) -> MPoly {
        let mut terms = Vec::with_capacity(self.terms.len() * o.terms.len());
        for (ma, ca) in &self.terms {
            for (mb, cb) in &o.terms {
                terms.push((ma.mul(mb), mulm(*ca, *cb)));
            }
        }
        MPoly::from_terms(terms)
    }

    /// Substitute one variable by a scalar.
    fn eval(&self, v: AtomId, t: u64) -> MPoly {
        MPoly::from_terms(self.terms.iter().map(|(m, c)| {
            let e = m.exponent(v);
            if e == 0 {
                (m.clone(), *c)
            } else {
                let rest = Monomial(m.0.iter().filter(|(a, _)| *a != v).cloned().collect());
                (rest, mulm(*c, powm(t, e as u64)))
            }
        }))
    }

    /// Dense univariate image in `main` after substituting `assign`;
    /// `None` when the degree in `main` drops (bad evaluation point).
    fn eval_to_univ(&self, main: AtomId, assign: &[(AtomId, u64)]) -> Option<Vec<u64>> {
        let d = self.deg_in(main) as usize;
        let mut out = vec![0u64; d + 1];
        for (m, c) in &self.terms {
            let mut v = *c;
            let mut e_main = 0usize;
            for (a, e) in &m.0 {
                if *a == main {
                    e_main = *e as usize;
                    continue;
                }
                let t = assign.iter().find(|(b, _)| b == a).map(|(_, t)| *t)?;
                v = mulm(v, powm(t, *e as u64));
            }
            out[e_main] = addm(out[e_main], v);
        }
        if *out.last().unwrap() == 0 {
            return None;
        }
        Some(out)
    }

    /// Coefficient polynomials by power of `v`, dense.
    fn coeffs_in(&self, v: AtomId) -> Vec<MPoly> {
        let d = self.deg_in(v) as usize;
        let mut out: Vec<Vec<(Monomial, u64)>> = vec![Vec::new(); d + 1];
        for (m, c) in &self.terms {
            let e = m.exponent(v) as usize;
            let rest = Monomial(m.0.iter().filter(|(a, _)| *a != v).cloned().collect());
            out[e].push((rest, *c));
        }
        out.into_iter().map(MPoly::from_terms).collect()
    }

    fn lc_grlex(&self) -> u64 {
        self.terms.first().map(|(_, c)| *c).unwrap_or(0)
    }

    fn monic(&self) -> MPoly {
        if self.is_zero() {
            return MPoly::zero();
        }
        self.scale(invm(self.lc_grlex()))
    }

    /// Exact division; `None` when not divisible.
    fn exact_div(&self, d: &MPoly) -> Option<MPoly> {
        assert!(!d.is_zero());
        let mut rem = self.clone();
        let mut q: Vec<(Monomial, u64)> = Vec::new();
        let (dm, dc) = (&d.terms[0].0, d.terms[0].1);
        let dinv = invm(dc);
        while !rem.is_zero() {
            let (rm, rc) = (&rem.terms[0].0, rem.terms[0].1);
            let m = rm.div(dm)?;
            let c = mulm(rc, dinv);
            let t = MPoly {
                terms: vec![(m.clone(), c)],
            };
            rem = rem.sub(&d.mul(&t));
            q.push((m, c));
            if q.len() > self.terms.len() + 4 * d.terms.len() + 64 {
                return None; // runaway quotient: not an exact division
            }
        }
        Some(MPoly::from_terms(q))
    }
}

/// Monotone supply of evaluation points shared across an attempt so retries
/// use fresh points.
struct Pts {
    next: u64,
}

impl Pts {
    fn new(seed: u64) -> Pts {
        Pts { next: seed }
    }

    fn take(&mut self) -> u64 {
        let t = self.next;
        self.next += 1;
        t % (P - 1) + 1
    }
}

enum IErr {
    /// Evaluation point degenerated; try another point.
    BadPoint,
    /// An image had lower degree than assumed: restart with the new bound.
    Restart(usize),
    /// A certified-good image was constant: the primitive gcd is 1.
    Trivial,
    /// Give up on the modular path.
    Fail,
}

fn univ_gcd_monic(a: &[u64], b: &[u64]) -> Vec<u64> {
    let trim = |v: &mut Vec<u64>| {
        while v.last().map(|x| *x == 0).unwrap_or(false) {
            v.pop();
        }
    };
    let mut r0 = a.to_vec();
    let mut r1 = b.to_vec();
    trim(&mut r0);
    trim(&mut r1);
    while !r1.is_empty() {
        // r0 mod r1
        let lead = invm(*r1.last().unwrap());
        while r0.len() >= r1.len() && !r0.is_empty() {
            let shift = r0.len() - r1.len();
            let f = mulm(*r0.last().unwrap(), lead);
            for i in 0..r1.len() {
                r0[shift + i] = subm(r0[shift + i], mulm(f, r1[i]));
            }
            trim(&mut r0);
        }
        std::mem::swap(&mut r0, &mut r1);
    }
    let lead = invm(*r0.last().unwrap());
    r0.iter().map(|c| mulm(*c, lead)).collect()
}

fn univ_to_mpoly(coeffs: &[u64], main: AtomId) -> MPoly {
    MPoly::from_terms(coeffs.iter().enumerate().filter(|(_, c)| **c != 0).map(
        |(e, c)| {
            let m = if e == 0 {
                Monomial::one()
            } else {
                Monomial(vec![(main, e as u32)])
            };
            (m, *c)
        },
    ))
}

/// gcd of the coefficient polynomials of `p` by powers of `main`.
fn content_in(p: &MPoly, main: AtomId, pts: &mut Pts, depth: u32) -> Option<MPoly> {
    let mut acc: Option<MPoly> = None;
    for c in p.coeffs_in(main) {
        if c.is_zero() {
            continue;
        }
        acc = Some(match acc {
            None => c,
            Some(g) => gcd_mp(&g, &c, pts, depth + 1)?,
        });
        if acc.as_ref().map(|g| g.is_constant()).unwrap_or(false) {
            return Some(MPoly::one());
        }
    }
    acc
}

/// Dense coefficient vector of a fully evaluated (univariate in `main`)
/// polynomial; `None` when the leading coefficient vanished.
fn dense_univ(p: &MPoly, main: AtomId, expected_deg: usize) -> Option<Vec<u64>> {
    let mut out = vec![0u64; expected_deg + 1];
    for (m, c) in &p.terms {
        debug_assert!(m.0.iter().all(|(a, _)| *a == main));
        let e = m.exponent(main) as usize;
        if e > expected_deg {
            return None;
        }
        out[e] = addm(out[e], *c);
    }
    if out[expected_deg] == 0 {
        return None;
    }
    Some(out)
}

/// Newton interpolation over the evaluation grid, carried out on dense
/// `u64` coefficient tensors. Returns the scaled gcd image
/// `gamma * g / lc(g)` as (data, shape) with axes ordered
/// `[main, rest[m-1], ..., rest[0]]` (each level appends its axis last).
#[allow(clippy::too_many_arguments)]
fn interp(
    pa: &MPoly,
    pb: &MPoly,
    gamma: &MPoly,
    main: AtomId,
    rest: &[AtomId],
    bounds: &[u32],
    deg_a: usize,
    deg_b: usize,
    pts: &mut Pts,
    dbound: &mut Option<usize>,
) -> Result<(Vec<u64>, Vec<usize>), IErr> {
    if rest.is_empty() {
        if !gamma.is_constant() {
            return Err(IErr::Fail);
        }
        let gt = gamma.lc_grlex();
        if gt == 0 {
            return Err(IErr::BadPoint);
        }
        let ua = dense_univ(pa, main, deg_a).ok_or(IErr::BadPoint)?;
        let ub = dense_univ(pb, main, deg_b).ok_or(IErr::BadPoint)?;
        let g = univ_gcd_monic(&ua, &ub);
        let dg = g.len() - 1;
        match *dbound {
            None => *dbound = Some(dg),
            Some(d) if dg > d => return Err(IErr::BadPoint),
            Some(d) if dg < d => return Err(IErr::Restart(dg)),
            _ => {}
        }
        if dg == 0 {
            return Err(IErr::Trivial);
        }
        let data: Vec<u64> = g.iter().map(|c| mulm(*c, gt)).collect();
        return Ok((data, vec![dg + 1]));
    }
    let v = rest[0];
    let need = bounds[0] as usize + 1;
    let mut ts: Vec<u64> = Vec::with_capacity(need);
    let mut coeffs: Vec<Vec<u64>> = Vec::with_capacity(need);
    let mut shape: Vec<usize> = Vec::new();
    let mut attempts = 0usize;
    while ts.len() < need {
        attempts += 1;
        if attempts > 8 * need + 64 {
            return Err(IErr::Fail);
        }
        let t = pts.take();
        if ts.contains(&t) {
            continue;
        }
        let pat = pa.eval(v, t);
        let pbt = pb.eval(v, t);
        let gat = gamma.eval(v, t);
        let res = interp(
            &pat, &pbt, &gat, main, &rest[1..], &bounds[1..], deg_a, deg_b, pts, dbound,
        );
        let (val, sh) = match res {
            Ok(out) => out,
            Err(IErr::BadPoint) => continue,
            Err(e) => return Err(e),
        };
        if shape.is_empty() {
            shape = sh;
        } else if shape != sh {
            return Err(IErr::Fail);
        }
        let len = val.len();
        // evaluate the Newton form at t (element-wise, scalar basis values)
        let mut nval = vec![0u64; len];
        let mut basis = 1u64;
        for (j, cj) in coeffs.iter().enumerate() {
            if j > 0 {
                basis = mulm(basis, subm(t, ts[j - 1]));
            }
            for (x, c) in nval.iter_mut().zip(cj) {
                *x = addm(*x, mulm(*c, basis));
            }
        }
        let denom = if coeffs.is_empty() {
            1
        } else {
            mulm(basis, subm(t, ts[ts.len() - 1]))
        };
        let dinv = invm(denom);
        let a: Vec<u64> = val
            .iter()
            .zip(&nval)
            .map(|(c, n)| mulm(subm(*c, *n), dinv))
            .collect();
        coeffs.push(a);
        ts.push(t);
    }
    // expand the Newton form into monomial coefficients along the new axis
    let inner: usize = shape.iter().product();
    let mut out = vec![0u64; inner * need];
    let mut bvec: Vec<u64> = vec![1]; // prod_{i<j} (v - ts[i])
    for (j, cj) in coeffs.iter().enumerate() {
        if j > 0 {
            // bvec *= (v - ts[j-1])
            let t = ts[j - 1];
            let mut next = vec![0u64; bvec.len() + 1];
            for (e, bc) in bvec.iter().enumerate() {
                next[e + 1] = addm(next[e + 1], *bc);
                next[e] = subm(next[e], mulm(*bc, t));
            }
            bvec = next;
        }
        for (e, bc) in bvec.iter().enumerate() {
            if *bc == 0 {
                continue;
            }
            for (idx, c) in cj.iter().enumerate() {
                if *c != 0 {
                    out[idx * need + e] = addm(out[idx * need + e], mulm(*c, *bc));
                }
            }
        }
    }
    shape.push(need);
    Ok((out, shape))
}

/// Convert a dense tensor produced by `interp` back to a sparse polynomial.
fn tensor_to_mpoly(data: &[u64], shape: &[usize], axis_vars: &[AtomId]) -> MPoly {
    let mut terms = Vec::new();
    for (flat, c) in data.iter().enumerate() {
        if *c == 0 {
            continue;
        }
        let mut idx = flat;
        let mut pairs: Vec<(AtomId, u32)> = Vec::new();
        for k in (0..shape.len()).rev() {
            let e = idx % shape[k];
            idx /= shape[k];
            if e > 0 {
                pairs.push((axis_vars[k], e as u32));
            }
        }
        pairs.sort_unstable_by_key(|(a, _)| *a);
        terms.push((Monomial(pairs), *c));
    }
    MPoly::from_terms(terms)
}

/// Full gcd over F_p (monic, grlex-normalized); probabilistic, verified by
/// the caller over the integers.
fn gcd_mp(a: &MPoly, b: &MPoly, pts: &mut Pts, depth: u32) -> Option<MPoly> {
    if depth > 24 {
        return None;
    }
    if a.is_zero() {
        return Some(b.monic());
    }
    if b.is_zero() {
        return Some(a.monic());
    }
    if a.is_constant() || b.is_constant() {
        return Some(MPoly::one());
    }
    let va = a.vars();
    let vb = b.vars();
    let shared: Vec<AtomId> = va.iter().copied().filter(|v| vb.contains(v)).collect();
    if shared.is_empty() {
        return Some(MPoly::one());
    }
    // cheapest main variable: smallest min-degree keeps univariate work low
    let main = *shared
        .iter()
        .min_by_key(|v| a.deg_in(**v).min(b.deg_in(**v)))
        .unwrap();
    let mut union: Vec<AtomId> = va;
    for v in vb {
        if !union.contains(&v) {
            union.push(v);
        }
    }
    union.sort_unstable();
    let rest: Vec<AtomId> = union.into_iter().filter(|v| *v != main).collect();
    if rest.is_empty() {
        let ua = a.eval_to_univ(main, &[])?;
        let ub = b.eval_to_univ(main, &[])?;
        return Some(univ_to_mpoly(&univ_gcd_monic(&ua, &ub), main));
    }
    let ca = content_in(a, main, pts, depth)?;
    let cb = content_in(b, main, pts, depth)?;
    let pa = a.exact_div(&ca)?;
    let pb = b.exact_div(&cb)?;
    let gcont = gcd_mp(&ca, &cb, pts, depth + 1)?;
    let la = pa.coeffs_in(main).pop().unwrap();
    let lb = pb.coeffs_in(main).pop().unwrap();
    let gamma = gcd_mp(&la, &lb, pts, depth + 1)?;
    let bounds: Vec<u32> = rest
        .iter()
        .map(|v| pa.deg_in(*v).min(pb.deg_in(*v)) + gamma.deg_in(*v))
        .collect();
    let grid: u64 = bounds.iter().map(|b| *b as u64 + 1).product();
    if grid > 100_000 {
        return None;
    }
    let deg_a = pa.deg_in(main) as usize;
    let deg_b = pb.deg_in(main) as usize;
    let mut axis_vars: Vec<AtomId> = vec![main];
    axis_vars.extend(rest.iter().rev());
    let mut dbound: Option<usize> = None;
    for _restart in 0..8 {
        match interp(
            &pa, &pb, &gamma, main, &rest, &bounds, deg_a, deg_b, pts, &mut dbound,
        ) {
            Ok((data, shape)) => {
                let h = tensor_to_mpoly(&data, &shape, &axis_vars);
                if h.is_zero() {
                    return None;
                }
                // strip the interpolation's leading-coefficient padding
                let ch = content_in(&h, main, pts, depth)?;
                let pp = h.exact_div(&ch)?;
                return Some(gcont.mul(&pp).monic());
            }
            Err(IErr::Restart(d)) => {
                dbound = Some(d);
            }
            Err(IErr::Trivial) => return Some(gcont.monic()),
            Err(_) => return None,
        }
    }
    None
}

/// Certified common divisor of two primitive integer-coefficient
/// polynomials, found modulo p and verified by exact division. Returns
/// `None` when no nontrivial divisor could be certified (in particular this
/// function never claims coprimality).
pub(crate) fn certified_common_divisor(a: &Poly, b: &Poly) -> Option<Poly> {
    let ma = MPoly::from_int_poly(a)?;
    let mb = MPoly::from_int_poly(b)?;
    let la = a.terms.first()?.1.numer().abs();
    let lb = b.terms.first()?.1.numer().abs();
    let lam = num::integer::gcd(la, lb).mod_floor(&BigInt::from(P)).to_u64()?;
    for seed in [3u64, 10_007, 1_000_003] {
        let mut pts = Pts::new(seed);
        let Some(g) = gcd_mp(&ma, &mb, &mut pts, 0) else {
            continue;
        };
        if g.is_constant() {
            return None;
        }
        let scaled = g.monic().scale(lam);
        let half = P / 2;
        let lifted = Poly::from_terms(scaled.terms.iter().map(|(m, c)| {
            let z = if *c > half {
                BigInt::from(*c) - BigInt::from(P)
            } else {
                BigInt::from(*c)
            };
            (m.clone(), Rat::from_integer(z))
        }));
        if lifted.is_zero() {
            continue;
        }
        let cand = lifted.content_and_primitive().1;
        if cand.is_constant() {
            continue;
        }
        if a.div_exact(&cand).is_some() && b.div_exact(&cand).is_some() {
            return Some(cand);
        }
    }
    None
}
