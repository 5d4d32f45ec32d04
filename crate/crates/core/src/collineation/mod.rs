//! Homothetic-algebra solver and verified catalogs.
//!
//! `solve_homothetic` turns `L_X g = 2ψ g` (ψ an unknown constant) into an
//! exact homogeneous linear system by a polynomial ansatz and coefficient
//! matching, then classifies every basis solution. The catalogs ship the
//! standard flat-space collineations and the ten Killing vectors of the
//! constant-curvature Lorentzian 4-space in conformally flat coordinates.

use crate::error::{Error, Result};
use crate::linalg::{in_span, nullspace};
use crate::symexpr::{
    self as sx, collect_atom_monomials, collect_monomials, AtomId, Expr, Rat, VarId,
};
use crate::tensor::{
    classify_collineation, commutator, lie_derivative_metric, zero_matrix, CollineationClass,
    GradientStatus, MetricField, Tag, VectorField,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Completeness {
    /// The listed vectors span the whole algebra.
    Full,
    /// Solver output at a fixed ansatz degree; higher degrees might add more.
    Unknown,
}

#[derive(Clone, Debug)]
pub struct AlgebraEntry {
    pub label: String,
    pub vector: VectorField,
    pub class: CollineationClass,
}

#[derive(Clone, Debug)]
pub struct AlgebraBasis {
    pub coords: Vec<VarId>,
    pub entries: Vec<AlgebraEntry>,
    pub complete: Completeness,
}

impl AlgebraBasis {
    pub fn killing(&self) -> Vec<&AlgebraEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.class.tag, Tag::KV | Tag::GradientKV))
            .collect()
    }

    pub fn homothetic(&self) -> Vec<&AlgebraEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.class.tag, Tag::HV | Tag::GradientHV))
            .collect()
    }
}

/// All monomials in `coords` of total degree <= `degree`, ordered by total
/// degree then lexicographically in the exponents (deterministic).
pub fn monomial_basis(coords: &[VarId], degree: u32) -> Vec<Expr> {
    fn rec(coords: &[VarId], left: u32, idx: usize, cur: Expr, out: &mut Vec<Expr>) {
        if idx == coords.len() {
            out.push(cur);
            return;
        }
        for e in 0..=left {
            let mut m = cur.clone();
            if e > 0 {
                m = m * Expr::var(coords[idx]).pow(e as i64).unwrap();
            }
            rec(coords, left - e, idx + 1, m, out);
        }
    }
    let mut out = Vec::new();
    for d in 0..=degree {
        let mut layer = Vec::new();
        rec(coords, d, 0, Expr::one(), &mut layer);
        // keep only exact degree d (the recursion emits degree <= d)
        layer.retain(|m| {
            m.numerator()
                .terms
                .first()
                .map(|(mono, _)| mono.degree() == u64::from(d))
                .unwrap_or(d == 0)
        });
        out.extend(layer);
    }
    out
}

/// Solve `L_X g = 2ψ g` with polynomial components of degree <= `degree` and
/// constant ψ. The returned basis is in reduced echelon form over the
/// coefficient columns with ψ ordered first, so at most one basis vector
/// carries ψ != 0 (the homothetic one).
pub fn solve_homothetic(g: &MetricField, degree: u32) -> Result<AlgebraBasis> {
    if degree == 0 {
        return Err(Error::Precondition("ansatz degree must be >= 1".into()));
    }
    let n = g.dim();
    let coords = g.coords.clone();
    let monos = monomial_basis(&coords, degree);

    let ncols = 1 + n * monos.len();

    // Assemble the system one unknown at a time: the equation
    // (L_X g)_ij - 2 psi g_ij = 0 is linear in (psi, coefficients), and for a
    // single-component single-monomial field B = m e_c the Lie derivative
    // entry is m g_ij,c + g_cj m,_i + g_ic m,_j. Keeping the unknowns out of
    // the expression arithmetic keeps every reduction small.
    use std::collections::{BTreeMap, BTreeSet};
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for i in 0..n {
        for j in i..n {
            let mut cols: Vec<Expr> = Vec::with_capacity(ncols);
            cols.push(Expr::int(-2) * g.lower[i][j].clone());
            for c in 0..n {
                for m in &monos {
                    let e = m.clone() * g.lower[i][j].clone().diff(coords[c])
                        + g.lower[c][j].clone() * m.clone().diff(coords[i])
                        + g.lower[i][c].clone() * m.clone().diff(coords[j]);
                    cols.push(e);
                }
            }
            // one common multiplier clears every denominator in this equation
            let mut lcd = sx::Poly::one();
            for e in &cols {
                let d = e.denominator();
                let common = sx::gcd(&lcd, d);
                lcd = lcd.mul(&d.div_exact(&common).expect("gcd divides"));
            }
            let lcd_e = Expr::from_poly(lcd);
            let mut maps: Vec<BTreeMap<Vec<(AtomId, u32)>, Rat>> = Vec::with_capacity(ncols);
            let mut keys: BTreeSet<Vec<(AtomId, u32)>> = BTreeSet::new();
            for e in &cols {
                let scaled = e.clone() * lcd_e.clone();
                let parts = collect_monomials(&scaled, &coords)?;
                let mut map = BTreeMap::new();
                for (key, coeff) in parts {
                    let Some(r) = coeff.as_rational() else {
                        return Err(Error::Degenerate(
                            "coefficient matching produced a non-rational entry; \
                             metric constants must have rational values for solving"
                                .into(),
                        ));
                    };
                    keys.insert(key.clone());
                    map.insert(key, r);
                }
                maps.push(map);
            }
            for key in keys {
                let row: Vec<Rat> = maps
                    .iter()
                    .map(|m| {
                        m.get(&key)
                            .cloned()
                            .unwrap_or_else(|| Rat::from_integer(0.into()))
                    })
                    .collect();
                rows.push(row);
            }
        }
    }
    let basis = nullspace(&rows, ncols);

    let mut entries = Vec::new();
    for (k, sol) in basis.iter().enumerate() {
        let psi_val = Expr::from_rat(sol[0].clone());
        let mut comps = vec![Expr::zero(); n];
        for (i, comp) in comps.iter_mut().enumerate() {
            for (j, m) in monos.iter().enumerate() {
                let c = &sol[1 + i * monos.len() + j];
                if !num::Zero::is_zero(c) {
                    *comp = comp.clone() + Expr::from_rat(c.clone()) * m.clone();
                }
            }
        }
        let vector = VectorField::new(comps);
        // soundness: re-verify the defining equation, never trust the solve
        let lg = lie_derivative_metric(&vector, g);
        for i in 0..n {
            for j in 0..n {
                let r = lg[i][j].clone()
                    - Expr::int(2) * psi_val.clone() * g.lower[i][j].clone();
                if !r.is_zero() {
                    return Err(Error::Degenerate(
                        "solver produced a vector failing its defining equation".into(),
                    ));
                }
            }
        }
        let class = classify_collineation(&vector, g);
        entries.push(AlgebraEntry {
            label: format!("V{}", k + 1),
            vector,
            class,
        });
    }
    Ok(AlgebraBasis { coords, entries, complete: Completeness::Unknown })
}

/// The flat-metric catalog over the given coordinates: n gradient KVs
/// (translations), n(n-1)/2 rotational KVs, the gradient HV `x^i ∂_i`,
/// n² affine vectors `x_J ∂_I`, and n special projective vectors
/// `x_I x^k ∂_k`. For n = 1 the affine entry coincides with the HV and is
/// dropped.
pub fn euclidean_catalog(coords: &[VarId]) -> Result<AlgebraBasis> {
    let n = coords.len();
    if n == 0 {
        return Err(Error::Precondition("need at least one coordinate".into()));
    }
    let g = MetricField::from_lower(coords.to_vec(), crate::tensor::identity_matrix(n))?;
    let mut entries = Vec::new();

    let mut push = |label: String, vector: VectorField, expect: Tag| -> Result<()> {
        let class = classify_collineation(&vector, &g);
        if class.tag != expect {
            return Err(Error::Degenerate(format!(
                "catalog entry {label} classified as {} (expected {})",
                class.tag.label(),
                expect.label()
            )));
        }
        entries.push(AlgebraEntry { label, vector, class });
        Ok(())
    };

    let name = |v: &VarId| sx::var_name(*v);
    for (i, _) in coords.iter().enumerate() {
        let mut comps = vec![Expr::zero(); n];
        comps[i] = Expr::one();
        push(format!("S_{}", name(&coords[i])), VectorField::new(comps), Tag::GradientKV)?;
    }
    for i in 0..n {
        for j in i + 1..n {
            let mut comps = vec![Expr::zero(); n];
            comps[i] = Expr::var(coords[j]);
            comps[j] = -Expr::var(coords[i]);
            push(
                format!("X_{}{}", name(&coords[i]), name(&coords[j])),
                VectorField::new(comps),
                Tag::KV,
            )?;
        }
    }
    let dilation = VectorField::new(coords.iter().map(|v| Expr::var(*v)).collect());
    push("H".into(), dilation.clone(), Tag::GradientHV)?;
    if n > 1 {
        for i in 0..n {
            for j in 0..n {
                let mut comps = vec![Expr::zero(); n];
                comps[i] = Expr::var(coords[j]);
                push(
                    format!("A_{}{}", name(&coords[i]), name(&coords[j])),
                    VectorField::new(comps),
                    Tag::AC,
                )?;
            }
        }
    }
    for i in 0..n {
        let p = dilation.scale(&Expr::var(coords[i]));
        push(format!("P_{}", name(&coords[i])), p, Tag::SPC)?;
    }
    Ok(AlgebraBasis {
        coords: coords.to_vec(),
        entries,
        complete: Completeness::Full,
    })
}

/// The constant-curvature Lorentzian 4-metric in conformally flat
/// coordinates (tau, x, y, z): `g = Ω^{-2} diag(-1,1,1,1)` with
/// `Ω = 1 + (k/4)(-tau² + x² + y² + z²)`.
pub fn desitter_metric(k: &Expr) -> Result<MetricField> {
    if k.is_zero() {
        return Err(Error::Precondition("curvature constant must be nonzero".into()));
    }
    let coords = vec![sx::var("tau")?, sx::var("x")?, sx::var("y")?, sx::var("z")?];
    let [tau, x, y, z] = [coords[0], coords[1], coords[2], coords[3]];
    let sq = |v: VarId| Expr::var(v).pow(2).unwrap();
    let sigma = -sq(tau) + sq(x) + sq(y) + sq(z);
    let omega = Expr::one() + k.clone() * Expr::rational(1, 4) * sigma;
    let conf = omega.pow(-2)?;
    let mut lower = zero_matrix(4);
    lower[0][0] = -conf.clone();
    for (i, row) in lower.iter_mut().enumerate().skip(1) {
        row[i] = conf.clone();
    }
    MetricField::from_lower(coords, lower)
}

/// The ten Killing vectors of the metric above: three boosts, three
/// rotations, and four translation-like vectors mixing a translation with a
/// special conformal generator. Every vector is re-verified as a nongradient
/// Killing vector on construction, with `k` kept symbolic or rational.
pub fn desitter_catalog(k: &Expr) -> Result<AlgebraBasis> {
    let g = desitter_metric(k)?;
    let coords = g.coords.clone();
    let [tau, x, y, z] = [coords[0], coords[1], coords[2], coords[3]];
    let e = |v: VarId| Expr::var(v);
    let sq = |v: VarId| Expr::var(v).pow(2).unwrap();
    let half = Expr::rational(1, 2);
    let two_over_k = Expr::int(2) / k.clone();

    let vecs: Vec<(String, Vec<Expr>)> = vec![
        (
            "X1".into(),
            vec![
                -e(x) * e(tau),
                half.clone() * (-sq(tau) - sq(x) + sq(y) + sq(z)) - two_over_k.clone(),
                -e(y) * e(x),
                -e(z) * e(x),
            ],
        ),
        (
            "X2".into(),
            vec![
                e(y) * e(tau),
                e(y) * e(x),
                half.clone() * (sq(tau) - sq(x) + sq(y) - sq(z)) + two_over_k.clone(),
                e(y) * e(z),
            ],
        ),
        (
            "X3".into(),
            vec![
                e(z) * e(tau),
                e(z) * e(x),
                e(z) * e(y),
                half.clone() * (sq(tau) - sq(x) - sq(y) + sq(z)) + two_over_k.clone(),
            ],
        ),
        (
            "X4".into(),
            vec![
                half * (sq(tau) + sq(x) + sq(y) + sq(z)) - two_over_k,
                e(tau) * e(x),
                e(tau) * e(y),
                e(tau) * e(z),
            ],
        ),
        ("X5".into(), vec![e(x), e(tau), Expr::zero(), Expr::zero()]),
        ("X6".into(), vec![e(y), Expr::zero(), e(tau), Expr::zero()]),
        ("X7".into(), vec![e(z), Expr::zero(), Expr::zero(), e(tau)]),
        ("X8".into(), vec![Expr::zero(), e(y), -e(x), Expr::zero()]),
        ("X9".into(), vec![Expr::zero(), e(z), Expr::zero(), -e(x)]),
        ("X10".into(), vec![Expr::zero(), Expr::zero(), e(z), -e(y)]),
    ];

    let mut entries = Vec::new();
    for (label, comps) in vecs {
        let vector = VectorField::new(comps);
        let class = classify_collineation(&vector, &g);
        if !matches!(class.tag, Tag::KV) || class.potential != GradientStatus::NonGradient {
            return Err(Error::Degenerate(format!(
                "catalog entry {label} is not a nongradient Killing vector \
                 (classified {})",
                class.tag.label()
            )));
        }
        entries.push(AlgebraEntry { label, vector, class });
    }
    Ok(AlgebraBasis { coords, entries, complete: Completeness::Full })
}

/// Rational coefficient vector of a vector field over (component, monomial)
/// slots; all fields are scaled by the common denominator first so symbolic
/// constants in denominators are handled.
fn field_rows(fields: &[&VectorField]) -> Result<Vec<Vec<Rat>>> {
    // common denominator across all components of all fields
    let mut den = crate::symexpr::Poly::one();
    for f in fields {
        for c in &f.comps {
            let d = c.denominator().clone();
            let g = sx::gcd(&den, &d);
            den = den.mul(&d.div_exact(&g).unwrap());
        }
    }
    let den_e = Expr::from_poly(den);
    // collect all atoms as indeterminates
    let mut atoms: Vec<AtomId> = Vec::new();
    for f in fields {
        for c in &f.comps {
            atoms.extend((c.clone() * den_e.clone()).atoms());
        }
    }
    atoms.sort_unstable();
    atoms.dedup();
    // union of keys
    use std::collections::BTreeMap;
    let mut maps = Vec::new();
    let mut slots: Vec<(usize, Vec<(AtomId, u32)>)> = Vec::new();
    for f in fields {
        let mut m = Vec::new();
        for (i, c) in f.comps.iter().enumerate() {
            let scaled = c.clone() * den_e.clone();
            let parts: BTreeMap<_, _> = collect_atom_monomials(&scaled, &atoms)?;
            for key in parts.keys() {
                if !slots.contains(&(i, key.clone())) {
                    slots.push((i, key.clone()));
                }
            }
            m.push(parts);
        }
        maps.push(m);
    }
    slots.sort();
    let mut rows = Vec::new();
    for m in &maps {
        let mut row = Vec::with_capacity(slots.len());
        for (i, key) in &slots {
            let val = m[*i]
                .get(key)
                .and_then(|e| e.as_rational())
                .unwrap_or_else(|| Rat::from_integer(0.into()));
            row.push(val);
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Is `target` a rational linear combination of `basis`?
pub fn vector_in_span(basis: &[VectorField], target: &VectorField) -> Result<bool> {
    let mut all: Vec<&VectorField> = basis.iter().collect();
    all.push(target);
    let rows = field_rows(&all)?;
    let (b, t) = rows.split_at(basis.len());
    Ok(in_span(b, &t[0]))
}

/// Span equality of two sets of vector fields over the rationals.
pub fn same_span(a: &[VectorField], b: &[VectorField]) -> Result<bool> {
    for t in b {
        if !vector_in_span(a, t)? {
            return Ok(false);
        }
    }
    for t in a {
        if !vector_in_span(b, t)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Commutator closure check used by the catalog tests: `[X_a, X_b]` stays in
/// the span of the catalog for all pairs.
pub fn closed_under_commutator(basis: &AlgebraBasis) -> Result<bool> {
    let fields: Vec<VectorField> = basis.entries.iter().map(|e| e.vector.clone()).collect();
    for i in 0..fields.len() {
        for j in i + 1..fields.len() {
            let c = commutator(&fields[i], &fields[j], &basis.coords);
            if !vector_in_span(&fields, &c)? {
                return Ok(false);
            }
        }
    }
    Ok(true)
}
