//! Exact linear algebra over the rationals: fraction-free (Bareiss) forward
//! elimination on integer matrices, rank/pivot detection, reduced row echelon
//! form and nullspace bases. Used by the ansatz solvers to turn coefficient
//! matching into exact linear systems.

use num::{BigInt, BigRational, One, Signed, Zero};

use crate::symexpr::Rat;

/// Fraction-free row echelon form of the integer matrix obtained by clearing
/// row denominators. Returns the echelon matrix together with the pivot
/// column of each nonzero row.
pub fn fraction_free_echelon(rows: &[Vec<Rat>]) -> (Vec<Vec<BigInt>>, Vec<usize>) {
    // Incremental insertion: reduce every incoming row against the rows kept
    // so far, renormalizing content after each combination so entries stay
    // small even for systems with thousands of redundant rows.
    let mut ech: Vec<(usize, Vec<BigInt>)> = Vec::new(); // (pivot col, row)
    for r in rows {
        let mut v = clear_row(r);
        loop {
            let Some(p) = v.iter().position(|x| !x.is_zero()) else {
                break;
            };
            match ech.iter().find(|(pc, _)| *pc == p) {
                Some((_, base)) => {
                    let a = base[p].clone();
                    let b = v[p].clone();
                    for (x, y) in v.iter_mut().zip(base) {
                        *x = &a * &*x - &b * y;
                    }
                    normalize_content(&mut v);
                }
                None => {
                    ech.push((p, v));
                    break;
                }
            }
        }
    }
    ech.sort_by_key(|(p, _)| *p);
    let pivots: Vec<usize> = ech.iter().map(|(p, _)| *p).collect();
    let m: Vec<Vec<BigInt>> = ech.into_iter().map(|(_, r)| r).collect();
    (m, pivots)
}

/// Divide a row by the gcd of its entries (sign normalized to a positive
/// leading entry).
fn normalize_content(row: &mut [BigInt]) {
    let mut g = BigInt::zero();
    for x in row.iter() {
        g = num::integer::gcd(g, x.abs());
        if g.is_one() {
            break;
        }
    }
    if g.is_zero() {
        return;
    }
    let neg = row.iter().find(|x| !x.is_zero()).map(|x| x.is_negative()).unwrap_or(false);
    if neg {
        g = -g;
    }
    if !g.is_one() {
        for x in row.iter_mut() {
            *x = exact_div(x, &g);
        }
    }
}

fn exact_div(a: &BigInt, b: &BigInt) -> BigInt {
    debug_assert!(!b.is_zero());
    let (q, r) = num::Integer::div_rem(a, b);
    debug_assert!(r.is_zero(), "Bareiss division must be exact");
    let _ = r;
    q
}

fn clear_row(r: &[Rat]) -> Vec<BigInt> {
    let mut lcm = BigInt::one();
    for x in r {
        lcm = num::integer::lcm(lcm, x.denom().clone());
    }
    let mut out: Vec<BigInt> = r
        .iter()
        .map(|x| x.numer() * (&lcm / x.denom()))
        .collect();
    // normalize sign and content for smaller numbers
    let mut g = BigInt::zero();
    for x in &out {
        g = num::integer::gcd(g, x.abs());
    }
    if !g.is_zero() && !g.is_one() {
        for x in &mut out {
            *x = exact_div(x, &g);
        }
    }
    out
}

pub fn rank(rows: &[Vec<Rat>]) -> usize {
    fraction_free_echelon(rows).1.len()
}

/// Basis of the nullspace of the homogeneous system `rows * z = 0`, one
/// vector per free column, normalized via reduced row echelon form so the
/// basis is canonical for a given column ordering.
pub fn nullspace(rows: &[Vec<Rat>], ncols: usize) -> Vec<Vec<Rat>> {
    if rows.is_empty() {
        return (0..ncols)
            .map(|j| unit_vector(ncols, j))
            .collect();
    }
    let (ech, pivots) = fraction_free_echelon(rows);
    let free_cols: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    let mut basis = Vec::with_capacity(free_cols.len());
    for &fc in &free_cols {
        let mut z = vec![Rat::zero(); ncols];
        z[fc] = Rat::one();
        // back-substitute pivot variables
        for (r, &pc) in pivots.iter().enumerate().rev() {
            let mut s = BigRational::zero();
            for c in pc + 1..ncols {
                if !ech[r][c].is_zero() {
                    s += BigRational::from(ech[r][c].clone()) * &z[c];
                }
            }
            z[pc] = -s / BigRational::from(ech[r][pc].clone());
        }
        basis.push(z);
    }
    rref_rows(basis)
}

fn unit_vector(n: usize, j: usize) -> Vec<Rat> {
    let mut v = vec![Rat::zero(); n];
    v[j] = Rat::one();
    v
}

/// Reduced row echelon form over the rationals; rows scaled to integer
/// entries with content 1 and positive pivot.
pub fn rref_rows(mut rows: Vec<Vec<Rat>>) -> Vec<Vec<Rat>> {
    let ncols = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut r = 0;
    for c in 0..ncols {
        let Some(p) = (r..rows.len()).find(|i| !rows[*i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].clone().recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][c].is_zero() {
                let f = rows[i][c].clone();
                for j in 0..ncols {
                    let sub = &rows[r][j] * &f;
                    rows[i][j] -= sub;
                }
            }
        }
        r += 1;
        if r == rows.len() {
            break;
        }
    }
    rows.retain(|row| row.iter().any(|x| !x.is_zero()));
    for row in &mut rows {
        integerize(row);
    }
    rows
}

/// Scale a rational row to coprime integers keeping the leading entry positive.
fn integerize(row: &mut [Rat]) {
    let mut lcm = BigInt::one();
    for x in row.iter() {
        lcm = num::integer::lcm(lcm, x.denom().clone());
    }
    let mut g = BigInt::zero();
    for x in row.iter() {
        g = num::integer::gcd(g, (x.numer() * (&lcm / x.denom())).abs());
    }
    if g.is_zero() {
        return;
    }
    let scale = BigRational::new(lcm, g);
    let lead_neg = row
        .iter()
        .find(|x| !x.is_zero())
        .map(|x| x.is_negative())
        .unwrap_or(false);
    for x in row.iter_mut() {
        *x *= &scale;
        if lead_neg {
            *x = -x.clone();
        }
    }
}

/// Solve the inhomogeneous system `A z = b` exactly. Returns `None` when
/// inconsistent; free variables are set to zero.
pub fn solve_affine(a: &[Vec<Rat>], b: &[Rat]) -> Option<Vec<Rat>> {
    let ncols = a.first().map(|r| r.len()).unwrap_or(0);
    let mut aug: Vec<Vec<Rat>> = a
        .iter()
        .zip(b)
        .map(|(r, rhs)| {
            let mut row = r.clone();
            row.push(-rhs.clone());
            row
        })
        .collect();
    aug.retain(|r| r.iter().any(|x| !x.is_zero()));
    if aug.is_empty() {
        return Some(vec![Rat::zero(); ncols]);
    }
    // Nullspace of [A | -b] with the extra coordinate pinned to 1.
    let basis = nullspace(&aug, ncols + 1);
    let mut combo: Option<Vec<Rat>> = None;
    for v in &basis {
        if !v[ncols].is_zero() {
            let scale = v[ncols].clone().recip();
            let z: Vec<Rat> = v[..ncols].iter().map(|x| x * &scale).collect();
            combo = Some(z);
            break;
        }
    }
    combo
}

/// Is `target` in the rational span of `basis`?
pub fn in_span(basis: &[Vec<Rat>], target: &[Rat]) -> bool {
    let r0 = rank(basis);
    let mut all: Vec<Vec<Rat>> = basis.to_vec();
    all.push(target.to_vec());
    rank(&all) == r0
}
