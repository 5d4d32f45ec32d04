//! Metrics, Christoffel symbols, Lie derivatives of tensors and connections,
//! and the collineation predicates. All values are exact `Expr`; every
//! invariant check is a kernel `is_zero` decision.

pub mod classify;
pub mod spec;

pub use classify::{classify_collineation, gradient_potential, CollineationClass, GradientStatus, Tag};
pub use spec::{LoadedMetric, MetricSpec};

use crate::error::{Error, Result};
use crate::symexpr::{Expr, VarId};

/// Ordered coordinate list with an optional designated evolution variable.
/// The evolution variable, when present, is excluded from the spatial range.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Coordinates {
    vars: Vec<VarId>,
    time: Option<VarId>,
}

impl Coordinates {
    pub fn new(vars: Vec<VarId>) -> Result<Self> {
        let mut seen = vars.clone();
        seen.sort_unstable();
        seen.dedup();
        if seen.len() != vars.len() {
            return Err(Error::Spec("coordinate names must be distinct".into()));
        }
        Ok(Coordinates { vars, time: None })
    }

    pub fn with_time(vars: Vec<VarId>, time: VarId) -> Result<Self> {
        let mut c = Coordinates::new(vars)?;
        if !c.vars.contains(&time) {
            return Err(Error::Spec("evolution variable must be a coordinate".into()));
        }
        c.time = Some(time);
        Ok(c)
    }

    /// All coordinates, including the evolution variable if any.
    pub fn all(&self) -> &[VarId] {
        &self.vars
    }

    /// Spatial coordinates (evolution variable excluded).
    pub fn spatial(&self) -> Vec<VarId> {
        self.vars
            .iter()
            .copied()
            .filter(|v| Some(*v) != self.time)
            .collect()
    }

    pub fn time(&self) -> Option<VarId> {
        self.time
    }

    pub fn dim(&self) -> usize {
        self.vars.len()
    }
}

pub type Matrix = Vec<Vec<Expr>>;

pub fn zero_matrix(n: usize) -> Matrix {
    vec![vec![Expr::zero(); n]; n]
}

pub fn identity_matrix(n: usize) -> Matrix {
    let mut m = zero_matrix(n);
    for (i, row) in m.iter_mut().enumerate() {
        row[i] = Expr::one();
    }
    m
}

pub fn matrix_is_symmetric(m: &Matrix) -> bool {
    let n = m.len();
    (0..n).all(|i| (0..i).all(|j| (m[i][j].clone() - m[j][i].clone()).is_zero()))
}

/// Determinant by cofactor expansion; dimensions here are small (n <= 5).
pub fn determinant(m: &Matrix) -> Expr {
    let n = m.len();
    match n {
        0 => Expr::one(),
        1 => m[0][0].clone(),
        _ => {
            let mut acc = Expr::zero();
            for j in 0..n {
                if m[0][j].is_zero() {
                    continue;
                }
                let minor: Matrix = (1..n)
                    .map(|i| {
                        (0..n)
                            .filter(|c| *c != j)
                            .map(|c| m[i][c].clone())
                            .collect()
                    })
                    .collect();
                let sign = if j % 2 == 0 { Expr::one() } else { -Expr::one() };
                acc = acc + sign * m[0][j].clone() * determinant(&minor);
            }
            acc
        }
    }
}

/// Exact inverse via the adjugate; errors when the determinant is the zero
/// expression.
pub fn invert_matrix(m: &Matrix) -> Result<Matrix> {
    let n = m.len();
    let det = determinant(m);
    if det.is_zero() {
        return Err(Error::SingularMetric);
    }
    let mut inv = zero_matrix(n);
    for i in 0..n {
        for j in 0..n {
            let minor: Matrix = (0..n)
                .filter(|r| *r != j)
                .map(|r| {
                    (0..n)
                        .filter(|c| *c != i)
                        .map(|c| m[r][c].clone())
                        .collect()
                })
                .collect();
            let sign = if (i + j) % 2 == 0 {
                Expr::one()
            } else {
                -Expr::one()
            };
            inv[i][j] = sign * determinant(&minor) / det.clone();
        }
    }
    Ok(inv)
}

/// Symmetric rank-2 metric over spatial coordinates, stored both covariant
/// and contravariant with the inverse relation checked on construction.
#[derive(Clone, Debug)]
pub struct MetricField {
    pub coords: Vec<VarId>,
    pub lower: Matrix,
    pub upper: Matrix,
}

impl MetricField {
    pub fn from_lower(coords: Vec<VarId>, lower: Matrix) -> Result<Self> {
        if !matrix_is_symmetric(&lower) {
            return Err(Error::Spec("metric must be symmetric".into()));
        }
        let upper = invert_matrix(&lower)?;
        Ok(MetricField { coords, lower, upper })
    }

    pub fn from_upper(coords: Vec<VarId>, upper: Matrix) -> Result<Self> {
        if !matrix_is_symmetric(&upper) {
            return Err(Error::Spec("metric must be symmetric".into()));
        }
        let lower = invert_matrix(&upper)?;
        Ok(MetricField { coords, lower, upper })
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    /// `n = g^{jk} g_{kj}` as an expression; must equal the dimension.
    pub fn trace_dimension(&self) -> Expr {
        let n = self.dim();
        let mut acc = Expr::zero();
        for j in 0..n {
            for k in 0..n {
                acc = acc + self.upper[j][k].clone() * self.lower[k][j].clone();
            }
        }
        acc
    }
}

/// Levi-Civita connection data: `Γ^i_{jk}` plus the contraction
/// `Γ^i = g^{jk} Γ^i_{jk}`.
#[derive(Clone, Debug)]
pub struct Connection {
    pub coords: Vec<VarId>,
    pub gamma: Vec<Matrix>, // gamma[i][j][k]
    pub contracted: Vec<Expr>,
}

pub fn christoffel(g: &MetricField) -> Result<Connection> {
    let n = g.dim();
    let c = &g.coords;
    let mut gamma = vec![zero_matrix(n); n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut acc = Expr::zero();
                for r in 0..n {
                    let term = g.lower[r][j].clone().diff(c[k])
                        + g.lower[r][k].clone().diff(c[j])
                        - g.lower[j][k].clone().diff(c[r]);
                    acc = acc + g.upper[i][r].clone() * term;
                }
                let val = Expr::rational(1, 2) * acc;
                gamma[i][j][k] = val.clone();
                gamma[i][k][j] = val;
            }
        }
    }
    let mut contracted = vec![Expr::zero(); n];
    for i in 0..n {
        let mut acc = Expr::zero();
        for j in 0..n {
            for k in 0..n {
                acc = acc + g.upper[j][k].clone() * gamma[i][j][k].clone();
            }
        }
        contracted[i] = acc;
    }
    Ok(Connection { coords: c.clone(), gamma, contracted })
}

/// Vector field with one component per coordinate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VectorField {
    pub comps: Vec<Expr>,
}

impl VectorField {
    pub fn new(comps: Vec<Expr>) -> Self {
        VectorField { comps }
    }

    pub fn zero(n: usize) -> Self {
        VectorField { comps: vec![Expr::zero(); n] }
    }

    pub fn is_zero(&self) -> bool {
        self.comps.iter().all(|c| c.is_zero())
    }

    pub fn scale(&self, s: &Expr) -> VectorField {
        VectorField {
            comps: self.comps.iter().map(|c| c.clone() * s.clone()).collect(),
        }
    }

    pub fn add(&self, other: &VectorField) -> VectorField {
        VectorField {
            comps: self
                .comps
                .iter()
                .zip(&other.comps)
                .map(|(a, b)| a.clone() + b.clone())
                .collect(),
        }
    }
}

/// `(L_X g)_ij = X^k g_ij,k + g_kj X^k_,i + g_ik X^k_,j`
pub fn lie_derivative_metric(x: &VectorField, g: &MetricField) -> Matrix {
    let n = g.dim();
    let c = &g.coords;
    let mut out = zero_matrix(n);
    for i in 0..n {
        for j in i..n {
            let mut acc = Expr::zero();
            for k in 0..n {
                acc = acc + x.comps[k].clone() * g.lower[i][j].clone().diff(c[k]);
                acc = acc + g.lower[k][j].clone() * x.comps[k].clone().diff(c[i]);
                acc = acc + g.lower[i][k].clone() * x.comps[k].clone().diff(c[j]);
            }
            out[i][j] = acc.clone();
            out[j][i] = acc;
        }
    }
    out
}

/// `L_X Γ^i_jk = Γ^i_jk,l X^l + X^i_,jk - X^i_,l Γ^l_jk + X^s_,j Γ^i_sk + X^s_,k Γ^i_sj`
pub fn lie_derivative_connection(x: &VectorField, conn: &Connection) -> Vec<Matrix> {
    let n = conn.coords.len();
    let c = &conn.coords;
    let mut out = vec![zero_matrix(n); n];
    for i in 0..n {
        for j in 0..n {
            for k in j..n {
                let mut acc = Expr::zero();
                for l in 0..n {
                    acc = acc + conn.gamma[i][j][k].clone().diff(c[l]) * x.comps[l].clone();
                    acc = acc - x.comps[i].clone().diff(c[l]) * conn.gamma[l][j][k].clone();
                    acc = acc + x.comps[l].clone().diff(c[j]) * conn.gamma[i][l][k].clone();
                    acc = acc + x.comps[l].clone().diff(c[k]) * conn.gamma[i][l][j].clone();
                }
                acc = acc + x.comps[i].clone().diff(c[j]).diff(c[k]);
                out[i][j][k] = acc.clone();
                out[i][k][j] = acc;
            }
        }
    }
    out
}

/// Covariant derivative of a covector: `w_i;j = w_i,j - Γ^k_ij w_k`.
pub fn covariant_derivative_covector(w: &[Expr], conn: &Connection) -> Matrix {
    let n = conn.coords.len();
    let c = &conn.coords;
    let mut out = zero_matrix(n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = w[i].clone().diff(c[j]);
            for k in 0..n {
                acc = acc - conn.gamma[k][i][j].clone() * w[k].clone();
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Covariant derivative of a (0,2) tensor (used for `g_ij;k = 0`).
pub fn covariant_derivative_tensor02(t: &Matrix, conn: &Connection) -> Vec<Matrix> {
    let n = conn.coords.len();
    let c = &conn.coords;
    let mut out = vec![zero_matrix(n); n];
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = t[i][j].clone().diff(c[k]);
                for l in 0..n {
                    acc = acc - conn.gamma[l][i][k].clone() * t[l][j].clone();
                    acc = acc - conn.gamma[l][j][k].clone() * t[i][l].clone();
                }
                out[k][i][j] = acc;
            }
        }
    }
    out
}

/// Vector commutator `[X, Y]^i = X^k Y^i_,k - Y^k X^i_,k`.
pub fn commutator(x: &VectorField, y: &VectorField, coords: &[VarId]) -> VectorField {
    let n = coords.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Expr::zero();
        for k in 0..n {
            acc = acc + x.comps[k].clone() * y.comps[i].clone().diff(coords[k]);
            acc = acc - y.comps[k].clone() * x.comps[i].clone().diff(coords[k]);
        }
        out.push(acc);
    }
    VectorField::new(out)
}

/// Lemma-2 style check: with `L_X g = factor * g`, verify
/// `g^{jk} L_X Γ^i_jk = ((2-n)/2) * grad^i(factor)` for all `i`.
pub fn lemma2_check(x: &VectorField, g: &MetricField, factor: &Expr) -> Result<bool> {
    let n = g.dim();
    let lg = lie_derivative_metric(x, g);
    for i in 0..n {
        for j in 0..n {
            let r = lg[i][j].clone() - factor.clone() * g.lower[i][j].clone();
            if !r.is_zero() {
                return Err(Error::Precondition(
                    "L_X g != factor * g, lemma 2 does not apply".into(),
                ));
            }
        }
    }
    let conn = christoffel(g)?;
    let lgamma = lie_derivative_connection(x, &conn);
    for i in 0..n {
        let mut lhs = Expr::zero();
        for j in 0..n {
            for k in 0..n {
                lhs = lhs + g.upper[j][k].clone() * lgamma[i][j][k].clone();
            }
        }
        // grad^i factor = g^{il} factor_,l
        let mut grad = Expr::zero();
        for l in 0..n {
            grad = grad + g.upper[i][l].clone() * factor.clone().diff(g.coords[l]);
        }
        let rhs = Expr::rational(2 - n as i64, 2) * grad;
        if !(lhs - rhs).is_zero() {
            return Ok(false);
        }
    }
    Ok(true)
}
