//! Second prolongation of point-symmetry generators and extraction of
//! determining equations, for second-order PDEs `A^{ij} u_ij - F(x, u, u_i) = 0`
//! and for geodesic-type ODE systems
//! `x''^i + Γ^i_jk x'^j x'^k + Σ_m P^i_{j1..jm} x'^{j1} … x'^{jm} = 0`.
//!
//! Jet variables `u_i`, `u_ij` (and velocities/accelerations on the ODE side)
//! are ordinary kernel variables, so splitting a symmetry condition by jet
//! monomials is plain [`collect_monomials`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::symexpr::{
    collect_monomials, fn_atom, fresh_name, function, var, var_atom, var_name, AtomId, Expr, VarId,
};
use crate::tensor::{invert_matrix, Connection, Coordinates, Matrix};

/// Second-order jet space over a coordinate list and one dependent variable:
/// the base variables together with formal first derivatives `u_i` and
/// symmetric second derivatives `u_ij = u_ji`.
#[derive(Clone, Debug)]
pub struct Jet {
    coords: Coordinates,
    u: VarId,
    u1: Vec<VarId>,
    u2: Vec<Vec<VarId>>,
}

impl Jet {
    /// Build the jet variables. Derivative variables are named after the
    /// dependent variable and the coordinates (`u_x`, `u_x_y`, …); symmetry
    /// `u_ij = u_ji` holds by construction because both index orders map to
    /// the same variable.
    pub fn new(coords: Coordinates, u: VarId) -> Result<Jet> {
        if coords.all().contains(&u) {
            return Err(Error::Spec("dependent variable cannot be a coordinate".into()));
        }
        let un = var_name(u);
        let n = coords.dim();
        let mut u1 = Vec::with_capacity(n);
        for &c in coords.all() {
            u1.push(var(&format!("{un}_{}", var_name(c)))?);
        }
        let mut u2 = vec![vec![u; n]; n];
        for i in 0..n {
            for j in i..n {
                let v = var(&format!(
                    "{un}_{}_{}",
                    var_name(coords.all()[i]),
                    var_name(coords.all()[j])
                ))?;
                u2[i][j] = v;
                u2[j][i] = v;
            }
        }
        Ok(Jet { coords, u, u1, u2 })
    }

    pub fn coords(&self) -> &Coordinates {
        &self.coords
    }

    pub fn u(&self) -> VarId {
        self.u
    }

    pub fn u1(&self) -> &[VarId] {
        &self.u1
    }

    pub fn u2(&self, i: usize, j: usize) -> VarId {
        self.u2[i][j]
    }

    pub fn dim(&self) -> usize {
        self.coords.dim()
    }

    /// The distinct second-order jet variables, one per unordered index pair.
    pub fn u2_distinct(&self) -> Vec<VarId> {
        let n = self.dim();
        let mut v = Vec::new();
        for i in 0..n {
            for j in i..n {
                v.push(self.u2[i][j]);
            }
        }
        v
    }

    /// All jet variables of order one and two.
    pub fn jet_vars(&self) -> Vec<VarId> {
        let mut v = self.u1.clone();
        v.extend(self.u2_distinct());
        v
    }

    fn check_base_expr(&self, e: &Expr, what: &str) -> Result<()> {
        for v in self.jet_vars() {
            if e.contains_var(v) {
                return Err(Error::Spec(format!(
                    "{what} must not depend on the jet variable `{}`",
                    var_name(v)
                )));
            }
        }
        Ok(())
    }
}

/// Point-symmetry generator `X = ξ^i(x, u) ∂_i + η(x, u) ∂_u` for a PDE.
/// Free constants may appear as opaque zero-argument symbols.
#[derive(Clone, Debug)]
pub struct GeneratorPDE {
    pub xi: Vec<Expr>,
    pub eta: Expr,
}

impl GeneratorPDE {
    pub fn new(xi: Vec<Expr>, eta: Expr) -> GeneratorPDE {
        GeneratorPDE { xi, eta }
    }
}

/// Point-symmetry generator `X = ξ(t, x) ∂_t + η^i(t, x) ∂_i` for a
/// second-order ODE system with independent variable `t`.
#[derive(Clone, Debug)]
pub struct GeneratorODE {
    pub t: VarId,
    pub xi: Expr,
    pub eta: Vec<Expr>,
}

/// Right-hand-side structure of the PDE `A^{ij} u_ij - F = 0`.
#[derive(Clone, Debug)]
pub enum FForm {
    /// Arbitrary `F(x, u, u_i)`; may contain first-order jet variables.
    General(Expr),
    /// Linear form `F = B^k(x, u) u_k + f(x, u)`.
    Linear { b: Vec<Expr>, f: Expr },
}

/// A second-order PDE `A^{ij} u_ij - F(x, u, u_i) = 0` with symmetric
/// coefficient matrix `A^{ij}(x, u)`.
#[derive(Clone, Debug)]
pub struct PDEProblem {
    pub jet: Jet,
    pub a_upper: Matrix,
    pub fform: FForm,
}

impl PDEProblem {
    pub fn new(jet: Jet, a_upper: Matrix, fform: FForm) -> Result<PDEProblem> {
        let n = jet.dim();
        if a_upper.len() != n || a_upper.iter().any(|r| r.len() != n) {
            return Err(Error::Spec("coefficient matrix dimension mismatch".into()));
        }
        let mut any = false;
        for i in 0..n {
            for j in 0..n {
                if !(a_upper[i][j].clone() - a_upper[j][i].clone()).is_zero() {
                    return Err(Error::Spec("coefficient matrix must be symmetric".into()));
                }
                if !a_upper[i][j].is_zero() {
                    any = true;
                }
                jet.check_base_expr(&a_upper[i][j], "coefficient matrix")?;
            }
        }
        if !any {
            return Err(Error::Spec(
                "all second-order coefficients vanish: the equation is first order".into(),
            ));
        }
        match &fform {
            FForm::General(f) => {
                for v in jet.u2_distinct() {
                    if f.contains_var(v) {
                        return Err(Error::Spec(
                            "general right-hand side may depend on first derivatives only".into(),
                        ));
                    }
                }
            }
            FForm::Linear { b, f } => {
                if b.len() != n {
                    return Err(Error::Spec("drift vector dimension mismatch".into()));
                }
                for bk in b {
                    jet.check_base_expr(bk, "drift vector")?;
                }
                jet.check_base_expr(f, "source term")?;
            }
        }
        Ok(PDEProblem { jet, a_upper, fform })
    }

    /// The right-hand side `F` as a single expression in base and first-order
    /// jet variables.
    pub fn f_expr(&self) -> Expr {
        match &self.fform {
            FForm::General(f) => f.clone(),
            FForm::Linear { b, f } => {
                let mut acc = f.clone();
                for (k, bk) in b.iter().enumerate() {
                    acc = acc + bk.clone() * Expr::var(self.jet.u1[k]);
                }
                acc
            }
        }
    }

    /// The full equation expression `H = A^{ij} u_ij - F` (summed over all
    /// ordered index pairs, so off-diagonal coefficients count twice).
    pub fn h_expr(&self) -> Expr {
        let n = self.jet.dim();
        let mut acc = Expr::zero();
        for i in 0..n {
            for j in 0..n {
                acc = acc + self.a_upper[i][j].clone() * Expr::var(self.jet.u2[i][j]);
            }
        }
        acc - self.f_expr()
    }

    fn check_generator(&self, x: &GeneratorPDE) -> Result<()> {
        if x.xi.len() != self.jet.dim() {
            return Err(Error::Spec("generator component count mismatch".into()));
        }
        for c in &x.xi {
            self.jet.check_base_expr(c, "generator component")?;
        }
        self.jet.check_base_expr(&x.eta, "generator component")?;
        Ok(())
    }

    /// First index pair `(i, j)` with `i <= j` and `A^{ij}` not identically
    /// zero, in row-major order.
    pub fn first_nonzero(&self) -> (usize, usize) {
        let n = self.jet.dim();
        for i in 0..n {
            for j in i..n {
                if !self.a_upper[i][j].is_zero() {
                    return (i, j);
                }
            }
        }
        unreachable!("constructor rejects an all-zero coefficient matrix")
    }
}

/// One extracted determining equation: the jet monomial (or derived relation)
/// it came from, the equation tag used in reports, and the residual that must
/// vanish identically. `key` is the jet monomial in machine form (empty for
/// derived relations); `component` is the free index of per-component
/// equations.
#[derive(Clone, Debug)]
pub struct DeterminingEquation {
    pub source: String,
    pub tag: String,
    pub residual: Expr,
    pub key: Vec<(AtomId, u32)>,
    pub component: Option<usize>,
}

/// A list of determining equations together with the multiplier `λ` (when one
/// is introduced or solved for) and the opaque symbols the residuals depend
/// on.
#[derive(Clone, Debug)]
pub struct DeterminingSystem {
    pub equations: Vec<DeterminingEquation>,
    pub multiplier: Option<Expr>,
    pub unknowns: Vec<String>,
}

impl DeterminingSystem {
    pub fn all_zero(&self) -> bool {
        self.equations.iter().all(|e| e.residual.is_zero())
    }

    pub fn nonzero(&self) -> Vec<&DeterminingEquation> {
        self.equations.iter().filter(|e| !e.residual.is_zero()).collect()
    }

    pub fn with_tag(&self, tag: &str) -> Vec<&DeterminingEquation> {
        self.equations.iter().filter(|e| e.tag == tag).collect()
    }
}

fn mono_source(key: &[(AtomId, u32)]) -> String {
    if key.is_empty() {
        return "1".into();
    }
    key.iter()
        .map(|(a, p)| {
            let d = crate::symexpr::atom_display(*a);
            if *p == 1 {
                d
            } else {
                format!("{d}^{p}")
            }
        })
        .collect::<Vec<_>>()
        .join("*")
}

fn collect_unknowns(exprs: &[&Expr]) -> Vec<String> {
    use crate::symexpr::AtomData;
    let mut names: Vec<String> = Vec::new();
    for e in exprs {
        for a in e.atoms() {
            if let AtomData::Fn { f, .. } = crate::symexpr::atom_data(a) {
                let name = crate::symexpr::fn_name(f);
                if !names.contains(&name) {
                    names.push(name);
                }
            }
        }
    }
    names.sort();
    names
}

/// Second prolongation coefficients `(η^(1)_i, η^(2)_ij)` of a generator, as
/// closed-form expressions in the jet variables:
///
/// `η^(1)_i = η_,i + u_i η_,u − ξ^j_,i u_j − u_i u_j ξ^j_,u`
///
/// and the corresponding second-order expansion; `η^(2)` is symmetric.
pub fn prolong2(jet: &Jet, x: &GeneratorPDE) -> Result<(Vec<Expr>, Vec<Vec<Expr>>)> {
    if x.xi.len() != jet.dim() {
        return Err(Error::Spec("generator component count mismatch".into()));
    }
    for c in &x.xi {
        jet.check_base_expr(c, "generator component")?;
    }
    jet.check_base_expr(&x.eta, "generator component")?;

    let n = jet.dim();
    let c = jet.coords.all().to_vec();
    let u = jet.u;
    let ui = |i: usize| Expr::var(jet.u1[i]);
    let uij = |i: usize, j: usize| Expr::var(jet.u2[i][j]);
    let eta_u = x.eta.diff(u);

    let mut e1 = Vec::with_capacity(n);
    for i in 0..n {
        let mut v = x.eta.diff(c[i]) + ui(i) * eta_u.clone();
        for j in 0..n {
            v = v - x.xi[j].diff(c[i]) * ui(j) - ui(i) * ui(j) * x.xi[j].diff(u);
        }
        e1.push(v);
    }

    let mut e2 = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in i..n {
            let mut v = x.eta.diff(c[i]).diff(c[j])
                + eta_u.diff(c[i]) * ui(j)
                + eta_u.diff(c[j]) * ui(i)
                + eta_u.diff(u) * ui(i) * ui(j)
                + eta_u.clone() * uij(i, j);
            for k in 0..n {
                let xk = &x.xi[k];
                let xku = xk.diff(u);
                v = v - xk.diff(c[i]).diff(c[j]) * ui(k)
                    - (xku.diff(c[i]) * ui(j) + xku.diff(c[j]) * ui(i)) * ui(k)
                    - (xk.diff(c[i]) * uij(j, k) + xk.diff(c[j]) * uij(i, k))
                    - (uij(i, j) * ui(k) + ui(i) * uij(j, k) + uij(i, k) * ui(j)) * xku.clone()
                    - ui(i) * ui(j) * ui(k) * xku.diff(u);
            }
            e2[i][j] = v.clone();
            e2[j][i] = v;
        }
    }
    Ok((e1, e2))
}

/// The action `X^[2](H)` of the twice-prolonged generator on the equation
/// expression `H = A^{ij} u_ij − F`.
pub fn apply_second_prolongation(p: &PDEProblem, x: &GeneratorPDE) -> Result<Expr> {
    p.check_generator(x)?;
    let (e1, e2) = prolong2(&p.jet, x)?;
    let h = p.h_expr();
    let n = p.jet.dim();
    let mut acc = Expr::zero();
    for (k, &cv) in p.jet.coords.all().iter().enumerate() {
        acc = acc + x.xi[k].clone() * h.diff(cv);
    }
    acc = acc + x.eta.clone() * h.diff(p.jet.u);
    for i in 0..n {
        acc = acc + e1[i].clone() * h.diff(p.jet.u1[i]);
    }
    for i in 0..n {
        for j in i..n {
            acc = acc + e2[i][j].clone() * h.diff(p.jet.u2[i][j]);
        }
    }
    Ok(acc)
}

/// Lie derivative of a contravariant 2-tensor along `ξ`:
/// `(L_ξ A)^{ij} = ξ^k A^{ij}_,k − A^{kj} ξ^i_,k − A^{ik} ξ^j_,k`.
pub fn lie_derivative_upper(xi: &[Expr], a: &Matrix, coords: &[VarId]) -> Matrix {
    let n = coords.len();
    let mut out = vec![vec![Expr::zero(); n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut acc = Expr::zero();
            for k in 0..n {
                acc = acc + xi[k].clone() * a[i][j].diff(coords[k])
                    - a[k][j].clone() * xi[i].diff(coords[k])
                    - a[i][k].clone() * xi[j].diff(coords[k]);
            }
            out[i][j] = acc;
        }
    }
    out
}

/// Expand `X^[2](H) − λH` with `λ` an opaque unknown `λ(x, u, u_i)` and split
/// by second-order jet monomials:
///
/// * coefficient of `u_ij · u_k` → tag `Po.1` (the symmetrized `A^{(ij} ξ^{k)}_,u`),
/// * first-derivative-free coefficient of `u_ij` → tag `Po.2` (the `λ` relation),
/// * cubic first-derivative part of the remainder → tag `Po.2a`
///   (the symmetrized `A^{(ij} ξ^{k)}_,uu`),
/// * everything else → one residual with tag `GPE.30`.
pub fn determining_general(p: &PDEProblem, x: &GeneratorPDE) -> Result<DeterminingSystem> {
    p.check_generator(x)?;
    let jet = &p.jet;
    let n = jet.dim();

    let mut lam_args: Vec<VarId> = jet.coords.all().to_vec();
    lam_args.push(jet.u);
    lam_args.extend(jet.u1.iter().copied());
    let lam_fn = function(&fresh_name("lambda"), &lam_args)?;
    let lam = Expr::atom(fn_atom(lam_fn));

    let h = p.h_expr();
    let e = apply_second_prolongation(p, x)? - lam.clone() * h;

    let u2vars = jet.u2_distinct();
    let map = collect_monomials(&e, &u2vars)?;

    let mut eqs = Vec::new();
    for i in 0..n {
        for j in i..n {
            let u2name = var_name(jet.u2[i][j]);
            let key = vec![(var_atom(jet.u2[i][j]), 1u32)];
            let Some(c) = map.get(&key) else { continue };
            let cmap = collect_monomials(c, &jet.u1)?;
            for (k1, coeff) in cmap {
                let deg: u32 = k1.iter().map(|(_, p)| *p).sum();
                let tag = match deg {
                    0 => "Po.2",
                    1 => "Po.1",
                    _ => "Po.0",
                };
                let mut full_key = key.clone();
                full_key.extend(k1.iter().copied());
                full_key.sort_unstable();
                eqs.push(DeterminingEquation {
                    source: if k1.is_empty() {
                        u2name.clone()
                    } else {
                        format!("{u2name}*{}", mono_source(&k1))
                    },
                    tag: tag.into(),
                    residual: coeff,
                    key: full_key,
                    component: None,
                });
            }
        }
    }
    // Any genuinely quadratic second-order monomial would indicate a bug in
    // the prolongation formulas; surface it rather than dropping it.
    for (key, coeff) in &map {
        let deg: u32 = key.iter().map(|(_, p)| *p).sum();
        if deg >= 2 {
            eqs.push(DeterminingEquation {
                source: mono_source(key),
                tag: "Po.0".into(),
                residual: coeff.clone(),
                key: key.clone(),
                component: None,
            });
        }
    }

    if let Some(r) = map.get(&Vec::new()) {
        let rmap = collect_monomials(r, &jet.u1)?;
        let mut rest: BTreeMap<Vec<(AtomId, u32)>, Expr> = BTreeMap::new();
        for (k1, coeff) in rmap {
            let deg: u32 = k1.iter().map(|(_, p)| *p).sum();
            if deg == 3 {
                eqs.push(DeterminingEquation {
                    source: mono_source(&k1),
                    tag: "Po.2a".into(),
                    residual: coeff,
                    key: k1,
                    component: None,
                });
            } else {
                rest.insert(k1, coeff);
            }
        }
        eqs.push(DeterminingEquation {
            source: "1".into(),
            tag: "GPE.30".into(),
            residual: crate::symexpr::collect::recombine(&rest),
            key: Vec::new(),
            component: None,
        });
    }

    let mut refs: Vec<&Expr> = x.xi.iter().collect();
    refs.push(&x.eta);
    refs.push(&lam);
    let unknowns = collect_unknowns(&refs);
    Ok(DeterminingSystem { equations: eqs, multiplier: Some(lam), unknowns })
}

/// Determining equations for the linear right-hand side
/// `A^{ij} u_ij − B^k(x,u) u_k − f(x,u) = 0`, with `η = a(x)u + b(x)`
/// substituted and `λ` solved from the first nonvanishing coefficient
/// `A^{ij}`. Emitted tags: `GPE.42`–`GPE.47` and, when the evolution
/// coordinate decouples (`A^{tt} = A^{ti} = 0`, spatial block invertible),
/// `GPE.46a`.
pub fn determining_linear(p: &PDEProblem, x: &GeneratorPDE) -> Result<DeterminingSystem> {
    let FForm::Linear { b: bvec, f } = &p.fform else {
        return Err(Error::Spec("linear determining equations need a linear right-hand side".into()));
    };
    p.check_generator(x)?;
    let jet = &p.jet;
    let n = jet.dim();
    let c = jet.coords.all().to_vec();
    let u = jet.u;
    let uvar = Expr::var(u);

    let a_e = x.eta.diff(u);
    let b_e = x.eta.clone() - uvar.clone() * a_e.clone();
    let eta_lin = a_e.clone() * uvar.clone() + b_e.clone();

    let mut eqs = Vec::new();

    // η must be linear in u and ξ^k independent of u.
    eqs.push(DeterminingEquation {
        source: "eta".into(),
        tag: "GPE.45".into(),
        residual: x.eta.diff(u).diff(u),
        key: Vec::new(),
        component: None,
    });
    for k in 0..n {
        eqs.push(DeterminingEquation {
            source: var_name(c[k]),
            tag: "GPE.46".into(),
            residual: x.xi[k].diff(u),
            key: Vec::new(),
            component: Some(k),
        });
    }

    // Solve λ from the first nonvanishing diagonal of the u_ij group.
    let lie_a = lie_derivative_upper(&x.xi, &p.a_upper, &c);
    let (pi, pj) = p.first_nonzero();
    let lam = a_e.clone()
        + (lie_a[pi][pj].clone() + eta_lin.clone() * p.a_upper[pi][pj].diff(u))
            / p.a_upper[pi][pj].clone();

    for i in 0..n {
        for j in i..n {
            eqs.push(DeterminingEquation {
                source: var_name(jet.u2[i][j]),
                tag: "GPE.44".into(),
                residual: lie_a[i][j].clone()
                    - (lam.clone() - a_e.clone()) * p.a_upper[i][j].clone()
                    + eta_lin.clone() * p.a_upper[i][j].diff(u),
                key: vec![(var_atom(jet.u2[i][j]), 1)],
                component: None,
            });
        }
    }

    // GPE.42: the first-derivative-free group.
    let mut r42 = Expr::zero();
    for i in 0..n {
        for j in 0..n {
            r42 = r42
                + p.a_upper[i][j].clone()
                    * (a_e.diff(c[i]).diff(c[j]) * uvar.clone() + b_e.diff(c[i]).diff(c[j]));
        }
    }
    for i in 0..n {
        r42 = r42 - (a_e.diff(c[i]) * uvar.clone() + b_e.diff(c[i])) * bvec[i].clone();
    }
    for k in 0..n {
        r42 = r42 - x.xi[k].clone() * f.diff(c[k]);
    }
    r42 = r42 - eta_lin.clone() * f.diff(u) + lam.clone() * f.clone();
    eqs.push(DeterminingEquation {
        source: "1".into(),
        tag: "GPE.42".into(),
        residual: r42,
        key: Vec::new(),
        component: None,
    });

    // GPE.43 / GPE.47: the linear first-derivative group, per free index.
    for k in 0..n {
        let mut r43 = Expr::zero();
        for i in 0..n {
            for j in 0..n {
                r43 = r43 + p.a_upper[i][j].clone() * x.xi[k].diff(c[i]).diff(c[j]);
            }
        }
        for i in 0..n {
            r43 = r43 - Expr::int(2) * p.a_upper[i][k].clone() * a_e.diff(c[i]);
        }
        r43 = r43 + a_e.clone() * bvec[k].clone() + a_e.clone() * uvar.clone() * bvec[k].diff(u);
        for i in 0..n {
            r43 = r43 - x.xi[k].diff(c[i]) * bvec[i].clone()
                + x.xi[i].clone() * bvec[k].diff(c[i]);
        }
        r43 = r43 - lam.clone() * bvec[k].clone() + b_e.clone() * bvec[k].diff(u);
        eqs.push(DeterminingEquation {
            source: var_name(c[k]),
            tag: "GPE.43".into(),
            residual: r43.clone(),
            key: Vec::new(),
            component: Some(k),
        });

        let mut r47 = Expr::zero();
        for i in 0..n {
            for j in 0..n {
                r47 = r47 + p.a_upper[i][j].clone() * x.xi[k].diff(c[i]).diff(c[j]);
            }
        }
        for i in 0..n {
            r47 = r47 - Expr::int(2) * p.a_upper[i][k].clone() * a_e.diff(c[i]);
        }
        for i in 0..n {
            r47 = r47 + x.xi[i].clone() * bvec[k].diff(c[i]) - bvec[i].clone() * x.xi[k].diff(c[i]);
        }
        r47 = r47
            + (a_e.clone() - lam.clone()) * bvec[k].clone()
            + (a_e.clone() * uvar.clone() + b_e.clone()) * bvec[k].diff(u);
        eqs.push(DeterminingEquation {
            source: var_name(c[k]),
            tag: "GPE.47".into(),
            residual: r47,
            key: Vec::new(),
            component: Some(k),
        });
    }

    // GPE.46a: ξ^t = ξ^t(t) when the evolution row of A vanishes and the
    // spatial block is invertible.
    if let Some(t) = jet.coords.time() {
        let ti = c.iter().position(|&v| v == t).expect("time is a coordinate");
        let row_zero = (0..n).all(|j| p.a_upper[ti][j].is_zero());
        if row_zero {
            let spatial: Vec<usize> = (0..n).filter(|&i| i != ti).collect();
            let sub: Matrix = spatial
                .iter()
                .map(|&i| spatial.iter().map(|&j| p.a_upper[i][j].clone()).collect())
                .collect();
            if invert_matrix(&sub).is_ok() {
                for &i in &spatial {
                    eqs.push(DeterminingEquation {
                        source: var_name(c[i]),
                        tag: "GPE.46a".into(),
                        residual: x.xi[ti].diff(c[i]),
                        key: Vec::new(),
                        component: Some(i),
                    });
                }
            }
        }
    }

    let mut refs: Vec<&Expr> = x.xi.iter().collect();
    refs.push(&x.eta);
    refs.push(&lam);
    let unknowns = collect_unknowns(&refs);
    Ok(DeterminingSystem { equations: eqs, multiplier: Some(lam), unknowns })
}

/// Outcome of [`verify_symmetry`].
#[derive(Clone, Debug)]
pub struct VerifyOutcome {
    pub is_symmetry: bool,
    pub lambda: Expr,
    pub residual: Expr,
}

/// Check whether `X` generates a point symmetry of the PDE: solve the
/// multiplier `λ` from the first nonvanishing `u_ij` coefficient of
/// `X^[2](H)` and test whether `X^[2](H) − λH` vanishes identically in all
/// base and jet variables.
pub fn verify_symmetry(p: &PDEProblem, x: &GeneratorPDE) -> Result<VerifyOutcome> {
    let e0 = apply_second_prolongation(p, x)?;
    let h = p.h_expr();
    let (i, j) = p.first_nonzero();
    let mult = if i == j { 1 } else { 2 };
    let v = p.jet.u2[i][j];
    let coeff = crate::symexpr::coefficient_of(&e0, &[v], &[(v, 1)])?;
    let lambda = coeff / (Expr::int(mult) * p.a_upper[i][j].clone());
    let residual = e0 - lambda.clone() * h;
    Ok(VerifyOutcome { is_symmetry: residual.is_zero(), lambda, residual })
}

/// How the first-derivative dependence of `ξ^k` is eliminated from the
/// symmetrized coefficient tensor `A^{(ij} z^{k)}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EliminationCase {
    /// `A` invertible: contracting with the inverse gives `(n+2) z^k = 0`.
    InvertibleContraction,
    /// `A` degenerate with `A^{dd} ≠ 0`: the `(d,d,d)` component forces
    /// `z^d = 0`, then the `(d,d,k)` components force every `z^k = 0`.
    DiagonalPivot(usize),
}

/// Reproduce the exact linear elimination showing that
/// `A^{(ij} z^{k)} = 0` forces `z^k = 0` whenever some `A^{ij} ≠ 0`
/// (so every `ξ^k` is independent of `u`). Returns `None` when neither
/// elimination applies (degenerate `A` with vanishing diagonal).
pub fn proposition1_xi_u(a: &Matrix) -> Result<Option<EliminationCase>> {
    let n = a.len();
    if a.iter().all(|row| row.iter().all(|e| e.is_zero())) {
        return Err(Error::Degenerate("all second-order coefficients vanish".into()));
    }
    let z: Vec<Expr> = (0..n)
        .map(|_| {
            let f = crate::symexpr::constant(&fresh_name("z"))?;
            Ok(Expr::atom(fn_atom(f)))
        })
        .collect::<Result<_>>()?;
    let sym = |i: usize, j: usize, k: usize| {
        a[i][j].clone() * z[k].clone() + a[k][j].clone() * z[i].clone()
            + a[i][k].clone() * z[j].clone()
    };

    if let Ok(binv) = invert_matrix(a) {
        let mut ok = true;
        for k in 0..n {
            let mut s = Expr::zero();
            for i in 0..n {
                for j in 0..n {
                    s = s + binv[i][j].clone() * sym(i, j, k);
                }
            }
            if !(s - Expr::int(n as i64 + 2) * z[k].clone()).is_zero() {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(EliminationCase::InvertibleContraction));
        }
    }

    for d in 0..n {
        if a[d][d].is_zero() {
            continue;
        }
        // (d,d,d): 3 A^{dd} z^d = 0 forces z^d = 0.
        if !(sym(d, d, d) - Expr::int(3) * a[d][d].clone() * z[d].clone()).is_zero() {
            continue;
        }
        let zd_atom = z[d].atoms()[0];
        let mut ok = true;
        for k in 0..n {
            if k == d {
                continue;
            }
            // (d,d,k) with z^d = 0 reduces to A^{dd} z^k = 0.
            let reduced = sym(d, d, k).substitute(zd_atom, &Expr::zero());
            if !(reduced - a[d][d].clone() * z[k].clone()).is_zero() {
                ok = false;
                break;
            }
        }
        if ok {
            return Ok(Some(EliminationCase::DiagonalPivot(d)));
        }
    }
    Ok(None)
}

/// One polynomial force term `P^i_{j1..jm}(t, x) x'^{j1} … x'^{jm}` of an ODE
/// system: `comp[i]` holds the components in row-major order over the `m`
/// lower indices, which must be symmetric.
#[derive(Clone, Debug)]
pub struct ForceTerm {
    pub order: usize,
    pub comp: Vec<Vec<Expr>>,
}

impl ForceTerm {
    pub fn new(order: usize, comp: Vec<Vec<Expr>>, n: usize) -> Result<ForceTerm> {
        let len = n.pow(order as u32);
        if comp.len() != n || comp.iter().any(|c| c.len() != len) {
            return Err(Error::Spec("force tensor dimension mismatch".into()));
        }
        for ci in &comp {
            for (flat, e) in ci.iter().enumerate() {
                let mut idx = unflatten(flat, order, n);
                idx.sort_unstable();
                let canon = flatten(&idx, n);
                if canon != flat && !(e.clone() - ci[canon].clone()).is_zero() {
                    return Err(Error::Spec(
                        "force tensor must be symmetric in its lower indices".into(),
                    ));
                }
            }
        }
        Ok(ForceTerm { order, comp })
    }
}

fn unflatten(mut flat: usize, m: usize, n: usize) -> Vec<usize> {
    let mut idx = vec![0usize; m];
    for slot in (0..m).rev() {
        idx[slot] = flat % n;
        flat /= n;
    }
    idx
}

fn flatten(idx: &[usize], n: usize) -> usize {
    idx.iter().fold(0usize, |acc, &i| acc * n + i)
}

/// Determining equations for the ODE system
/// `x''^i + Γ^i_jk x'^j x'^k + Σ_m P^i_{j1..jm} x'^{j1} … x'^{jm} = 0`:
/// the prolonged action is evaluated on solutions (accelerations substituted
/// from the equation) and split by velocity monomials. When every force term
/// has order zero the velocity degrees 0–3 carry the tags `de.13`–`de.16`;
/// otherwise degree `d` is tagged `de.m{d}` per the general recursion.
pub fn determining_ode(
    conn: &Connection,
    forces: &[ForceTerm],
    x: &GeneratorODE,
) -> Result<DeterminingSystem> {
    let n = conn.coords.len();
    if x.eta.len() != n {
        return Err(Error::Spec("generator component count mismatch".into()));
    }
    let coords = conn.coords.clone();
    let t = x.t;
    if coords.contains(&t) {
        return Err(Error::Spec("the curve parameter cannot be a coordinate".into()));
    }
    for f in forces {
        if f.comp.len() != n {
            return Err(Error::Spec("force tensor dimension mismatch".into()));
        }
    }

    let mut vel = Vec::with_capacity(n);
    let mut acc = Vec::with_capacity(n);
    for &c in &coords {
        vel.push(var(&format!("{}_dot", var_name(c)))?);
        acc.push(var(&format!("{}_ddot", var_name(c)))?);
    }
    for e in std::iter::once(&x.xi).chain(x.eta.iter()) {
        for &v in vel.iter().chain(acc.iter()) {
            if e.contains_var(v) {
                return Err(Error::Spec(format!(
                    "generator components must not depend on the jet variable `{}`",
                    var_name(v)
                )));
            }
        }
    }

    // G^i = Γ^i_jk v^j v^k + Σ_m P^i_{j1..jm} v^{j1} … v^{jm}.
    let mut g = vec![Expr::zero(); n];
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                g[i] = g[i].clone()
                    + conn.gamma[i][j][k].clone() * Expr::var(vel[j]) * Expr::var(vel[k]);
            }
        }
    }
    for f in forces {
        for i in 0..n {
            for (flat, e) in f.comp[i].iter().enumerate() {
                if e.is_zero() {
                    continue;
                }
                let mut term = e.clone();
                for &j in &unflatten(flat, f.order, n) {
                    term = term * Expr::var(vel[j]);
                }
                g[i] = g[i].clone() + term;
            }
        }
    }

    let dt = |e: &Expr| -> Expr {
        let mut acc_e = e.diff(t);
        for j in 0..n {
            acc_e = acc_e
                + Expr::var(vel[j]) * e.diff(coords[j])
                + Expr::var(acc[j]) * e.diff(vel[j]);
        }
        acc_e
    };

    let dt_xi = dt(&x.xi);
    let eta1: Vec<Expr> = (0..n)
        .map(|i| dt(&x.eta[i]) - Expr::var(vel[i]) * dt_xi.clone())
        .collect();
    let eta2: Vec<Expr> = (0..n)
        .map(|i| dt(&eta1[i]) - Expr::var(acc[i]) * dt_xi.clone())
        .collect();

    let mut eqs = Vec::new();
    let pure_geodesic_forces = forces.iter().all(|f| f.order == 0);
    for i in 0..n {
        let mut e = eta2[i].clone() + x.xi.clone() * g[i].diff(t);
        for j in 0..n {
            e = e + x.eta[j].clone() * g[i].diff(coords[j]) + eta1[j].clone() * g[i].diff(vel[j]);
        }
        // Evaluate on solutions: x''^j = −G^j.
        for j in 0..n {
            e = e.substitute_var(acc[j], &(Expr::int(-1) * g[j].clone()));
        }
        let map = collect_monomials(&e, &vel)?;
        for (key, coeff) in map {
            let deg: u32 = key.iter().map(|(_, p)| *p).sum();
            let tag = if pure_geodesic_forces && deg <= 3 {
                format!("de.{}", 13 + deg)
            } else {
                format!("de.m{deg}")
            };
            eqs.push(DeterminingEquation {
                source: format!("{}: {}", var_name(coords[i]), mono_source(&key)),
                tag,
                residual: coeff,
                key,
                component: Some(i),
            });
        }
    }

    let mut refs: Vec<&Expr> = vec![&x.xi];
    refs.extend(x.eta.iter());
    let unknowns = collect_unknowns(&refs);
    Ok(DeterminingSystem { equations: eqs, multiplier: None, unknowns })
}
