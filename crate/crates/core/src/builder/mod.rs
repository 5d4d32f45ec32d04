//! Constructive symmetry assembly from a known homothetic/projective
//! algebra of a metric: Noether point symmetries and first integrals of
//! autonomous mechanical systems, symmetry families of evolution
//! (heat-type) equations with their constraint residuals, the
//! wave-equation family, and closed-form symmetry counts.
//!
//! Constraint residuals are first-class outputs: when the flux, the gauge
//! term, or the potential is left opaque, the constructors return the
//! residual expression instead of failing; the caller (or a test) decides
//! whether it vanishes.

use crate::error::{Error, Result};
use crate::prolongation::{determining_ode, FForm, ForceTerm, GeneratorODE, Jet, PDEProblem};
use crate::symexpr::{
    collect_atom_monomials, collect_monomials, constant, fn_atom, fresh_name, function,
    ruled_function, set_diff_rules, var, var_name, AtomId, Expr, Rat, VarId,
};
use crate::tensor::{
    christoffel, classify_collineation, lie_derivative_metric, Connection, Coordinates,
    GradientStatus, MetricField, Tag, VectorField,
};
use crate::linalg::nullspace;

/// Velocity variable paired with a configuration coordinate (shared naming
/// with the ODE determining-equation extraction).
fn velocity_var(c: VarId) -> Result<VarId> {
    var(&format!("{}_dot", var_name(c)))
}

fn opaque(name_prefix: &str, args: &[VarId]) -> Result<Expr> {
    Ok(Expr::atom(fn_atom(function(&fresh_name(name_prefix), args)?)))
}

fn opaque_const(name_prefix: &str) -> Result<Expr> {
    Ok(Expr::atom(fn_atom(constant(&fresh_name(name_prefix))?)))
}

/// The conformal factor ψ with `L_Y g = 2ψ g`, required to be constant
/// (so Y is a KV or HV); errors otherwise.
fn homothetic_factor(g: &MetricField, y: &VectorField) -> Result<Expr> {
    let n = g.dim();
    let lg = lie_derivative_metric(y, g);
    let mut psi = Expr::zero();
    'outer: for i in 0..n {
        for j in 0..n {
            if !g.lower[i][j].is_zero() {
                psi = lg[i][j].clone() / (Expr::int(2) * g.lower[i][j].clone());
                break 'outer;
            }
        }
    }
    for &c in &g.coords {
        if psi.contains_var(c) {
            return Err(Error::Precondition(
                "vector is not in the homothetic algebra: nonconstant conformal factor".into(),
            ));
        }
    }
    for i in 0..n {
        for j in 0..n {
            let r = lg[i][j].clone() - Expr::int(2) * psi.clone() * g.lower[i][j].clone();
            if !r.is_zero() {
                return Err(Error::Precondition(
                    "vector is not in the homothetic algebra: L_Y g is not proportional to g"
                        .into(),
                ));
            }
        }
    }
    Ok(psi)
}

// ---------------------------------------------------------------------------
// Ruled time profile T(t) with T'' = m T
// ---------------------------------------------------------------------------

/// A symbolic time profile `T(t)` obeying `T_,tt = m T`, together with its
/// first derivative `Tp = T_,t` and antiderivative `IT = ∫T dt` (so
/// `IT' = T`, `T' = Tp`, `Tp' = m T`). Each clock gets fresh symbols, so
/// independent constructions never share derivative rules.
#[derive(Clone, Debug)]
pub struct RuledClock {
    pub t: VarId,
    /// The constant in `T_,tt = m T` (solved value or an opaque constant).
    pub m: Expr,
    pub t_fn: Expr,
    pub tp: Expr,
    pub it: Expr,
    pub t_atom: AtomId,
    pub tp_atom: AtomId,
    pub it_atom: AtomId,
}

impl RuledClock {
    pub fn new(t: VarId, m: Expr) -> Result<Self> {
        let f_t = function(&fresh_name("T"), &[t])?;
        let m_rule = m.clone();
        let f_tp = ruled_function(&fresh_name("Tp"), t, move |_| {
            m_rule * Expr::atom(fn_atom(f_t))
        })?;
        set_diff_rules(f_t, vec![Expr::atom(fn_atom(f_tp))])?;
        let f_it = ruled_function(&fresh_name("IT"), t, move |_| Expr::atom(fn_atom(f_t)))?;
        Ok(RuledClock {
            t,
            m,
            t_fn: Expr::atom(fn_atom(f_t)),
            tp: Expr::atom(fn_atom(f_tp)),
            it: Expr::atom(fn_atom(f_it)),
            t_atom: fn_atom(f_t),
            tp_atom: fn_atom(f_tp),
            it_atom: fn_atom(f_it),
        })
    }

    /// Substitute a concrete profile `(T, Tp, IT)` into an expression.
    pub fn instantiate(&self, e: &Expr, t_val: &Expr, tp_val: &Expr, it_val: &Expr) -> Expr {
        e.substitute(self.t_atom, t_val)
            .substitute(self.tp_atom, tp_val)
            .substitute(self.it_atom, it_val)
    }
}

// ---------------------------------------------------------------------------
// Noether point symmetries of autonomous mechanical systems
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NoetherCase {
    /// Generator `2ψ_Y t ∂_t + Y^i ∂_i` from any HV/KV.
    Homothetic,
    /// Generator `2ψ ∫T dt ∂_t + T S^{,i} ∂_i` from a gradient HV/KV.
    GradientClock,
}

#[derive(Clone, Debug)]
pub struct NoetherResult {
    pub case: NoetherCase,
    pub psi: Expr,
    /// Coefficient of `∂_t` in the generator.
    pub xi_t: Expr,
    /// Spatial components of the generator.
    pub eta: Vec<Expr>,
    /// Gauge function `G(t, x)`.
    pub gauge: Expr,
    /// The constant of the energy-shift gauge (solved when possible).
    pub p: Expr,
    /// The clock of the gradient case (`T_,tt = m T`).
    pub clock: Option<RuledClock>,
    /// Constraint residual; the generator is a Noether symmetry iff it
    /// vanishes.
    pub residual: Expr,
    /// First integral expressed in coordinates and velocities `x_dot`.
    pub integral: Expr,
}

fn hamiltonian(g: &MetricField, v: &Expr, vels: &[VarId]) -> Expr {
    let n = g.dim();
    let mut e = v.clone();
    for i in 0..n {
        for j in 0..n {
            e = e + Expr::rational(1, 2)
                * g.lower[i][j].clone()
                * Expr::var(vels[i])
                * Expr::var(vels[j]);
        }
    }
    e
}

fn momentum(g: &MetricField, y: &[Expr], vels: &[VarId]) -> Expr {
    let n = g.dim();
    let mut p = Expr::zero();
    for i in 0..n {
        for j in 0..n {
            p = p + g.lower[i][j].clone() * y[i].clone() * Expr::var(vels[j]);
        }
    }
    p
}

/// Noether point symmetry generated by an HV/KV `Y` of the kinetic metric
/// for the Lagrangian `½ g_ij ẋ^i ẋ^j − V`:
/// generator `2ψ_Y t ∂_t + Y^i ∂_i`, gauge `G = p t`, admitted iff
/// `L_Y V + 2ψ_Y V + p = 0`; first integral
/// `I = 2ψ_Y t E − g_ij Y^i ẋ^j + p t`.
pub fn noether_case1(
    g: &MetricField,
    t: VarId,
    y: &VectorField,
    v: &Expr,
) -> Result<NoetherResult> {
    let n = g.dim();
    if g.coords.contains(&t) {
        return Err(Error::Precondition("time variable is a metric coordinate".into()));
    }
    let psi = homothetic_factor(g, y)?;
    let mut r0 = Expr::int(2) * psi.clone() * v.clone();
    for k in 0..n {
        r0 = r0 + y.comps[k].clone() * v.diff(g.coords[k]);
    }
    let constant_r0 = g.coords.iter().all(|&c| !r0.contains_var(c));
    let (p, residual) = if constant_r0 {
        (Expr::int(-1) * r0, Expr::zero())
    } else {
        let p = opaque_const("p")?;
        (p.clone(), r0 + p)
    };
    let vels: Vec<VarId> = g.coords.iter().map(|&c| velocity_var(c)).collect::<Result<_>>()?;
    let energy = hamiltonian(g, v, &vels);
    let integral = Expr::int(2) * psi.clone() * Expr::var(t) * energy
        - momentum(g, &y.comps, &vels)
        + p.clone() * Expr::var(t);
    Ok(NoetherResult {
        case: NoetherCase::Homothetic,
        psi: psi.clone(),
        xi_t: Expr::int(2) * psi * Expr::var(t),
        eta: y.comps.clone(),
        gauge: p.clone() * Expr::var(t),
        p,
        clock: None,
        residual,
        integral,
    })
}

/// Try to solve `r0 + m s + p = 0` for constants `(m, p)` exactly; `None`
/// when no constant solution exists.
fn solve_mp(r0: &Expr, s: &Expr, coords: &[VarId]) -> Option<(Expr, Expr)> {
    let mut m = Expr::zero();
    for &c in coords {
        let ds = s.diff(c);
        if !ds.is_zero() {
            let cand = Expr::int(-1) * r0.diff(c) / ds;
            if coords.iter().any(|&cc| cand.contains_var(cc)) {
                return None;
            }
            m = cand;
            break;
        }
    }
    let shifted = r0.clone() + m.clone() * s.clone();
    if coords.iter().any(|&c| !shifted.diff(c).is_zero()) {
        return None;
    }
    let p = Expr::int(-1) * shifted;
    if coords.iter().any(|&c| p.contains_var(c)) {
        return None;
    }
    Some((m, p))
}

/// Noether point symmetry generated by a gradient HV/KV with potential `S`
/// (`Y_i = S_,i`): generator `2ψ ∫T dt ∂_t + T S^{,i} ∂_i` with
/// `T_,tt = m T`, gauge `G = T_,t S + p ∫T dt`, admitted iff
/// `L_Y V + 2ψ V + m S + p = 0`; first integral
/// `I = 2ψ ∫T dt E − T g_ij S^{,i} ẋ^j + T_,t S + p ∫T dt`.
pub fn noether_case2(
    g: &MetricField,
    t: VarId,
    s: &Expr,
    v: &Expr,
) -> Result<NoetherResult> {
    let n = g.dim();
    if g.coords.contains(&t) {
        return Err(Error::Precondition("time variable is a metric coordinate".into()));
    }
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Expr::zero();
        for j in 0..n {
            acc = acc + g.upper[i][j].clone() * s.diff(g.coords[j]);
        }
        y.push(acc);
    }
    let yv = VectorField::new(y.clone());
    if yv.is_zero() {
        return Err(Error::Precondition("gradient potential has zero gradient".into()));
    }
    let psi = homothetic_factor(g, &yv)?;
    let mut r0 = Expr::int(2) * psi.clone() * v.clone();
    for k in 0..n {
        r0 = r0 + y[k].clone() * v.diff(g.coords[k]);
    }
    let (m, p, solved) = match solve_mp(&r0, s, &g.coords) {
        Some((m, p)) => (m, p, true),
        None => (opaque_const("m")?, opaque_const("p")?, false),
    };
    let clock = RuledClock::new(t, m.clone())?;
    let residual = if solved {
        let r = r0.clone() + m.clone() * s.clone() + p.clone();
        debug_assert!(r.is_zero());
        Expr::zero()
    } else {
        r0 + m.clone() * s.clone() + p.clone()
    };
    let vels: Vec<VarId> = g.coords.iter().map(|&c| velocity_var(c)).collect::<Result<_>>()?;
    let energy = hamiltonian(g, v, &vels);
    // g_ij S^{,i} ẋ^j = S_,j ẋ^j
    let mut s_mom = Expr::zero();
    for j in 0..n {
        s_mom = s_mom + s.diff(g.coords[j]) * Expr::var(vels[j]);
    }
    let integral = Expr::int(2) * psi.clone() * clock.it.clone() * energy
        - clock.t_fn.clone() * s_mom
        + clock.tp.clone() * s.clone()
        + p.clone() * clock.it.clone();
    let eta: Vec<Expr> = y.iter().map(|c| clock.t_fn.clone() * c.clone()).collect();
    Ok(NoetherResult {
        case: NoetherCase::GradientClock,
        psi: psi.clone(),
        xi_t: Expr::int(2) * psi * clock.it.clone(),
        eta,
        gauge: clock.tp.clone() * s.clone() + p.clone() * clock.it.clone(),
        p,
        clock: Some(clock),
        residual,
        integral,
    })
}

/// Total time derivative of `e(t, x, ẋ)` along `ẍ^i = −Γ^i_jk ẋ^j ẋ^k + F^i`.
pub fn on_shell_time_derivative(
    e: &Expr,
    t: VarId,
    conn: &Connection,
    f: Option<&VectorField>,
) -> Result<Expr> {
    let n = conn.coords.len();
    let vels: Vec<VarId> =
        conn.coords.iter().map(|&c| velocity_var(c)).collect::<Result<_>>()?;
    let mut out = e.diff(t);
    for j in 0..n {
        out = out + Expr::var(vels[j]) * e.diff(conn.coords[j]);
    }
    for i in 0..n {
        let mut acc = Expr::zero();
        for j in 0..n {
            for k in 0..n {
                acc = acc
                    - conn.gamma[i][j][k].clone() * Expr::var(vels[j]) * Expr::var(vels[k]);
            }
        }
        if let Some(fv) = f {
            acc = acc + fv.comps[i].clone();
        }
        out = out + acc * e.diff(vels[i]);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Lie symmetries of geodesic-type ODEs by linear ansatz over an algebra
// ---------------------------------------------------------------------------

/// Solve for all rational linear combinations of the supplied basis whose
/// determining equations vanish: the ansatz is
/// `X = (Σ a_k ξ_k) ∂_t + Σ b_l η_l^i ∂_i` and the determining system is
/// linear and homogeneous in `(a, b)`.
pub fn solve_ode_symmetries(
    conn: &Connection,
    forces: &[ForceTerm],
    t: VarId,
    xi_basis: &[Expr],
    eta_basis: &[VectorField],
) -> Result<Vec<GeneratorODE>> {
    let n = conn.coords.len();
    let mut atoms: Vec<AtomId> = Vec::new();
    let mut xi = Expr::zero();
    for b in xi_basis {
        let c = constant(&fresh_name("sca"))?;
        atoms.push(fn_atom(c));
        xi = xi + Expr::atom(fn_atom(c)) * b.clone();
    }
    let mut eta = vec![Expr::zero(); n];
    for b in eta_basis {
        let c = constant(&fresh_name("sca"))?;
        atoms.push(fn_atom(c));
        for i in 0..n {
            eta[i] = eta[i].clone() + Expr::atom(fn_atom(c)) * b.comps[i].clone();
        }
    }
    let gen = GeneratorODE { t, xi, eta };
    let ds = determining_ode(conn, forces, &gen)?;

    let mut vars = vec![t];
    vars.extend_from_slice(&conn.coords);
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for eq in &ds.equations {
        if eq.residual.is_zero() {
            continue;
        }
        // Clearing the denominator keeps the system linear in the unknown
        // constants (they enter the numerator linearly) and makes the
        // coefficients polynomial in t and the coordinates.
        let num = Expr::from_poly(eq.residual.numerator().clone());
        for (_, coeff) in collect_monomials(&num, &vars)? {
            let parts = collect_atom_monomials(&coeff, &atoms)?;
            let mut row = vec![Rat::from_integer(0.into()); atoms.len()];
            for (key, val) in parts {
                if key.len() != 1 || key[0].1 != 1 {
                    return Err(Error::Degenerate(
                        "determining system is not linear in the ansatz constants".into(),
                    ));
                }
                let pos = atoms.iter().position(|&a| a == key[0].0).ok_or_else(|| {
                    Error::Degenerate("free constant outside the ansatz".into())
                })?;
                let r = val.as_rational().ok_or_else(|| {
                    Error::Degenerate("non-rational coefficient in the linear system".into())
                })?;
                row[pos] = r;
            }
            rows.push(row);
        }
    }
    let null = nullspace(&rows, atoms.len());
    let mut out = Vec::new();
    for sol in &null {
        let inst = |e: &Expr| {
            let mut r = e.clone();
            for (a, val) in atoms.iter().zip(sol.iter()) {
                r = r.substitute(*a, &Expr::from_rat(val.clone()));
            }
            r
        };
        let g = GeneratorODE {
            t,
            xi: inst(&gen.xi),
            eta: gen.eta.iter().map(&inst).collect(),
        };
        // Soundness: never trust the elimination alone.
        let check = determining_ode(conn, forces, &g)?;
        if !check.all_zero() {
            return Err(Error::Degenerate(
                "ansatz solution fails its determining equations".into(),
            ));
        }
        out.push(g);
    }
    Ok(out)
}

/// Lie symmetries of `ẍ^i + Γ^i_jk ẋ^j ẋ^k = F^i(x)` from a supplied
/// projective-algebra basis: the spatial part ranges over the algebra with
/// polynomial time profiles of degree ≤ `tdeg`, and the `∂_t` coefficient
/// over time polynomials times gradient-KV potentials found in the algebra.
pub fn lie_ode_from_projective(
    g: &MetricField,
    t: VarId,
    f: Option<&VectorField>,
    algebra: &[VectorField],
    tdeg: u32,
) -> Result<Vec<GeneratorODE>> {
    let conn = christoffel(g)?;
    let mut t_monos = Vec::new();
    for d in 0..=tdeg {
        t_monos.push(Expr::var(t).pow(i64::from(d)).unwrap());
    }
    let mut xi_scalars = vec![Expr::one()];
    for y in algebra {
        let class = classify_collineation(y, g);
        if class.tag == Tag::GradientKV {
            if let GradientStatus::Gradient(s) = class.potential {
                xi_scalars.push(s);
            }
        }
    }
    let mut xi_basis = Vec::new();
    for m in &t_monos {
        for s in &xi_scalars {
            xi_basis.push(m.clone() * s.clone());
        }
    }
    let mut eta_basis = Vec::new();
    for m in &t_monos {
        for y in algebra {
            eta_basis.push(VectorField::new(
                y.comps.iter().map(|c| m.clone() * c.clone()).collect(),
            ));
        }
    }
    let forces: Vec<ForceTerm> = match f {
        Some(fv) => vec![ForceTerm::new(0, vec![fv.comps.clone()], g.dim())?],
        None => Vec::new(),
    };
    solve_ode_symmetries(&conn, &forces, t, &xi_basis, &eta_basis)
}

// ---------------------------------------------------------------------------
// Heat-type evolution equation: symmetry families with residuals
// ---------------------------------------------------------------------------

/// The evolution problem `g^{ij}u_ij − Γ^i u_i − u_t = q(t, x, u)` as a
/// second-order PDE problem on coordinates `(t, x^i)` with dependent
/// variable `u`.
pub fn heat_problem(g: &MetricField, t: VarId, q: &Expr) -> Result<PDEProblem> {
    let n = g.dim();
    let conn = christoffel(g)?;
    let mut coords = vec![t];
    coords.extend_from_slice(&g.coords);
    let jet = Jet::new(Coordinates::with_time(coords, t)?, var("u")?)?;
    let mut a = vec![vec![Expr::zero(); n + 1]; n + 1];
    for i in 0..n {
        for j in 0..n {
            a[i + 1][j + 1] = g.upper[i][j].clone();
        }
    }
    let mut b = vec![Expr::one()];
    b.extend(conn.contracted.iter().cloned());
    PDEProblem::new(jet, a, FForm::Linear { b, f: q.clone() })
}

/// The scalar heat operator `H(b) = g^{ij}b_,ij − Γ^i b_,i − b_,t`.
pub fn heat_operator(g: &MetricField, conn: &Connection, t: VarId, b: &Expr) -> Expr {
    let n = g.dim();
    let mut h = Expr::int(-1) * b.diff(t);
    for i in 0..n {
        for j in 0..n {
            h = h + g.upper[i][j].clone() * b.diff(g.coords[i]).diff(g.coords[j]);
        }
        h = h - conn.contracted[i].clone() * b.diff(g.coords[i]);
    }
    h
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HeatCase {
    /// Constant-coefficient family from a nongradient HV/KV.
    Nongradient,
    /// Constant-coefficient family from any HV/KV, flux restricted to q(u).
    HvKvFluxU,
    /// Clocked family from a gradient HV/KV potential.
    Gradient,
}

#[derive(Clone, Debug)]
pub struct HeatSymmetry {
    pub case: HeatCase,
    /// Equation tag of the generator shape in reports.
    pub tag: String,
    pub psi: Expr,
    pub xi_t: Expr,
    pub xi: Vec<Expr>,
    pub eta: Expr,
    /// Constraint residual; the generator is a Lie symmetry iff it is zero.
    pub residual: Expr,
    pub c1: Expr,
    pub c2: Option<Expr>,
    /// The u-coefficient `a` of η (opaque `a(t)` or the built expression).
    pub a: Expr,
    /// The additive part `b(t, x)` of η.
    pub b: Expr,
    pub t_fn: Option<Expr>,
    pub f_fn: Option<Expr>,
    pub it: Option<Expr>,
}

/// Symmetry family `X = (2c₂ψt + c₁)∂_t + c₂Y^i∂_i + (a(t)u + b(t,x))∂_u`
/// of the evolution equation with flux `q(t, x, u)`, generated by a
/// nongradient HV/KV `Y`; returns the constraint residual that `a`, `b`,
/// and `q` must satisfy.
pub fn heat_symmetry_nongradient(
    g: &MetricField,
    t: VarId,
    y: &VectorField,
    q: &Expr,
) -> Result<HeatSymmetry> {
    let class = classify_collineation(y, g);
    if matches!(class.potential, GradientStatus::Gradient(_)) {
        return Err(Error::Precondition(
            "gradient HV/KV supplied to the nongradient family; use the gradient case".into(),
        ));
    }
    let psi = homothetic_factor(g, y)?;
    let u = var("u")?;
    let conn = christoffel(g)?;
    let c1 = opaque_const("c")?;
    let c2 = opaque_const("c")?;
    let a = opaque("a", &[t])?;
    let mut b_args = vec![t];
    b_args.extend_from_slice(&g.coords);
    let b = opaque("b", &b_args)?;
    let eta = a.clone() * Expr::var(u) + b.clone();
    let xi_t = Expr::int(2) * c2.clone() * psi.clone() * Expr::var(t) + c1.clone();
    let xi: Vec<Expr> = y.comps.iter().map(|e| c2.clone() * e.clone()).collect();

    let mut residual = Expr::int(-1) * a.diff(t) * Expr::var(u)
        + heat_operator(g, &conn, t, &b)
        - eta.clone() * q.diff(u)
        + a.clone() * q.clone()
        - (Expr::int(2) * psi.clone() * c2.clone() * q.clone() * Expr::var(t)
            + c1.clone() * q.clone())
        .diff(t);
    for i in 0..g.dim() {
        residual = residual - c2.clone() * q.diff(g.coords[i]) * y.comps[i].clone();
    }
    Ok(HeatSymmetry {
        case: HeatCase::Nongradient,
        tag: "HEF.19".into(),
        psi,
        xi_t,
        xi,
        eta,
        residual,
        c1,
        c2: Some(c2),
        a,
        b,
        t_fn: None,
        f_fn: None,
        it: None,
    })
}

/// Symmetry family `X = (2cψt + c₁)∂_t + cY^i∂_i + (a(t)u + b(t,x))∂_u`
/// for flux `q = q(u)` only, generated by any HV/KV (gradient allowed):
/// residual `−a_,t u + H(b) − (au + b)q_,u + (a − 2ψc)q`.
pub fn heat_symmetry_hvkv_flux(
    g: &MetricField,
    t: VarId,
    y: &VectorField,
    q: &Expr,
) -> Result<HeatSymmetry> {
    let u = var("u")?;
    if q.contains_var(t) || g.coords.iter().any(|&c| q.contains_var(c)) {
        return Err(Error::Spec(
            "this family requires a flux depending on u only".into(),
        ));
    }
    let psi = homothetic_factor(g, y)?;
    let conn = christoffel(g)?;
    let c1 = opaque_const("c")?;
    let c = opaque_const("c")?;
    let a = opaque("a", &[t])?;
    let mut b_args = vec![t];
    b_args.extend_from_slice(&g.coords);
    let b = opaque("b", &b_args)?;
    let eta = a.clone() * Expr::var(u) + b.clone();
    let residual = Expr::int(-1) * a.diff(t) * Expr::var(u)
        + heat_operator(g, &conn, t, &b)
        - eta.clone() * q.diff(u)
        + (a.clone() - Expr::int(2) * psi.clone() * c.clone()) * q.clone();
    Ok(HeatSymmetry {
        case: HeatCase::HvKvFluxU,
        tag: "HEF.24".into(),
        psi: psi.clone(),
        xi_t: Expr::int(2) * c.clone() * psi * Expr::var(t) + c1.clone(),
        xi: y.comps.iter().map(|e| c.clone() * e.clone()).collect(),
        eta,
        residual,
        c1,
        c2: Some(c),
        a,
        b,
        t_fn: None,
        f_fn: None,
        it: None,
    })
}

/// Symmetry family generated by a gradient HV/KV with potential `S`:
/// `X = (2ψ∫T dt + c₁)∂_t + T S^{,i}∂_i + ((−½T_,t S + F(t))u + b)∂_u`,
/// with the constraint residual on `T`, `F`, `b`, `q`. The u-coefficient
/// of the residual carries `−(n/2)T_,t ψ` for an n-dimensional metric
/// (the contraction `g^{ij}S_{;ij} = nψ`).
pub fn heat_symmetry_gradient(
    g: &MetricField,
    t: VarId,
    s: &Expr,
    q: &Expr,
) -> Result<HeatSymmetry> {
    let n = g.dim();
    let u = var("u")?;
    let mut y = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Expr::zero();
        for j in 0..n {
            acc = acc + g.upper[i][j].clone() * s.diff(g.coords[j]);
        }
        y.push(acc);
    }
    let yv = VectorField::new(y.clone());
    if yv.is_zero() {
        return Err(Error::Precondition("gradient potential has zero gradient".into()));
    }
    let psi = homothetic_factor(g, &yv)?;
    let conn = christoffel(g)?;
    let c1 = opaque_const("c")?;
    let t_fn = Expr::atom(fn_atom(function(&fresh_name("T"), &[t])?));
    let it_fn = {
        let t_atom = t_fn.atoms()[0];
        let rule = Expr::atom(t_atom);
        Expr::atom(fn_atom(ruled_function(&fresh_name("IT"), t, move |_| rule)?))
    };
    let f_fn = opaque("F", &[t])?;
    let mut b_args = vec![t];
    b_args.extend_from_slice(&g.coords);
    let b = opaque("b", &b_args)?;

    let half = Expr::rational(1, 2);
    let a_expr = Expr::int(-1) * half.clone() * t_fn.diff(t) * s.clone() + f_fn.clone();
    let eta = a_expr.clone() * Expr::var(u) + b.clone();
    let xi_t = Expr::int(2) * psi.clone() * it_fn.clone() + c1.clone();
    let xi: Vec<Expr> = y.iter().map(|e| t_fn.clone() * e.clone()).collect();

    let u_coeff = Expr::int(-1) * half.clone() * Expr::int(n as i64) * t_fn.diff(t) * psi.clone()
        + half * t_fn.diff(t).diff(t) * s.clone()
        - f_fn.diff(t);
    let mut residual = u_coeff * Expr::var(u)
        + heat_operator(g, &conn, t, &b)
        - eta.clone() * q.diff(u)
        + a_expr.clone() * q.clone()
        - (Expr::int(2) * psi.clone() * q.clone() * it_fn.clone() + c1.clone() * q.clone())
            .diff(t);
    for i in 0..n {
        residual = residual - t_fn.clone() * q.diff(g.coords[i]) * y[i].clone();
    }
    Ok(HeatSymmetry {
        case: HeatCase::Gradient,
        tag: "HEF.21".into(),
        psi,
        xi_t,
        xi,
        eta,
        residual,
        c1,
        c2: None,
        a: a_expr,
        b,
        t_fn: Some(t_fn),
        f_fn: Some(f_fn),
        it: Some(it_fn),
    })
}

// ---------------------------------------------------------------------------
// Symmetry counts
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpaceClass {
    OneDimensional,
    ConstantCurvature(u32),
    Flat(u32),
}

#[derive(Clone, Debug)]
pub struct SymmetryCount {
    pub class: SpaceClass,
    pub n: u32,
    pub count: u32,
    /// Breakdown of the tally; the `b(t,x)∂_u` family counts as one
    /// generator (symmetries are counted modulo a solution of the
    /// homogeneous equation).
    pub note: String,
}

/// Maximum Lie-symmetry counts of the homogeneous evolution equation,
/// cross-checked against the generator tally: for flat space
/// `1 + 2n + ½n(n−1) + 2 + 1 + 1 = ½n(n+3) + 5`.
pub fn heat_symmetry_counts(class: SpaceClass) -> SymmetryCount {
    match class {
        SpaceClass::OneDimensional => SymmetryCount {
            class,
            n: 1,
            count: 7,
            note: "2 from the gradient KV + 2 from the gradient HV + u-scaling \
                   + b(t,x) family (counted once) + time translation"
                .into(),
        },
        SpaceClass::ConstantCurvature(n) => {
            let kv = n + n * (n - 1) / 2;
            let count = kv + 3;
            debug_assert_eq!(count, (n + 3) + n * (n - 1) / 2);
            SymmetryCount {
                class,
                n,
                count,
                note: format!(
                    "{kv} nongradient KVs + time translation + u-scaling + b(t,x) family \
                     (counted once)"
                ),
            }
        }
        SpaceClass::Flat(n) => {
            let tally = 1 + 2 * n + n * (n - 1) / 2 + 2 + 1 + 1;
            debug_assert_eq!(tally, n * (n + 3) / 2 + 5);
            SymmetryCount {
                class,
                n,
                count: tally,
                note: format!(
                    "time translation (1) + two per gradient KV ({}) + rotational KVs ({}) + \
                     two from the gradient HV + u-scaling + b(t,x) family (counted once)",
                    2 * n,
                    n * (n - 1) / 2
                ),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Wave equation in an inhomogeneous medium
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct TraceStep {
    pub tag: String,
    pub statement: String,
    pub passed: bool,
}

#[derive(Clone, Debug)]
pub struct WaveFamily {
    /// The metric `diag(c⁻², −1)` read off the equation coefficients.
    pub metric: MetricField,
    /// KV/HV basis of the metric (polynomial solver output).
    pub algebra: crate::collineation::AlgebraBasis,
    /// Derivation trace: each ξ in the basis is simultaneously projective
    /// and conformal, hence homothetic with constant factor.
    pub trace: Vec<TraceStep>,
}

impl WaveFamily {
    /// The full generator `X = ξ^i∂_i + (c₁u + b)∂_u` for a chosen ξ.
    pub fn generator(&self, xi: &VectorField, c1: &Expr, b: &Expr) -> crate::prolongation::GeneratorPDE {
        let u = var("u").expect("u is a valid variable name");
        crate::prolongation::GeneratorPDE::new(
            xi.comps.clone(),
            c1.clone() * Expr::var(u) + b.clone(),
        )
    }

    /// Residual of the constraint `A^{ij} b_,ij = 0` on the additive part.
    pub fn b_constraint(&self, b: &Expr) -> Expr {
        let n = self.metric.dim();
        let mut r = Expr::zero();
        for i in 0..n {
            for j in 0..n {
                r = r + self.metric.upper[i][j].clone()
                    * b.diff(self.metric.coords[i]).diff(self.metric.coords[j]);
            }
        }
        r
    }
}

/// The two-coordinate wave problem `c²(x¹)u_11 − u_22 = 0`.
pub fn wave_problem(x1: VarId, x2: VarId, c_expr: &Expr) -> Result<PDEProblem> {
    if c_expr.is_zero() {
        return Err(Error::Spec("wave speed must not vanish identically".into()));
    }
    let jet = Jet::new(Coordinates::new(vec![x1, x2])?, var("u")?)?;
    let a = vec![
        vec![c_expr.clone() * c_expr.clone(), Expr::zero()],
        vec![Expr::zero(), Expr::int(-1)],
    ];
    PDEProblem::new(jet, a, FForm::Linear { b: vec![Expr::zero(), Expr::zero()], f: Expr::zero() })
}

/// Lie symmetries of `c²(x¹)u_11 − u_22 = 0`: the spatial part ξ ranges over
/// the KV/HV algebra of the metric `diag(c⁻², −1)` and the u-part is
/// `(c₁u + b)∂_u` with `A^{ij}b_,ij = 0`. The returned trace verifies the
/// derivation: every basis ξ is projective with the same function as its
/// conformal factor, hence homothetic with a constant factor.
pub fn wave_symmetries(x1: VarId, x2: VarId, c_expr: &Expr, degree: u32) -> Result<WaveFamily> {
    if c_expr.is_zero() {
        return Err(Error::Spec("wave speed must not vanish identically".into()));
    }
    let lower = vec![
        vec![Expr::one() / (c_expr.clone() * c_expr.clone()), Expr::zero()],
        vec![Expr::zero(), Expr::int(-1)],
    ];
    let metric = MetricField::from_lower(vec![x1, x2], lower)?;
    let algebra = crate::collineation::solve_homothetic(&metric, degree)?;
    let conn = christoffel(&metric)?;
    let mut trace = Vec::new();
    for entry in &algebra.entries {
        // Projective condition with constant factor: L_ξ Γ^k_ij = 0.
        let lg = crate::tensor::lie_derivative_connection(&entry.vector, &conn);
        let mut proj_ok = true;
        for m in &lg {
            for row in m {
                for e in row {
                    if !e.is_zero() {
                        proj_ok = false;
                    }
                }
            }
        }
        trace.push(TraceStep {
            tag: "WE.15".into(),
            statement: format!(
                "{}: A^{{ij}}(L_ξΓ^k_ij − 2δ^k_(j a_,i)) = 0 with a constant",
                entry.label
            ),
            passed: proj_ok,
        });
        // Conformal condition with constant factor, from the classifier.
        let conf_ok = matches!(entry.class.tag, Tag::KV | Tag::GradientKV | Tag::HV | Tag::GradientHV);
        trace.push(TraceStep {
            tag: "WE.16".into(),
            statement: format!(
                "{}: projective and conformal together force a homothetic ξ (constant factor)",
                entry.label
            ),
            passed: conf_ok,
        });
    }
    Ok(WaveFamily { metric, algebra, trace })
}
