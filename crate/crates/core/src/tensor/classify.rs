//! Collineation classification: conformal family (KV / HV / SCKV / proper
//! CKV) with gradient tagging, and the projective family (AC / SPC / PC)
//! read off the Lie derivative of the connection.

use super::{
    christoffel, covariant_derivative_covector, lie_derivative_connection, lie_derivative_metric,
    MetricField, VectorField,
};
use crate::symexpr::Expr;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tag {
    KV,
    GradientKV,
    HV,
    GradientHV,
    SCKV,
    ProperCKV,
    AC,
    SPC,
    PC,
    None,
}

impl Tag {
    pub fn label(&self) -> &'static str {
        match self {
            Tag::KV => "KV",
            Tag::GradientKV => "gradient-KV",
            Tag::HV => "HV",
            Tag::GradientHV => "gradient-HV",
            Tag::SCKV => "SCKV",
            Tag::ProperCKV => "proper-CKV",
            Tag::AC => "AC",
            Tag::SPC => "SPC",
            Tag::PC => "PC",
            Tag::None => "none",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum GradientStatus {
    /// Gradient tagging only applies to the conformal family.
    NotApplicable,
    NonGradient,
    /// Potential `S` with `g_ij X^j = S_,i`.
    Gradient(Expr),
    /// The lowered vector is closed but the potential leaves the
    /// polynomial/rational fragment (for instance a logarithm).
    Unrepresentable,
}

#[derive(Clone, Debug)]
pub struct CollineationClass {
    pub tag: Tag,
    /// Conformal factor ψ with `L_X g = 2ψ g` (conformal family only).
    pub psi: Option<Expr>,
    /// Projective covector φ_k (projective family only).
    pub phi: Option<Vec<Expr>>,
    pub potential: GradientStatus,
}

impl CollineationClass {
    fn none() -> Self {
        CollineationClass {
            tag: Tag::None,
            psi: None,
            phi: None,
            potential: GradientStatus::NotApplicable,
        }
    }
}

/// Attempt to find a potential `S` with `g_ij X^j = S_,i` by closedness check
/// followed by successive antiderivatives coordinate by coordinate.
pub fn gradient_potential(x: &VectorField, g: &MetricField) -> GradientStatus {
    let n = g.dim();
    let c = &g.coords;
    let mut lower = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Expr::zero();
        for j in 0..n {
            acc = acc + g.lower[i][j].clone() * x.comps[j].clone();
        }
        lower.push(acc);
    }
    for i in 0..n {
        for j in 0..i {
            let d = lower[i].clone().diff(c[j]) - lower[j].clone().diff(c[i]);
            if !d.is_zero() {
                return GradientStatus::NonGradient;
            }
        }
    }
    let mut s = Expr::zero();
    for k in 0..n {
        let rest = lower[k].clone() - s.clone().diff(c[k]);
        match rest.antiderivative(c[k]) {
            Some(piece) => s = s + piece,
            None => return GradientStatus::Unrepresentable,
        }
    }
    for k in 0..n {
        if !(s.clone().diff(c[k]) - lower[k].clone()).is_zero() {
            // Closed but the staged integration failed to reproduce X_i;
            // treat as not representable rather than returning a wrong S.
            return GradientStatus::Unrepresentable;
        }
    }
    GradientStatus::Gradient(s)
}

pub fn classify_collineation(x: &VectorField, g: &MetricField) -> CollineationClass {
    let n = g.dim();
    let coords = g.coords.clone();
    let lg = lie_derivative_metric(x, g);

    // Conformal factor candidate from the trace: ψ = g^{ij}(L_X g)_ij / (2n).
    let mut tr = Expr::zero();
    for i in 0..n {
        for j in 0..n {
            tr = tr + g.upper[i][j].clone() * lg[i][j].clone();
        }
    }
    let psi = tr * Expr::rational(1, 2 * n as i64);
    let conformal = (0..n).all(|i| {
        (0..n).all(|j| {
            (lg[i][j].clone() - Expr::int(2) * psi.clone() * g.lower[i][j].clone()).is_zero()
        })
    });

    if conformal {
        if psi.is_zero() {
            let potential = gradient_potential(x, g);
            let tag = if matches!(potential, GradientStatus::Gradient(_)) {
                Tag::GradientKV
            } else {
                Tag::KV
            };
            return CollineationClass { tag, psi: Some(psi), phi: None, potential };
        }
        if psi.free_of_vars(&coords) {
            let potential = gradient_potential(x, g);
            let tag = if matches!(potential, GradientStatus::Gradient(_)) {
                Tag::GradientHV
            } else {
                Tag::HV
            };
            return CollineationClass { tag, psi: Some(psi), phi: None, potential };
        }
        // ψ depends on position. In degenerate low dimensions (n = 1 every
        // vector is conformal) a projective classification is more specific,
        // so try it first and fall back to the conformal tags.
        if let Some(pc) = projective_classify(x, g) {
            if matches!(pc.tag, Tag::SPC | Tag::PC) {
                return pc;
            }
        }
        let conn = match christoffel(g) {
            Ok(c) => c,
            Err(_) => return CollineationClass::none(),
        };
        let grad_psi: Vec<Expr> = coords.iter().map(|v| psi.clone().diff(*v)).collect();
        let hess = covariant_derivative_covector(&grad_psi, &conn);
        let special = hess.iter().all(|row| row.iter().all(|e| e.is_zero()));
        let tag = if special { Tag::SCKV } else { Tag::ProperCKV };
        return CollineationClass {
            tag,
            psi: Some(psi),
            phi: None,
            potential: GradientStatus::NotApplicable,
        };
    }

    projective_classify(x, g).unwrap_or_else(CollineationClass::none)
}

/// Projective family: L_X Γ^i_jk = δ^i_j φ_k + δ^i_k φ_j with φ a gradient.
fn projective_classify(x: &VectorField, g: &MetricField) -> Option<CollineationClass> {
    let n = g.dim();
    let coords = g.coords.clone();
    let conn = christoffel(g).ok()?;
    let lgamma = lie_derivative_connection(x, &conn);
    let all_zero = lgamma
        .iter()
        .all(|m| m.iter().all(|row| row.iter().all(|e| e.is_zero())));
    if all_zero {
        return Some(CollineationClass {
            tag: Tag::AC,
            psi: None,
            phi: None,
            potential: GradientStatus::NotApplicable,
        });
    }
    let mut phi = Vec::with_capacity(n);
    for k in 0..n {
        let mut acc = Expr::zero();
        for i in 0..n {
            acc = acc + lgamma[i][i][k].clone();
        }
        phi.push(acc * Expr::rational(1, n as i64 + 1));
    }
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let mut rhs = Expr::zero();
                if i == j {
                    rhs = rhs + phi[k].clone();
                }
                if i == k {
                    rhs = rhs + phi[j].clone();
                }
                if !(lgamma[i][j][k].clone() - rhs).is_zero() {
                    return None;
                }
            }
        }
    }
    // A projective collineation requires φ_k to be a gradient.
    for k in 0..n {
        for j in 0..k {
            let d = phi[k].clone().diff(coords[j]) - phi[j].clone().diff(coords[k]);
            if !d.is_zero() {
                return None;
            }
        }
    }
    let hess = covariant_derivative_covector(&phi, &conn);
    let special = hess.iter().all(|row| row.iter().all(|e| e.is_zero()));
    Some(CollineationClass {
        tag: if special { Tag::SPC } else { Tag::PC },
        psi: None,
        phi: Some(phi),
        potential: GradientStatus::NotApplicable,
    })
}
