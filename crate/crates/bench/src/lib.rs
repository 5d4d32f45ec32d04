//! Shared fixtures for the engine benchmarks.

use liesym_core::prolongation::{FForm, GeneratorPDE, Jet, PDEProblem};
use liesym_core::symexpr::{var, Expr, VarId};
use liesym_core::tensor::{identity_matrix, Coordinates, MetricField};

pub fn flat_metric(names: &[&str]) -> MetricField {
    let coords: Vec<VarId> = names.iter().map(|n| var(n).unwrap()).collect();
    let n = coords.len();
    MetricField::from_lower(coords, identity_matrix(n)).unwrap()
}

/// Heat equation `u_xx + u_yy - u_t = 0` on coordinates `(t, x, y)`.
pub fn heat2d() -> PDEProblem {
    let t = var("t").unwrap();
    let x = var("x").unwrap();
    let y = var("y").unwrap();
    let u = var("u").unwrap();
    let jet = Jet::new(Coordinates::with_time(vec![t, x, y], t).unwrap(), u).unwrap();
    let mut a = identity_matrix(3);
    a[0][0] = Expr::zero();
    PDEProblem::new(
        jet,
        a,
        FForm::Linear {
            b: vec![Expr::one(), Expr::zero(), Expr::zero()],
            f: Expr::zero(),
        },
    )
    .unwrap()
}

/// The projective symmetry of the 2+1 heat equation,
/// `t² ∂_t + t(x ∂_x + y ∂_y) - ((x² + y²)/4 + t) u ∂_u`.
pub fn heat2d_projective() -> GeneratorPDE {
    let t = Expr::var(var("t").unwrap());
    let x = Expr::var(var("x").unwrap());
    let y = Expr::var(var("y").unwrap());
    let u = Expr::var(var("u").unwrap());
    GeneratorPDE::new(
        vec![t.clone() * t.clone(), t.clone() * x.clone(), t.clone() * y.clone()],
        -(Expr::rational(1, 4) * (x.clone() * x + y.clone() * y) + t) * u,
    )
}
