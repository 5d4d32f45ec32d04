//! Symbolic engine for Lie point and Noether symmetries of geodesic-type
//! ODEs and second-order PDEs `A^{ij} u_ij - F(x, u, u_i) = 0`, computed by
//! reduction to collineations (Killing / homothetic / projective vectors) of
//! the metric defined by the coefficients `A^{ij}`.

pub mod builder;
pub mod collineation;
pub mod error;
pub mod linalg;
pub mod prolongation;
pub mod symexpr;
pub mod tensor;

pub use error::{Error, Result};
pub use symexpr::Expr;
