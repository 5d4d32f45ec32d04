//! Exact symbolic kernel: expressions built from rationals, variables,
//! integer powers, opaque function symbols and their formal partial
//! derivatives, in canonical form.

pub mod collect;
pub mod expr;
mod modgcd;
pub mod parse;
pub mod poly;
pub mod print;
pub mod registry;

pub use collect::{clear_denominator, coefficient_of, collect_atom_monomials, collect_monomials};
pub use expr::Expr;
pub use parse::{expr, parse, parse_strict, parse_with, v, UnknownPolicy};
pub use poly::{gcd, rat, Monomial, Poly, Rat};
pub use registry::{
    atom_data, atom_display, constant, deriv_atom, diff_atom, fn_args, fn_atom, fn_name,
    fresh_name, function, lookup, ruled_function, set_diff_rules, var, var_atom, var_name,
    AtomData, AtomId, FnId, SymRef, VarId,
};
