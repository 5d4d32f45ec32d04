//! Global symbol registry: variables, opaque function symbols and interned atoms.
//!
//! The registry is append-only and guarded by a `RwLock`; expressions refer to
//! symbols through small integer ids, so `Expr` values stay cheap to clone and
//! safe to share across threads.

use std::collections::HashMap;
use std::sync::RwLock;

use once_cell::sync::Lazy;

use super::expr::Expr;
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct VarId(pub(crate) u32);

#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct FnId(pub(crate) u32);

/// Interned atom: a variable, an opaque function application `f(v1..vk)`, or a
/// formal partial derivative `f_{,i1...im}`. Atoms are the indeterminates of
/// the polynomial layer.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct AtomId(pub(crate) u32);

#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub enum AtomData {
    Var(VarId),
    /// Function symbol with a sorted multiset of derivative argument indices.
    /// An empty index list is the bare application `f(args)`.
    Fn { f: FnId, derivs: Vec<u8> },
}

struct VarInfo {
    name: String,
}

struct FnInfo {
    name: String,
    args: Vec<VarId>,
    /// Optional per-argument derivative rules. When present, `diff` replaces
    /// the formal derivative with the rule expression instead of emitting a
    /// formal derivative atom.
    rules: Option<Vec<Expr>>,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum SymRef {
    Var(VarId),
    Fn(FnId),
}

#[derive(Default)]
struct Registry {
    vars: Vec<VarInfo>,
    fns: Vec<FnInfo>,
    by_name: HashMap<String, SymRef>,
    atoms: Vec<AtomData>,
    atom_ids: HashMap<AtomData, AtomId>,
}

static REGISTRY: Lazy<RwLock<Registry>> = Lazy::new(|| RwLock::new(Registry::default()));

/// Declare (or look up) a plain variable.
pub fn var(name: &str) -> Result<VarId> {
    {
        let reg = REGISTRY.read().unwrap();
        match reg.by_name.get(name) {
            Some(SymRef::Var(v)) => return Ok(*v),
            Some(SymRef::Fn(_)) => {
                return Err(Error::Registry(format!(
                    "`{name}` is already declared as a function symbol"
                )))
            }
            None => {}
        }
    }
    let mut reg = REGISTRY.write().unwrap();
    if let Some(SymRef::Var(v)) = reg.by_name.get(name) {
        return Ok(*v);
    }
    let id = VarId(reg.vars.len() as u32);
    reg.vars.push(VarInfo { name: name.to_string() });
    reg.by_name.insert(name.to_string(), SymRef::Var(id));
    Ok(id)
}

/// Declare (or look up) an opaque function symbol with plain-variable
/// arguments. Re-declaring with a different argument list is an error.
pub fn function(name: &str, args: &[VarId]) -> Result<FnId> {
    {
        let reg = REGISTRY.read().unwrap();
        match reg.by_name.get(name) {
            Some(SymRef::Fn(f)) => {
                if reg.fns[f.0 as usize].args == args {
                    return Ok(*f);
                }
                return Err(Error::Registry(format!(
                    "function `{name}` re-declared with different arguments"
                )));
            }
            Some(SymRef::Var(_)) => {
                return Err(Error::Registry(format!(
                    "`{name}` is already declared as a variable"
                )))
            }
            None => {}
        }
    }
    let mut reg = REGISTRY.write().unwrap();
    if let Some(SymRef::Fn(f)) = reg.by_name.get(name) {
        let f = *f;
        if reg.fns[f.0 as usize].args == args {
            return Ok(f);
        }
        return Err(Error::Registry(format!(
            "function `{name}` re-declared with different arguments"
        )));
    }
    let id = FnId(reg.fns.len() as u32);
    reg.fns.push(FnInfo {
        name: name.to_string(),
        args: args.to_vec(),
        rules: None,
    });
    reg.by_name.insert(name.to_string(), SymRef::Fn(id));
    Ok(id)
}

/// A zero-argument opaque symbol: a named constant that differentiates to 0.
pub fn constant(name: &str) -> Result<FnId> {
    function(name, &[])
}

/// Attach derivative rules to a function symbol, one expression per declared
/// argument. Rules may only be set once and only before any formal derivative
/// atom of the symbol has been interned.
pub fn set_diff_rules(f: FnId, rules: Vec<Expr>) -> Result<()> {
    let mut reg = REGISTRY.write().unwrap();
    let nargs = reg.fns[f.0 as usize].args.len();
    if rules.len() != nargs {
        return Err(Error::Registry(format!(
            "expected {nargs} derivative rules, got {}",
            rules.len()
        )));
    }
    if reg.fns[f.0 as usize].rules.is_some() {
        return Err(Error::Registry(format!(
            "derivative rules for `{}` already set",
            reg.fns[f.0 as usize].name
        )));
    }
    let has_formal = reg
        .atoms
        .iter()
        .any(|a| matches!(a, AtomData::Fn { f: g, derivs } if *g == f && !derivs.is_empty()));
    if has_formal {
        return Err(Error::Registry(format!(
            "formal derivatives of `{}` already exist; rules can no longer be set",
            reg.fns[f.0 as usize].name
        )));
    }
    reg.fns[f.0 as usize].rules = Some(rules);
    Ok(())
}

/// Declare a ruled single-argument function in one step (e.g. an exponential
/// factor `E(t)` with `dE/dt = k*E`).
pub fn ruled_function(name: &str, arg: VarId, rule: impl FnOnce(FnId) -> Expr) -> Result<FnId> {
    let f = function(name, &[arg])?;
    let r = rule(f);
    // Ignore the already-set error so repeated declaration in one process is
    // idempotent; a conflicting rule is a caller bug surfaced by tests.
    let _ = set_diff_rules(f, vec![r]);
    Ok(f)
}

pub fn lookup(name: &str) -> Option<SymRef> {
    REGISTRY.read().unwrap().by_name.get(name).copied()
}

pub fn var_name(v: VarId) -> String {
    REGISTRY.read().unwrap().vars[v.0 as usize].name.clone()
}

pub fn fn_name(f: FnId) -> String {
    REGISTRY.read().unwrap().fns[f.0 as usize].name.clone()
}

pub fn fn_args(f: FnId) -> Vec<VarId> {
    REGISTRY.read().unwrap().fns[f.0 as usize].args.clone()
}

fn intern(data: AtomData) -> AtomId {
    {
        let reg = REGISTRY.read().unwrap();
        if let Some(id) = reg.atom_ids.get(&data) {
            return *id;
        }
    }
    let mut reg = REGISTRY.write().unwrap();
    if let Some(id) = reg.atom_ids.get(&data) {
        return *id;
    }
    let id = AtomId(reg.atoms.len() as u32);
    reg.atoms.push(data.clone());
    reg.atom_ids.insert(data, id);
    id
}

pub fn var_atom(v: VarId) -> AtomId {
    intern(AtomData::Var(v))
}

pub fn fn_atom(f: FnId) -> AtomId {
    intern(AtomData::Fn { f, derivs: Vec::new() })
}

/// Formal derivative atom `f_{,i1...im}`; the index list is sorted so the
/// atom is symmetric in its indices by construction.
pub fn deriv_atom(f: FnId, mut derivs: Vec<u8>) -> AtomId {
    derivs.sort_unstable();
    intern(AtomData::Fn { f, derivs })
}

pub fn atom_data(a: AtomId) -> AtomData {
    REGISTRY.read().unwrap().atoms[a.0 as usize].clone()
}

/// Result of differentiating a single atom with respect to a variable.
pub enum AtomDiff {
    Zero,
    One,
    Atom(AtomId),
    Rule(Expr),
}

pub fn diff_atom(a: AtomId, v: VarId) -> AtomDiff {
    let data = atom_data(a);
    match data {
        AtomData::Var(w) => {
            if w == v {
                AtomDiff::One
            } else {
                AtomDiff::Zero
            }
        }
        AtomData::Fn { f, derivs } => {
            let reg = REGISTRY.read().unwrap();
            let info = &reg.fns[f.0 as usize];
            let Some(pos) = info.args.iter().position(|a| *a == v) else {
                return AtomDiff::Zero;
            };
            if let Some(rules) = &info.rules {
                debug_assert!(derivs.is_empty(), "ruled symbols never carry formal derivatives");
                return AtomDiff::Rule(rules[pos].clone());
            }
            drop(reg);
            let mut d = derivs;
            d.push(pos as u8);
            AtomDiff::Atom(deriv_atom(f, d))
        }
    }
}

/// Canonical printable name of an atom (`x`, `f(x,y)`, `D[f,x,y]`).
pub fn atom_display(a: AtomId) -> String {
    match atom_data(a) {
        AtomData::Var(v) => var_name(v),
        AtomData::Fn { f, derivs } => {
            let name = fn_name(f);
            let args = fn_args(f);
            let base = if args.is_empty() {
                name.clone()
            } else {
                let list: Vec<String> = args.iter().map(|v| var_name(*v)).collect();
                format!("{}({})", name, list.join(","))
            };
            if derivs.is_empty() {
                base
            } else {
                let idx: Vec<String> = derivs
                    .iter()
                    .map(|i| var_name(args[*i as usize]))
                    .collect();
                format!("D[{},{}]", name, idx.join(","))
            }
        }
    }
}

/// Fresh unique name with the given prefix, for solver-internal unknowns.
pub fn fresh_name(prefix: &str) -> String {
    use std::sync::atomic::{AtomicU64, Ordering};
    static COUNTER: AtomicU64 = AtomicU64::new(0);
    loop {
        let n = COUNTER.fetch_add(1, Ordering::Relaxed);
        let name = format!("{prefix}#{n}");
        if lookup(&name).is_none() {
            return name;
        }
    }
}
