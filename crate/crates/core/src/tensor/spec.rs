//! JSON metric specification: coordinate list, optional evolution variable,
//! either a covariant matrix (`g_lower`) or the contravariant coefficient
//! matrix (`A_upper`), and named constants (symbolic or with rational values).

use std::collections::BTreeMap;

use serde::Deserialize;

use super::{Coordinates, Matrix, MetricField};
use crate::error::{Error, Result};
use crate::symexpr::{self as sx, parse_strict, Expr, FnId, VarId};

#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct MetricSpec {
    pub coordinates: Vec<String>,
    #[serde(default)]
    pub t: Option<String>,
    #[serde(default)]
    pub g_lower: Option<Vec<Vec<String>>>,
    #[serde(default, rename = "A_upper")]
    pub a_upper: Option<Vec<Vec<String>>>,
    #[serde(default)]
    pub constants: Option<Constants>,
}

/// Constants either as a bare name list (fully symbolic) or as a map from
/// name to a value expression in the declared constants and rationals.
#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
pub enum Constants {
    Names(Vec<String>),
    Values(BTreeMap<String, String>),
}

#[derive(Clone, Debug)]
pub struct LoadedMetric {
    pub coords: Coordinates,
    pub metric: MetricField,
    /// Declared constant symbols, in declaration order.
    pub constants: Vec<(String, FnId)>,
}

impl MetricSpec {
    pub fn from_json(text: &str) -> Result<MetricSpec> {
        serde_json::from_str(text).map_err(|e| Error::Spec(format!("metric JSON: {e}")))
    }

    pub fn load(&self) -> Result<LoadedMetric> {
        if self.coordinates.is_empty() {
            return Err(Error::Spec("at least one coordinate required".into()));
        }
        let mut vars: Vec<VarId> = Vec::with_capacity(self.coordinates.len());
        for name in &self.coordinates {
            vars.push(sx::var(name)?);
        }
        let coords = match &self.t {
            Some(tname) => {
                let t = sx::var(tname)?;
                Coordinates::with_time(vars.clone(), t)?
            }
            None => Coordinates::new(vars.clone())?,
        };

        let mut const_syms: Vec<(String, FnId)> = Vec::new();
        let mut const_values: Vec<(FnId, String)> = Vec::new();
        match &self.constants {
            Some(Constants::Names(names)) => {
                for n in names {
                    const_syms.push((n.clone(), sx::constant(n)?));
                }
            }
            Some(Constants::Values(map)) => {
                for (n, v) in map {
                    let f = sx::constant(n)?;
                    const_syms.push((n.clone(), f));
                    const_values.push((f, v.clone()));
                }
            }
            None => {}
        }
        // Resolve constant values after all names exist so values may refer
        // to other constants.
        let mut subs: Vec<(FnId, Expr)> = Vec::new();
        for (f, text) in &const_values {
            subs.push((*f, parse_strict(text)?));
        }

        let (rows, contravariant) = match (&self.g_lower, &self.a_upper) {
            (Some(g), None) => (g, false),
            (None, Some(a)) => (a, true),
            _ => {
                return Err(Error::Spec(
                    "exactly one of `g_lower` or `A_upper` is required".into(),
                ))
            }
        };
        let m = rows.len();
        let spatial = coords.spatial();
        let index_vars: Vec<VarId> = if m == coords.dim() {
            coords.all().to_vec()
        } else if m == spatial.len() {
            spatial
        } else {
            return Err(Error::Spec(format!(
                "metric is {m}x{m} but there are {} coordinates ({} spatial)",
                coords.dim(),
                coords.spatial().len()
            )));
        };
        let mut matrix: Matrix = Vec::with_capacity(m);
        for row in rows {
            if row.len() != m {
                return Err(Error::Spec("metric matrix must be square".into()));
            }
            let mut out = Vec::with_capacity(m);
            for entry in row {
                let mut e = parse_strict(entry)?;
                for (f, val) in &subs {
                    e = e.substitute(sx::fn_atom(*f), val);
                }
                out.push(e);
            }
            matrix.push(out);
        }
        let metric = if contravariant {
            MetricField::from_upper(index_vars, matrix)?
        } else {
            MetricField::from_lower(index_vars, matrix)?
        };
        Ok(LoadedMetric { coords, metric, constants: const_syms })
    }
}
