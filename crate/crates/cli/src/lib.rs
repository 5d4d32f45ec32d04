//! Command-line front end: parse problem specifications, dispatch to the
//! solver/builder/verifier, and emit deterministic JSON or markdown
//! reports. Equation tags (e.g. `GPE.44`, `HEF.19`) appear in report rows
//! so results can be cross-referenced.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use liesym_core::builder::{
    heat_symmetry_counts, heat_symmetry_gradient, heat_symmetry_nongradient, heat_problem,
    noether_case1, noether_case2, wave_symmetries, NoetherResult, SpaceClass,
};
use liesym_core::collineation::{desitter_catalog, euclidean_catalog, solve_homothetic, AlgebraBasis};
use liesym_core::prolongation::{
    determining_general, determining_linear, determining_ode, verify_symmetry, DeterminingSystem,
    FForm, ForceTerm, GeneratorODE, GeneratorPDE, Jet, PDEProblem,
};
use liesym_core::symexpr::{self as sx, Expr, VarId};
use liesym_core::tensor::{
    christoffel, Coordinates, GradientStatus, Matrix, MetricField, Tag,
};
use liesym_core::{Error, Result};

// ---------------------------------------------------------------------------
// Argument surface
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
pub enum Format {
    Json,
    Md,
}

#[derive(Parser, Debug)]
#[command(
    name = "liesym",
    about = "Lie point and Noether symmetries of geodesic-type ODEs and \
             second-order PDEs via metric collineations",
    disable_help_subcommand = true
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Report format.
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// KV/HV algebra of a metric by polynomial ansatz.
    Collineations {
        /// Metric specification (JSON).
        #[arg(long)]
        metric: PathBuf,
        /// Polynomial ansatz degree (default: LIESYM_DEGREE_DEFAULT or 2).
        #[arg(long)]
        degree: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Determining equations of a problem for a given generator.
    Determining {
        /// Problem specification (JSON).
        #[arg(long)]
        problem: PathBuf,
        /// Generator specification (JSON).
        #[arg(long)]
        generator: PathBuf,
        /// Use the general (u-dependent) extraction with the multiplier
        /// device instead of the linear-shape system.
        #[arg(long)]
        general: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Verify a single generator against a problem.
    Verify {
        #[arg(long)]
        problem: PathBuf,
        #[arg(long)]
        generator: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Symmetry families of the evolution equation H(u) = q built from the
    /// homothetic algebra of the spatial metric.
    Heat {
        /// Spatial metric specification (JSON).
        #[arg(long)]
        metric: PathBuf,
        /// Flux expression q(t, x, u) (inline; default 0).
        #[arg(long, default_value = "0")]
        flux: String,
        /// Evolution variable name.
        #[arg(long, default_value = "t")]
        time: String,
        #[arg(long)]
        degree: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Noether point symmetries and first integrals for the Lagrangian
    /// ½ g_ij x'^i x'^j − V.
    Noether {
        #[arg(long)]
        metric: PathBuf,
        /// Potential expression V(x) (inline; default 0).
        #[arg(long, default_value = "0")]
        potential: String,
        #[arg(long, default_value = "t")]
        time: String,
        #[arg(long)]
        degree: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Symmetries of c²(x¹)u_11 − u_22 = 0.
    Wave {
        /// Wave speed c(x1).
        #[arg(long, default_value = "1")]
        speed: String,
        #[arg(long)]
        degree: Option<u32>,
        #[command(flatten)]
        common: Common,
    },
    /// Closed-form maximum symmetry counts of the homogeneous evolution
    /// equation.
    Counts {
        /// Space class: `flat:n`, `constcurv:n`, or `onedim`.
        #[arg(long)]
        space: String,
        #[command(flatten)]
        common: Common,
    },
    /// Built-in collineation catalogs.
    Catalog {
        /// Euclidean space of the given dimension.
        #[arg(long)]
        euclidean: Option<u32>,
        /// Constant-curvature (de Sitter type) catalog with symbolic K.
        #[arg(long)]
        desitter: bool,
        #[command(flatten)]
        common: Common,
    },
}

// ---------------------------------------------------------------------------
// Problem / generator specifications
// ---------------------------------------------------------------------------

#[derive(Deserialize, Debug, Clone)]
#[serde(untagged)]
enum ConstantsSpec {
    Names(Vec<String>),
    Values(BTreeMap<String, String>),
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ProblemSpec {
    coordinates: Vec<String>,
    #[serde(default)]
    t: Option<String>,
    #[serde(default)]
    u: Option<String>,
    #[serde(default, rename = "A_upper")]
    a_upper: Option<Vec<Vec<String>>>,
    #[serde(default)]
    g_lower: Option<Vec<Vec<String>>>,
    #[serde(default)]
    constants: Option<ConstantsSpec>,
    /// General right-hand side F(x, u, u_i).
    #[serde(default, rename = "F")]
    f_general: Option<String>,
    /// First-order drift B^i of a linear right-hand side.
    #[serde(default, rename = "B")]
    b_drift: Option<Vec<String>>,
    /// Zeroth-order part f(x, u) of a linear right-hand side.
    #[serde(default)]
    f: Option<String>,
    /// Heat flux q(t, x, u): evolution problem on a spatial metric.
    #[serde(default)]
    q: Option<String>,
    /// Geodesic-type ODE force terms.
    #[serde(default)]
    forces: Option<Vec<ForceSpec>>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct ForceSpec {
    order: usize,
    components: Vec<String>,
}

#[derive(Deserialize, Debug)]
#[serde(deny_unknown_fields)]
struct GeneratorSpec {
    /// Coordinate components (PDE) or the single t-component (ODE).
    xi: Value,
    /// u-component (PDE) or coordinate components (ODE).
    eta: Value,
}

enum LoadedProblem {
    Pde(PDEProblem),
    Ode { conn: liesym_core::tensor::Connection, forces: Vec<ForceTerm>, t: VarId },
}

fn declare_constants(spec: &Option<ConstantsSpec>) -> Result<Vec<(sx::FnId, Expr)>> {
    let mut subs = Vec::new();
    match spec {
        Some(ConstantsSpec::Names(names)) => {
            for n in names {
                sx::constant(n)?;
            }
        }
        Some(ConstantsSpec::Values(map)) => {
            let mut pending = Vec::new();
            for (n, v) in map {
                pending.push((sx::constant(n)?, v));
            }
            for (f, text) in pending {
                subs.push((f, sx::parse_strict(text)?));
            }
        }
        None => {}
    }
    Ok(subs)
}

fn parse_entry(text: &str, subs: &[(sx::FnId, Expr)], field: &str) -> Result<Expr> {
    let mut e = sx::parse_strict(text)
        .map_err(|err| Error::Spec(format!("field `{field}`: {err}")))?;
    for (f, val) in subs {
        e = e.substitute(sx::fn_atom(*f), val);
    }
    Ok(e)
}

fn parse_matrix(
    rows: &[Vec<String>],
    subs: &[(sx::FnId, Expr)],
    field: &str,
) -> Result<Matrix> {
    let n = rows.len();
    let mut out = Vec::with_capacity(n);
    for row in rows {
        if row.len() != n {
            return Err(Error::Spec(format!("field `{field}`: matrix must be square")));
        }
        let mut r = Vec::with_capacity(n);
        for entry in row {
            r.push(parse_entry(entry, subs, field)?);
        }
        out.push(r);
    }
    Ok(out)
}

impl ProblemSpec {
    fn load(&self) -> Result<LoadedProblem> {
        if self.coordinates.is_empty() {
            return Err(Error::Spec("field `coordinates`: at least one required".into()));
        }
        let mut vars = Vec::new();
        for c in &self.coordinates {
            vars.push(sx::var(c)?);
        }
        let uname = self.u.clone().unwrap_or_else(|| "u".into());
        let subs = declare_constants(&self.constants)?;

        let kinds = [
            self.f_general.is_some(),
            self.b_drift.is_some() || self.f.is_some(),
            self.q.is_some(),
            self.forces.is_some(),
        ];
        if kinds.iter().filter(|k| **k).count() != 1 {
            return Err(Error::Spec(
                "exactly one problem kind required: `F` (general), `B`/`f` (linear), \
                 `q` (heat), or `forces` (geodesic ODE)"
                    .into(),
            ));
        }

        if let Some(forces) = &self.forces {
            // Geodesic ODE on the metric; `t` names the curve parameter and
            // must not be a coordinate.
            let tname = self.t.clone().unwrap_or_else(|| "t".into());
            let t = sx::var(&tname)?;
            if vars.contains(&t) {
                return Err(Error::Spec(
                    "field `t`: the curve parameter must not be a coordinate".into(),
                ));
            }
            let lower = self.g_lower.as_ref().ok_or_else(|| {
                Error::Spec("field `g_lower`: required for a geodesic problem".into())
            })?;
            let g = MetricField::from_lower(vars.clone(), parse_matrix(lower, &subs, "g_lower")?)?;
            let conn = christoffel(&g)?;
            let n = vars.len();
            let mut fts = Vec::new();
            for (k, fs) in forces.iter().enumerate() {
                let field = format!("forces[{k}]");
                let mut comp = Vec::new();
                for row_start in 0..n {
                    let m = n.pow(fs.order as u32);
                    if fs.components.len() != n * m {
                        return Err(Error::Spec(format!(
                            "field `{field}`: expected {} components, got {}",
                            n * m,
                            fs.components.len()
                        )));
                    }
                    let mut row = Vec::new();
                    for j in 0..m {
                        row.push(parse_entry(&fs.components[row_start * m + j], &subs, &field)?);
                    }
                    comp.push(row);
                }
                fts.push(ForceTerm::new(fs.order, comp, n)?);
            }
            return Ok(LoadedProblem::Ode { conn, forces: fts, t });
        }

        if let Some(qtext) = &self.q {
            let tname = self.t.clone().unwrap_or_else(|| "t".into());
            let t = sx::var(&tname)?;
            if vars.contains(&t) {
                return Err(Error::Spec(
                    "field `coordinates`: list only spatial coordinates for a heat \
                     problem; `t` is added automatically"
                        .into(),
                ));
            }
            let g = if let Some(lower) = &self.g_lower {
                MetricField::from_lower(vars.clone(), parse_matrix(lower, &subs, "g_lower")?)?
            } else if let Some(upper) = &self.a_upper {
                MetricField::from_upper(vars.clone(), parse_matrix(upper, &subs, "A_upper")?)?
            } else {
                return Err(Error::Spec(
                    "field `g_lower`/`A_upper`: a spatial metric is required".into(),
                ));
            };
            sx::var(&uname)?;
            let q = parse_entry(qtext, &subs, "q")?;
            return Ok(LoadedProblem::Pde(heat_problem(&g, t, &q)?));
        }

        // General or linear second-order PDE with explicit coefficients.
        let upper = self.a_upper.as_ref().ok_or_else(|| {
            Error::Spec("field `A_upper`: required for a PDE problem".into())
        })?;
        let coords = match &self.t {
            Some(tname) => Coordinates::with_time(vars.clone(), sx::var(tname)?)?,
            None => Coordinates::new(vars.clone())?,
        };
        let jet = Jet::new(coords, sx::var(&uname)?)?;
        let a = parse_matrix(upper, &subs, "A_upper")?;
        let fform = if let Some(ftext) = &self.f_general {
            FForm::General(parse_entry(ftext, &subs, "F")?)
        } else {
            let n = vars.len();
            let b = match &self.b_drift {
                Some(list) => {
                    if list.len() != n {
                        return Err(Error::Spec(format!(
                            "field `B`: expected {n} components, got {}",
                            list.len()
                        )));
                    }
                    list.iter()
                        .map(|s| parse_entry(s, &subs, "B"))
                        .collect::<Result<Vec<_>>>()?
                }
                None => vec![Expr::zero(); n],
            };
            let f = match &self.f {
                Some(s) => parse_entry(s, &subs, "f")?,
                None => Expr::zero(),
            };
            FForm::Linear { b, f }
        };
        Ok(LoadedProblem::Pde(PDEProblem::new(jet, a, fform)?))
    }
}

fn value_exprs(v: &Value, field: &str) -> Result<Vec<String>> {
    match v {
        Value::String(s) => Ok(vec![s.clone()]),
        Value::Array(items) => {
            let mut out = Vec::new();
            for it in items {
                match it {
                    Value::String(s) => out.push(s.clone()),
                    _ => {
                        return Err(Error::Spec(format!(
                            "field `{field}`: expected expression strings"
                        )))
                    }
                }
            }
            Ok(out)
        }
        _ => Err(Error::Spec(format!(
            "field `{field}`: expected an expression string or a list of them"
        ))),
    }
}

// ---------------------------------------------------------------------------
// Report rendering
// ---------------------------------------------------------------------------

fn estr(e: &Expr) -> String {
    format!("{e}")
}

/// Renumber fresh-symbol suffixes (`name#17`) in first-appearance order so
/// the report text does not depend on how many symbols were minted earlier
/// in the process.
fn canonicalize_fresh(text: &str) -> String {
    let mut map: BTreeMap<String, usize> = BTreeMap::new();
    let mut out = String::with_capacity(text.len());
    let mut chars = text.chars().peekable();
    while let Some(c) = chars.next() {
        if c != '#' {
            out.push(c);
            continue;
        }
        let mut digits = String::new();
        while let Some(d) = chars.peek().filter(|d| d.is_ascii_digit()) {
            digits.push(*d);
            chars.next();
        }
        if digits.is_empty() {
            out.push('#');
        } else {
            let next = map.len() + 1;
            let id = *map.entry(digits).or_insert(next);
            out.push_str(&format!("#{id}"));
        }
    }
    out
}

fn render(out: &mut dyn Write, format: Format, report: &Value) -> Result<()> {
    let text = match format {
        Format::Json => format!("{}\n", serde_json::to_string_pretty(report).expect("valid JSON")),
        Format::Md => format!("{}\n", render_md(report, 1)),
    };
    let text = canonicalize_fresh(&text);
    out.write_all(text.as_bytes())
        .map_err(|e| Error::Eval(format!("write failed: {e}")))?;
    Ok(())
}

/// Generic markdown rendering of a report value: objects become heading
/// sections, arrays of objects become tables, scalars become definition
/// lines. Deterministic because the underlying maps are ordered.
fn render_md(v: &Value, depth: usize) -> String {
    match v {
        Value::Object(map) => {
            let mut out = String::new();
            for (k, val) in map {
                match val {
                    Value::Array(items)
                        if !items.is_empty() && items.iter().all(|i| i.is_object()) =>
                    {
                        out.push_str(&format!("{} {}\n\n", "#".repeat(depth + 1), k));
                        out.push_str(&md_table(items));
                        out.push('\n');
                    }
                    Value::Object(_) => {
                        out.push_str(&format!("{} {}\n\n", "#".repeat(depth + 1), k));
                        out.push_str(&render_md(val, depth + 1));
                        out.push('\n');
                    }
                    _ => out.push_str(&format!("- **{k}**: {}\n", md_scalar(val))),
                }
            }
            out
        }
        Value::Array(items) if items.iter().all(|i| i.is_object()) => md_table(items),
        other => md_scalar(other),
    }
}

fn md_scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.replace('|', "\\|"),
        Value::Array(items) => items
            .iter()
            .map(md_scalar)
            .collect::<Vec<_>>()
            .join(", "),
        other => other.to_string(),
    }
}

fn md_table(items: &[Value]) -> String {
    let mut cols: Vec<String> = Vec::new();
    for it in items {
        if let Value::Object(map) = it {
            for k in map.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
    }
    let mut out = String::new();
    out.push_str(&format!("| {} |\n", cols.join(" | ")));
    out.push_str(&format!("|{}\n", cols.iter().map(|_| " --- |").collect::<String>()));
    for it in items {
        if let Value::Object(map) = it {
            let row: Vec<String> = cols
                .iter()
                .map(|c| map.get(c).map(md_scalar).unwrap_or_default())
                .collect();
            out.push_str(&format!("| {} |\n", row.join(" | ")));
        }
    }
    out
}

fn algebra_value(basis: &AlgebraBasis) -> Value {
    let entries: Vec<Value> = basis
        .entries
        .iter()
        .map(|e| {
            let gradient = match &e.class.potential {
                GradientStatus::Gradient(s) => json!({ "potential": estr(s) }),
                GradientStatus::NonGradient => json!("nongradient"),
                GradientStatus::Unrepresentable => json!("gradient (potential not rational)"),
                GradientStatus::NotApplicable => json!("n/a"),
            };
            json!({
                "label": e.label,
                "class": e.class.tag.label(),
                "psi": e.class.psi.as_ref().map(estr),
                "gradient": gradient,
                "components": e.vector.comps.iter().map(estr).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({
        "coordinates": basis.coords.iter().map(|&c| sx::var_name(c)).collect::<Vec<_>>(),
        "entries": entries,
        "complete": format!("{:?}", basis.complete),
    })
}

fn system_value(ds: &DeterminingSystem) -> Value {
    let eqs: Vec<Value> = ds
        .equations
        .iter()
        .map(|e| {
            json!({
                "tag": e.tag,
                "source": e.source,
                "component": e.component,
                "residual": estr(&e.residual),
                "zero": e.residual.is_zero(),
            })
        })
        .collect();
    json!({
        "equations": eqs,
        "multiplier": ds.multiplier.as_ref().map(estr),
        "unknowns": ds.unknowns,
        "all_zero": ds.all_zero(),
    })
}

fn noether_value(label: &str, r: &NoetherResult) -> Value {
    json!({
        "vector": label,
        "case": match r.case {
            liesym_core::builder::NoetherCase::Homothetic => "I",
            liesym_core::builder::NoetherCase::GradientClock => "II",
        },
        "psi": estr(&r.psi),
        "xi_t": estr(&r.xi_t),
        "eta": r.eta.iter().map(estr).collect::<Vec<_>>(),
        "gauge": estr(&r.gauge),
        "p": estr(&r.p),
        "m": r.clock.as_ref().map(|c| estr(&c.m)),
        "residual": estr(&r.residual),
        "admitted": r.residual.is_zero(),
        "integral": estr(&r.integral),
    })
}

// ---------------------------------------------------------------------------
// Dispatch
// ---------------------------------------------------------------------------

fn default_degree(cli_degree: Option<u32>) -> Result<u32> {
    if let Some(d) = cli_degree {
        return Ok(d);
    }
    match std::env::var("LIESYM_DEGREE_DEFAULT") {
        Ok(s) => s
            .trim()
            .parse::<u32>()
            .map_err(|_| Error::Spec(format!("LIESYM_DEGREE_DEFAULT: invalid degree `{s}`"))),
        Err(_) => Ok(2),
    }
}

fn read_file(path: &PathBuf, what: &str) -> Result<String> {
    std::fs::read_to_string(path)
        .map_err(|e| Error::Spec(format!("{what} `{}`: {e}", path.display())))
}

fn load_metric(path: &PathBuf) -> Result<liesym_core::tensor::LoadedMetric> {
    let text = read_file(path, "metric file")?;
    liesym_core::tensor::MetricSpec::from_json(&text)?.load()
}

fn load_problem(path: &PathBuf) -> Result<LoadedProblem> {
    let text = read_file(path, "problem file")?;
    let spec: ProblemSpec =
        serde_json::from_str(&text).map_err(|e| Error::Spec(format!("problem JSON: {e}")))?;
    spec.load()
}

fn load_generator(path: &PathBuf) -> Result<GeneratorSpec> {
    let text = read_file(path, "generator file")?;
    serde_json::from_str(&text).map_err(|e| Error::Spec(format!("generator JSON: {e}")))
}

fn pde_generator(spec: &GeneratorSpec, p: &PDEProblem) -> Result<GeneratorPDE> {
    let xi_texts = value_exprs(&spec.xi, "xi")?;
    let eta_texts = value_exprs(&spec.eta, "eta")?;
    let n = p.jet.dim();
    if xi_texts.len() != n {
        return Err(Error::Spec(format!(
            "field `xi`: expected {n} components, got {}",
            xi_texts.len()
        )));
    }
    if eta_texts.len() != 1 {
        return Err(Error::Spec("field `eta`: expected a single expression".into()));
    }
    let xi = xi_texts
        .iter()
        .map(|s| parse_entry(s, &[], "xi"))
        .collect::<Result<Vec<_>>>()?;
    let eta = parse_entry(&eta_texts[0], &[], "eta")?;
    Ok(GeneratorPDE::new(xi, eta))
}

fn ode_generator(spec: &GeneratorSpec, t: VarId, n: usize) -> Result<GeneratorODE> {
    let xi_texts = value_exprs(&spec.xi, "xi")?;
    let eta_texts = value_exprs(&spec.eta, "eta")?;
    if xi_texts.len() != 1 {
        return Err(Error::Spec("field `xi`: expected a single expression".into()));
    }
    if eta_texts.len() != n {
        return Err(Error::Spec(format!(
            "field `eta`: expected {n} components, got {}",
            eta_texts.len()
        )));
    }
    Ok(GeneratorODE {
        t,
        xi: parse_entry(&xi_texts[0], &[], "xi")?,
        eta: eta_texts
            .iter()
            .map(|s| parse_entry(s, &[], "eta"))
            .collect::<Result<Vec<_>>>()?,
    })
}

fn parse_space(text: &str) -> Result<SpaceClass> {
    let t = text.trim();
    if t == "onedim" || t == "1dim" {
        return Ok(SpaceClass::OneDimensional);
    }
    if let Some(rest) = t.strip_prefix("flat:") {
        let n: u32 = rest
            .parse()
            .map_err(|_| Error::Spec(format!("field `space`: invalid dimension `{rest}`")))?;
        if n == 0 {
            return Err(Error::Spec("field `space`: dimension must be positive".into()));
        }
        return Ok(SpaceClass::Flat(n));
    }
    if let Some(rest) = t.strip_prefix("constcurv:") {
        let n: u32 = rest
            .parse()
            .map_err(|_| Error::Spec(format!("field `space`: invalid dimension `{rest}`")))?;
        if n == 0 {
            return Err(Error::Spec("field `space`: dimension must be positive".into()));
        }
        return Ok(SpaceClass::ConstantCurvature(n));
    }
    Err(Error::Spec(format!(
        "field `space`: expected `flat:n`, `constcurv:n`, or `onedim`, got `{t}`"
    )))
}

fn dispatch(cmd: &Cmd, out: &mut dyn Write) -> Result<()> {
    match cmd {
        Cmd::Collineations { metric, degree, common } => {
            let loaded = load_metric(metric)?;
            let degree = default_degree(*degree)?;
            let basis = solve_homothetic(&loaded.metric, degree)?;
            let report = json!({
                "algebra": algebra_value(&basis),
                "degree": degree,
            });
            render(out, common.format, &report)
        }
        Cmd::Determining { problem, generator, general, common } => {
            let spec = load_generator(generator)?;
            match load_problem(problem)? {
                LoadedProblem::Pde(p) => {
                    let x = pde_generator(&spec, &p)?;
                    let ds = if *general {
                        determining_general(&p, &x)?
                    } else {
                        determining_linear(&p, &x)?
                    };
                    render(out, common.format, &json!({ "system": system_value(&ds) }))
                }
                LoadedProblem::Ode { conn, forces, t } => {
                    let x = ode_generator(&spec, t, conn.coords.len())?;
                    let ds = determining_ode(&conn, &forces, &x)?;
                    render(out, common.format, &json!({ "system": system_value(&ds) }))
                }
            }
        }
        Cmd::Verify { problem, generator, common } => {
            let spec = load_generator(generator)?;
            match load_problem(problem)? {
                LoadedProblem::Pde(p) => {
                    let x = pde_generator(&spec, &p)?;
                    let vo = verify_symmetry(&p, &x)?;
                    let report = json!({
                        "is_symmetry": vo.is_symmetry,
                        "lambda": estr(&vo.lambda),
                        "residual": estr(&vo.residual),
                    });
                    render(out, common.format, &report)
                }
                LoadedProblem::Ode { conn, forces, t } => {
                    let x = ode_generator(&spec, t, conn.coords.len())?;
                    let ds = determining_ode(&conn, &forces, &x)?;
                    let report = json!({
                        "is_symmetry": ds.all_zero(),
                        "nonzero_equations": ds
                            .nonzero()
                            .iter()
                            .map(|e| json!({ "tag": e.tag, "source": e.source }))
                            .collect::<Vec<_>>(),
                    });
                    render(out, common.format, &report)
                }
            }
        }
        Cmd::Heat { metric, flux, time, degree, common } => {
            let loaded = load_metric(metric)?;
            let g = loaded.metric;
            let t = sx::var(time)?;
            if g.coords.contains(&t) {
                return Err(Error::Spec(
                    "field `time`: must differ from the spatial coordinates".into(),
                ));
            }
            sx::var("u")?;
            let q = parse_entry(flux, &[], "flux")?;
            let degree = default_degree(*degree)?;
            let basis = solve_homothetic(&g, degree)?;
            let mut families = Vec::new();
            for entry in &basis.entries {
                let built = match (&entry.class.tag, &entry.class.potential) {
                    (Tag::GradientKV | Tag::GradientHV, GradientStatus::Gradient(s)) => {
                        heat_symmetry_gradient(&g, t, s, &q)
                    }
                    (Tag::KV | Tag::HV, _) => heat_symmetry_nongradient(&g, t, &entry.vector, &q),
                    _ => continue,
                };
                let hs = built?;
                families.push(json!({
                    "vector": entry.label,
                    "tag": hs.tag,
                    "psi": estr(&hs.psi),
                    "xi_t": estr(&hs.xi_t),
                    "xi": hs.xi.iter().map(estr).collect::<Vec<_>>(),
                    "eta": estr(&hs.eta),
                    "residual": estr(&hs.residual),
                    "residual_zero": hs.residual.is_zero(),
                }));
            }
            let report = json!({
                "flux": estr(&q),
                "algebra": algebra_value(&basis),
                "families": families,
                "note": "each family is admitted when its constraint residual \
                         vanishes; b(t,x) ranges over solutions of the \
                         homogeneous equation",
            });
            render(out, common.format, &report)
        }
        Cmd::Noether { metric, potential, time, degree, common } => {
            let loaded = load_metric(metric)?;
            let g = loaded.metric;
            let t = sx::var(time)?;
            if g.coords.contains(&t) {
                return Err(Error::Spec(
                    "field `time`: must differ from the coordinates".into(),
                ));
            }
            let v = parse_entry(potential, &[], "potential")?;
            let degree = default_degree(*degree)?;
            let basis = solve_homothetic(&g, degree)?;
            let mut results = Vec::new();
            let mut count = 1u32; // the time translation with integral E
            for entry in &basis.entries {
                if !matches!(entry.class.tag, Tag::KV | Tag::GradientKV | Tag::HV | Tag::GradientHV)
                {
                    continue;
                }
                let r1 = noether_case1(&g, t, &entry.vector, &v)?;
                if r1.residual.is_zero() {
                    count += 1;
                }
                results.push(noether_value(&entry.label, &r1));
                if let GradientStatus::Gradient(s) = &entry.class.potential {
                    let r2 = noether_case2(&g, t, s, &v)?;
                    if r2.residual.is_zero() {
                        // The clock solution space is two-dimensional; the
                        // constant-clock branch duplicates Case I when the
                        // clock constant m is zero.
                        count += if r2.clock.as_ref().map(|c| c.m.is_zero()).unwrap_or(false) {
                            1
                        } else {
                            2
                        };
                    }
                    results.push(noether_value(&entry.label, &r2));
                }
            }
            let report = json!({
                "potential": estr(&v),
                "results": results,
                "admitted_count": count,
                "counting_note": "time translation counts once (its integral is \
                                  the Hamiltonian); each admitted Case-II family \
                                  contributes its two clock solutions, minus the \
                                  constant-clock duplicate of Case I when m = 0",
            });
            render(out, common.format, &report)
        }
        Cmd::Wave { speed, degree, common } => {
            let x1 = sx::var("x1")?;
            let x2 = sx::var("x2")?;
            let c = parse_entry(speed, &[], "speed")?;
            let degree = default_degree(*degree)?;
            let fam = wave_symmetries(x1, x2, &c, degree)?;
            let trace: Vec<Value> = fam
                .trace
                .iter()
                .map(|s| json!({ "tag": s.tag, "statement": s.statement, "passed": s.passed }))
                .collect();
            let report = json!({
                "speed": estr(&c),
                "metric_lower": fam
                    .metric
                    .lower
                    .iter()
                    .map(|r| r.iter().map(estr).collect::<Vec<_>>())
                    .collect::<Vec<_>>(),
                "algebra": algebra_value(&fam.algebra),
                "family": "X = xi^i d_i + (c1*u + b) d_u with A^{ij} b_,ij = 0",
                "trace": trace,
            });
            render(out, common.format, &report)
        }
        Cmd::Counts { space, common } => {
            let class = parse_space(space)?;
            let c = heat_symmetry_counts(class);
            let formula = match class {
                SpaceClass::OneDimensional => "7".to_string(),
                SpaceClass::ConstantCurvature(_) => "(n+3) + n(n-1)/2".to_string(),
                SpaceClass::Flat(_) => "n(n+3)/2 + 5".to_string(),
            };
            let report = json!({
                "space": space.trim(),
                "n": c.n,
                "count": c.count,
                "formula": formula,
                "note": c.note,
            });
            render(out, common.format, &report)
        }
        Cmd::Catalog { euclidean, desitter, common } => {
            let basis = match (euclidean, desitter) {
                (Some(n), false) => {
                    if *n == 0 {
                        return Err(Error::Spec("field `euclidean`: dimension must be positive".into()));
                    }
                    let coords: Vec<VarId> = (1..=*n)
                        .map(|i| sx::var(&format!("x{i}")))
                        .collect::<Result<_>>()?;
                    euclidean_catalog(&coords)?
                }
                (None, true) => {
                    let k = Expr::atom(sx::fn_atom(sx::constant("K")?));
                    desitter_catalog(&k)?
                }
                _ => {
                    return Err(Error::Spec(
                        "exactly one of `--euclidean n` or `--desitter` is required".into(),
                    ))
                }
            };
            render(out, common.format, &json!({ "catalog": algebra_value(&basis) }))
        }
    }
}

/// Run the CLI: returns the process exit code (0 success, 2 specification
/// error, 1 internal error) and writes the report to `out` and diagnostics
/// to `err`.
pub fn run(args: &[String], out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            // Help/version requests are successful outputs, not errors.
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 2,
            };
            let sink: &mut dyn Write = if code == 0 { out } else { err };
            let _ = write!(sink, "{e}");
            return code;
        }
    };
    match dispatch(&cli.cmd, out) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            match e {
                Error::Parse { .. }
                | Error::Spec(_)
                | Error::Precondition(_)
                | Error::Registry(_)
                | Error::Degenerate(_)
                | Error::SingularMetric
                | Error::NotPolynomial(_) => 2,
                Error::Eval(_) | Error::DivisionByZero => 1,
            }
        }
    }
}
