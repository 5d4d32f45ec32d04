//! Acceptance suite: one test per acceptance criterion, each printing a
//! single pass/fail line (visible with `cargo test --test acceptance --
//! --nocapture`). Every check is exact symbolic arithmetic; derived values
//! are confirmed against independent oracles (total-derivative recursion,
//! Lie-derivative tensor identities, on-shell conservation).

use std::panic::{catch_unwind, UnwindSafe};

use liesym_core::builder::{
    heat_operator, heat_problem, heat_symmetry_counts, heat_symmetry_hvkv_flux,
    noether_case1, noether_case2, on_shell_time_derivative, wave_symmetries, SpaceClass,
};
use liesym_core::collineation::{
    desitter_catalog, desitter_metric, euclidean_catalog, same_span, solve_homothetic,
};
use liesym_core::linalg::nullspace;
use liesym_core::prolongation::{
    determining_general, prolong2, proposition1_xi_u, verify_symmetry, FForm, GeneratorPDE,
    Jet, PDEProblem,
};
use liesym_core::symexpr::{
    constant, fn_atom, fresh_name, function, ruled_function, var, var_atom, AtomId, Expr, Rat,
    VarId,
};
use liesym_core::tensor::{
    christoffel, classify_collineation, lemma2_check, lie_derivative_connection,
    lie_derivative_metric, Coordinates, GradientStatus, MetricField, Tag, VectorField,
};

fn criterion(n: u32, desc: &str, f: impl FnOnce() + UnwindSafe) {
    let result = catch_unwind(f);
    match &result {
        Ok(()) => println!("criterion {n}: PASS - {desc}"),
        Err(_) => println!("criterion {n}: FAIL - {desc}"),
    }
    if let Err(e) = result {
        std::panic::resume_unwind(e);
    }
}

fn fe(name: &str, args: &[VarId]) -> Expr {
    Expr::atom(fn_atom(function(&fresh_name(name), args).unwrap()))
}

fn opaque_const(prefix: &str) -> Expr {
    Expr::atom(fn_atom(constant(&fresh_name(prefix)).unwrap()))
}

/// A named constant, reusing the registration if another test made it first.
fn named_const(name: &str) -> Expr {
    Expr::sym(name)
        .or_else(|_| constant(name).map(|f| Expr::atom(fn_atom(f))))
        .unwrap()
}

fn zeq(a: &Expr, b: &Expr, msg: &str) {
    assert!((a.clone() - b.clone()).is_zero(), "{msg}: {a:?} != {b:?}");
}

fn flat_metric(names: &[&str]) -> MetricField {
    let coords: Vec<VarId> = names.iter().map(|n| var(n).unwrap()).collect();
    let n = coords.len();
    MetricField::from_lower(coords, liesym_core::tensor::identity_matrix(n)).unwrap()
}

struct Lcg(u64);

impl Lcg {
    fn next(&mut self) -> u64 {
        self.0 = self.0.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
        self.0 >> 33
    }
    fn small(&mut self, m: u64) -> i64 {
        (self.next() % m) as i64
    }
}

fn random_poly(rng: &mut Lcg, vars: &[VarId]) -> Expr {
    let mut acc = Expr::zero();
    for _ in 0..3 {
        let mut term = Expr::int(rng.small(9) - 4);
        for &v in vars {
            let p = rng.small(3);
            if p > 0 {
                term = term * Expr::var(v).pow(p).unwrap();
            }
        }
        acc = acc + term;
    }
    acc
}

// ---------------------------------------------------------------------------
// 1. Euclidean catalog, independently reclassified
// ---------------------------------------------------------------------------

#[test]
fn acceptance_01_euclidean_catalog() {
    criterion(1, "Euclidean catalog n=1,2,3 with independent classification", || {
        for names in [&["x"][..], &["x", "y"][..], &["x", "y", "z"][..]] {
            let n = names.len();
            let coords: Vec<VarId> = names.iter().map(|s| var(s).unwrap()).collect();
            let g = flat_metric(names);
            let basis = euclidean_catalog(&coords).unwrap();

            // Expected composition: n translations, n(n-1)/2 rotations, one
            // dilation, n^2 affine vectors (n > 1), n special projective.
            let count = |t: Tag| basis.entries.iter().filter(|e| e.class.tag == t).count();
            assert_eq!(count(Tag::GradientKV), n);
            assert_eq!(count(Tag::KV), n * (n - 1) / 2);
            assert_eq!(count(Tag::GradientHV), 1);
            assert_eq!(count(Tag::AC), if n > 1 { n * n } else { 0 });
            assert_eq!(count(Tag::SPC), n);

            for e in &basis.entries {
                // Independent reclassification must agree on the tag, the
                // conformal factor, and the gradient potential.
                let c = classify_collineation(&e.vector, &g);
                assert_eq!(c.tag, e.class.tag, "{}", e.label);
                match (&c.psi, &e.class.psi) {
                    (Some(a), Some(b)) => zeq(a, b, &e.label),
                    (None, None) => {}
                    _ => panic!("psi mismatch for {}", e.label),
                }
                match (&c.potential, &e.class.potential) {
                    (GradientStatus::Gradient(a), GradientStatus::Gradient(b)) => {
                        // Potentials agree up to an additive constant; here
                        // they are normalized identically.
                        zeq(a, b, &e.label);
                        // Oracle: the lowered vector is the gradient of S.
                        for (i, &ci) in coords.iter().enumerate() {
                            zeq(&e.vector.comps[i], &a.clone().diff(ci), &e.label);
                        }
                    }
                    (a, b) => assert_eq!(a, b, "{}", e.label),
                }
                // Conformal-family entries satisfy L_X g = 2 psi g exactly.
                if let Some(psi) = &e.class.psi {
                    let lg = lie_derivative_metric(&e.vector, &g);
                    for i in 0..n {
                        for j in 0..n {
                            zeq(
                                &lg[i][j],
                                &(Expr::int(2) * psi.clone() * g.lower[i][j].clone()),
                                &e.label,
                            );
                        }
                    }
                }
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 2. Constant-curvature (de Sitter type) Killing algebra
// ---------------------------------------------------------------------------

#[test]
fn acceptance_02_desitter() {
    criterion(2, "de Sitter: 10 symbolic KVs; solver finds a 10-dim KV space, no HV", || {
        // Symbolic curvature: every catalog vector kills the metric and is
        // nongradient.
        let k = named_const("K");
        let g = desitter_metric(&k).unwrap();
        let basis = desitter_catalog(&k).unwrap();
        assert_eq!(basis.entries.len(), 10);
        for e in &basis.entries {
            let lg = lie_derivative_metric(&e.vector, &g);
            assert!(
                lg.iter().all(|r| r.iter().all(|x| x.is_zero())),
                "L_X g != 0 for {}",
                e.label
            );
            assert_eq!(e.class.tag, Tag::KV, "{}", e.label);
            assert_eq!(e.class.potential, GradientStatus::NonGradient, "{}", e.label);
        }

        // Polynomial solver at degree 2 (rational curvature instance, since
        // the elimination runs over the rationals): exactly a 10-dimensional
        // Killing space, no homothety, spanning the catalog.
        let k4 = Expr::int(4);
        let g4 = desitter_metric(&k4).unwrap();
        let solved = solve_homothetic(&g4, 2).unwrap();
        assert_eq!(solved.entries.len(), 10);
        assert!(solved.homothetic().is_empty());
        assert!(solved.entries.iter().all(|e| e.class.tag == Tag::KV));
        let a: Vec<VectorField> = solved.entries.iter().map(|e| e.vector.clone()).collect();
        let b: Vec<VectorField> = desitter_catalog(&k4)
            .unwrap()
            .entries
            .iter()
            .map(|e| e.vector.clone())
            .collect();
        assert!(same_span(&a, &b).unwrap());
    });
}

// ---------------------------------------------------------------------------
// 3. Closed-form symmetry counts
// ---------------------------------------------------------------------------

#[test]
fn acceptance_03_heat_counts() {
    criterion(3, "heat counts: flat 7/10/14, constant curvature 6/9/13", || {
        assert_eq!(heat_symmetry_counts(SpaceClass::Flat(1)).count, 7);
        assert_eq!(heat_symmetry_counts(SpaceClass::Flat(2)).count, 10);
        assert_eq!(heat_symmetry_counts(SpaceClass::Flat(3)).count, 14);
        for n in 1..=3u32 {
            assert_eq!(heat_symmetry_counts(SpaceClass::Flat(n)).count, n * (n + 3) / 2 + 5);
        }
        // Constant curvature: (n+3) + n(n-1)/2.
        for (n, expect) in [(2u32, 6u32), (3, 9), (4, 13)] {
            let c = heat_symmetry_counts(SpaceClass::ConstantCurvature(n));
            assert_eq!(c.count, expect);
            assert_eq!(c.count, (n + 3) + n * (n - 1) / 2);
        }
        assert_eq!(heat_symmetry_counts(SpaceClass::OneDimensional).count, 7);
    });
}

// ---------------------------------------------------------------------------
// 4. Flat-space heat symmetries assembled from the homothetic algebra
// ---------------------------------------------------------------------------

/// Assemble the full flat-space symmetry list of `Delta u - u_t = 0` from
/// the solved homothetic algebra: clock T = 1 and T = t applied to each
/// gradient potential, the nongradient rotations, u-scaling, the time
/// translation, and one concrete additive solution.
fn flat_heat_generators(g: &MetricField, t: VarId) -> Vec<GeneratorPDE> {
    let n = g.dim();
    let u = var("u").unwrap();
    let basis = solve_homothetic(g, 2).unwrap();
    let zero_sp = || vec![Expr::zero(); n];
    let with_t = |xt: Expr, sp: Vec<Expr>| {
        let mut xi = vec![xt];
        xi.extend(sp);
        xi
    };
    let mut gens = Vec::new();
    // time translation
    gens.push(GeneratorPDE::new(with_t(Expr::one(), zero_sp()), Expr::zero()));
    for e in &basis.entries {
        match (&e.class.tag, &e.class.potential) {
            (Tag::KV, GradientStatus::NonGradient) => {
                gens.push(GeneratorPDE::new(with_t(Expr::zero(), e.vector.comps.clone()), Expr::zero()));
            }
            (Tag::GradientKV, GradientStatus::Gradient(s)) => {
                // T = 1: plain translation along S^{,i}.
                gens.push(GeneratorPDE::new(with_t(Expr::zero(), e.vector.comps.clone()), Expr::zero()));
                // T = t: drift t S^{,i} with eta = -(S/2) u.
                let sp: Vec<Expr> = e.vector.comps.iter().map(|c| Expr::var(t) * c.clone()).collect();
                let eta = Expr::rational(-1, 2) * s.clone() * Expr::var(u);
                gens.push(GeneratorPDE::new(with_t(Expr::zero(), sp), eta));
            }
            (Tag::GradientHV, GradientStatus::Gradient(s)) => {
                let psi = e.class.psi.clone().unwrap();
                // T = 1: scaling (2 psi t) d_t + S^{,i} d_i.
                gens.push(GeneratorPDE::new(
                    with_t(Expr::int(2) * psi.clone() * Expr::var(t), e.vector.comps.clone()),
                    Expr::zero(),
                ));
                // T = t: projective (psi t^2) d_t + t S^{,i} d_i with
                // eta = (-S/2 - (n/2) psi t) u.
                let sp: Vec<Expr> = e.vector.comps.iter().map(|c| Expr::var(t) * c.clone()).collect();
                let a = Expr::rational(-1, 2) * s.clone()
                    - Expr::rational(n as i64, 2) * psi.clone() * Expr::var(t);
                gens.push(GeneratorPDE::new(
                    with_t(psi * Expr::var(t).pow(2).unwrap(), sp),
                    a * Expr::var(u),
                ));
            }
            _ => {}
        }
    }
    // u-scaling
    gens.push(GeneratorPDE::new(with_t(Expr::zero(), zero_sp()), Expr::var(u)));
    // one representative of the additive family: b = S_hv + n t solves
    // Delta b - b_t = 0 (S_hv = r^2/2 has Delta S_hv = n).
    let s_hv = basis
        .entries
        .iter()
        .find_map(|e| match (&e.class.tag, &e.class.potential) {
            (Tag::GradientHV, GradientStatus::Gradient(s)) => Some(s.clone()),
            _ => None,
        })
        .unwrap();
    gens.push(GeneratorPDE::new(
        with_t(Expr::zero(), zero_sp()),
        s_hv + Expr::int(n as i64) * Expr::var(t),
    ));
    gens
}

#[test]
fn acceptance_04_flat_heat_symmetries() {
    criterion(4, "flat heat: assembled generators verify (n=1,2); x d_x fails", || {
        let t = var("t").unwrap();
        for names in [&["x"][..], &["x", "y"][..]] {
            let g = flat_metric(names);
            let n = g.dim();
            let p = heat_problem(&g, t, &Expr::zero()).unwrap();
            let gens = flat_heat_generators(&g, t);
            // Modulo the additive family (counted once), the list realizes
            // the closed-form count.
            assert_eq!(gens.len() as u32, heat_symmetry_counts(SpaceClass::Flat(n as u32)).count);
            for (i, x) in gens.iter().enumerate() {
                let vo = verify_symmetry(&p, x).unwrap();
                assert!(vo.is_symmetry, "generator {i} (n={n}) fails: {:?}", vo.residual);
            }
            // The additive part of the last generator solves the homogeneous
            // equation (oracle for the b-family membership).
            let conn = christoffel(&g).unwrap();
            let b = gens.last().unwrap().eta.clone();
            assert!(heat_operator(&g, &conn, t, &b).is_zero());
        }
        // Converse: the dilation x d_x alone is not a symmetry.
        let g1 = flat_metric(&["x"]);
        let p1 = heat_problem(&g1, t, &Expr::zero()).unwrap();
        let x = var("x").unwrap();
        let bad = GeneratorPDE::new(vec![Expr::zero(), Expr::var(x)], Expr::zero());
        assert!(!verify_symmetry(&p1, &bad).unwrap().is_symmetry);
    });
}

// ---------------------------------------------------------------------------
// 5. Flux table q(u)
// ---------------------------------------------------------------------------

#[test]
fn acceptance_05_flux_table() {
    criterion(5, "q(u) table: all four rows verify on the flat instance (b = 0)", || {
        let t = var("t").unwrap();
        let x = var("x").unwrap();
        let u = var("u").unwrap();
        let g1 = flat_metric(&["x"]);

        // Row q = q0 u: the drift t d_x - (x/2) u d_u survives for an
        // arbitrary constant q0.
        let q0 = opaque_const("ac_q0");
        let p = heat_problem(&g1, t, &(q0 * Expr::var(u))).unwrap();
        let drift = GeneratorPDE::new(
            vec![Expr::zero(), Expr::var(t)],
            Expr::rational(-1, 2) * Expr::var(x) * Expr::var(u),
        );
        assert!(verify_symmetry(&p, &drift).unwrap().is_symmetry);

        // Row q = u^n (n = 3): scaling 2t d_t + x d_x + (2/(1-n)) u d_u.
        let q = Expr::var(u).pow(3).unwrap();
        let p = heat_problem(&g1, t, &q).unwrap();
        let scaling = GeneratorPDE::new(
            vec![Expr::int(2) * Expr::var(t), Expr::var(x)],
            -Expr::var(u),
        );
        assert!(verify_symmetry(&p, &scaling).unwrap().is_symmetry);
        // Family-level consistency: the HV-generated family reproduces the
        // power-law condition (1-n) a = 2 psi c on the u^3 coefficient.
        let hv = VectorField::new(vec![Expr::var(x)]);
        let hs = heat_symmetry_hvkv_flux(&g1, t, &hv, &q).unwrap();
        let c = hs.c2.clone().unwrap();
        let coeff = liesym_core::symexpr::coefficient_of(&hs.residual, &[u], &[(u, 3)]).unwrap();
        zeq(&coeff, &(Expr::int(-2) * hs.a.clone() - Expr::int(2) * c), "power-law condition");

        // Row q = e^u in n = 2: 2t d_t + x d_x + y d_y - 2 d_u.
        let g2 = flat_metric(&["x", "y"]);
        let y = var("y").unwrap();
        let expu = Expr::atom(fn_atom(
            ruled_function("ac_expu", u, |f| Expr::atom(fn_atom(f))).unwrap(),
        ));
        let p = heat_problem(&g2, t, &expu).unwrap();
        let gen = GeneratorPDE::new(
            vec![Expr::int(2) * Expr::var(t), Expr::var(x), Expr::var(y)],
            Expr::int(-2),
        );
        assert!(verify_symmetry(&p, &gen).unwrap().is_symmetry);

        // Row q = u ln u: e^{-t} d_x + (1/2) e^{-t} x u d_u.
        let lnu = Expr::atom(fn_atom(
            ruled_function("ac_lnu", u, |_| Expr::one() / Expr::var(u)).unwrap(),
        ));
        let em = Expr::atom(fn_atom(
            ruled_function("ac_emt", t, |f| -Expr::atom(fn_atom(f))).unwrap(),
        ));
        let p = heat_problem(&g1, t, &(Expr::var(u) * lnu)).unwrap();
        let gen = GeneratorPDE::new(
            vec![Expr::zero(), em.clone()],
            Expr::rational(1, 2) * em * Expr::var(x) * Expr::var(u),
        );
        assert!(verify_symmetry(&p, &gen).unwrap().is_symmetry);
    });
}

// ---------------------------------------------------------------------------
// 6. Wave equation, unit speed
// ---------------------------------------------------------------------------

#[test]
fn acceptance_06_wave() {
    criterion(6, "wave c=1: 3 KV + 1 HV algebra; lambda = c1 - 2 psi c_hv", || {
        let x1 = var("x1").unwrap();
        let x2 = var("x2").unwrap();
        let fam = wave_symmetries(x1, x2, &Expr::one(), 2).unwrap();
        let kvs = fam.algebra.killing().len();
        let hvs = fam.algebra.homothetic().len();
        assert_eq!(kvs, 3);
        assert_eq!(hvs, 1);
        assert!(fam.trace.iter().all(|s| s.passed));

        // Generic combination: sum of all basis vectors with opaque constant
        // coefficients, plus (c1 u + b) d_u with b a concrete solution of
        // A^{ij} b_,ij = 0.
        let mut xi = VectorField::zero(2);
        let mut coeffs = Vec::new();
        let mut hv_part = Expr::zero();
        for e in &fam.algebra.entries {
            let c = opaque_const("ac_w");
            coeffs.push(c.clone());
            xi = xi.add(&e.vector.scale(&c));
            if e.class.psi.as_ref().map(|p| !p.is_zero()).unwrap_or(false) {
                hv_part = hv_part
                    + Expr::int(2) * e.class.psi.clone().unwrap() * c.clone();
            }
        }
        let c1 = opaque_const("ac_wc1");
        let b = Expr::var(x1).pow(2).unwrap() + Expr::var(x2).pow(2).unwrap();
        assert!(fam.b_constraint(&b).is_zero());
        let p = liesym_core::builder::wave_problem(x1, x2, &Expr::one()).unwrap();
        let x = fam.generator(&xi, &c1, &b);
        let vo = verify_symmetry(&p, &x).unwrap();
        assert!(vo.is_symmetry, "wave combination fails: {:?}", vo.residual);
        // Multiplier structure: lambda depends only on the u-scaling and the
        // homothety coefficient, lambda = c1 - 2 psi c_hv.
        zeq(&vo.lambda, &(c1 - hv_part), "wave multiplier structure");
    });
}

// ---------------------------------------------------------------------------
// 7. Lemma identities on a metric corpus
// ---------------------------------------------------------------------------

/// Identity for any xi with L_xi g = f g:
/// g^{jk} L_xi Gamma^i_jk
///   = g^{jk} xi^i_,jk + Gamma^i_,l xi^l - xi^i_,l Gamma^l + f Gamma^i.
fn lemma1b_check(g: &MetricField, xi: &VectorField, f: &Expr) {
    let n = g.dim();
    let lg = lie_derivative_metric(xi, g);
    for i in 0..n {
        for j in 0..n {
            zeq(&lg[i][j], &(f.clone() * g.lower[i][j].clone()), "conformal precondition");
        }
    }
    let conn = christoffel(g).unwrap();
    let lgamma = lie_derivative_connection(xi, &conn);
    for i in 0..n {
        let mut lhs = Expr::zero();
        let mut hess = Expr::zero();
        for j in 0..n {
            for k in 0..n {
                lhs = lhs + g.upper[j][k].clone() * lgamma[i][j][k].clone();
                hess = hess
                    + g.upper[j][k].clone()
                        * xi.comps[i].clone().diff(g.coords[j]).diff(g.coords[k]);
            }
        }
        let mut rest = f.clone() * conn.contracted[i].clone();
        for l in 0..n {
            rest = rest + conn.contracted[i].clone().diff(g.coords[l]) * xi.comps[l].clone()
                - xi.comps[i].clone().diff(g.coords[l]) * conn.contracted[l].clone();
        }
        zeq(&lhs, &(hess + rest), "contracted Lie-derivative identity");
    }
}

#[test]
fn acceptance_07_lemmas() {
    criterion(7, "lemma identities hold on a 5-metric corpus", || {
        // (a) Flat space: L_xi Gamma^k_ij = xi^k_,ij for arbitrary vectors.
        let mut rng = Lcg(0x11a);
        for names in [&["x", "y"][..], &["x", "y", "z"][..]] {
            let g = flat_metric(names);
            let conn = christoffel(&g).unwrap();
            let n = g.dim();
            let mut vectors: Vec<VectorField> = euclidean_catalog(&g.coords)
                .unwrap()
                .entries
                .iter()
                .map(|e| e.vector.clone())
                .collect();
            for _ in 0..5 {
                vectors.push(VectorField::new(
                    (0..n).map(|_| random_poly(&mut rng, &g.coords)).collect(),
                ));
            }
            for v in &vectors {
                let lgamma = lie_derivative_connection(v, &conn);
                for i in 0..n {
                    for j in 0..n {
                        for k in 0..n {
                            zeq(
                                &lgamma[i][j][k],
                                &v.comps[i].clone().diff(g.coords[j]).diff(g.coords[k]),
                                "flat-space Lie derivative of the connection",
                            );
                        }
                    }
                }
            }
        }

        // Corpus of conformal pairs (metric, vector, factor) for the
        // contracted identity and the CKV contraction check.
        let run_pair = |g: &MetricField, xi: &VectorField, f: &Expr| {
            lemma1b_check(g, xi, f);
            assert!(lemma2_check(xi, g, f).unwrap());
        };

        // 1. Flat metrics: every conformal-family catalog vector.
        for names in [&["x", "y"][..], &["x", "y", "z"][..]] {
            let g = flat_metric(names);
            for e in euclidean_catalog(&g.coords).unwrap().entries {
                if let Some(psi) = &e.class.psi {
                    run_pair(&g, &e.vector, &(Expr::int(2) * psi.clone()));
                }
            }
        }

        // 2. diag(x^-2, -1): Killing vectors x d_x and d_y.
        let x = var("x").unwrap();
        let yv = var("y").unwrap();
        let ghyp = MetricField::from_lower(
            vec![x, yv],
            vec![
                vec![Expr::var(x).pow(-2).unwrap(), Expr::zero()],
                vec![Expr::zero(), Expr::int(-1)],
            ],
        )
        .unwrap();
        run_pair(&ghyp, &VectorField::new(vec![Expr::var(x), Expr::zero()]), &Expr::zero());
        run_pair(&ghyp, &VectorField::new(vec![Expr::zero(), Expr::one()]), &Expr::zero());

        // 3. Conformally flat e^{2x} delta_ij in n = 2 (ruled exponential).
        let e2x = Expr::atom(fn_atom(
            ruled_function("ac_e2x", x, |f| Expr::int(2) * Expr::atom(fn_atom(f))).unwrap(),
        ));
        let gconf = MetricField::from_lower(
            vec![x, yv],
            vec![vec![e2x.clone(), Expr::zero()], vec![Expr::zero(), e2x.clone()]],
        )
        .unwrap();
        run_pair(&gconf, &VectorField::new(vec![Expr::zero(), Expr::one()]), &Expr::zero());
        run_pair(&gconf, &VectorField::new(vec![Expr::one(), Expr::zero()]), &Expr::int(2));
        run_pair(
            &gconf,
            &VectorField::new(vec![-Expr::var(yv), Expr::var(x)]),
            &(Expr::int(-2) * Expr::var(yv)),
        );

        // 4. de Sitter with symbolic curvature: all ten Killing vectors.
        let k = named_const("K");
        let gds = desitter_metric(&k).unwrap();
        for e in desitter_catalog(&k).unwrap().entries {
            run_pair(&gds, &e.vector, &Expr::zero());
        }

        // 5. Random degree-2 conformal factor times the flat metric: the
        // flat Killing/homothetic vectors remain conformal with a rational
        // factor xi(P)/P (+2 for the dilation).
        let pfac = Expr::one()
            + random_poly(&mut rng, &[x, yv]) * random_poly(&mut rng, &[x])
            + Expr::var(x).pow(2).unwrap();
        let grand = MetricField::from_lower(
            vec![x, yv],
            vec![vec![pfac.clone(), Expr::zero()], vec![Expr::zero(), pfac.clone()]],
        )
        .unwrap();
        let directional = |v: &VectorField, extra: i64| {
            let mut d = Expr::int(extra) * pfac.clone();
            for (i, c) in v.comps.iter().enumerate() {
                d = d + c.clone() * pfac.clone().diff(grand.coords[i]);
            }
            d / pfac.clone()
        };
        for (v, extra) in [
            (VectorField::new(vec![Expr::one(), Expr::zero()]), 0),
            (VectorField::new(vec![Expr::zero(), Expr::one()]), 0),
            (VectorField::new(vec![-Expr::var(yv), Expr::var(x)]), 0),
            (VectorField::new(vec![Expr::var(x), Expr::var(yv)]), 2),
        ] {
            let f = directional(&v, extra);
            run_pair(&grand, &v, &f);
        }
    });
}

// ---------------------------------------------------------------------------
// 8. Structural propositions on randomized problems
// ---------------------------------------------------------------------------

/// Extract the numeric matrix of an affine system in the constant atoms
/// `cs`, evaluated at the rational point `point`, and assert that the only
/// solution of `rows = 0` is `cs = 0`.
fn assert_trivial_nullspace(residuals: &[Expr], cs: &[AtomId], point: &[(VarId, Expr)]) {
    let eval = |e: &Expr, unit: Option<usize>| -> Expr {
        let mut r = e.clone();
        for (k, &c) in cs.iter().enumerate() {
            let v = if Some(k) == unit { Expr::one() } else { Expr::zero() };
            r = r.substitute(c, &v);
        }
        for (v, val) in point {
            r = r.substitute_var(*v, val);
        }
        r
    };
    let mut rows: Vec<Vec<Rat>> = Vec::new();
    for res in residuals {
        let base = eval(res, None);
        let mut row = Vec::new();
        for k in 0..cs.len() {
            let entry = eval(res, Some(k)) - base.clone();
            row.push(entry.as_rational().expect("coefficient must be numeric"));
        }
        rows.push(row);
    }
    let ns = nullspace(&rows, cs.len());
    assert!(ns.is_empty(), "elimination does not force the unknowns to zero");
}

#[test]
fn acceptance_08_propositions() {
    criterion(8, "Propositions 1-3 deduced on 12 randomized problems", || {
        let mut rng = Lcg(0x9a5);
        let mut rounds = 0usize;
        while rounds < 12 {
            let time_split = rounds >= 6;
            let t = var("t").unwrap();
            let xv = var("x").unwrap();
            let u = var("u").unwrap();
            let coords = if time_split {
                Coordinates::with_time(vec![t, xv], t).unwrap()
            } else {
                Coordinates::new(vec![t, xv]).unwrap()
            };
            let jet = Jet::new(coords, u).unwrap();
            let c = jet.coords().all().to_vec();

            // Random u-independent symmetric coefficient matrix; the t-split
            // rounds zero the (t,t) and (t,x) entries.
            let a = if time_split {
                let d = Expr::int(1 + rng.small(3)) + Expr::var(xv).pow(2).unwrap();
                vec![vec![Expr::zero(), Expr::zero()], vec![Expr::zero(), d]]
            } else {
                let off = random_poly(&mut rng, &[t, xv]);
                let d0 = Expr::int(1 + rng.small(4));
                let d1 = Expr::int(-1 - rng.small(4));
                vec![
                    vec![d0.clone(), off.clone()],
                    vec![off.clone(), d1.clone()],
                ]
            };
            if !time_split && liesym_core::tensor::determinant(&a).is_zero() {
                continue;
            }
            rounds += 1;

            let f_gen = fe("p8_f", &[c[0], c[1], u, jet.u1()[0], jet.u1()[1]]);
            let p = PDEProblem::new(jet, a.clone(), FForm::General(f_gen)).unwrap();
            let jet = &p.jet;

            // Proposition 1: an elimination case always exists for a nonzero
            // coefficient matrix.
            assert!(proposition1_xi_u(&a).unwrap().is_some());

            // Deduction of xi_,u = 0: perturb xi linearly in u with unknown
            // constants and show the first-derivative coefficient equations
            // force them all to zero.
            let cs: Vec<AtomId> = (0..2)
                .map(|_| opaque_const("p8c").atoms()[0])
                .collect();
            let xi_pert: Vec<Expr> = (0..2)
                .map(|i| fe("p8_xi", &[c[0], c[1]]) + Expr::atom(cs[i]) * Expr::var(u))
                .collect();
            let x = GeneratorPDE::new(xi_pert, fe("p8_eta", &[c[0], c[1], u]));
            let ds = determining_general(&p, &x).unwrap();
            let po1: Vec<Expr> = ds
                .equations
                .iter()
                .filter(|e| e.tag == "Po.1")
                .map(|e| e.residual.clone())
                .collect();
            assert!(!po1.is_empty());
            let point = vec![
                (c[0], Expr::rational(3, 7)),
                (c[1], Expr::rational(5, 11)),
                (u, Expr::rational(2, 9)),
            ];
            assert_trivial_nullspace(&po1, &cs, &point);

            // Proposition 2: with xi = xi(x) and eta = a(x) u + b(x), every
            // second-derivative coefficient is the conformal combination
            // (2 - delta)(L_xi A^{ab} + a A^{ab} - lambda A^{ab}).
            let xi2: Vec<Expr> = (0..2).map(|_| fe("p8_k", &[c[0], c[1]])).collect();
            let a_of_x = fe("p8_a", &[c[0], c[1]]);
            let b_of_x = fe("p8_b", &[c[0], c[1]]);
            let x2 = GeneratorPDE::new(xi2.clone(), a_of_x.clone() * Expr::var(u) + b_of_x);
            let ds2 = determining_general(&p, &x2).unwrap();
            let lam = ds2.multiplier.clone().unwrap();
            let lie_a = liesym_core::prolongation::lie_derivative_upper(&x2.xi, &a, &c);
            for i in 0..2 {
                for j in i..2 {
                    let mult = if i == j { 1 } else { 2 };
                    let mut key = vec![(var_atom(jet.u2(i, j)), 1)];
                    key.sort_unstable();
                    let got = ds2
                        .equations
                        .iter()
                        .find(|e| e.tag == "Po.2" && e.key == key)
                        .map(|e| e.residual.clone())
                        .unwrap_or_else(Expr::zero);
                    let expected = Expr::int(mult)
                        * (lie_a[i][j].clone() + a_of_x.clone() * a[i][j].clone()
                            - lam.clone() * a[i][j].clone());
                    zeq(&got, &expected, "conformal shape of the u_ij coefficients");
                }
            }

            // Proposition 3: under the t-split hypothesis the mixed (t, x)
            // coefficient is the contraction -2 A^{kx} xi^t_,k, which with a
            // nondegenerate spatial block forces xi^t = xi^t(t) (together
            // with xi^t_,u = 0 from the first-derivative block).
            if time_split {
                let mut key = vec![(var_atom(jet.u2(0, 1)), 1)];
                key.sort_unstable();
                let got = ds2
                    .equations
                    .iter()
                    .find(|e| e.tag == "Po.2" && e.key == key)
                    .map(|e| e.residual.clone())
                    .unwrap_or_else(Expr::zero);
                let expected = Expr::int(-2) * a[1][1].clone() * x2.xi[0].clone().diff(c[1]);
                zeq(&got, &expected, "time-split contraction");
                assert!(!a[1][1].is_zero());
            }
        }
    });
}

// ---------------------------------------------------------------------------
// 9. Noether symmetries of the free particle and the oscillator
// ---------------------------------------------------------------------------

#[test]
fn acceptance_09_noether() {
    criterion(9, "Noether: conserved integrals; free-particle dimension 5", || {
        let g = flat_metric(&["x"]);
        let t = var("t").unwrap();
        let x = var("x").unwrap();
        let conn = christoffel(&g).unwrap();

        // Counting convention (as documented in the CLI report): the time
        // translation counts once; each admitted Case-II family contributes
        // its two clock solutions, minus the constant-clock duplicate of
        // Case I when the clock constant m vanishes.
        let count_for = |v: &Expr| -> (u32, Vec<Expr>, Vec<Expr>) {
            let basis = solve_homothetic(&g, 2).unwrap();
            let mut count = 1u32;
            let mut case1_integrals = Vec::new();
            let mut case2_integrals = Vec::new();
            for e in &basis.entries {
                if !matches!(e.class.tag, Tag::KV | Tag::GradientKV | Tag::HV | Tag::GradientHV) {
                    continue;
                }
                let r1 = noether_case1(&g, t, &e.vector, v).unwrap();
                if r1.residual.is_zero() {
                    count += 1;
                    case1_integrals.push(r1.integral.clone());
                }
                if let GradientStatus::Gradient(s) = &e.class.potential {
                    let r2 = noether_case2(&g, t, s, v).unwrap();
                    if r2.residual.is_zero() {
                        let m0 = r2.clock.as_ref().map(|cl| cl.m.is_zero()).unwrap_or(false);
                        count += if m0 { 1 } else { 2 };
                        case2_integrals.push(r2.integral.clone());
                    }
                }
            }
            (count, case1_integrals, case2_integrals)
        };

        // Free particle: dimension 5 (time translation plus four).
        let (free_count, free_c1, free_c2) = count_for(&Expr::zero());
        assert_eq!(free_count, 5);
        for i in free_c1.iter().chain(free_c2.iter()) {
            let d = on_shell_time_derivative(i, t, &conn, None).unwrap();
            assert!(d.is_zero(), "free-particle integral not conserved: {d:?}");
        }

        // Harmonic oscillator V = x^2/2: every zero-residual result has a
        // conserved integral along x'' = -x; the dimension is again 5.
        let v = Expr::rational(1, 2) * Expr::var(x).pow(2).unwrap();
        let (osc_count, osc_c1, osc_c2) = count_for(&v);
        assert_eq!(osc_count, 5);
        assert!(osc_c1.is_empty(), "oscillator admits no Case-I symmetry");
        assert_eq!(osc_c2.len(), 2);
        let force = VectorField::new(vec![-Expr::var(x)]);
        for i in &osc_c2 {
            let d = on_shell_time_derivative(i, t, &conn, Some(&force)).unwrap();
            assert!(d.is_zero(), "oscillator integral not conserved: {d:?}");
        }
    });
}

// ---------------------------------------------------------------------------
// 10. Prolongation against the total-derivative oracle
// ---------------------------------------------------------------------------

fn total_d(jet: &Jet, e: &Expr, j: usize) -> Expr {
    let mut r = e.clone().diff(jet.coords().all()[j]) + Expr::var(jet.u1()[j]) * e.clone().diff(jet.u());
    for k in 0..jet.dim() {
        r = r + Expr::var(jet.u2(j, k)) * e.clone().diff(jet.u1()[k]);
    }
    r
}

#[test]
fn acceptance_10_prolongation_oracle() {
    criterion(10, "second prolongation equals the total-derivative recursion (50 random)", || {
        let t = var("t").unwrap();
        let x = var("x").unwrap();
        let u = var("u").unwrap();
        let jet = Jet::new(Coordinates::with_time(vec![t, x], t).unwrap(), u).unwrap();
        let base = [t, x, u];
        let mut rng = Lcg(0xacce55);
        for round in 0..50 {
            let xgen = GeneratorPDE::new(
                vec![random_poly(&mut rng, &base), random_poly(&mut rng, &base)],
                random_poly(&mut rng, &base),
            );
            let (e1, e2) = prolong2(&jet, &xgen).unwrap();
            // Oracle: D_j eta - u_k D_j xi^k, then one more total derivative.
            let n = jet.dim();
            let mut o1 = Vec::new();
            for i in 0..n {
                let mut v = total_d(&jet, &xgen.eta, i);
                for j in 0..n {
                    v = v - Expr::var(jet.u1()[j]) * total_d(&jet, &xgen.xi[j], i);
                }
                o1.push(v);
            }
            for i in 0..n {
                zeq(&e1[i], &o1[i], &format!("first prolongation, round {round}"));
                for j in 0..n {
                    let mut v = total_d(&jet, &o1[i], j);
                    for k in 0..n {
                        v = v - Expr::var(jet.u2(i, k)) * total_d(&jet, &xgen.xi[k], j);
                    }
                    zeq(&e2[i][j], &v, &format!("second prolongation, round {round}"));
                }
            }
        }
    });
}
