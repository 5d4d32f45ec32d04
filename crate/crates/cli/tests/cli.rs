//! End-to-end tests of the command-line surface: exit codes, report shape,
//! the documented examples, and byte-for-byte determinism of repeated runs.

use std::path::PathBuf;

use serde_json::Value;

fn run(args: &[&str]) -> (i32, String, String) {
    let mut argv = vec!["liesym".to_string()];
    argv.extend(args.iter().map(|s| s.to_string()));
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = liesym_cli::run(&argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).expect("stdout utf8"),
        String::from_utf8(err).expect("stderr utf8"),
    )
}

fn run_json(args: &[&str]) -> Value {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "expected success, stderr: {err}");
    serde_json::from_str(&out).expect("valid JSON report")
}

fn fixture(name: &str, contents: &str) -> (PathBuf, String) {
    let dir = std::env::temp_dir().join(format!("liesym-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).expect("temp dir");
    let path = dir.join(name);
    std::fs::write(&path, contents).expect("write fixture");
    let s = path.to_str().expect("utf8 path").to_string();
    (path, s)
}

#[test]
fn counts_flat3_is_14() {
    let v = run_json(&["counts", "--space", "flat:3"]);
    assert_eq!(v["count"], 14);
    assert_eq!(v["n"], 3);
}

#[test]
fn counts_all_classes() {
    assert_eq!(run_json(&["counts", "--space", "onedim"])["count"], 7);
    assert_eq!(run_json(&["counts", "--space", "flat:2"])["count"], 10);
    assert_eq!(run_json(&["counts", "--space", "flat:4"])["count"], 19);
    assert_eq!(run_json(&["counts", "--space", "constcurv:2"])["count"], 6);
    assert_eq!(run_json(&["counts", "--space", "constcurv:3"])["count"], 9);
    assert_eq!(run_json(&["counts", "--space", "constcurv:4"])["count"], 13);
}

#[test]
fn counts_bad_space_is_spec_error() {
    let (code, _, err) = run(&["counts", "--space", "hyperbolic:2"]);
    assert_eq!(code, 2);
    assert!(err.contains("space"), "diagnostic names the field: {err}");
}

#[test]
fn catalog_euclidean_2() {
    let v = run_json(&["catalog", "--euclidean", "2"]);
    let entries = v["catalog"]["entries"].as_array().expect("entries");
    // Full flat-space catalog: translations, rotation, homothety, plus the
    // conformal and projective vectors.
    assert_eq!(entries.len(), 10);
    let classes: Vec<&str> = entries
        .iter()
        .map(|e| e["class"].as_str().unwrap())
        .collect();
    let kvs = classes
        .iter()
        .filter(|c| **c == "KV" || **c == "gradient-KV")
        .count();
    let hvs = classes
        .iter()
        .filter(|c| **c == "HV" || **c == "gradient-HV")
        .count();
    assert_eq!(kvs, 3);
    assert_eq!(hvs, 1);
}

#[test]
fn catalog_desitter_symbolic() {
    let v = run_json(&["catalog", "--desitter"]);
    let entries = v["catalog"]["entries"].as_array().expect("entries");
    assert_eq!(entries.len(), 10);
    for e in entries {
        assert!(e["class"].as_str().unwrap().contains("KV"));
    }
}

#[test]
fn catalog_requires_exactly_one_source() {
    let (code, _, _) = run(&["catalog"]);
    assert_eq!(code, 2);
    let (code, _, _) = run(&["catalog", "--euclidean", "2", "--desitter"]);
    assert_eq!(code, 2);
}

#[test]
fn verify_heat_boost_example() {
    let (_, metric) = fixture(
        "heat1d-problem.json",
        r#"{"coordinates": ["x"], "t": "t", "q": "0", "g_lower": [["1"]]}"#,
    );
    let (_, gen) = fixture(
        "boost.json",
        r#"{"xi": ["0", "2*t"], "eta": "-x*u"}"#,
    );
    let v = run_json(&["verify", "--problem", &metric, "--generator", &gen]);
    assert_eq!(v["is_symmetry"], true);
    assert_eq!(v["lambda"], "-x");
}

#[test]
fn verify_non_symmetry_reports_false() {
    let (_, metric) = fixture(
        "heat1d-problem2.json",
        r#"{"coordinates": ["x"], "t": "t", "q": "0", "g_lower": [["1"]]}"#,
    );
    let (_, gen) = fixture("notsym.json", r#"{"xi": ["0", "x"], "eta": "0"}"#);
    let v = run_json(&["verify", "--problem", &metric, "--generator", &gen]);
    assert_eq!(v["is_symmetry"], false);
}

#[test]
fn determining_linear_all_zero_for_symmetry() {
    let (_, metric) = fixture(
        "heat1d-problem3.json",
        r#"{"coordinates": ["x"], "t": "t", "q": "0", "g_lower": [["1"]]}"#,
    );
    let (_, gen) = fixture("boost2.json", r#"{"xi": ["0", "2*t"], "eta": "-x*u"}"#);
    let v = run_json(&["determining", "--problem", &metric, "--generator", &gen]);
    assert_eq!(v["system"]["all_zero"], true);
    let eqs = v["system"]["equations"].as_array().expect("equations");
    assert!(!eqs.is_empty());
    for e in eqs {
        assert!(e["tag"].as_str().unwrap().starts_with("GPE."));
    }
}

#[test]
fn determining_ode_projective_symmetry() {
    // Free 1D motion x'' = 0 admits t^2 d_t + t x d_x.
    let (_, problem) = fixture(
        "free1d.json",
        r#"{"coordinates": ["x"], "t": "t", "g_lower": [["1"]], "forces": []}"#,
    );
    let (_, gen) = fixture("proj.json", r#"{"xi": "t^2", "eta": ["t*x"]}"#);
    let v = run_json(&["verify", "--problem", &problem, "--generator", &gen]);
    assert_eq!(v["is_symmetry"], true);
    let (_, bad) = fixture("projbad.json", r#"{"xi": "t^2", "eta": ["x"]}"#);
    let v = run_json(&["verify", "--problem", &problem, "--generator", &bad]);
    assert_eq!(v["is_symmetry"], false);
}

#[test]
fn collineations_flat_line() {
    let (_, metric) = fixture("line.json", r#"{"coordinates": ["x"], "g_lower": [["1"]]}"#);
    let v = run_json(&["collineations", "--metric", &metric, "--degree", "2"]);
    let entries = v["algebra"]["entries"].as_array().expect("entries");
    assert_eq!(entries.len(), 2);
    assert_eq!(v["degree"], 2);
}

#[test]
fn heat_families_flat_line() {
    let (_, metric) = fixture("line2.json", r#"{"coordinates": ["x"], "g_lower": [["1"]]}"#);
    let v = run_json(&["heat", "--metric", &metric, "--flux", "0"]);
    let fams = v["families"].as_array().expect("families");
    assert_eq!(fams.len(), 2);
    for f in fams {
        assert!(f["tag"].as_str().unwrap().starts_with("HEF."));
    }
}

#[test]
fn noether_free_particle_and_oscillator_count_5() {
    let (_, metric) = fixture("line3.json", r#"{"coordinates": ["x"], "g_lower": [["1"]]}"#);
    let free = run_json(&["noether", "--metric", &metric, "--potential", "0"]);
    assert_eq!(free["admitted_count"], 5);
    let osc = run_json(&["noether", "--metric", &metric, "--potential", "x^2/2"]);
    assert_eq!(osc["admitted_count"], 5);
    // Every reported result carries a first integral expression.
    for r in osc["results"].as_array().expect("results") {
        assert!(r["integral"].as_str().is_some());
    }
}

#[test]
fn wave_flat_speed() {
    let v = run_json(&["wave", "--speed", "1"]);
    let entries = v["algebra"]["entries"].as_array().expect("entries");
    assert_eq!(entries.len(), 4); // 3 KV + 1 HV
    for step in v["trace"].as_array().expect("trace") {
        assert_eq!(step["passed"], true);
    }
}

#[test]
fn wave_zero_speed_is_spec_error() {
    let (code, _, err) = run(&["wave", "--speed", "0"]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn markdown_format_renders() {
    let (code, out, _) = run(&["counts", "--space", "flat:3", "--format", "md"]);
    assert_eq!(code, 0);
    assert!(out.contains("**count**: 14"));
    assert!(serde_json::from_str::<Value>(&out).is_err(), "md is not JSON");
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let (_, metric) = fixture("line4.json", r#"{"coordinates": ["x"], "g_lower": [["1"]]}"#);
    let jobs: Vec<Vec<&str>> = vec![
        vec!["counts", "--space", "flat:3"],
        vec!["catalog", "--euclidean", "3"],
        vec!["collineations", "--metric", &metric],
        vec!["noether", "--metric", &metric, "--potential", "x^2/2"],
        vec!["wave", "--speed", "1", "--format", "md"],
    ];
    for args in jobs {
        let (c1, o1, _) = run(&args);
        let (c2, o2, _) = run(&args);
        assert_eq!(c1, 0);
        assert_eq!(c1, c2);
        assert_eq!(o1, o2, "non-deterministic output for {args:?}");
    }
}

#[test]
fn unknown_symbol_is_spec_error_naming_field() {
    let (_, metric) = fixture(
        "badmetric.json",
        r#"{"coordinates": ["x"], "g_lower": [["w"]]}"#,
    );
    let (code, _, err) = run(&["collineations", "--metric", &metric]);
    assert_eq!(code, 2);
    assert!(!err.is_empty());
}

#[test]
fn conflicting_problem_kinds_rejected() {
    let (_, problem) = fixture(
        "conflict.json",
        r#"{"coordinates": ["x"], "t": "t", "q": "0", "f": "0", "g_lower": [["1"]]}"#,
    );
    let (_, gen) = fixture("anygen.json", r#"{"xi": ["0", "0"], "eta": "0"}"#);
    let (code, _, err) = run(&["verify", "--problem", &problem, "--generator", &gen]);
    assert_eq!(code, 2);
    assert!(err.contains("exactly one"), "diagnostic explains the conflict: {err}");
}

#[test]
fn missing_file_is_spec_error() {
    let (code, _, err) = run(&["collineations", "--metric", "/nonexistent/m.json"]);
    assert_eq!(code, 2);
    assert!(err.contains("metric file"));
}

#[test]
fn help_exits_zero() {
    let (code, out, _) = run(&["--help"]);
    assert_eq!(code, 0);
    assert!(out.contains("collineations"));
}

#[test]
fn general_pde_with_constants() {
    // u_xx + u_yy = k*u with a named constant in the problem spec.
    let (_, problem) = fixture(
        "lap.json",
        r#"{
            "coordinates": ["x", "y"],
            "A_upper": [["1", "0"], ["0", "1"]],
            "constants": {"k": "1"},
            "f": "k*u"
        }"#,
    );
    let (_, gen) = fixture("rot.json", r#"{"xi": ["y", "-x"], "eta": "0"}"#);
    let v = run_json(&["verify", "--problem", &problem, "--generator", &gen]);
    assert_eq!(v["is_symmetry"], true);
}
