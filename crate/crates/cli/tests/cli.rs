use std::path::Path;
use std::process::{Command, Output};

use proptest::prelude::*;
use qsymplectic_cli::expr::{Factor, Pauli, Term};
use qsymplectic_cli::matrix_file::write_matrix;
use qsymplectic_cli::{parse_operator_expr, OperatorExpr};

fn qsym(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_qsym")).args(args).output().expect("qsym runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn run_in(dir: &Path, cmd: &str, scenario: &str, out: &str, extra: &[&str]) -> Output {
    let out = dir.join(out);
    let mut args = vec![cmd, "--scenario", scenario, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    qsym(&args)
}

fn report(dir: &Path, out: &str, cmd: &str) -> serde_json::Value {
    let text = std::fs::read_to_string(dir.join(out).join(format!("{cmd}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

#[test]
fn verify_passes_for_z_and_echoes_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"operator": "Z0", "integrator": {"method": "exact", "dt": 0.01, "steps": 100}}"#);
    let out = run_in(dir.path(), "verify", &s, "out", &[]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let r = report(dir.path(), "out", "verify");
    assert_eq!(r["scenario"]["hbar"], 1.0);
    assert_eq!(r["scenario"]["seed"], 0);
    assert_eq!(r["scenario"]["initial_state"], "uniform");
    assert_eq!(r["scenario"]["integrator"]["solver_tol"], 1e-13);
    assert!(r["results"]["axioms"]["bracket_residual"].as_f64().unwrap() <= 1e-10);
}

#[test]
fn verify_with_second_operator_reports_brackets() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"operator": "X0", "second_operator": "Y0"}"#);
    assert_eq!(run_in(dir.path(), "verify", &s, "out", &[]).status.code(), Some(0));
    let r = report(dir.path(), "out", "verify");
    assert!(r["results"]["commutator"]["analytic_max_residual"].as_f64().unwrap() <= 1e-12);
    assert!(r["notes"][0].as_str().unwrap().contains("i*hbar"));
}

#[test]
fn unreachable_tolerance_fails_the_check() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"operator": "0.3*X0 + Z0"}"#);
    let out = run_in(dir.path(), "verify", &s, "out", &["--tol-scale", "1e-10"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("FAIL"));
    assert_eq!(report(dir.path(), "out", "verify")["passed"], false);
}

#[test]
fn configuration_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        (r#"{"operator": "X0*Z0"}"#, "not Hermitian"),
        (r#"{"operator": "Z0", "integrator": {"method": "midpoint", "dt": -1, "steps": 5}}"#, "integrator"),
        (r#"{"operator": "Z0", "initial_state": [[1, 0]]}"#, "initial_state"),
        (r#"{"operator": "Z0 Z1"}"#, "position 3"),
        (r#"{"operator": "Z0""#, "line 1"),
    ];
    for (text, needle) in cases {
        let s = write(dir.path(), "bad.json", text);
        let out = run_in(dir.path(), "verify", &s, "out", &[]);
        assert_eq!(out.status.code(), Some(2), "{text}");
        let err = String::from_utf8_lossy(&out.stderr);
        assert!(err.contains(needle), "{text}: {err}");
    }
    assert_eq!(qsym(&["verify"]).status.code(), Some(2));
    assert_eq!(qsym(&["frobnicate", "--scenario", "x"]).status.code(), Some(2));
    let missing = dir.path().join("missing.json");
    assert_eq!(qsym(&["verify", "--scenario", missing.to_str().unwrap()]).status.code(), Some(2));

    let s = write(dir.path(), "nob.json", r#"{"operator": "Z0"}"#);
    let out = run_in(dir.path(), "bracket", &s, "out", &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("second_operator"));
}

#[test]
fn evolve_writes_trajectory_and_deviation() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"operator": "Z0", "integrator": {"method": "midpoint", "dt": 0.001, "steps": 1000}}"#);
    assert_eq!(run_in(dir.path(), "evolve", &s, "out", &["--quiet"]).status.code(), Some(0));
    let r = report(dir.path(), "out", "evolve");
    assert!(r["results"]["deviation_from_exact"].as_f64().unwrap() <= 1e-6);
    for p in r["results"]["phase_residuals"].as_array().unwrap() {
        assert!(p["residual"].as_f64().unwrap() <= 1e-5);
    }
    let csv = std::fs::read_to_string(dir.path().join("out/trajectory.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("t,re_0,im_0,re_1,im_1,norm,energy"));
    assert_eq!(lines.count(), 1001);

    let s = write(dir.path(), "e.json", r#"{"operator": "Z0", "integrator": {"method": "exact", "dt": 0.01, "steps": 100}}"#);
    assert_eq!(run_in(dir.path(), "evolve", &s, "exact", &[]).status.code(), Some(0));
    let r = report(dir.path(), "exact", "evolve");
    assert!(r["results"]["deviation_from_exact"].as_f64().unwrap() <= 1e-12);
}

#[test]
fn evolve_reports_nonconvergence_as_a_failure() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(
        dir.path(),
        "s.json",
        r#"{"operator": "Z0", "integrator": {"method": "midpoint", "dt": 0.5, "steps": 4, "solver_max_iter": 2}}"#,
    );
    assert_eq!(run_in(dir.path(), "evolve", &s, "out", &[]).status.code(), Some(1));
    let r = report(dir.path(), "out", "evolve");
    assert!(r["results"]["error"].as_str().unwrap().contains("step 1"));
}

#[test]
fn reconstruct_cases() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "z.json", r#"{"operator": "Z0"}"#);
    assert_eq!(run_in(dir.path(), "reconstruct", &s, "z", &[]).status.code(), Some(0));
    assert!(report(dir.path(), "z", "reconstruct")["results"]["qfe_construction"]["axioms"]["passed"] == true);

    let s = write(dir.path(), "i.json", r#"{"operator": "I0"}"#);
    assert_eq!(run_in(dir.path(), "reconstruct", &s, "i", &[]).status.code(), Some(0));
    let r = report(dir.path(), "i", "reconstruct");
    assert_eq!(r["results"]["degenerate"], true);
    assert!(r["notes"][0].as_str().unwrap().contains("degenerate"));

    let s = write(dir.path(), "c.json", r#"{"operator": "X0 + 0.5*Z0", "phi": "constant"}"#);
    assert_eq!(run_in(dir.path(), "reconstruct", &s, "c", &[]).status.code(), Some(1));
    let r = report(dir.path(), "c", "reconstruct");
    assert!(r["results"]["qfe_residual"].as_f64().unwrap() >= 0.1);
    assert!(r["results"]["qfe_construction"].is_null());

    let s = write(dir.path(), "id.json", r#"{"operator": "0.5*X0 + 0.5*X1", "phi": "identity"}"#);
    assert_eq!(run_in(dir.path(), "reconstruct", &s, "id", &[]).status.code(), Some(0));
}

#[test]
fn operators_can_come_from_matrix_files() {
    let dir = tempfile::tempdir().unwrap();
    let m = parse_operator_expr("0.5*X0 + Z1*Y0").unwrap().to_matrix(Path::new(".")).unwrap();
    write_matrix(&dir.path().join("h.txt"), &m).unwrap();
    let s = write(dir.path(), "s.json", r#"{"operator": "file:h.txt", "second_operator": "Z0*I1"}"#);
    assert_eq!(run_in(dir.path(), "verify", &s, "out", &[]).status.code(), Some(0));
    assert_eq!(report(dir.path(), "out", "verify")["scenario"]["dimension"], 4);
}

#[test]
fn seed_flag_overrides_and_changes_samples() {
    let dir = tempfile::tempdir().unwrap();
    let s = write(dir.path(), "s.json", r#"{"operator": "X0 + 0.2*Y1", "second_operator": "Z0*X1", "seed": 4}"#);
    run_in(dir.path(), "bracket", &s, "a", &[]);
    run_in(dir.path(), "bracket", &s, "b", &["--seed", "5"]);
    let a = report(dir.path(), "a", "bracket");
    let b = report(dir.path(), "b", "bracket");
    assert_eq!(a["scenario"]["seed"], 4);
    assert_eq!(b["scenario"]["seed"], 5);
    assert_ne!(a["results"]["finite_difference_max_residual"], b["results"]["finite_difference_max_residual"]);
}

#[test]
fn corpus_round_trips() {
    let corpus = include_str!("data/expressions.txt");
    for line in corpus.lines() {
        let tree = parse_operator_expr(line).unwrap();
        assert_eq!(parse_operator_expr(&tree.to_string()).unwrap(), tree, "{line}");
    }
}

fn pauli() -> impl Strategy<Value = Pauli> {
    prop_oneof![Just(Pauli::I), Just(Pauli::X), Just(Pauli::Y), Just(Pauli::Z)]
}

fn term() -> impl Strategy<Value = Term> {
    let coefficient = prop_oneof![Just(1.0), Just(-1.0), -1e6..1e6f64, prop::num::f64::NORMAL];
    let factors = prop::collection::vec((pauli(), 0usize..40).prop_map(|(pauli, site)| Factor { pauli, site }), 1..5);
    (coefficient, factors).prop_map(|(coefficient, factors)| Term { coefficient, factors })
}

proptest! {
    #[test]
    fn printed_trees_reparse_identically(terms in prop::collection::vec(term(), 1..6)) {
        let tree = OperatorExpr::Sum(terms);
        let text = tree.to_string();
        let back = parse_operator_expr(&text).unwrap();
        prop_assert_eq!(&back, &tree);
        if let (OperatorExpr::Sum(a), OperatorExpr::Sum(b)) = (&back, &tree) {
            for (x, y) in a.iter().zip(b) {
                prop_assert_eq!(x.coefficient.to_bits(), y.coefficient.to_bits());
            }
        }
    }
}
