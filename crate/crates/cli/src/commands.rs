use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Serialize;

use qsymplectic::dynamics::{deviation_from_exact, phase_evolution_residual, trajectory_diagnostics, TrajectoryReport};
use qsymplectic::poisson::{bracket_commutator_report, BracketCommutatorReport, ComplexFunction, BRACKET_CONVENTION_NOTE};
use qsymplectic::quantum_function::{AxiomReport, ReconstructionCheck, ReconstructionReport};
use qsymplectic::space::StatePoint;
use qsymplectic::{
    integrate, qfe_residual, quantum_function_from_qfe, reconstruction_map, spectral_decompose, verify_axioms,
    verify_reconstruction, EmbeddingMap, ObservableFunction, QuantumFunction, Trajectory,
};

use crate::report::{to_json, trajectory_csv};
use crate::scenario::{PhiChoice, Scenario, Setup};
use crate::CliError;

pub const DEGENERACY_NOTE: &str =
    "spectrum is degenerate: eigenfunctions inside a repeated eigenvalue depend on the eigensolver's basis choice";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Verify,
    Evolve,
    Bracket,
    Reconstruct,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Evolve => "evolve",
            Command::Bracket => "bracket",
            Command::Reconstruct => "reconstruct",
        }
    }
}

/// A residual compared against its tolerance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn at_most(name: &'static str, value: f64, tolerance: f64) -> Self {
        Self { name, value, tolerance, passed: value <= tolerance }
    }
}

#[derive(Debug, Serialize)]
struct Report<'a, R> {
    command: &'static str,
    scenario: &'a Scenario,
    notes: Vec<&'static str>,
    results: R,
    checks: &'a [Check],
    passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub passed: bool,
    pub checks: Vec<Check>,
    pub written: Vec<PathBuf>,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.passed {
            0
        } else {
            1
        }
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn finish<R: Serialize>(
    command: Command,
    setup: &Setup,
    out_dir: &Path,
    notes: Vec<&'static str>,
    results: R,
    checks: Vec<Check>,
    extra_failure: bool,
) -> Result<Outcome, CliError> {
    let passed = !extra_failure && checks.iter().all(|c| c.passed);
    let report = Report { command: command.name(), scenario: &setup.scenario, notes, results, checks: &checks, passed };
    let path = out_dir.join(&setup.scenario.outputs.report);
    write_file(&path, &to_json(&report))?;
    Ok(Outcome { passed, checks, written: vec![path] })
}

pub fn run(command: Command, setup: &Setup, out_dir: &Path) -> Result<Outcome, CliError> {
    std::fs::create_dir_all(out_dir).map_err(|source| CliError::Io { path: out_dir.to_path_buf(), source })?;
    match command {
        Command::Verify => verify(setup, out_dir),
        Command::Evolve => evolve(setup, out_dir),
        Command::Bracket => bracket(setup, out_dir),
        Command::Reconstruct => reconstruct(setup, out_dir),
    }
}

fn commutator_checks(report: &BracketCommutatorReport, setup: &Setup) -> [Check; 2] {
    let tol = &setup.scenario.tolerances;
    [
        Check::at_most("commutator_analytic", report.analytic_max_residual, tol.commutator_analytic * report.scale),
        Check::at_most(
            "commutator_finite_difference",
            report.finite_difference_max_residual,
            tol.commutator_finite_difference * report.scale,
        ),
    ]
}

fn axiom_checks(report: &AxiomReport) -> [Check; 4] {
    let t = &report.tolerances;
    [
        Check::at_most("decomposition", report.decomposition_residual, t.decomposition),
        Check::at_most("bracket", report.bracket_residual, t.bracket),
        Check::at_most("normalization", report.normalization_residual, t.normalization),
        Check::at_most(
            "stationary",
            report.stationary_coordinate_residual.max(report.stationary_value_residual),
            t.stationary,
        ),
    ]
}

#[derive(Debug, Serialize)]
struct VerifyResults {
    degenerate: bool,
    axioms: AxiomReport,
    commutator: Option<BracketCommutatorReport>,
}

fn verify(setup: &Setup, out_dir: &Path) -> Result<Outcome, CliError> {
    let s = &setup.scenario;
    let qf = QuantumFunction::from_operator(&setup.operator, setup.space)?;
    let axioms = verify_axioms(&qf, s.samples, s.seed, s.tolerances.axioms())?;
    let mut checks = axiom_checks(&axioms).to_vec();
    let mut notes = Vec::new();
    let commutator = match &setup.second_operator {
        Some(b) => {
            let report = bracket_commutator_report(&setup.operator, b, s.samples, s.seed, s.hbar)?;
            checks.extend(commutator_checks(&report, setup));
            notes.push(BRACKET_CONVENTION_NOTE);
            Some(report)
        }
        None => None,
    };
    if qf.is_degenerate() {
        notes.push(DEGENERACY_NOTE);
    }
    let results = VerifyResults { degenerate: qf.is_degenerate(), axioms, commutator };
    finish(Command::Verify, setup, out_dir, notes, results, checks, false)
}

fn bracket(setup: &Setup, out_dir: &Path) -> Result<Outcome, CliError> {
    let s = &setup.scenario;
    let b = setup
        .second_operator
        .as_ref()
        .ok_or_else(|| CliError::Config("second_operator: required by the bracket command".into()))?;
    let report = bracket_commutator_report(&setup.operator, b, s.samples, s.seed, s.hbar)?;
    let checks = commutator_checks(&report, setup).to_vec();
    finish(Command::Bracket, setup, out_dir, vec![BRACKET_CONVENTION_NOTE], report, checks, false)
}

#[derive(Debug, Serialize)]
struct PhaseResidual {
    index: usize,
    eigenvalue: f64,
    residual: f64,
}

#[derive(Debug, Serialize)]
struct EvolveResults {
    degenerate: bool,
    error: Option<String>,
    diagnostics: Option<TrajectoryReport>,
    deviation_from_exact: Option<f64>,
    phase_residuals: Vec<PhaseResidual>,
}

/// Integration failures such as a non-converging implicit solve are check
/// failures, not configuration errors: they are written into the report.
fn try_integrate(f: &ObservableFunction, setup: &Setup) -> Result<Result<Trajectory, String>, CliError> {
    match integrate(f, &setup.initial_state, &setup.scenario.integrator) {
        Ok(traj) => Ok(Ok(traj)),
        Err(e @ qsymplectic::Error::NonConvergence { .. }) => Ok(Err(e.to_string())),
        Err(e) => Err(e.into()),
    }
}

fn evolve(setup: &Setup, out_dir: &Path) -> Result<Outcome, CliError> {
    let s = &setup.scenario;
    let f = ObservableFunction::expectation(setup.operator.clone(), setup.space)?;
    let spectral = spectral_decompose(&setup.operator)?;
    let mut notes = Vec::new();
    if spectral.degenerate {
        notes.push(DEGENERACY_NOTE);
    }
    let traj = match try_integrate(&f, setup)? {
        Ok(traj) => traj,
        Err(error) => {
            let results = EvolveResults {
                degenerate: spectral.degenerate,
                error: Some(error),
                diagnostics: None,
                deviation_from_exact: None,
                phase_residuals: Vec::new(),
            };
            return finish(Command::Evolve, setup, out_dir, notes, results, Vec::new(), true);
        }
    };

    let csv_path = out_dir.join(&s.outputs.trajectory);
    write_file(&csv_path, &trajectory_csv(&traj))?;

    let diagnostics = trajectory_diagnostics(&traj, &f)?;
    let deviation = deviation_from_exact(&traj, &setup.operator, s.hbar)?;
    let phase_residuals = (0..spectral.dim())
        .map(|k| {
            let u = ComplexFunction::coordinate(spectral.eigenvector(k));
            let a = spectral.eigenvalues[k];
            Ok(PhaseResidual { index: k, eigenvalue: a, residual: phase_evolution_residual(&u, a, &traj, s.hbar)? })
        })
        .collect::<Result<Vec<_>, qsymplectic::Error>>()?;
    let worst_phase = phase_residuals.iter().fold(0.0_f64, |m, p| m.max(p.residual));
    let checks = vec![
        Check::at_most("deviation_from_exact", deviation, s.tolerances.deviation),
        Check::at_most("phase_evolution", worst_phase, s.tolerances.phase),
    ];
    let results = EvolveResults {
        degenerate: spectral.degenerate,
        error: None,
        diagnostics: Some(diagnostics),
        deviation_from_exact: Some(deviation),
        phase_residuals,
    };
    let mut outcome = finish(Command::Evolve, setup, out_dir, notes, results, checks, false)?;
    outcome.written.push(csv_path);
    Ok(outcome)
}

#[derive(Debug, Serialize)]
struct QfeConstructionSummary {
    normalization_residual: f64,
    stationary_residual: f64,
    qfe_residual: f64,
    axioms: AxiomReport,
}

#[derive(Debug, Serialize)]
struct ReconstructResults {
    degenerate: bool,
    error: Option<String>,
    reconstruction: Option<ReconstructionReport>,
    phi: PhiChoice,
    qfe_residual: Option<f64>,
    /// Set when the QFE check passed and the induced quantum function was
    /// built.
    qfe_construction: Option<QfeConstructionSummary>,
    qfe_construction_error: Option<String>,
}

/// The candidate map for the quantum-function equation.
pub fn phi_map(choice: PhiChoice, qf: &QuantumFunction) -> EmbeddingMap {
    match choice {
        PhiChoice::Reconstruction => reconstruction_map(qf).embedding(),
        PhiChoice::Identity => Arc::new(|x: &StatePoint| x.amplitudes().clone()),
        PhiChoice::Constant => {
            let k = qf
                .eigenvalues()
                .iter()
                .enumerate()
                .fold(0, |best, (k, a)| if a.abs() > qf.eigenvalues()[best].abs() { k } else { best });
            let fixed = qf.stationary_states()[k].amplitudes().clone();
            Arc::new(move |_: &StatePoint| fixed.clone())
        }
    }
}

fn reconstruct(setup: &Setup, out_dir: &Path) -> Result<Outcome, CliError> {
    let s = &setup.scenario;
    let tol = &s.tolerances;
    let qf = QuantumFunction::from_operator(&setup.operator, setup.space)?;
    let mut notes = Vec::new();
    if qf.is_degenerate() {
        notes.push(DEGENERACY_NOTE);
    }
    let mut results = ReconstructResults {
        degenerate: qf.is_degenerate(),
        error: None,
        reconstruction: None,
        phi: s.phi,
        qfe_residual: None,
        qfe_construction: None,
        qfe_construction_error: None,
    };
    let traj = match try_integrate(&qf.observable(), setup)? {
        Ok(traj) => traj,
        Err(error) => {
            results.error = Some(error);
            return finish(Command::Reconstruct, setup, out_dir, notes, results, Vec::new(), true);
        }
    };

    let rec = verify_reconstruction(&qf, &traj, ReconstructionCheck { samples: s.samples, seed: s.seed })?;
    let mut checks = vec![
        Check::at_most("reconstruction_bracket_analytic", rec.bracket_residual_analytic, tol.reconstruction_analytic),
        Check::at_most(
            "reconstruction_bracket_finite_difference",
            rec.bracket_residual_finite_difference,
            tol.reconstruction_finite_difference,
        ),
        Check::at_most("reconstruction_expectation", rec.expectation_residual, tol.reconstruction_analytic),
        Check::at_most("reconstruction_norm", rec.norm_residual, tol.reconstruction_analytic),
        Check::at_most("reconstruction_basis", rec.basis_residual, tol.reconstruction_analytic),
        Check::at_most("intertwining", rec.intertwining_residual, tol.intertwining),
    ];
    results.reconstruction = Some(rec);

    let phi = phi_map(s.phi, &qf);
    let mut failed = false;
    match qfe_residual(&setup.operator, &phi, setup.space, s.samples, s.seed) {
        Ok(residual) => {
            checks.push(Check::at_most("qfe", residual, tol.qfe));
            results.qfe_residual = Some(residual);
            if residual <= tol.qfe {
                let stationary = qf.stationary_states().to_vec();
                match quantum_function_from_qfe(&setup.operator, &phi, setup.space, stationary, s.samples, s.seed, tol.qfe) {
                    Ok(built) => {
                        failed |= !built.axioms.passed;
                        results.qfe_construction = Some(QfeConstructionSummary {
                            normalization_residual: built.normalization_residual,
                            stationary_residual: built.stationary_residual,
                            qfe_residual: built.qfe_residual,
                            axioms: built.axioms,
                        });
                    }
                    Err(e @ qsymplectic::Error::PreconditionFailed { .. }) => {
                        failed = true;
                        results.qfe_construction_error = Some(e.to_string());
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
        Err(e @ qsymplectic::Error::PreconditionFailed { .. }) => {
            failed = true;
            results.error = Some(e.to_string());
        }
        Err(e) => return Err(e.into()),
    }
    finish(Command::Reconstruct, setup, out_dir, notes, results, checks, failed)
}
