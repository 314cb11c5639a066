//! Scenario files.
//!
//! A scenario is a JSON object. Only `operator` is required:
//!
//! ```json
//! {
//!   "hbar": 1.0,
//!   "operator": "0.5*X0 + 0.5*X1",
//!   "second_operator": "Z0*Z1",
//!   "initial_state": "uniform",
//!   "integrator": { "method": "midpoint", "dt": 0.001, "steps": 1000 },
//!   "outputs": { "report": "verify.json", "trajectory": "trajectory.csv" },
//!   "seed": 0,
//!   "samples": 100,
//!   "tolerances": { "bracket": 1e-10, "qfe": 1e-5 },
//!   "phi": "reconstruction"
//! }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use qsymplectic::operators::HermitianOperator;
use qsymplectic::quantum_function::AxiomTolerances;
use qsymplectic::space::{CVector, StatePoint, SymplecticSpace};
use qsymplectic::{IntegratorConfig, Method};

use num_complex::Complex64;

use crate::expr::parse_operator_expr;
use crate::CliError;

pub const DEFAULT_SAMPLES: usize = 100;
/// Allowed `|‖ψ₀‖ − 1|` for an explicit initial state.
pub const INITIAL_STATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum InitialState {
    Preset(String),
    Amplitudes(Vec<[f64; 2]>),
}

impl Default for InitialState {
    fn default() -> Self {
        InitialState::Preset("uniform".into())
    }
}

impl InitialState {
    fn resolve(&self, dim: usize) -> Result<StatePoint, String> {
        match self {
            InitialState::Preset(name) if name == "uniform" => Ok(StatePoint::uniform(dim)),
            InitialState::Preset(name) => {
                let k = name
                    .strip_prefix("basis:")
                    .and_then(|k| k.trim().parse::<usize>().ok())
                    .ok_or_else(|| format!("unknown preset \"{name}\" (expected \"uniform\" or \"basis:K\")"))?;
                if k >= dim {
                    return Err(format!("basis index {k} out of range for dimension {dim}"));
                }
                Ok(StatePoint::basis(dim, k))
            }
            InitialState::Amplitudes(values) => {
                if values.len() != dim {
                    return Err(format!("length {} does not match operator dimension {dim}", values.len()));
                }
                let v = CVector::from_iterator(dim, values.iter().map(|[re, im]| Complex64::new(*re, *im)));
                let psi = StatePoint::new(v);
                let deviation = (psi.norm() - 1.0).abs();
                if !(deviation <= INITIAL_STATE_TOLERANCE) {
                    return Err(format!("state is not normalized (|norm - 1| = {deviation:.3e})"));
                }
                Ok(psi)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhiChoice {
    /// `ξ ↦ Σₙ uₙ(ξ)ξₙ` from the operator's own quantum function.
    #[default]
    Reconstruction,
    Identity,
    /// The eigenvector of largest `|aₙ|`, whatever the input. Fails the
    /// quantum-function equation on purpose.
    Constant,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIntegrator {
    method: Method,
    dt: f64,
    steps: usize,
    solver_tol: Option<f64>,
    solver_max_iter: Option<usize>,
    stride: Option<usize>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutputs {
    report: Option<String>,
    trajectory: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTolerances {
    decomposition: Option<f64>,
    bracket: Option<f64>,
    normalization: Option<f64>,
    stationary: Option<f64>,
    commutator_analytic: Option<f64>,
    commutator_finite_difference: Option<f64>,
    deviation: Option<f64>,
    phase: Option<f64>,
    reconstruction_analytic: Option<f64>,
    reconstruction_finite_difference: Option<f64>,
    intertwining: Option<f64>,
    qfe: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    hbar: Option<f64>,
    operator: String,
    second_operator: Option<String>,
    initial_state: Option<InitialState>,
    integrator: Option<RawIntegrator>,
    outputs: Option<RawOutputs>,
    seed: Option<u64>,
    samples: Option<usize>,
    tolerances: Option<RawTolerances>,
    phi: Option<PhiChoice>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tolerances {
    pub decomposition: f64,
    pub bracket: f64,
    pub normalization: f64,
    pub stationary: f64,
    /// Relative to `1 + ‖A‖‖B‖`.
    pub commutator_analytic: f64,
    /// Relative to `1 + ‖A‖‖B‖`.
    pub commutator_finite_difference: f64,
    pub deviation: f64,
    pub phase: f64,
    pub reconstruction_analytic: f64,
    pub reconstruction_finite_difference: f64,
    pub intertwining: f64,
    pub qfe: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            decomposition: 1e-10,
            bracket: 1e-10,
            normalization: 1e-10,
            stationary: 1e-10,
            commutator_analytic: 1e-9,
            commutator_finite_difference: 1e-5,
            deviation: 1e-5,
            phase: 1e-5,
            reconstruction_analytic: 1e-10,
            reconstruction_finite_difference: 1e-5,
            intertwining: 1e-5,
            qfe: 1e-5,
        }
    }
}

impl Tolerances {
    pub fn axioms(&self) -> AxiomTolerances {
        AxiomTolerances {
            decomposition: self.decomposition,
            bracket: self.bracket,
            normalization: self.normalization,
            stationary: self.stationary,
        }
    }

    fn resolve(raw: &RawTolerances, scale: f64) -> Result<Self, String> {
        let d = Self::default();
        let pick = |name: &str, given: Option<f64>, default: f64| -> Result<f64, String> {
            let v = given.unwrap_or(default);
            if !(v.is_finite() && v > 0.0) {
                return Err(format!("tolerances.{name}: must be a positive number, got {v}"));
            }
            Ok(v * scale)
        };
        Ok(Self {
            decomposition: pick("decomposition", raw.decomposition, d.decomposition)?,
            bracket: pick("bracket", raw.bracket, d.bracket)?,
            normalization: pick("normalization", raw.normalization, d.normalization)?,
            stationary: pick("stationary", raw.stationary, d.stationary)?,
            commutator_analytic: pick("commutator_analytic", raw.commutator_analytic, d.commutator_analytic)?,
            commutator_finite_difference: pick(
                "commutator_finite_difference",
                raw.commutator_finite_difference,
                d.commutator_finite_difference,
            )?,
            deviation: pick("deviation", raw.deviation, d.deviation)?,
            phase: pick("phase", raw.phase, d.phase)?,
            reconstruction_analytic: pick(
                "reconstruction_analytic",
                raw.reconstruction_analytic,
                d.reconstruction_analytic,
            )?,
            reconstruction_finite_difference: pick(
                "reconstruction_finite_difference",
                raw.reconstruction_finite_difference,
                d.reconstruction_finite_difference,
            )?,
            intertwining: pick("intertwining", raw.intertwining, d.intertwining)?,
            qfe: pick("qfe", raw.qfe, d.qfe)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outputs {
    pub report: String,
    pub trajectory: String,
}

/// Command-line overrides applied on top of the file.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub tol_scale: Option<f64>,
}

/// The fully resolved scenario, defaults included. This is what reports
/// echo back.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub hbar: f64,
    pub operator: String,
    pub second_operator: Option<String>,
    pub dimension: usize,
    pub initial_state: InitialState,
    pub integrator: IntegratorConfig,
    pub outputs: Outputs,
    pub seed: u64,
    pub samples: usize,
    pub tol_scale: f64,
    pub tolerances: Tolerances,
    pub phi: PhiChoice,
}

/// A scenario together with the objects it describes.
#[derive(Debug, Clone)]
pub struct Setup {
    pub scenario: Scenario,
    pub space: SymplecticSpace,
    pub operator: HermitianOperator,
    pub second_operator: Option<HermitianOperator>,
    pub initial_state: StatePoint,
}

pub fn default_integrator() -> IntegratorConfig {
    IntegratorConfig::new(Method::Midpoint, 1e-3, 1000)
}

/// Parses scenario text. `base` resolves `file:` operator references;
/// `command` names the default report file.
pub fn parse_scenario(text: &str, base: &Path, command: &str, overrides: Overrides) -> Result<Setup, CliError> {
    let raw: RawScenario = serde_json::from_str(text).map_err(|e| CliError::Config(format!("scenario: {e}")))?;
    let config = |msg: String| CliError::Config(msg);

    let hbar = raw.hbar.unwrap_or(1.0);
    if !(hbar.is_finite() && hbar > 0.0) {
        return Err(config(format!("hbar: must be positive, got {hbar}")));
    }
    let samples = raw.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples == 0 {
        return Err(config("samples: must be positive".into()));
    }
    let tol_scale = overrides.tol_scale.unwrap_or(1.0);
    if !(tol_scale.is_finite() && tol_scale > 0.0) {
        return Err(config(format!("--tol-scale: must be positive, got {tol_scale}")));
    }
    let tolerances = Tolerances::resolve(&raw.tolerances.unwrap_or_default(), tol_scale).map_err(config)?;

    let integrator = match raw.integrator {
        None => default_integrator(),
        Some(r) => {
            let d = default_integrator();
            IntegratorConfig {
                method: r.method,
                dt: r.dt,
                steps: r.steps,
                solver_tol: r.solver_tol.unwrap_or(d.solver_tol),
                solver_max_iter: r.solver_max_iter.unwrap_or(d.solver_max_iter),
                stride: r.stride.unwrap_or(d.stride),
            }
        }
    };
    integrator.validate().map_err(|e| config(format!("integrator: {e}")))?;

    let outputs = raw.outputs.unwrap_or_default();
    let outputs = Outputs {
        report: outputs.report.unwrap_or_else(|| format!("{command}.json")),
        trajectory: outputs.trajectory.unwrap_or_else(|| "trajectory.csv".into()),
    };
    if outputs.report.is_empty() || outputs.trajectory.is_empty() {
        return Err(config("outputs: file names must not be empty".into()));
    }
    if outputs.report == outputs.trajectory {
        return Err(config("outputs: report and trajectory must be different files".into()));
    }

    let expr = parse_operator_expr(&raw.operator).map_err(|e| config(format!("operator: {e}")))?;
    let operator = expr.to_operator(base)?;
    let dim = operator.dim();
    let second_operator = match &raw.second_operator {
        None => None,
        Some(text) => {
            let expr = parse_operator_expr(text).map_err(|e| config(format!("second_operator: {e}")))?;
            let op = expr.to_operator(base)?;
            if op.dim() != dim {
                return Err(config(format!(
                    "second_operator: dimension {} does not match operator dimension {dim}",
                    op.dim()
                )));
            }
            Some(op)
        }
    };

    let initial = raw.initial_state.unwrap_or_default();
    let initial_state = initial.resolve(dim).map_err(|e| config(format!("initial_state: {e}")))?;
    let space = SymplecticSpace::new(dim, hbar).map_err(|e| config(format!("hbar: {e}")))?;

    Ok(Setup {
        scenario: Scenario {
            hbar,
            operator: raw.operator,
            second_operator: raw.second_operator,
            dimension: dim,
            initial_state: initial,
            integrator,
            outputs,
            seed: overrides.seed.or(raw.seed).unwrap_or(0),
            samples,
            tol_scale,
            tolerances,
            phi: raw.phi.unwrap_or_default(),
        },
        space,
        operator,
        second_operator,
        initial_state,
    })
}

pub fn load_scenario(path: &Path, command: &str, overrides: Overrides) -> Result<Setup, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    let base = path.parent().map_or_else(|| PathBuf::from("."), Path::to_path_buf);
    parse_scenario(&text, &base, command, overrides).map_err(|e| match e {
        CliError::Config(msg) => CliError::Config(format!("{}: {msg}", path.display())),
        other => other,
    })
}
