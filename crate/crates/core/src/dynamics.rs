//! Hamiltonian flows `ξ̇ = X_f(ξ)`.
//!
//! For an expectation Hamiltonian `⟨ℍ⟩` the flow is the Schrödinger flow
//! `iħψ̇ = ℍψ`, solved exactly by [`SpectralPropagator`]. The integrators
//! here solve the same equation numerically from the vector field alone:
//!
//! * `Midpoint`: implicit midpoint rule by fixed-point iteration. Symplectic,
//!   and conserves every quadratic first integral (norm, energy).
//! * `Cayley`: the closed-form midpoint step for linear fields,
//!   `(I − (dt/2)K)⁻¹(I + (dt/2)K)` with `K = −(i/ħ)A`.
//! * `Rk4`: classical explicit Runge–Kutta. Neither symplectic nor norm
//!   preserving; kept as a baseline.
//! * `Exact`: the spectral propagator sampled on the time grid.

use std::fmt;

use nalgebra::linalg::LU;
use nalgebra::Dyn;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::operators::{spectral_decompose, HermitianOperator, SpectralData};
use crate::poisson::{analytic_field, ComplexFunction, ObservableFunction, ObservableKind, PoissonEngine};
use crate::space::{CMatrix, CVector, StatePoint};

/// Largest number of stored states per trajectory; use a stride beyond this.
pub const MAX_STORED_STATES: usize = 1_000_001;

/// Normalization tolerance for initial states of expectation flows.
pub const INITIAL_STATE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Exact,
    Midpoint,
    Cayley,
    Rk4,
}

impl Method {
    pub fn name(&self) -> &'static str {
        match self {
            Method::Exact => "exact",
            Method::Midpoint => "midpoint",
            Method::Cayley => "cayley",
            Method::Rk4 => "rk4",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorConfig {
    pub method: Method,
    pub dt: f64,
    pub steps: usize,
    #[serde(default = "default_solver_tol")]
    pub solver_tol: f64,
    #[serde(default = "default_solver_max_iter")]
    pub solver_max_iter: usize,
    /// Store every `stride`-th state.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

fn default_solver_tol() -> f64 {
    1e-13
}

fn default_solver_max_iter() -> usize {
    50
}

fn default_stride() -> usize {
    1
}

impl IntegratorConfig {
    pub fn new(method: Method, dt: f64, steps: usize) -> Self {
        Self {
            method,
            dt,
            steps,
            solver_tol: default_solver_tol(),
            solver_max_iter: default_solver_max_iter(),
            stride: default_stride(),
        }
    }

    pub fn total_time(&self) -> f64 {
        self.dt * self.steps as f64
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidConfig(format!("dt must be positive, got {}", self.dt)));
        }
        if self.steps == 0 {
            return Err(Error::InvalidConfig("steps must be positive".into()));
        }
        if !(self.solver_tol >= 1e-15) {
            return Err(Error::InvalidConfig(format!(
                "solver_tol must be at least 1e-15, got {}",
                self.solver_tol
            )));
        }
        if self.solver_max_iter == 0 {
            return Err(Error::InvalidConfig("solver_max_iter must be positive".into()));
        }
        if self.stride == 0 {
            return Err(Error::InvalidConfig("stride must be positive".into()));
        }
        if self.steps / self.stride + 1 > MAX_STORED_STATES {
            return Err(Error::InvalidConfig(format!(
                "{} steps at stride {} would store more than {MAX_STORED_STATES} states; increase stride",
                self.steps, self.stride
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StepDiagnostics {
    pub norm: f64,
    pub energy: f64,
    /// Fixed-point iterations of the step that produced this state.
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub method: Method,
    pub times: Vec<f64>,
    pub states: Vec<StatePoint>,
    pub diagnostics: Vec<StepDiagnostics>,
    pub total_iterations: usize,
    pub max_iterations: usize,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn initial(&self) -> &StatePoint {
        &self.states[0]
    }

    pub fn last(&self) -> &StatePoint {
        self.states.last().expect("trajectory holds at least the initial state")
    }

    pub fn final_time(&self) -> f64 {
        *self.times.last().expect("trajectory holds at least the initial time")
    }
}

/// Exact Schrödinger propagation through the eigenbasis of `ℍ`.
#[derive(Debug, Clone)]
pub struct SpectralPropagator {
    spectral: SpectralData,
    hbar: f64,
}

impl SpectralPropagator {
    pub fn new(h: &HermitianOperator, hbar: f64) -> Result<Self> {
        Ok(Self { spectral: spectral_decompose(h)?, hbar })
    }

    pub fn from_spectral(spectral: SpectralData, hbar: f64) -> Self {
        Self { spectral, hbar }
    }

    pub fn spectral(&self) -> &SpectralData {
        &self.spectral
    }

    /// `cₙ = ⟨ψₙ|ψ₀⟩`.
    pub fn coefficients(&self, psi0: &StatePoint) -> Result<CVector> {
        check_dim(self.spectral.dim(), psi0.dim())?;
        Ok(self.spectral.eigenvectors.adjoint() * psi0.amplitudes())
    }

    /// `Σₙ cₙ e^{−i aₙ t/ħ} ψₙ` from precomputed coefficients.
    pub fn evolve_coefficients(&self, coefficients: &CVector, t: f64) -> StatePoint {
        let phased = CVector::from_fn(coefficients.len(), |k, _| {
            coefficients[k] * Complex64::from_polar(1.0, -self.spectral.eigenvalues[k] * t / self.hbar)
        });
        StatePoint::new(&self.spectral.eigenvectors * phased)
    }

    pub fn propagate(&self, psi0: &StatePoint, t: f64) -> Result<StatePoint> {
        if t == 0.0 {
            check_dim(self.spectral.dim(), psi0.dim())?;
            return Ok(psi0.clone());
        }
        let c = self.coefficients(psi0)?;
        Ok(self.evolve_coefficients(&c, t))
    }
}

/// `e^{−iℍt/ħ}ψ₀`.
pub fn exact_propagate(h: &HermitianOperator, psi0: &StatePoint, t: f64, hbar: f64) -> Result<StatePoint> {
    SpectralPropagator::new(h, hbar)?.propagate(psi0, t)
}

enum Stepper {
    Exact { propagator: SpectralPropagator, coefficients: CVector },
    Midpoint,
    Cayley { lu: LU<Complex64, Dyn, Dyn>, generator: CMatrix },
    Rk4,
}

/// Integrates `ξ̇ = X_f(ξ)` from `xi0` and records every `cfg.stride`-th state.
pub fn integrate(f: &ObservableFunction, xi0: &StatePoint, cfg: &IntegratorConfig) -> Result<Trajectory> {
    cfg.validate()?;
    let space = *f.space();
    check_dim(space.complex_dim(), xi0.dim())?;
    if let ObservableKind::Expectation(_) = f.kind() {
        let deviation = (xi0.norm() - 1.0).abs();
        if deviation > INITIAL_STATE_TOLERANCE {
            return Err(Error::NotNormalized { deviation });
        }
    }
    let hbar = space.hbar();
    let dt = cfg.dt;

    let mut stepper = match (cfg.method, f.operator()) {
        (Method::Exact, Some(a)) => {
            let propagator = SpectralPropagator::new(a, hbar)?;
            let coefficients = propagator.coefficients(xi0)?;
            Stepper::Exact { propagator, coefficients }
        }
        (Method::Cayley, Some(a)) => {
            let generator = a.matrix() * Complex64::new(0.0, -1.0 / hbar);
            let n = a.dim();
            let lhs = CMatrix::identity(n, n) - &generator * Complex64::new(0.5 * dt, 0.0);
            Stepper::Cayley { lu: lhs.lu(), generator }
        }
        (Method::Exact, None) => return Err(Error::MethodUnsupported { method: "exact" }),
        (Method::Cayley, None) => return Err(Error::MethodUnsupported { method: "cayley" }),
        (Method::Midpoint, _) => Stepper::Midpoint,
        (Method::Rk4, _) => Stepper::Rk4,
    };

    let engine = PoissonEngine::analytic();
    let field = |psi: &CVector| -> CVector {
        match f.operator() {
            Some(a) => analytic_field(a, &StatePoint::new(psi.clone()), hbar).into_components(),
            None => engine
                .vector_field(f, &StatePoint::new(psi.clone()))
                .expect("dimension checked above")
                .into_components(),
        }
    };
    let energy = |psi: &StatePoint| f.evaluate(psi).expect("dimension checked above");

    let stored = cfg.steps / cfg.stride + 1;
    let mut times = Vec::with_capacity(stored);
    let mut states = Vec::with_capacity(stored);
    let mut diagnostics = Vec::with_capacity(stored);
    times.push(0.0);
    diagnostics.push(StepDiagnostics { norm: xi0.norm(), energy: energy(xi0), iterations: 0 });
    states.push(xi0.clone());

    let mut current = xi0.amplitudes().clone();
    let mut total_iterations = 0;
    let mut max_iterations = 0;
    let half = Complex64::new(0.5, 0.0);
    let cdt = Complex64::new(dt, 0.0);

    for step in 1..=cfg.steps {
        let (next, iterations) = match &mut stepper {
            Stepper::Exact { propagator, coefficients } => {
                let t = step as f64 * dt;
                (propagator.evolve_coefficients(coefficients, t).into_amplitudes(), 0)
            }
            Stepper::Midpoint => {
                let mut next = &current + field(&current) * cdt;
                let mut converged = None;
                for it in 1..=cfg.solver_max_iter {
                    let mid = (&current + &next) * half;
                    let candidate = &current + field(&mid) * cdt;
                    let change = crate::space::norm(&(&candidate - &next));
                    next = candidate;
                    if change <= cfg.solver_tol {
                        converged = Some(it);
                        break;
                    }
                }
                match converged {
                    Some(it) => (next, it),
                    None => return Err(Error::NonConvergence { step, iterations: cfg.solver_max_iter }),
                }
            }
            Stepper::Cayley { lu, generator } => {
                let rhs = &current + &*generator * &current * (cdt * half);
                let mut x = lu.solve(&rhs).ok_or(Error::NonConvergence { step, iterations: 1 })?;
                // one round of iterative refinement against the unfactored matrix
                let residual = &rhs - (&x - &*generator * &x * (cdt * half));
                if let Some(correction) = lu.solve(&residual) {
                    x += correction;
                }
                (x, 1)
            }
            Stepper::Rk4 => {
                let k1 = field(&current);
                let k2 = field(&(&current + &k1 * (cdt * half)));
                let k3 = field(&(&current + &k2 * (cdt * half)));
                let k4 = field(&(&current + &k3 * cdt));
                let sum = k1 + (k2 + k3) * Complex64::new(2.0, 0.0) + k4;
                (&current + sum * (cdt / Complex64::new(6.0, 0.0)), 4)
            }
        };
        total_iterations += iterations;
        max_iterations = max_iterations.max(iterations);
        current = next;
        if step % cfg.stride == 0 {
            let state = StatePoint::new(current.clone());
            times.push(step as f64 * dt);
            diagnostics.push(StepDiagnostics { norm: state.norm(), energy: energy(&state), iterations });
            states.push(state);
        }
    }

    Ok(Trajectory { method: cfg.method, times, states, diagnostics, total_iterations, max_iterations })
}

/// `maxₖ |u(ξ(t_k)) − e^{−i a t_k/ħ}·u(ξ(0))|`.
///
/// Small exactly when `u` evolves by a pure phase along the trajectory,
/// which for a Hamiltonian trajectory of `f` is the case when
/// `iħ{f, u} = a·u`.
pub fn phase_evolution_residual(u: &ComplexFunction, a: f64, traj: &Trajectory, hbar: f64) -> Result<f64> {
    let Some(first) = traj.states.first() else {
        return Ok(0.0);
    };
    let u0 = u.evaluate(first)?;
    let t0 = traj.times[0];
    traj.times.iter().zip(&traj.states).try_fold(0.0_f64, |acc, (&t, state)| {
        let expected = u0 * Complex64::from_polar(1.0, -a * (t - t0) / hbar);
        Ok(acc.max((u.evaluate(state)? - expected).norm()))
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryReport {
    pub method: Method,
    pub stored_states: usize,
    pub final_time: f64,
    /// `maxₖ |‖ξ_k‖ − 1|`.
    pub max_norm_drift: f64,
    /// `maxₖ |f(ξ_k) − f(ξ_0)|`.
    pub max_energy_drift: f64,
    pub total_solver_iterations: usize,
    pub max_solver_iterations: usize,
    pub mean_solver_iterations: f64,
}

pub fn trajectory_diagnostics(traj: &Trajectory, f: &ObservableFunction) -> Result<TrajectoryReport> {
    let e0 = match traj.states.first() {
        Some(s) => f.evaluate(s)?,
        None => 0.0,
    };
    let mut max_norm_drift = 0.0_f64;
    let mut max_energy_drift = 0.0_f64;
    for state in &traj.states {
        max_norm_drift = max_norm_drift.max((state.norm() - 1.0).abs());
        max_energy_drift = max_energy_drift.max((f.evaluate(state)? - e0).abs());
    }
    let steps = traj.states.len().saturating_sub(1).max(1);
    Ok(TrajectoryReport {
        method: traj.method,
        stored_states: traj.states.len(),
        final_time: traj.times.last().copied().unwrap_or(0.0),
        max_norm_drift,
        max_energy_drift,
        total_solver_iterations: traj.total_iterations,
        max_solver_iterations: traj.max_iterations,
        mean_solver_iterations: traj.total_iterations as f64 / steps as f64,
    })
}

/// `maxₖ ‖ξ_k − e^{−iℍt_k/ħ}ξ_0‖` against the exact propagator.
pub fn deviation_from_exact(traj: &Trajectory, h: &HermitianOperator, hbar: f64) -> Result<f64> {
    let propagator = SpectralPropagator::new(h, hbar)?;
    let c = propagator.coefficients(traj.initial())?;
    Ok(traj.times.iter().zip(&traj.states).fold(0.0_f64, |acc, (&t, state)| {
        let exact = propagator.evolve_coefficients(&c, t);
        acc.max(crate::space::norm(&(state.amplitudes() - exact.amplitudes())))
    }))
}
