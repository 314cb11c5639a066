//! Quantum functions: observables written as `f = Σₙ aₙ|uₙ|²`.
//!
//! A quantum function bundles a real function `f` on the phase space with
//! eigenvalues `aₙ`, complex eigenfunctions `uₙ` and stationary states `ξₙ`
//! such that
//!
//! ```text
//! f = Σₙ aₙ|uₙ|²      iħ{f, uₙ} = aₙuₙ      Σₙ|uₙ|² = 1
//! uₙ(ξₘ) = δₘₙ        f(ξₙ) = aₙ
//! ```
//!
//! [`QuantumFunction::from_operator`] builds one from a Hermitian operator
//! with `uₙ = ⟨ψₙ|·⟩`. [`verify_axioms`] measures each relation on seeded
//! random unit states. [`ReconstructionMap`] goes the other way, turning a
//! quantum function into a Hilbert-space picture `Φ(ξ) = (u₁(ξ), …, uₙ(ξ))`
//! with the diagonal operator `f̃ = diag(aₙ)`. [`qfe_residual`] and
//! [`quantum_function_from_qfe`] check a candidate map against the
//! quantum-function equation `iħ{⟨Φ|A|Φ⟩, Φ} = AΦ`.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamics::Trajectory;
use crate::error::{check_dim, Error, Hypothesis, Result};
use crate::operators::{make_hermitian, spectral_decompose, HermitianOperator};
use crate::poisson::{ComplexFunction, ComplexKind, ObservableFunction, PoissonEngine};
use crate::sampling::sample_state;
use crate::space::{inner_unchecked, norm, CMatrix, CVector, StatePoint, SymplecticSpace};

/// Tolerance on `|‖ξ‖ − 1|` for inputs that must lie on the unit sphere.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

/// A map from the phase space into some `ℂᵐ`.
pub type EmbeddingMap = Arc<dyn Fn(&StatePoint) -> CVector + Send + Sync>;

#[derive(Debug, Clone)]
pub struct QuantumFunction {
    eigenvalues: Vec<f64>,
    eigenfunctions: Vec<ComplexFunction>,
    stationary_states: Vec<StatePoint>,
    /// An independently supplied `f`; when absent `f` is the defining sum.
    supplied: Option<ObservableFunction>,
    space: SymplecticSpace,
    degenerate: bool,
}

impl QuantumFunction {
    /// `aₙ`, `ψₙ` from the spectrum of `A`, `uₙ = ⟨ψₙ|·⟩`, `ξₙ = ψₙ`.
    pub fn from_operator(a: &HermitianOperator, space: SymplecticSpace) -> Result<Self> {
        check_dim(space.complex_dim(), a.dim())?;
        let spectral = spectral_decompose(a)?;
        let n = spectral.dim();
        Ok(Self {
            eigenvalues: spectral.eigenvalues.clone(),
            eigenfunctions: (0..n).map(|k| ComplexFunction::coordinate(spectral.eigenvector(k))).collect(),
            stationary_states: (0..n).map(|k| spectral.eigenstate(k)).collect(),
            supplied: None,
            space,
            degenerate: spectral.degenerate,
        })
    }

    /// Bundles arbitrary parts. Nothing beyond the shapes is checked; use
    /// [`verify_axioms`] to test the relations.
    pub fn from_parts(
        eigenvalues: Vec<f64>,
        eigenfunctions: Vec<ComplexFunction>,
        stationary_states: Vec<StatePoint>,
        space: SymplecticSpace,
    ) -> Result<Self> {
        check_dim(eigenvalues.len(), eigenfunctions.len())?;
        check_dim(eigenvalues.len(), stationary_states.len())?;
        for u in &eigenfunctions {
            check_dim(space.complex_dim(), u.dim())?;
        }
        for xi in &stationary_states {
            check_dim(space.complex_dim(), xi.dim())?;
        }
        let degenerate = has_close_neighbours(&eigenvalues);
        Ok(Self { eigenvalues, eigenfunctions, stationary_states, supplied: None, space, degenerate })
    }

    /// Replaces the defining sum by an independently supplied `f`. The
    /// decomposition residual of [`verify_axioms`] then measures
    /// `|f − Σₙ aₙ|uₙ|²|`.
    pub fn with_observable(mut self, f: ObservableFunction) -> Result<Self> {
        check_dim(self.space.complex_dim(), f.space().complex_dim())?;
        self.supplied = Some(f);
        Ok(self)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenfunctions(&self) -> &[ComplexFunction] {
        &self.eigenfunctions
    }

    pub fn stationary_states(&self) -> &[StatePoint] {
        &self.stationary_states
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    pub fn has_supplied_observable(&self) -> bool {
        self.supplied.is_some()
    }

    /// `(u₁(ξ), …, uₙ(ξ))`, the quantum coordinates of `ξ` relative to `f`.
    pub fn quantum_coordinates(&self, xi: &StatePoint) -> Result<CVector> {
        check_dim(self.space.complex_dim(), xi.dim())?;
        Ok(self.coordinates_unchecked(xi))
    }

    fn coordinates_unchecked(&self, xi: &StatePoint) -> CVector {
        CVector::from_iterator(self.len(), self.eigenfunctions.iter().map(|u| u.eval_unchecked(xi)))
    }

    fn defining_sum(&self, xi: &StatePoint) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&self.eigenfunctions)
            .map(|(a, u)| a * u.eval_unchecked(xi).norm_sqr())
            .sum()
    }

    /// `Σₙ aₙ|uₙ(ξ)|²` at a unit state.
    pub fn evaluate(&self, xi: &StatePoint) -> Result<f64> {
        check_dim(self.space.complex_dim(), xi.dim())?;
        let deviation = (xi.norm() - 1.0).abs();
        if deviation > NORMALIZATION_TOLERANCE {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(self.defining_sum(xi))
    }

    /// `f` as an observable on the whole linear space, ready for brackets
    /// and flows.
    ///
    /// When every `uₙ` is a coordinate functional `⟨φₙ|·⟩` the defining sum
    /// is the expectation of `Σₙ aₙ φₙφₙ†`, which keeps the closed forms.
    pub fn observable(&self) -> ObservableFunction {
        if let Some(f) = &self.supplied {
            return f.clone();
        }
        let phis: Option<Vec<&CVector>> = self
            .eigenfunctions
            .iter()
            .map(|u| match u.kind() {
                ComplexKind::Coordinate(phi) => Some(phi),
                ComplexKind::Generic(_) => None,
            })
            .collect();
        if let Some(phis) = phis {
            let n = self.space.complex_dim();
            let mut m = CMatrix::zeros(n, n);
            for (a, phi) in self.eigenvalues.iter().zip(phis) {
                m += phi * phi.adjoint() * Complex64::new(*a, 0.0);
            }
            let op = make_hermitian(m).expect("sum of weighted projectors is Hermitian");
            return ObservableFunction::expectation(op, self.space).expect("dimension matches space");
        }
        let this = self.clone();
        ObservableFunction::generic(self.space, move |xi| this.defining_sum(xi))
    }

    fn observable_value(&self, xi: &StatePoint) -> f64 {
        match &self.supplied {
            Some(f) => f.evaluate(xi).expect("dimension matches space"),
            None => self.defining_sum(xi),
        }
    }
}

fn has_close_neighbours(values: &[f64]) -> bool {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let scale = 1.0 + sorted.iter().fold(0.0_f64, |m, a| m.max(a.abs()));
    sorted.windows(2).any(|w| w[1] - w[0] <= crate::operators::DEGENERACY_GAP * scale)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxiomTolerances {
    pub decomposition: f64,
    pub bracket: f64,
    pub normalization: f64,
    pub stationary: f64,
}

impl Default for AxiomTolerances {
    fn default() -> Self {
        Self::uniform(1e-10)
    }
}

impl AxiomTolerances {
    pub fn uniform(tol: f64) -> Self {
        Self { decomposition: tol, bracket: tol, normalization: tol, stationary: tol }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            decomposition: self.decomposition * factor,
            bracket: self.bracket * factor,
            normalization: self.normalization * factor,
            stationary: self.stationary * factor,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AxiomVerdicts {
    pub decomposition: bool,
    pub bracket: bool,
    pub normalization: bool,
    pub stationary: bool,
}

impl AxiomVerdicts {
    pub fn all(&self) -> bool {
        self.decomposition && self.bracket && self.normalization && self.stationary
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AxiomReport {
    pub dim: usize,
    pub eigenvalue_count: usize,
    pub hbar: f64,
    pub samples: usize,
    pub seed: u64,
    pub analytic_brackets: bool,
    pub degenerate: bool,
    /// `max |f − Σₙ aₙ|uₙ|²|` over samples.
    pub decomposition_residual: f64,
    /// `max |iħ{f, uₙ} − aₙuₙ|` over samples and `n`.
    pub bracket_residual: f64,
    /// `max |Σₙ|uₙ|² − 1|` over samples.
    pub normalization_residual: f64,
    /// `max |uₙ(ξₘ) − δₘₙ|`.
    pub stationary_coordinate_residual: f64,
    /// `max |f(ξₙ) − aₙ|`.
    pub stationary_value_residual: f64,
    pub tolerances: AxiomTolerances,
    pub verdicts: AxiomVerdicts,
    pub passed: bool,
}

/// Residuals at one sampled state: decomposition, bracket, normalization.
pub fn axiom_sample_residuals(
    qf: &QuantumFunction,
    engine: &PoissonEngine,
    seed: u64,
    index: u64,
) -> Result<(f64, f64, f64)> {
    let f = qf.observable();
    sample_residuals(qf, &f, engine, seed, index)
}

fn sample_residuals(
    qf: &QuantumFunction,
    f: &ObservableFunction,
    engine: &PoissonEngine,
    seed: u64,
    index: u64,
) -> Result<(f64, f64, f64)> {
    let psi = sample_state(qf.space.complex_dim(), seed, index);
    let ih = Complex64::new(0.0, qf.space.hbar());
    let coords = qf.coordinates_unchecked(&psi);
    let decomposition = (qf.observable_value(&psi) - qf.defining_sum(&psi)).abs();
    let mut bracket = 0.0_f64;
    for (k, u) in qf.eigenfunctions.iter().enumerate() {
        let lhs = ih * engine.complex_bracket(f, u, &psi)?;
        bracket = bracket.max((lhs - coords[k] * qf.eigenvalues[k]).norm());
    }
    let normalization = (coords.iter().map(|z| z.norm_sqr()).sum::<f64>() - 1.0).abs();
    Ok((decomposition, bracket, normalization))
}

pub fn verify_axioms(qf: &QuantumFunction, samples: usize, seed: u64, tol: AxiomTolerances) -> Result<AxiomReport> {
    verify_axioms_with(qf, samples, seed, tol, &PoissonEngine::analytic())
}

pub fn verify_axioms_with(
    qf: &QuantumFunction,
    samples: usize,
    seed: u64,
    tol: AxiomTolerances,
    engine: &PoissonEngine,
) -> Result<AxiomReport> {
    let f = qf.observable();
    let (decomposition, bracket, normalization) = (0..samples as u64)
        .into_par_iter()
        .map(|k| sample_residuals(qf, &f, engine, seed, k))
        .try_reduce(|| (0.0, 0.0, 0.0), |x, y| Ok((x.0.max(y.0), x.1.max(y.1), x.2.max(y.2))))?;

    let mut coordinate = 0.0_f64;
    let mut value = 0.0_f64;
    for (m, xi) in qf.stationary_states.iter().enumerate() {
        for (n, u) in qf.eigenfunctions.iter().enumerate() {
            let delta = if m == n { 1.0 } else { 0.0 };
            coordinate = coordinate.max((u.eval_unchecked(xi) - Complex64::new(delta, 0.0)).norm());
        }
        value = value.max((qf.observable_value(xi) - qf.eigenvalues[m]).abs());
    }

    let verdicts = AxiomVerdicts {
        decomposition: decomposition <= tol.decomposition,
        bracket: bracket <= tol.bracket,
        normalization: normalization <= tol.normalization,
        stationary: coordinate <= tol.stationary && value <= tol.stationary,
    };
    Ok(AxiomReport {
        dim: qf.space.complex_dim(),
        eigenvalue_count: qf.len(),
        hbar: qf.space.hbar(),
        samples,
        seed,
        analytic_brackets: engine.is_analytic(),
        degenerate: qf.degenerate,
        decomposition_residual: decomposition,
        bracket_residual: bracket,
        normalization_residual: normalization,
        stationary_coordinate_residual: coordinate,
        stationary_value_residual: value,
        tolerances: tol,
        verdicts,
        passed: verdicts.all(),
    })
}

/// The Hilbert-space picture recovered from a quantum function.
///
/// The recovered space is `ℂⁿ` with the stationary states relabelled as
/// the standard basis, so `Φ(ξ) = (u₁(ξ), …, uₙ(ξ))` and `f̃ = diag(aₙ)`.
#[derive(Debug, Clone)]
pub struct ReconstructionMap {
    qf: QuantumFunction,
    operator: HermitianOperator,
}

pub fn reconstruction_map(qf: &QuantumFunction) -> ReconstructionMap {
    ReconstructionMap {
        qf: qf.clone(),
        operator: HermitianOperator::diagonal(&qf.eigenvalues).with_label("reconstructed"),
    }
}

impl ReconstructionMap {
    pub fn len(&self) -> usize {
        self.qf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.qf.is_empty()
    }

    pub fn quantum_function(&self) -> &QuantumFunction {
        &self.qf
    }

    /// `f̃ = diag(aₙ)`.
    pub fn recovered_operator(&self) -> &HermitianOperator {
        &self.operator
    }

    /// `Φ(ξ)` in the reconstructed basis.
    pub fn evaluate(&self, xi: &StatePoint) -> Result<CVector> {
        self.qf.quantum_coordinates(xi)
    }

    /// `Φ` as an [`EmbeddingMap`] into the reconstructed space.
    pub fn as_map(&self) -> EmbeddingMap {
        let qf = self.qf.clone();
        Arc::new(move |xi: &StatePoint| qf.coordinates_unchecked(xi))
    }

    /// `Σₙ uₙ(ξ)·ξₙ`: the reconstruction read back in the space the
    /// stationary states live in.
    pub fn embedding(&self) -> EmbeddingMap {
        let qf = self.qf.clone();
        Arc::new(move |xi: &StatePoint| {
            let coords = qf.coordinates_unchecked(xi);
            let dim = qf.stationary_states.first().map_or(0, |s| s.dim());
            qf.stationary_states
                .iter()
                .zip(coords.iter())
                .fold(CVector::zeros(dim), |acc, (s, c)| acc + s.amplitudes() * *c)
        })
    }

    /// `e^{−if̃t/ħ}v`.
    pub fn schrodinger(&self, v: &CVector, t: f64) -> CVector {
        let hbar = self.qf.space.hbar();
        CVector::from_fn(v.len(), |k, _| v[k] * Complex64::from_polar(1.0, -self.qf.eigenvalues[k] * t / hbar))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReconstructionCheck {
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReconstructionReport {
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub degenerate: bool,
    /// `maxₖ ‖Φ(ξ(t_k)) − e^{−if̃t_k/ħ}Φ(ξ(0))‖`.
    pub intertwining_residual: f64,
    pub trajectory_final_time: f64,
    /// `max |iħ{f, Φₙ} − (f̃Φ)ₙ|` with closed-form brackets.
    pub bracket_residual_analytic: f64,
    /// The same with finite-difference brackets.
    pub bracket_residual_finite_difference: f64,
    /// `max |f(ξ) − ⟨Φ(ξ)|f̃|Φ(ξ)⟩|`.
    pub expectation_residual: f64,
    /// `max |‖Φ(ξ)‖ − 1|`.
    pub norm_residual: f64,
    /// `maxₙ ‖Φ(ξₙ) − eₙ‖`.
    pub basis_residual: f64,
}

pub fn verify_reconstruction(
    qf: &QuantumFunction,
    traj: &Trajectory,
    check: ReconstructionCheck,
) -> Result<ReconstructionReport> {
    let map = reconstruction_map(qf);
    let ih = Complex64::new(0.0, qf.space.hbar());

    let mut intertwining = 0.0_f64;
    if let Some(first) = traj.states.first() {
        let phi0 = map.evaluate(first)?;
        let t0 = traj.times[0];
        for (&t, state) in traj.times.iter().zip(&traj.states) {
            let expected = map.schrodinger(&phi0, t - t0);
            intertwining = intertwining.max(norm(&(map.evaluate(state)? - expected)));
        }
    }

    let f = qf.observable();
    let analytic = PoissonEngine::analytic();
    let numeric = PoissonEngine::finite_difference();
    let per_sample = |k: u64| -> Result<[f64; 4]> {
        let psi = sample_state(qf.space.complex_dim(), check.seed, k);
        let phi = qf.coordinates_unchecked(&psi);
        let target = map.operator.matrix() * &phi;
        let mut bracket_a = 0.0_f64;
        let mut bracket_n = 0.0_f64;
        for (n, u) in qf.eigenfunctions.iter().enumerate() {
            bracket_a = bracket_a.max((ih * analytic.complex_bracket(&f, u, &psi)? - target[n]).norm());
            bracket_n = bracket_n.max((ih * numeric.complex_bracket(&f, u, &psi)? - target[n]).norm());
        }
        let expectation = (qf.defining_sum(&psi) - inner_unchecked(&phi, &target).re).abs();
        let norm_res = (norm(&phi) - 1.0).abs();
        Ok([bracket_a, bracket_n, expectation, norm_res])
    };
    let maxima = (0..check.samples as u64)
        .into_par_iter()
        .map(per_sample)
        .try_reduce(|| [0.0; 4], |x, y| Ok([x[0].max(y[0]), x[1].max(y[1]), x[2].max(y[2]), x[3].max(y[3])]))?;

    let n = qf.len();
    let basis = qf.stationary_states.iter().enumerate().fold(0.0_f64, |acc, (k, xi)| {
        let e = StatePoint::basis(n, k).into_amplitudes();
        acc.max(norm(&(qf.coordinates_unchecked(xi) - e)))
    });

    Ok(ReconstructionReport {
        dim: n,
        samples: check.samples,
        seed: check.seed,
        degenerate: qf.degenerate,
        intertwining_residual: intertwining,
        trajectory_final_time: traj.times.last().copied().unwrap_or(0.0),
        bracket_residual_analytic: maxima[0],
        bracket_residual_finite_difference: maxima[1],
        expectation_residual: maxima[2],
        norm_residual: maxima[3],
        basis_residual: basis,
    })
}

/// `⟨Φ|A|Φ⟩` as a generic observable on `domain`.
pub fn pulled_back_expectation(a: &HermitianOperator, phi: &EmbeddingMap, domain: SymplecticSpace) -> ObservableFunction {
    let a = a.clone();
    let phi = Arc::clone(phi);
    ObservableFunction::generic(domain, move |psi| {
        let v = phi(psi);
        inner_unchecked(&v, &(a.matrix() * &v)).re
    })
}

/// Residual of `iħ{⟨Φ|A|Φ⟩, Φ} = AΦ` at sample `index`.
pub fn qfe_sample_residual(
    a: &HermitianOperator,
    phi: &EmbeddingMap,
    domain: SymplecticSpace,
    seed: u64,
    index: u64,
) -> Result<f64> {
    let psi = sample_state(domain.complex_dim(), seed, index);
    let v = phi(&psi);
    check_dim(a.dim(), v.len())?;
    let deviation = (norm(&v) - 1.0).abs();
    if deviation > NORMALIZATION_TOLERANCE {
        return Err(Error::PreconditionFailed { hypothesis: Hypothesis::Normalization, residual: deviation });
    }
    let f = pulled_back_expectation(a, phi, domain);
    let bracket = PoissonEngine::finite_difference().vector_bracket(&f, |x| phi(x), &psi)?;
    let lhs = bracket * Complex64::new(0.0, domain.hbar());
    Ok(norm(&(lhs - a.matrix() * v)))
}

/// `max ‖iħ{⟨Φ|A|Φ⟩, Φ}(ψ) − AΦ(ψ)‖` over seeded unit states of `domain`,
/// with finite-difference brackets.
pub fn qfe_residual(
    a: &HermitianOperator,
    phi: &EmbeddingMap,
    domain: SymplecticSpace,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    (0..samples as u64)
        .into_par_iter()
        .map(|k| qfe_sample_residual(a, phi, domain, seed, k))
        .try_reduce(|| 0.0, |x, y| Ok(x.max(y)))
}

#[derive(Debug, Clone)]
pub struct QfeConstruction {
    pub quantum_function: QuantumFunction,
    pub normalization_residual: f64,
    pub stationary_residual: f64,
    pub qfe_residual: f64,
    pub axioms: AxiomReport,
}

/// Builds `Ǎ = ⟨Φ|A|Φ⟩` as a quantum function once `Φ` is shown to be
/// normalized, to send `ξₙ` to the eigenvectors of `A` (up to phase), and to
/// solve the quantum-function equation, all within `tol`.
///
/// The eigenfunctions are the expansion coefficients of `Φ` in the
/// eigenbasis of `A`, with each eigenvector's phase aligned to `Φ(ξₙ)`.
pub fn quantum_function_from_qfe(
    a: &HermitianOperator,
    phi: &EmbeddingMap,
    domain: SymplecticSpace,
    stationary_states: Vec<StatePoint>,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<QfeConstruction> {
    let spectral = spectral_decompose(a)?;
    let n = spectral.dim();
    check_dim(n, stationary_states.len())?;

    let normalization = (0..samples as u64).try_fold(0.0_f64, |acc, k| {
        let v = phi(&sample_state(domain.complex_dim(), seed, k));
        check_dim(n, v.len())?;
        Ok::<_, Error>(acc.max((norm(&v) - 1.0).abs()))
    })?;
    if normalization > tol {
        return Err(Error::PreconditionFailed { hypothesis: Hypothesis::Normalization, residual: normalization });
    }

    let mut aligned = Vec::with_capacity(n);
    let mut stationary = 0.0_f64;
    for (k, xi) in stationary_states.iter().enumerate() {
        check_dim(domain.complex_dim(), xi.dim())?;
        let image = phi(xi);
        check_dim(n, image.len())?;
        let psi_k = spectral.eigenvector(k);
        let overlap = inner_unchecked(&psi_k, &image);
        let phase = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { Complex64::new(1.0, 0.0) };
        let basis_vector = psi_k * phase;
        stationary = stationary.max(norm(&(&image - &basis_vector)));
        aligned.push(basis_vector);
    }
    if stationary > tol {
        return Err(Error::PreconditionFailed {
            hypothesis: Hypothesis::StationaryStateMatch,
            residual: stationary,
        });
    }

    let residual = qfe_residual(a, phi, domain, samples, seed)?;
    if residual > tol {
        return Err(Error::PreconditionFailed {
            hypothesis: Hypothesis::QuantumFunctionEquation,
            residual,
        });
    }

    let eigenfunctions = aligned
        .into_iter()
        .map(|basis_vector| {
            let phi = Arc::clone(phi);
            ComplexFunction::generic(domain.complex_dim(), move |x| inner_unchecked(&basis_vector, &phi(x)))
        })
        .collect();
    let qf = QuantumFunction::from_parts(spectral.eigenvalues.clone(), eigenfunctions, stationary_states, domain)?
        .with_observable(pulled_back_expectation(a, phi, domain))?;
    let qf = QuantumFunction { degenerate: spectral.degenerate, ..qf };
    let axioms = verify_axioms(&qf, samples, seed, AxiomTolerances::uniform(tol))?;
    Ok(QfeConstruction {
        quantum_function: qf,
        normalization_residual: normalization,
        stationary_residual: stationary,
        qfe_residual: residual,
        axioms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{integrate, IntegratorConfig, Method};
    use crate::operators::pauli;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn z_qf() -> (HermitianOperator, QuantumFunction) {
        let z = make_hermitian(pauli::z()).unwrap();
        let qf = QuantumFunction::from_operator(&z, SymplecticSpace::natural(2).unwrap()).unwrap();
        (z, qf)
    }

    fn identity_map() -> EmbeddingMap {
        Arc::new(|x: &StatePoint| x.amplitudes().clone())
    }

    #[test]
    fn from_pauli_z() {
        let (_, qf) = z_qf();
        assert_eq!(qf.eigenvalues(), &[-1.0, 1.0]);
        assert_eq!(qf.stationary_states()[0], StatePoint::basis(2, 1));
        let psi = StatePoint::normalized(CVector::from_column_slice(&[c(0.6, 0.0), c(0.0, 0.8)])).unwrap();
        assert_eq!(qf.eigenfunctions()[0].evaluate(&psi).unwrap(), psi.amplitudes()[1]);
        for (m, xi) in qf.stationary_states().iter().enumerate() {
            for (n, u) in qf.eigenfunctions().iter().enumerate() {
                let delta = if m == n { 1.0 } else { 0.0 };
                assert_eq!(u.evaluate(xi).unwrap(), c(delta, 0.0));
            }
        }
        assert!(!qf.is_degenerate());
    }

    #[test]
    fn identity_operator_is_degenerate_and_constant() {
        let qf = QuantumFunction::from_operator(&HermitianOperator::identity(2), SymplecticSpace::natural(2).unwrap()).unwrap();
        assert!(qf.is_degenerate());
        for k in 0..20 {
            assert!((qf.evaluate(&sample_state(2, 1, k)).unwrap() - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn evaluate_examples() {
        let (z, qf) = z_qf();
        assert_eq!(qf.evaluate(&StatePoint::basis(2, 0)).unwrap(), 1.0);
        assert!(qf.evaluate(&StatePoint::uniform(2)).unwrap().abs() < 1e-15);
        for k in 0..100 {
            let psi = sample_state(2, 2, k);
            let e = crate::operators::expectation(&z, &psi).unwrap();
            assert!((qf.evaluate(&psi).unwrap() - e).abs() <= 1e-12);
        }
        let long = StatePoint::new(CVector::from_column_slice(&[c(1.0, 0.0), c(1.0, 0.0)]));
        assert!(matches!(qf.evaluate(&long), Err(Error::NotNormalized { .. })));
    }

    #[test]
    fn axioms_hold_for_pauli_z() {
        let (_, qf) = z_qf();
        let report = verify_axioms(&qf, 100, 0, AxiomTolerances::default()).unwrap();
        assert!(report.passed, "{report:?}");
        assert_eq!(report.decomposition_residual, 0.0);
    }

    #[test]
    fn tampered_eigenvalue_fails_bracket_axiom() {
        let (z, qf) = z_qf();
        let mut values = qf.eigenvalues().to_vec();
        values[0] += 1.0;
        let tampered = QuantumFunction::from_parts(
            values,
            qf.eigenfunctions().to_vec(),
            qf.stationary_states().to_vec(),
            *qf.space(),
        )
        .unwrap()
        .with_observable(ObservableFunction::expectation(z, *qf.space()).unwrap())
        .unwrap();
        let report = verify_axioms(&tampered, 100, 0, AxiomTolerances::default()).unwrap();
        assert!(report.bracket_residual >= 0.4, "{}", report.bracket_residual);
        assert!(!report.passed);
    }

    #[test]
    fn non_orthonormal_eigenfunctions_fail_normalization() {
        let space = SymplecticSpace::natural(2).unwrap();
        let r = 0.5f64.sqrt();
        let phis = [
            CVector::from_column_slice(&[c(1.0, 0.0), c(0.0, 0.0)]),
            CVector::from_column_slice(&[c(r, 0.0), c(r, 0.0)]),
        ];
        let qf = QuantumFunction::from_parts(
            vec![-1.0, 1.0],
            phis.iter().cloned().map(ComplexFunction::coordinate).collect(),
            phis.iter().cloned().map(StatePoint::new).collect(),
            space,
        )
        .unwrap();
        let report = verify_axioms(&qf, 100, 0, AxiomTolerances::default()).unwrap();
        assert!(report.normalization_residual > 1e-3);
        assert!(!report.verdicts.normalization);
    }

    #[test]
    fn verification_is_independent_of_parallel_schedule() {
        let mut rng = crate::sampling::sample_rng(4, 4);
        let a = make_hermitian(crate::sampling::random_hermitian_matrix(3, &mut rng)).unwrap();
        let qf = QuantumFunction::from_operator(&a, SymplecticSpace::natural(3).unwrap()).unwrap();
        let report = verify_axioms(&qf, 40, 9, AxiomTolerances::default()).unwrap();
        let engine = PoissonEngine::analytic();
        let serial = (0..40).fold((0.0f64, 0.0f64, 0.0f64), |acc, k| {
            let (d, b, n) = axiom_sample_residuals(&qf, &engine, 9, k).unwrap();
            (acc.0.max(d), acc.1.max(b), acc.2.max(n))
        });
        assert_eq!(
            (report.decomposition_residual, report.bracket_residual, report.normalization_residual),
            serial
        );
    }

    #[test]
    fn reconstruction_examples() {
        let (_, qf) = z_qf();
        let map = reconstruction_map(&qf);
        for (k, xi) in qf.stationary_states().iter().enumerate() {
            assert_eq!(map.evaluate(xi).unwrap(), StatePoint::basis(2, k).into_amplitudes());
        }
        for k in 0..20 {
            let xi = sample_state(2, 3, k);
            let phi = map.evaluate(&xi).unwrap();
            assert!((norm(&phi) - 1.0).abs() < 1e-14);
            let lhs = crate::operators::quadratic_form(map.recovered_operator().matrix(), &StatePoint::new(phi)).unwrap();
            assert!((lhs.re - qf.evaluate(&xi).unwrap()).abs() <= 1e-12);
        }
        let embed = map.embedding();
        let xi = sample_state(2, 3, 99);
        assert!(norm(&(embed(&xi) - xi.amplitudes())) < 1e-15);
    }

    #[test]
    fn reconstruction_along_midpoint_trajectory() {
        let (_, qf) = z_qf();
        let traj = integrate(&qf.observable(), &sample_state(2, 7, 0), &IntegratorConfig::new(Method::Midpoint, 1e-3, 1000)).unwrap();
        let report = verify_reconstruction(&qf, &traj, ReconstructionCheck { samples: 100, seed: 1 }).unwrap();
        assert!(report.intertwining_residual <= 1e-5);
        assert!(report.bracket_residual_analytic <= 1e-10);
        assert!(report.bracket_residual_finite_difference <= 1e-5);
        assert!(report.expectation_residual <= 1e-12);
        assert!(report.norm_residual <= 1e-12);
        assert_eq!(report.basis_residual, 0.0);

        let short = integrate(&qf.observable(), &sample_state(2, 7, 0), &IntegratorConfig::new(Method::Exact, 1.0, 1)).unwrap();
        let t0_only = Trajectory { times: vec![0.0], states: vec![short.states[0].clone()], diagnostics: vec![short.diagnostics[0]], ..short };
        let report = verify_reconstruction(&qf, &t0_only, ReconstructionCheck { samples: 1, seed: 1 }).unwrap();
        assert_eq!(report.intertwining_residual, 0.0);
    }

    #[test]
    fn qfe_examples() {
        let (z, qf) = z_qf();
        let space = *qf.space();
        assert!(qfe_residual(&z, &identity_map(), space, 50, 0).unwrap() <= 1e-5);
        let induced = reconstruction_map(&qf).embedding();
        assert!(qfe_residual(&z, &induced, space, 50, 0).unwrap() <= 1e-5);
        let phi0 = StatePoint::uniform(2).into_amplitudes();
        let expected = norm(&(z.matrix() * &phi0));
        let constant: EmbeddingMap = Arc::new(move |_| phi0.clone());
        let r = qfe_residual(&z, &constant, space, 20, 0).unwrap();
        assert!((r - expected).abs() < 1e-12, "{r} vs {expected}");
    }

    #[test]
    fn qfe_output_dimension_is_checked() {
        let (z, qf) = z_qf();
        let wrong: EmbeddingMap = Arc::new(|_| CVector::zeros(3));
        assert!(matches!(qfe_residual(&z, &wrong, *qf.space(), 3, 0), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn identity_embedding_reproduces_operator_quantum_function() {
        let (z, qf) = z_qf();
        let built = quantum_function_from_qfe(&z, &identity_map(), *qf.space(), qf.stationary_states().to_vec(), 50, 3, 1e-5).unwrap();
        assert!(built.axioms.passed, "{:?}", built.axioms);
        let other = &built.quantum_function;
        assert_eq!(other.eigenvalues(), qf.eigenvalues());
        for k in 0..20 {
            let psi = sample_state(2, 5, k);
            let a = qf.quantum_coordinates(&psi).unwrap();
            let b = other.quantum_coordinates(&psi).unwrap();
            assert!(norm(&(a - b)) < 1e-14);
        }
    }

    #[test]
    fn qfe_preconditions_are_named() {
        let (z, qf) = z_qf();
        let space = *qf.space();
        let doubled: EmbeddingMap = Arc::new(|x: &StatePoint| x.amplitudes() * c(2.0, 0.0));
        let err = quantum_function_from_qfe(&z, &doubled, space, qf.stationary_states().to_vec(), 10, 0, 1e-5).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed { hypothesis: Hypothesis::Normalization, .. }));

        let mut permuted = qf.stationary_states().to_vec();
        permuted.swap(0, 1);
        let err = quantum_function_from_qfe(&z, &identity_map(), space, permuted, 10, 0, 1e-5).unwrap_err();
        assert!(matches!(err, Error::PreconditionFailed { hypothesis: Hypothesis::StationaryStateMatch, .. }));

        // complex conjugation is normalized and fixes the real eigenbasis of Z,
        // but reverses the flow: iħ{f, Φ} = −ZΦ
        let conjugate: EmbeddingMap = Arc::new(|x: &StatePoint| x.amplitudes().map(|z| z.conj()));
        let err = quantum_function_from_qfe(&z, &conjugate, space, qf.stationary_states().to_vec(), 10, 0, 1e-5).unwrap_err();
        match err {
            Error::PreconditionFailed { hypothesis: Hypothesis::QuantumFunctionEquation, residual } => {
                assert!((residual - 2.0).abs() < 1e-6, "{residual}")
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
