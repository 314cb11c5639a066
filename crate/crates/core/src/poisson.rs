//! Differentials, Hamiltonian vector fields and Poisson brackets.
//!
//! Observables are real functions on the phase space. Expectation functions
//! `⟨A⟩` have closed forms for everything here:
//!
//! ```text
//! d⟨A⟩_ψ(Y)           = 2·Re⟨Aψ|Y⟩
//! X_⟨A⟩(ψ)            = −(i/ħ)·Aψ
//! {⟨A⟩, ⟨B⟩}(ψ)       = Ω(X_⟨A⟩, X_⟨B⟩) = (2/ħ)·Im⟨Aψ|Bψ⟩
//! ```
//!
//! Generic observables go through central finite differences in the
//! canonical coordinates of [`SymplecticSpace`], where `X_f = J∇f` and
//! `{f, g} = ∇fᵀ J ∇g`.
//!
//! Two bracket conventions appear in the theory. [`PoissonEngine::bracket`]
//! is `Ω(X_f, X_g)`, which makes `iħ{⟨A⟩,⟨B⟩} = ⟨[A,B]⟩`.
//! [`PoissonEngine::complex_bracket`] is the derivative of `u` along the flow
//! of `f`, `du(X_f)`, which makes `iħ{⟨A⟩, uₙ} = aₙuₙ` and
//! `d/dt u(ξ(t)) = {f, u}(ξ(t))`. The two differ by a sign when applied to
//! the same pair of real functions.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{check_dim, Error, Result};
use crate::operators::{commutator, quadratic_form, HermitianOperator};
use crate::sampling::sample_state;
use crate::space::{inner_unchecked, CVector, StatePoint, SymplecticSpace, TangentVector};

type RealMap = Arc<dyn Fn(&StatePoint) -> f64 + Send + Sync>;
type ComplexMap = Arc<dyn Fn(&StatePoint) -> Complex64 + Send + Sync>;

/// A real-valued function on the phase space.
#[derive(Clone)]
pub enum ObservableKind {
    /// `ψ ↦ ⟨ψ|Aψ⟩`.
    Expectation(HermitianOperator),
    /// Any function that is differentiable on the whole linear space, not
    /// only on the unit sphere: finite differences step off the sphere.
    Generic(RealMap),
}

#[derive(Clone)]
pub struct ObservableFunction {
    kind: ObservableKind,
    space: SymplecticSpace,
}

impl fmt::Debug for ObservableFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ObservableKind::Expectation(a) => f
                .debug_struct("ObservableFunction::Expectation")
                .field("dim", &a.dim())
                .field("label", &a.label())
                .field("space", &self.space)
                .finish(),
            ObservableKind::Generic(_) => f
                .debug_struct("ObservableFunction::Generic")
                .field("space", &self.space)
                .finish(),
        }
    }
}

impl ObservableFunction {
    pub fn expectation(a: HermitianOperator, space: SymplecticSpace) -> Result<Self> {
        check_dim(space.complex_dim(), a.dim())?;
        Ok(Self { kind: ObservableKind::Expectation(a), space })
    }

    pub fn generic<F>(space: SymplecticSpace, f: F) -> Self
    where
        F: Fn(&StatePoint) -> f64 + Send + Sync + 'static,
    {
        Self { kind: ObservableKind::Generic(Arc::new(f)), space }
    }

    pub fn kind(&self) -> &ObservableKind {
        &self.kind
    }

    pub fn space(&self) -> &SymplecticSpace {
        &self.space
    }

    pub fn operator(&self) -> Option<&HermitianOperator> {
        match &self.kind {
            ObservableKind::Expectation(a) => Some(a),
            ObservableKind::Generic(_) => None,
        }
    }

    pub fn evaluate(&self, psi: &StatePoint) -> Result<f64> {
        check_dim(self.space.complex_dim(), psi.dim())?;
        Ok(self.eval_unchecked(psi))
    }

    fn eval_unchecked(&self, psi: &StatePoint) -> f64 {
        match &self.kind {
            ObservableKind::Expectation(a) => {
                let v = psi.amplitudes();
                inner_unchecked(v, &(a.matrix() * v)).re
            }
            ObservableKind::Generic(f) => f(psi),
        }
    }

    /// `−f`, whose flow runs the flow of `f` backwards in time.
    pub fn negated(&self) -> Self {
        let kind = match &self.kind {
            ObservableKind::Expectation(a) => ObservableKind::Expectation(a.negated()),
            ObservableKind::Generic(f) => {
                let f = Arc::clone(f);
                ObservableKind::Generic(Arc::new(move |psi| -f(psi)))
            }
        };
        Self { kind, space: self.space }
    }

    /// The same function stripped of its closed form.
    pub fn as_generic(&self) -> Self {
        let this = self.clone();
        Self::generic(self.space, move |psi| this.eval_unchecked(psi))
    }
}

/// A complex-valued function on the phase space.
#[derive(Clone)]
pub enum ComplexKind {
    /// `ψ ↦ ⟨φ|ψ⟩`.
    Coordinate(CVector),
    Generic(ComplexMap),
}

#[derive(Clone)]
pub struct ComplexFunction {
    kind: ComplexKind,
    dim: usize,
}

impl fmt::Debug for ComplexFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            ComplexKind::Coordinate(phi) => {
                f.debug_tuple("ComplexFunction::Coordinate").field(&phi.as_slice()).finish()
            }
            ComplexKind::Generic(_) => {
                f.debug_struct("ComplexFunction::Generic").field("dim", &self.dim).finish()
            }
        }
    }
}

impl ComplexFunction {
    /// The coordinate functional `ψ ↦ ⟨φ|ψ⟩`.
    pub fn coordinate(phi: CVector) -> Self {
        let dim = phi.len();
        Self { kind: ComplexKind::Coordinate(phi), dim }
    }

    pub fn zero(dim: usize) -> Self {
        Self::coordinate(CVector::zeros(dim))
    }

    pub fn generic<F>(dim: usize, f: F) -> Self
    where
        F: Fn(&StatePoint) -> Complex64 + Send + Sync + 'static,
    {
        Self { kind: ComplexKind::Generic(Arc::new(f)), dim }
    }

    pub fn kind(&self) -> &ComplexKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn evaluate(&self, psi: &StatePoint) -> Result<Complex64> {
        check_dim(self.dim, psi.dim())?;
        Ok(self.eval_unchecked(psi))
    }

    pub(crate) fn eval_unchecked(&self, psi: &StatePoint) -> Complex64 {
        match &self.kind {
            ComplexKind::Coordinate(phi) => inner_unchecked(phi, psi.amplitudes()),
            ComplexKind::Generic(u) => u(psi),
        }
    }
}

/// Finite-difference step size.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum StepRule {
    /// `h = c·(1 + |x|)` for a coordinate of magnitude `|x|`.
    Relative(f64),
    Fixed(f64),
}

impl StepRule {
    /// `√ε·(1 + |x|)`.
    pub const FIELD: StepRule = StepRule::Relative(1.490_116_119_384_765_6e-8);
    /// Step for brackets, which compose two first derivatives.
    pub const BRACKET: StepRule = StepRule::Fixed(1e-5);

    pub fn size(&self, magnitude: f64) -> f64 {
        match *self {
            StepRule::Relative(c) => c * (1.0 + magnitude.abs()),
            StepRule::Fixed(h) => h,
        }
    }
}

/// Evaluates differentials, vector fields and brackets.
///
/// The analytic engine uses closed forms wherever an expectation function or
/// coordinate functional is involved and falls back to finite differences
/// for generic functions. The finite-difference engine ignores closed forms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoissonEngine {
    analytic: bool,
    field_step: StepRule,
    bracket_step: StepRule,
}

impl Default for PoissonEngine {
    fn default() -> Self {
        Self::analytic()
    }
}

impl PoissonEngine {
    pub fn analytic() -> Self {
        Self { analytic: true, field_step: StepRule::FIELD, bracket_step: StepRule::BRACKET }
    }

    pub fn finite_difference() -> Self {
        Self { analytic: false, field_step: StepRule::FIELD, bracket_step: StepRule::BRACKET }
    }

    pub fn with_steps(mut self, field_step: StepRule, bracket_step: StepRule) -> Self {
        self.field_step = field_step;
        self.bracket_step = bracket_step;
        self
    }

    pub fn is_analytic(&self) -> bool {
        self.analytic
    }

    /// `df_ψ(Y)`.
    pub fn differential(
        &self,
        f: &ObservableFunction,
        psi: &StatePoint,
        y: &TangentVector,
    ) -> Result<f64> {
        check_dim(f.space.complex_dim(), psi.dim())?;
        check_dim(f.space.complex_dim(), y.dim())?;
        match (&f.kind, self.analytic) {
            (ObservableKind::Expectation(a), true) => {
                let a_psi = a.matrix() * psi.amplitudes();
                Ok(2.0 * inner_unchecked(&a_psi, y.components()).re)
            }
            _ => Ok(directional_real(f, psi, y, self.field_step)),
        }
    }

    /// The unique `X_f` with `Ω(X_f, Y) = df(Y)` for every `Y`.
    pub fn vector_field(&self, f: &ObservableFunction, psi: &StatePoint) -> Result<TangentVector> {
        check_dim(f.space.complex_dim(), psi.dim())?;
        Ok(self.field_with_step(f, psi, self.field_step))
    }

    fn field_with_step(&self, f: &ObservableFunction, psi: &StatePoint, step: StepRule) -> TangentVector {
        match (&f.kind, self.analytic) {
            (ObservableKind::Expectation(a), true) => analytic_field(a, psi, f.space.hbar()),
            _ => finite_difference_field(f, psi, step),
        }
    }

    /// `{f, g}(ψ) = Ω(X_f, X_g)`.
    pub fn bracket(
        &self,
        f: &ObservableFunction,
        g: &ObservableFunction,
        psi: &StatePoint,
    ) -> Result<f64> {
        same_space(&f.space, &g.space)?;
        check_dim(f.space.complex_dim(), psi.dim())?;
        let xf = self.field_with_step(f, psi, self.bracket_step);
        let xg = self.field_with_step(g, psi, self.bracket_step);
        Ok(f.space.form_unchecked(xf.components(), xg.components()))
    }

    /// `du(X_f)`, the rate of change of `u` along the flow of `f`.
    pub fn complex_bracket(
        &self,
        f: &ObservableFunction,
        u: &ComplexFunction,
        psi: &StatePoint,
    ) -> Result<Complex64> {
        check_dim(f.space.complex_dim(), psi.dim())?;
        check_dim(f.space.complex_dim(), u.dim())?;
        let xf = self.field_with_step(f, psi, self.bracket_step);
        Ok(match (&u.kind, self.analytic) {
            (ComplexKind::Coordinate(phi), true) => inner_unchecked(phi, xf.components()),
            _ => directional_complex(u, psi, &xf, self.bracket_step),
        })
    }

    /// `du(X_f)` for every component of a vector-valued map at once.
    ///
    /// Used for the quantum-function equation, where `u` is each component
    /// of a map `Φ: M → ℂᵐ`.
    pub fn vector_bracket<F>(
        &self,
        f: &ObservableFunction,
        map: F,
        psi: &StatePoint,
    ) -> Result<CVector>
    where
        F: Fn(&StatePoint) -> CVector,
    {
        check_dim(f.space.complex_dim(), psi.dim())?;
        let xf = self.field_with_step(f, psi, self.bracket_step);
        let len = xf.norm();
        if len == 0.0 {
            return Ok(map(psi) * Complex64::new(0.0, 0.0));
        }
        let h = self.bracket_step.size(psi.norm()) / len;
        let plus = map(&psi.displaced(&xf, h));
        let minus = map(&psi.displaced(&xf, -h));
        Ok((plus - minus) / Complex64::new(2.0 * h, 0.0))
    }
}

fn same_space(a: &SymplecticSpace, b: &SymplecticSpace) -> Result<()> {
    check_dim(a.complex_dim(), b.complex_dim())?;
    if a.hbar() != b.hbar() {
        return Err(Error::InvalidConfig(format!(
            "observables live on spaces with different hbar ({} vs {})",
            a.hbar(),
            b.hbar()
        )));
    }
    Ok(())
}

/// `−(i/ħ)·Aψ`.
pub(crate) fn analytic_field(a: &HermitianOperator, psi: &StatePoint, hbar: f64) -> TangentVector {
    TangentVector::new(a.matrix() * psi.amplitudes() * Complex64::new(0.0, -1.0 / hbar))
}

fn directional_real(f: &ObservableFunction, psi: &StatePoint, y: &TangentVector, step: StepRule) -> f64 {
    let len = y.norm();
    if len == 0.0 {
        return 0.0;
    }
    let h = step.size(psi.norm()) / len;
    (f.eval_unchecked(&psi.displaced(y, h)) - f.eval_unchecked(&psi.displaced(y, -h))) / (2.0 * h)
}

fn directional_complex(u: &ComplexFunction, psi: &StatePoint, y: &TangentVector, step: StepRule) -> Complex64 {
    let len = y.norm();
    if len == 0.0 {
        return Complex64::new(0.0, 0.0);
    }
    let h = step.size(psi.norm()) / len;
    (u.eval_unchecked(&psi.displaced(y, h)) - u.eval_unchecked(&psi.displaced(y, -h))) / (2.0 * h)
}

/// `∇f` in the canonical coordinates `(q, p)`, returned as the two halves.
fn real_gradient(f: &ObservableFunction, psi: &StatePoint, step: StepRule) -> (Vec<f64>, Vec<f64>) {
    let n = psi.dim();
    let s = (2.0 * f.space.hbar()).sqrt();
    let amps = psi.amplitudes();
    let mut grad_q = vec![0.0; n];
    let mut grad_p = vec![0.0; n];
    for k in 0..n {
        for (part, out) in [(Complex64::new(1.0, 0.0), &mut grad_q), (Complex64::new(0.0, 1.0), &mut grad_p)] {
            let coord = s * if part.re != 0.0 { amps[k].re } else { amps[k].im };
            let h = step.size(coord);
            let mut plus = amps.clone();
            plus[k] += part * (h / s);
            let mut minus = amps.clone();
            minus[k] -= part * (h / s);
            let fp = f.eval_unchecked(&StatePoint::new(plus));
            let fm = f.eval_unchecked(&StatePoint::new(minus));
            out[k] = (fp - fm) / (2.0 * h);
        }
    }
    (grad_q, grad_p)
}

/// `X_f = J∇f`, i.e. `X_q = ∂f/∂p`, `X_p = −∂f/∂q`, mapped back to `ℂⁿ`.
fn finite_difference_field(f: &ObservableFunction, psi: &StatePoint, step: StepRule) -> TangentVector {
    let (grad_q, grad_p) = real_gradient(f, psi, step);
    let s = (2.0 * f.space.hbar()).sqrt();
    TangentVector::new(CVector::from_fn(psi.dim(), |k, _| Complex64::new(grad_p[k] / s, -grad_q[k] / s)))
}

/// Pointwise check of `iħ{⟨A⟩,⟨B⟩} = ⟨[A,B]⟩` over seeded random unit states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BracketCommutatorReport {
    pub dim: usize,
    pub hbar: f64,
    pub samples: usize,
    pub seed: u64,
    /// `1 + ‖A‖‖B‖` with spectral norms, the scale the residuals are judged on.
    pub scale: f64,
    pub analytic_max_residual: f64,
    pub finite_difference_max_residual: f64,
    pub finite_difference_step: f64,
    pub note: &'static str,
}

pub const BRACKET_CONVENTION_NOTE: &str =
    "bracket-commutator identity checked in the form i*hbar*{<A>,<B>} = <[A,B]>; without the i*hbar factor the two sides cannot agree (real vs imaginary)";

/// Residuals `|iħ·{⟨A⟩,⟨B⟩}(ψ) − ⟨ψ|[A,B]ψ⟩|` at sample `index`, analytic
/// then finite-difference.
pub fn bracket_commutator_residuals(
    a: &HermitianOperator,
    b: &HermitianOperator,
    hbar: f64,
    seed: u64,
    index: u64,
) -> Result<(f64, f64)> {
    check_dim(a.dim(), b.dim())?;
    let space = SymplecticSpace::new(a.dim(), hbar)?;
    let fa = ObservableFunction::expectation(a.clone(), space)?;
    let fb = ObservableFunction::expectation(b.clone(), space)?;
    let comm = commutator(a, b)?;
    let psi = sample_state(a.dim(), seed, index);
    let target = quadratic_form(&comm, &psi)?;
    let ih = Complex64::new(0.0, hbar);
    let analytic = (ih * PoissonEngine::analytic().bracket(&fa, &fb, &psi)? - target).norm();
    let numeric = (ih * PoissonEngine::finite_difference().bracket(&fa, &fb, &psi)? - target).norm();
    Ok((analytic, numeric))
}

pub fn bracket_commutator_report(
    a: &HermitianOperator,
    b: &HermitianOperator,
    samples: usize,
    seed: u64,
    hbar: f64,
) -> Result<BracketCommutatorReport> {
    check_dim(a.dim(), b.dim())?;
    SymplecticSpace::new(a.dim(), hbar)?;
    let (analytic, numeric) = (0..samples as u64)
        .into_par_iter()
        .map(|k| bracket_commutator_residuals(a, b, hbar, seed, k))
        .try_reduce(|| (0.0, 0.0), |x, y| Ok((x.0.max(y.0), x.1.max(y.1))))?;
    Ok(BracketCommutatorReport {
        dim: a.dim(),
        hbar,
        samples,
        seed,
        scale: 1.0 + a.spectral_norm() * b.spectral_norm(),
        analytic_max_residual: analytic,
        finite_difference_max_residual: numeric,
        finite_difference_step: StepRule::BRACKET.size(0.0),
        note: BRACKET_CONVENTION_NOTE,
    })
}
