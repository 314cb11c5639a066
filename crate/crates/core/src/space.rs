//! The real-manifold view of `ℂⁿ`.
//!
//! A complex Hilbert space of dimension `n` is a real vector space of
//! dimension `2n`. With the physicists' inner product (conjugate-linear in
//! the first slot) the constant two-form
//!
//! ```text
//! Ω(v, w) = 2ħ · Im⟨v|w⟩
//! ```
//!
//! is symplectic, and in the scaled coordinates
//! `q = √(2ħ)·Re ψ`, `p = √(2ħ)·Im ψ` it becomes the canonical form
//! `Σ dq_k ∧ dp_k`. With this sign the Hamiltonian vector field of the
//! expectation function `⟨A⟩` is `−(i/ħ)Aψ`, so Hamilton's equation for
//! `⟨ℍ⟩` is the Schrödinger equation.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

pub type CVector = DVector<Complex64>;
pub type CMatrix = DMatrix<Complex64>;
pub type RVector = DVector<f64>;

/// Tolerance on `|‖ψ‖ − 1|` for a state to count as normalized.
pub const UNIT_TOLERANCE: f64 = 1e-12;

/// Sign in front of `2ħ·Im⟨v|w⟩`. Fixed so that `X_⟨A⟩ = −(i/ħ)A` with an
/// inner product that is conjugate-linear in its first argument.
const CONVENTION_SIGN: f64 = 1.0;

/// `ℂⁿ` regarded as a real symplectic vector space of dimension `2n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymplecticSpace {
    complex_dim: usize,
    hbar: f64,
}

impl SymplecticSpace {
    pub fn new(complex_dim: usize, hbar: f64) -> Result<Self> {
        if complex_dim == 0 {
            return Err(Error::InvalidConfig("complex dimension must be positive".into()));
        }
        if !(hbar.is_finite() && hbar > 0.0) {
            return Err(Error::InvalidConfig(format!("hbar must be positive, got {hbar}")));
        }
        Ok(Self { complex_dim, hbar })
    }

    /// Natural units, `ħ = 1`.
    pub fn natural(complex_dim: usize) -> Result<Self> {
        Self::new(complex_dim, 1.0)
    }

    pub fn complex_dim(&self) -> usize {
        self.complex_dim
    }

    pub fn real_dim(&self) -> usize {
        2 * self.complex_dim
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    fn coord_scale(&self) -> f64 {
        (2.0 * self.hbar).sqrt()
    }

    /// `(q, p)` with `q_k = √(2ħ)·Re ψ_k`, `p_k = √(2ħ)·Im ψ_k`.
    pub fn to_real_coords(&self, psi: &CVector) -> Result<RVector> {
        check_dim(self.complex_dim, psi.len())?;
        let n = self.complex_dim;
        let s = self.coord_scale();
        Ok(RVector::from_fn(2 * n, |i, _| {
            if i < n {
                s * psi[i].re
            } else {
                s * psi[i - n].im
            }
        }))
    }

    pub fn from_real_coords(&self, x: &RVector) -> Result<CVector> {
        check_dim(self.real_dim(), x.len())?;
        let n = self.complex_dim;
        let s = self.coord_scale();
        Ok(CVector::from_fn(n, |k, _| Complex64::new(x[k] / s, x[k + n] / s)))
    }

    /// `Ω(v, w) = 2ħ·Im⟨v|w⟩`.
    pub fn symplectic_form(&self, v: &TangentVector, w: &TangentVector) -> Result<f64> {
        check_dim(self.complex_dim, v.dim())?;
        check_dim(self.complex_dim, w.dim())?;
        Ok(self.form_unchecked(&v.0, &w.0))
    }

    pub(crate) fn form_unchecked(&self, v: &CVector, w: &CVector) -> f64 {
        CONVENTION_SIGN * 2.0 * self.hbar * inner_unchecked(v, w).im
    }

    /// Gram matrix of `Ω` on the real coordinate basis `∂/∂q₀ … ∂/∂p_{n−1}`.
    pub fn gram_matrix(&self) -> DMatrix<f64> {
        let m = self.real_dim();
        let basis: Vec<CVector> = (0..m)
            .map(|j| {
                let e = RVector::from_fn(m, |i, _| if i == j { 1.0 } else { 0.0 });
                self.from_real_coords(&e).expect("basis vector has the real dimension")
            })
            .collect();
        DMatrix::from_fn(m, m, |i, j| self.form_unchecked(&basis[i], &basis[j]))
    }

    pub fn is_nondegenerate(&self) -> bool {
        self.gram_matrix().rank(1e-12) == self.real_dim()
    }
}

/// `xᵀJy` with `J = [[0, I], [−I, 0]]`, the canonical form on `ℝ²ⁿ`.
pub fn canonical_form(x: &RVector, y: &RVector) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    if !x.len().is_multiple_of(2) {
        return Err(Error::InvalidConfig("canonical form needs an even dimension".into()));
    }
    let n = x.len() / 2;
    Ok((0..n).map(|k| x[k] * y[k + n] - x[k + n] * y[k]).sum())
}

/// `Σ conj(v_k)·w_k`.
pub fn hermitian_inner(v: &CVector, w: &CVector) -> Result<Complex64> {
    check_dim(v.len(), w.len())?;
    Ok(inner_unchecked(v, w))
}

pub(crate) fn inner_unchecked(v: &CVector, w: &CVector) -> Complex64 {
    v.iter().zip(w.iter()).map(|(a, b)| a.conj() * b).sum()
}

pub fn norm(v: &CVector) -> f64 {
    inner_unchecked(v, v).re.sqrt()
}

/// A point of the phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePoint(CVector);

impl StatePoint {
    pub fn new(amplitudes: CVector) -> Self {
        Self(amplitudes)
    }

    pub fn from_slice(amplitudes: &[Complex64]) -> Self {
        Self(CVector::from_column_slice(amplitudes))
    }

    /// Accepts `amplitudes` only if they already have unit norm.
    pub fn unit(amplitudes: CVector) -> Result<Self> {
        let deviation = (norm(&amplitudes) - 1.0).abs();
        if deviation > UNIT_TOLERANCE {
            return Err(Error::NotNormalized { deviation });
        }
        Ok(Self(amplitudes))
    }

    /// Rescales to unit norm. Fails on the zero vector.
    pub fn normalized(amplitudes: CVector) -> Result<Self> {
        let r = norm(&amplitudes);
        if r == 0.0 || !r.is_finite() {
            return Err(Error::NotNormalized { deviation: 1.0 });
        }
        Ok(Self(amplitudes.unscale(r)))
    }

    /// The `k`-th standard basis vector of `ℂⁿ`.
    pub fn basis(n: usize, k: usize) -> Self {
        Self(CVector::from_fn(n, |i, _| {
            if i == k {
                Complex64::new(1.0, 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        }))
    }

    /// Equal weights `1/√n` on every basis vector.
    pub fn uniform(n: usize) -> Self {
        let w = 1.0 / (n as f64).sqrt();
        Self(CVector::from_element(n, Complex64::new(w, 0.0)))
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.0
    }

    pub fn into_amplitudes(self) -> CVector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn is_unit(&self, tol: f64) -> bool {
        (self.norm() - 1.0).abs() <= tol
    }

    /// `ψ + s·Y`.
    pub fn displaced(&self, direction: &TangentVector, s: f64) -> StatePoint {
        StatePoint(&self.0 + direction.components() * Complex64::new(s, 0.0))
    }
}

/// A tangent vector at a point of the phase space.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector(CVector);

impl TangentVector {
    pub fn new(components: CVector) -> Self {
        Self(components)
    }

    pub fn from_slice(components: &[Complex64]) -> Self {
        Self(CVector::from_column_slice(components))
    }

    pub fn zeros(n: usize) -> Self {
        Self(CVector::zeros(n))
    }

    pub fn components(&self) -> &CVector {
        &self.0
    }

    pub fn into_components(self) -> CVector {
        self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }
}
