//! Hermitian operators, their algebra and their spectra.

use std::cmp::Ordering;

use num_complex::Complex64;

use crate::error::{check_dim, Error, Result};
use crate::space::{inner_unchecked, CMatrix, CVector, StatePoint};

/// Relative tolerance on `‖M − M†‖_max` accepted by [`make_hermitian`].
pub const HERMITIAN_TOLERANCE: f64 = 1e-12;

/// Relative gap below which neighbouring eigenvalues count as degenerate.
pub const DEGENERACY_GAP: f64 = 1e-9;

const EIGEN_EPS: f64 = 1e-15;
const EIGEN_MAX_ITER: usize = 10_000;

/// A validated `n×n` Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
    label: Option<String>,
}

/// Validates `m` and returns it as a Hermitian operator.
///
/// Entries are averaged with their mirror images after validation, so the
/// stored matrix is Hermitian to the last bit.
pub fn make_hermitian(m: CMatrix) -> Result<HermitianOperator> {
    if !m.is_square() {
        return Err(Error::NonSquare { rows: m.nrows(), cols: m.ncols() });
    }
    if m.nrows() == 0 {
        return Err(Error::InvalidConfig("operator must have positive dimension".into()));
    }
    let adj = m.adjoint();
    let deviation = (&m - &adj).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let scale = 1.0 + max_abs(&m);
    if !(deviation <= HERMITIAN_TOLERANCE * scale) {
        return Err(Error::NonHermitian { deviation });
    }
    let matrix = (&m + &adj) * Complex64::new(0.5, 0.0);
    Ok(HermitianOperator { matrix, label: None })
}

fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

impl HermitianOperator {
    pub fn identity(n: usize) -> Self {
        Self { matrix: CMatrix::identity(n, n), label: None }
    }

    pub fn zero(n: usize) -> Self {
        Self { matrix: CMatrix::zeros(n, n), label: None }
    }

    /// `diag(values)`.
    pub fn diagonal(values: &[f64]) -> Self {
        let n = values.len();
        let matrix = CMatrix::from_fn(n, n, |i, j| {
            if i == j {
                Complex64::new(values[i], 0.0)
            } else {
                Complex64::new(0.0, 0.0)
            }
        });
        Self { matrix, label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn apply(&self, v: &CVector) -> Result<CVector> {
        check_dim(self.dim(), v.len())?;
        Ok(&self.matrix * v)
    }

    pub fn max_abs_entry(&self) -> f64 {
        max_abs(&self.matrix)
    }

    /// Operator 2-norm, `max |aₙ|`.
    pub fn spectral_norm(&self) -> f64 {
        self.matrix
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .fold(0.0_f64, |acc, a| acc.max(a.abs()))
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self { matrix: &self.matrix * Complex64::new(factor, 0.0), label: None }
    }

    pub fn negated(&self) -> Self {
        self.scaled(-1.0)
    }

    /// Real linear combination `self + factor·other`.
    pub fn add_scaled(&self, other: &HermitianOperator, factor: f64) -> Result<Self> {
        check_dim(self.dim(), other.dim())?;
        Ok(Self {
            matrix: &self.matrix + &other.matrix * Complex64::new(factor, 0.0),
            label: None,
        })
    }
}

/// `AB − BA`. Anti-Hermitian for Hermitian `A`, `B`.
pub fn commutator(a: &HermitianOperator, b: &HermitianOperator) -> Result<CMatrix> {
    check_dim(a.dim(), b.dim())?;
    Ok(&a.matrix * &b.matrix - &b.matrix * &a.matrix)
}

/// `⟨ψ|Mψ⟩` for an arbitrary square matrix.
pub fn quadratic_form(m: &CMatrix, psi: &StatePoint) -> Result<Complex64> {
    if !m.is_square() {
        return Err(Error::NonSquare { rows: m.nrows(), cols: m.ncols() });
    }
    check_dim(m.nrows(), psi.dim())?;
    let v = psi.amplitudes();
    Ok(inner_unchecked(v, &(m * v)))
}

/// The expectation-value function `⟨A⟩(ψ) = ⟨ψ|Aψ⟩`.
pub fn expectation(a: &HermitianOperator, psi: &StatePoint) -> Result<f64> {
    let q = quadratic_form(&a.matrix, psi)?;
    debug_assert!(
        q.im.abs() <= 1e-12 * (1.0 + a.matrix.norm()) * psi.norm().powi(2).max(1.0),
        "expectation value has imaginary part {}",
        q.im
    );
    Ok(q.re)
}

/// Eigen-decomposition of a Hermitian operator.
///
/// Eigenvalues ascend. Each eigenvector is rotated so that its largest
/// component is real and positive, and degenerate eigenvectors are ordered
/// by the lexicographic order of their real parts.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralData {
    pub eigenvalues: Vec<f64>,
    /// Columns are the orthonormal eigenvectors, in eigenvalue order.
    pub eigenvectors: CMatrix,
    pub degenerate: bool,
}

impl SpectralData {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> CVector {
        self.eigenvectors.column(k).into_owned()
    }

    pub fn eigenstate(&self, k: usize) -> StatePoint {
        StatePoint::new(self.eigenvector(k))
    }

    /// `Σₙ aₙ ψₙψₙ†`.
    pub fn reconstruct(&self) -> CMatrix {
        let v = &self.eigenvectors;
        let weighted = CMatrix::from_fn(v.nrows(), v.ncols(), |i, j| {
            v[(i, j)] * Complex64::new(self.eigenvalues[j], 0.0)
        });
        weighted * v.adjoint()
    }

    /// `max |aₙ|`.
    pub fn spectral_norm(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0_f64, |acc, a| acc.max(a.abs()))
    }
}

pub fn spectral_decompose(a: &HermitianOperator) -> Result<SpectralData> {
    let eig = a
        .matrix
        .clone()
        .try_symmetric_eigen(EIGEN_EPS, EIGEN_MAX_ITER)
        .ok_or(Error::EigenSolverFailed)?;
    let n = a.dim();

    let mut pairs: Vec<(f64, CVector)> = (0..n)
        .map(|k| (eig.eigenvalues[k], fix_phase(eig.eigenvectors.column(k).into_owned())))
        .collect();
    pairs.sort_by(|x, y| x.0.total_cmp(&y.0));

    let norm = pairs.iter().fold(0.0_f64, |acc, p| acc.max(p.0.abs()));
    let gap = DEGENERACY_GAP * (1.0 + norm);
    let mut degenerate = false;
    let mut start = 0;
    while start < n {
        let mut end = start + 1;
        while end < n && pairs[end].0 - pairs[end - 1].0 <= gap {
            end += 1;
        }
        if end - start > 1 {
            degenerate = true;
            pairs[start..end].sort_by(|x, y| lexicographic_real(&x.1, &y.1));
        }
        start = end;
    }

    let eigenvalues = pairs.iter().map(|p| p.0).collect();
    let eigenvectors = CMatrix::from_fn(n, n, |i, j| pairs[j].1[i]);
    Ok(SpectralData { eigenvalues, eigenvectors, degenerate })
}

/// Rotates `v` so its largest-magnitude component (first one, up to
/// rounding) is real and positive.
fn fix_phase(mut v: CVector) -> CVector {
    let max = v.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()));
    if max == 0.0 {
        return v;
    }
    let pivot = v
        .iter()
        .position(|z| z.norm() >= max * (1.0 - 1e-10))
        .expect("some component attains the maximum");
    let phase = v[pivot].conj() / v[pivot].norm();
    v *= phase;
    v[pivot] = Complex64::new(v[pivot].norm(), 0.0);
    v
}

fn lexicographic_real(x: &CVector, y: &CVector) -> Ordering {
    x.iter()
        .zip(y.iter())
        .map(|(a, b)| a.re.total_cmp(&b.re))
        .find(|o| o.is_ne())
        .unwrap_or(Ordering::Equal)
}

/// Pauli matrices and related constants.
pub mod pauli {
    use num_complex::Complex64;

    use crate::space::CMatrix;

    fn m2(a: [[Complex64; 2]; 2]) -> CMatrix {
        CMatrix::from_fn(2, 2, |i, j| a[i][j])
    }

    const O: Complex64 = Complex64::new(0.0, 0.0);
    const ONE: Complex64 = Complex64::new(1.0, 0.0);
    const I: Complex64 = Complex64::new(0.0, 1.0);

    pub fn identity() -> CMatrix {
        m2([[ONE, O], [O, ONE]])
    }

    pub fn x() -> CMatrix {
        m2([[O, ONE], [ONE, O]])
    }

    pub fn y() -> CMatrix {
        m2([[O, -I], [I, O]])
    }

    pub fn z() -> CMatrix {
        m2([[ONE, O], [O, -ONE]])
    }
}
