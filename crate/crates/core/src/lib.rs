//! Quantum mechanics on `ℂⁿ` as Hamiltonian mechanics on `ℝ²ⁿ`.
//!
//! The Hilbert space is treated as a real manifold with the constant
//! symplectic form `Ω(v, w) = 2ħ·Im⟨v|w⟩`. Hermitian operators become real
//! expectation functions, their Hamiltonian flows are Schrödinger flows, and
//! the eigen-structure of an operator becomes a *quantum function*
//! `f = Σₙ aₙ|uₙ|²` that can be checked, reconstructed and rebuilt purely
//! from brackets and flows.
//!
//! ```
//! use num_complex::Complex64;
//! use qsymplectic::operators::{commutator, make_hermitian, pauli, quadratic_form};
//! use qsymplectic::poisson::{ObservableFunction, PoissonEngine};
//! use qsymplectic::space::{StatePoint, SymplecticSpace};
//!
//! let space = SymplecticSpace::natural(2)?;
//! let x = make_hermitian(pauli::x())?;
//! let y = make_hermitian(pauli::y())?;
//! let fx = ObservableFunction::expectation(x.clone(), space)?;
//! let fy = ObservableFunction::expectation(y.clone(), space)?;
//!
//! let psi = StatePoint::basis(2, 0);
//! let bracket = PoissonEngine::analytic().bracket(&fx, &fy, &psi)?;
//! let comm = quadratic_form(&commutator(&x, &y)?, &psi)?;
//! assert!((Complex64::new(0.0, bracket) - comm).norm() < 1e-12);
//! # Ok::<(), qsymplectic::Error>(())
//! ```
//!
//! The guide in `book/` walks through each module; its code listings are
//! compiled and run as doc-tests of this crate.

pub mod dynamics;
pub mod error;
pub mod operators;
pub mod poisson;
pub mod quantum_function;
pub mod sampling;
pub mod space;

pub use error::{Error, Hypothesis, Result};

pub use dynamics::{exact_propagate, integrate, IntegratorConfig, Method, SpectralPropagator, Trajectory};
pub use operators::{make_hermitian, spectral_decompose, HermitianOperator, SpectralData};
pub use poisson::{ComplexFunction, ObservableFunction, PoissonEngine};
pub use quantum_function::{
    qfe_residual, quantum_function_from_qfe, reconstruction_map, verify_axioms, verify_reconstruction,
    AxiomReport, AxiomTolerances, EmbeddingMap, QuantumFunction, ReconstructionMap,
};
pub use space::{StatePoint, SymplecticSpace, TangentVector};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/phase-space.md")]
    mod phase_space {}
    #[doc = include_str!("../../../book/src/operators.md")]
    mod operators {}
    #[doc = include_str!("../../../book/src/brackets.md")]
    mod brackets {}
    #[doc = include_str!("../../../book/src/dynamics.md")]
    mod dynamics {}
    #[doc = include_str!("../../../book/src/quantum-functions.md")]
    mod quantum_functions {}
    #[doc = include_str!("../../../book/src/reconstruction.md")]
    mod reconstruction {}
}
