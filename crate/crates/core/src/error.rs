use std::fmt;

use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NonSquare { rows: usize, cols: usize },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NonHermitian { deviation: f64 },

    #[error("Hermitian eigensolver did not converge")]
    EigenSolverFailed,

    #[error("state is not normalized (|norm - 1| = {deviation:.3e})")]
    NotNormalized { deviation: f64 },

    #[error("implicit solve did not converge at step {step} after {iterations} iterations")]
    NonConvergence { step: usize, iterations: usize },

    #[error("method `{method}` requires an expectation-value observable")]
    MethodUnsupported { method: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("precondition failed ({hypothesis}): residual {residual:.3e}")]
    PreconditionFailed { hypothesis: Hypothesis, residual: f64 },
}

/// Hypotheses checked before a quantum function is built from a solution of
/// the quantum-function equation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Hypothesis {
    /// `|Φ(ψ)| = 1` on sampled states.
    Normalization,
    /// `Φ(ξₙ) = ψₙ` up to a phase.
    StationaryStateMatch,
    /// `iħ{⟨Φ|A|Φ⟩, Φ} = AΦ` on sampled states.
    QuantumFunctionEquation,
}

impl fmt::Display for Hypothesis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Hypothesis::Normalization => "normalization",
            Hypothesis::StationaryStateMatch => "stationary-state match",
            Hypothesis::QuantumFunctionEquation => "quantum-function equation",
        })
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
