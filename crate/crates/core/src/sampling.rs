//! Seeded random states and operators.
//!
//! Every sample draws from its own generator, derived from `(seed, index)`,
//! so a sample's value does not depend on how many others were drawn before
//! it or on which thread draws it.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::space::{CMatrix, CVector, StatePoint, TangentVector};

/// Generator for sample `index` of the stream identified by `seed`.
pub fn sample_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn gaussian_complex<R: rand::Rng>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

pub fn gaussian_vector<R: rand::Rng>(n: usize, rng: &mut R) -> CVector {
    CVector::from_fn(n, |_, _| gaussian_complex(rng))
}

/// A normalized complex Gaussian vector.
pub fn random_unit_state<R: rand::Rng>(n: usize, rng: &mut R) -> StatePoint {
    loop {
        let v = gaussian_vector(n, rng);
        if let Ok(s) = StatePoint::normalized(v) {
            return s;
        }
    }
}

pub fn random_tangent<R: rand::Rng>(n: usize, rng: &mut R) -> TangentVector {
    TangentVector::new(gaussian_vector(n, rng))
}

/// `(G + G†)/2` with i.i.d. complex Gaussian `G`.
pub fn random_hermitian_matrix<R: rand::Rng>(n: usize, rng: &mut R) -> CMatrix {
    let g = CMatrix::from_fn(n, n, |_, _| gaussian_complex(rng));
    (&g + g.adjoint()) * Complex64::new(0.5, 0.0)
}

/// The unit state used as sample `index` of a seeded report.
pub fn sample_state(n: usize, seed: u64, index: u64) -> StatePoint {
    random_unit_state(n, &mut sample_rng(seed, index))
}
