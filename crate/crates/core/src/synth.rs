//! Deterministic random instances for experiments and test fixtures.
//!
//! All draws run through a seeded ChaCha8 stream so every instance is
//! reproducible bit-for-bit across platforms.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::operator::{CMatrix, CVector, HermitianOperator, C64};
use crate::state::StateVector;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_complex_matrix(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| {
        C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
    })
}

/// (A + A†)/2 rescaled to the requested spectral norm (skipped if the draw
/// is numerically zero).
pub fn random_hermitian(dim: usize, spectral_norm: f64, rng: &mut ChaCha8Rng) -> HermitianOperator {
    let a = random_complex_matrix(dim, rng);
    let h = (&a + a.adjoint()).map(|z| z * 0.5);
    let op = HermitianOperator::from_hermitian_unchecked(h);
    let norm = op.spectral_norm();
    if norm < 1e-12 {
        return op;
    }
    let scale = spectral_norm / norm;
    HermitianOperator::from_hermitian_unchecked(op.matrix().map(|z| z * scale))
}

pub fn random_unit_state(dim: usize, rng: &mut ChaCha8Rng) -> StateVector {
    loop {
        let v = CVector::from_fn(dim, |_, _| {
            C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))
        });
        let n = v.norm();
        if n > 1e-3 {
            return StateVector::new(v.map(|z| z / n));
        }
    }
}

/// Rank-`rank` orthogonal projector from the Q factor of a random complex
/// matrix.
pub fn random_projector(dim: usize, rank: usize, rng: &mut ChaCha8Rng) -> HermitianOperator {
    assert!(rank <= dim, "projector rank exceeds dimension");
    let qr = random_complex_matrix(dim, rng).qr();
    let q = qr.q();
    let mut l = CMatrix::zeros(dim, dim);
    for j in 0..rank {
        let col = q.column(j);
        l += col * col.adjoint();
    }
    HermitianOperator::from_hermitian_unchecked(l)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::max_abs_entry;

    #[test]
    fn hermitian_draw_has_requested_norm() {
        let mut r = rng(1);
        let h = random_hermitian(4, 0.7, &mut r);
        assert!((h.spectral_norm() - 0.7).abs() < 1e-10);
    }

    #[test]
    fn projector_is_idempotent() {
        let mut r = rng(2);
        let p = random_projector(5, 2, &mut r);
        let m = p.matrix();
        assert!(max_abs_entry(&(m * m - m)) < 1e-12);
        let trace: C64 = m.diagonal().iter().sum();
        assert!((trace.re - 2.0).abs() < 1e-10);
    }

    #[test]
    fn unit_state_is_unit() {
        let mut r = rng(3);
        let s = random_unit_state(6, &mut r);
        assert!((s.norm_squared() - 1.0).abs() < 1e-12);
    }
}
