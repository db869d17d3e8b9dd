//! Complex state vectors: dynamical states Ψ (unit norm) and adjoint
//! costates χ (any norm).

use crate::error::{Error, Result};
use crate::operator::{CVector, C64};

/// Norm tolerance for dynamical states entering a propagation.
pub const UNIT_NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    amplitudes: CVector,
}

impl StateVector {
    /// Any-norm vector (adjoint costates are exempt from unit norm).
    pub fn new(amplitudes: CVector) -> Self {
        Self { amplitudes }
    }

    /// A dynamical state: |‖ψ‖² − 1| must be within [`UNIT_NORM_TOL`].
    pub fn unit(amplitudes: CVector) -> Result<Self> {
        let dev = (amplitudes.norm_squared() - 1.0).abs();
        if dev > UNIT_NORM_TOL {
            return Err(Error::StateNotNormalized { deviation: dev });
        }
        Ok(Self { amplitudes })
    }

    pub fn from_re_im(re: &[f64], im: &[f64]) -> Result<Self> {
        if re.len() != im.len() {
            return Err(Error::DimensionMismatch {
                left: re.len(),
                right: im.len(),
            });
        }
        Ok(Self::new(CVector::from_iterator(
            re.len(),
            re.iter().zip(im).map(|(&r, &i)| C64::new(r, i)),
        )))
    }

    /// The j-th computational basis vector.
    pub fn basis_state(dim: usize, index: usize) -> Self {
        let mut v = CVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.amplitudes.norm()
    }

    pub fn norm_squared(&self) -> f64 {
        self.amplitudes.norm_squared()
    }

    /// ⟨self, other⟩, conjugate-linear in `self` (physics convention).
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }
}
