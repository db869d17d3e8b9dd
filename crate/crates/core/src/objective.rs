//! Terminal quadratic-form objectives: projector construction from target
//! states, the complement transform, and total-cost assembly.

use crate::dynamics::{energy_integral, ControlProgram};
use crate::error::{Error, Result};
use crate::operator::{max_abs_entry, CMatrix, HermitianOperator};
use crate::state::StateVector;

/// Gram-matrix deviation allowed by [`projector_from_states`].
pub const ORTHONORMAL_TOL: f64 = 1e-10;
/// Max |L² − L| entry allowed by [`complement`].
pub const PROJECTOR_TOL: f64 = 1e-10;
/// Eigenvalue floor for the PSD requirement on Krotov runs.
pub const PSD_TOL: f64 = 1e-10;

/// Terminal operator L with the energy-penalty weight β and an optional
/// energy cap. The terminal cost is I = −⟨Ψ(T), LΨ(T)⟩; Krotov runs
/// additionally require L to be positive semidefinite.
#[derive(Debug, Clone)]
pub struct Objective {
    terminal_op: HermitianOperator,
    beta: f64,
    energy_cap: Option<f64>,
}

impl Objective {
    pub fn new(terminal_op: HermitianOperator, beta: f64) -> Result<Self> {
        if !(beta >= 0.0) {
            return Err(Error::NegativeBeta { beta });
        }
        Ok(Self {
            terminal_op,
            beta,
            energy_cap: None,
        })
    }

    pub fn with_energy_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::BadCap { cap });
        }
        self.energy_cap = Some(cap);
        Ok(self)
    }

    /// Same terminal operator and cap with a different penalty weight
    /// (the budget loop's knob).
    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Ok(Self {
            terminal_op: self.terminal_op.clone(),
            beta: if beta >= 0.0 {
                beta
            } else {
                return Err(Error::NegativeBeta { beta });
            },
            energy_cap: self.energy_cap,
        })
    }

    pub fn terminal_op(&self) -> &HermitianOperator {
        &self.terminal_op
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn energy_cap(&self) -> Option<f64> {
        self.energy_cap
    }

    /// Krotov applicability: all eigenvalues of L above −[`PSD_TOL`].
    pub fn require_psd(&self) -> Result<()> {
        let eigs = self.terminal_op.eigenvalues()?;
        let min = eigs.first().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPositiveSemidefinite {
                min_eigenvalue: min,
            });
        }
        Ok(())
    }
}

/// L = Σᵢ ψᵢ·ψᵢ† over a mutually orthonormal family; the empty family gives
/// the zero operator of the stated dimension.
pub fn projector_from_states(dim: usize, states: &[StateVector]) -> Result<HermitianOperator> {
    let mut max_gram_deviation = 0.0f64;
    for (i, a) in states.iter().enumerate() {
        if a.dim() != dim {
            return Err(Error::DimensionMismatch {
                left: a.dim(),
                right: dim,
            });
        }
        for (j, b) in states.iter().enumerate() {
            let g = a.inner(b);
            let target = if i == j { 1.0 } else { 0.0 };
            max_gram_deviation = max_gram_deviation.max((g - target).norm());
        }
    }
    if max_gram_deviation > ORTHONORMAL_TOL {
        return Err(Error::NotOrthonormal { max_gram_deviation });
    }
    let mut l = CMatrix::zeros(dim, dim);
    for s in states {
        let v = s.amplitudes();
        l += v * v.adjoint();
    }
    Ok(HermitianOperator::from_hermitian_unchecked(l))
}

/// Id − L for a projector L; swaps "minimize P over Q" into the
/// method-compatible "maximize P over the complement of Q".
pub fn complement(l: &HermitianOperator) -> Result<HermitianOperator> {
    let m = l.matrix();
    let deviation = max_abs_entry(&(m * m - m));
    if deviation > PROJECTOR_TOL {
        return Err(Error::NotProjector { deviation });
    }
    Ok(HermitianOperator::from_hermitian_unchecked(
        CMatrix::identity(l.dim(), l.dim()) - m,
    ))
}

/// I = −Re⟨ψ_T, L·ψ_T⟩. The quadratic form is real for Hermitian L; the
/// imaginary remainder is rounding noise and is asserted tiny.
pub fn terminal_cost(l: &HermitianOperator, psi_t: &StateVector) -> f64 {
    debug_assert!(
        (psi_t.norm_squared() - 1.0).abs() <= 1e-9,
        "terminal cost expects a unit state"
    );
    let q = psi_t.inner(&StateVector::new(l.apply(psi_t.amplitudes())));
    debug_assert!(
        q.im.abs() <= 1e-12 * (1.0 + q.re.abs()),
        "non-real quadratic form: {q}"
    );
    -q.re
}

/// J = I + β·z(T).
pub fn total_cost(terminal: f64, beta: f64, ctrl: &ControlProgram) -> f64 {
    terminal + beta * energy_integral(ctrl)
}
