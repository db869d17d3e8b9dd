//! Dense complex linear algebra for small Hermitian systems: validated
//! operators, Hamiltonian assembly, exact one-step unitary propagators and
//! commutators.
//!
//! Internal units fix ħ = 1 throughout; drift operators carry energy units.

use nalgebra::linalg::SymmetricEigen;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;
pub type CVector = DVector<C64>;

/// Max absolute entry deviation tolerated by [`HermitianOperator::new`].
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Unitarity guarantee of [`BilinearSystem::step_propagator`]: max |U†U − Id|.
pub const UNITARITY_TOL: f64 = 1e-12;

fn eigen_decompose(m: &CMatrix) -> Result<SymmetricEigen<C64, nalgebra::Dyn>> {
    SymmetricEigen::try_new(m.clone(), f64::EPSILON, 100_000).ok_or(Error::EigenFailure)
}

/// Largest |m[i][j] − conj(m[j][i])| over all entries.
pub fn hermiticity_deviation(m: &CMatrix) -> f64 {
    let mut max = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            max = max.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    max
}

/// Largest entry modulus.
pub fn max_abs_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// A validated Hermitian matrix. Construction rejects (never repairs)
/// non-Hermitian input.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    entries: CMatrix,
}

impl HermitianOperator {
    /// Validate against [`HERMITICITY_TOL`].
    pub fn new(entries: CMatrix) -> Result<Self> {
        Self::with_tolerance(entries, HERMITICITY_TOL)
    }

    /// Validate against a caller-supplied tolerance on the max entry
    /// deviation |m[i][j] − conj(m[j][i])|.
    pub fn with_tolerance(entries: CMatrix, tol: f64) -> Result<Self> {
        if entries.nrows() != entries.ncols() {
            return Err(Error::NotSquare {
                rows: entries.nrows(),
                cols: entries.ncols(),
            });
        }
        if entries.nrows() == 0 {
            return Err(Error::EmptyOperator);
        }
        let max_deviation = hermiticity_deviation(&entries);
        if max_deviation > tol {
            return Err(Error::NonHermitian { max_deviation, tol });
        }
        Ok(Self { entries })
    }

    /// For matrices Hermitian by construction (real combinations of Hermitian
    /// operators, projector sums, Id − L).
    pub(crate) fn from_hermitian_unchecked(entries: CMatrix) -> Self {
        debug_assert!(hermiticity_deviation(&entries) <= 1e-9);
        Self { entries }
    }

    pub fn zero(dim: usize) -> Self {
        Self {
            entries: CMatrix::zeros(dim, dim),
        }
    }

    pub fn identity(dim: usize) -> Self {
        Self {
            entries: CMatrix::identity(dim, dim),
        }
    }

    /// Build from real and imaginary parts.
    pub fn from_re_im(re: &DMatrix<f64>, im: &DMatrix<f64>) -> Result<Self> {
        if re.shape() != im.shape() {
            return Err(Error::DimensionMismatch {
                left: re.nrows(),
                right: im.nrows(),
            });
        }
        let entries = CMatrix::from_fn(re.nrows(), re.ncols(), |i, j| {
            C64::new(re[(i, j)], im[(i, j)])
        });
        Self::new(entries)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.entries
    }

    pub fn apply(&self, v: &CVector) -> CVector {
        &self.entries * v
    }

    /// Real eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let eig = eigen_decompose(&self.entries)?;
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        Ok(vals)
    }

    /// Spectral norm max |λ|.
    pub fn spectral_norm(&self) -> f64 {
        match self.eigenvalues() {
            Ok(vals) => vals.iter().fold(0.0f64, |m, &l| m.max(l.abs())),
            // fall back to the Frobenius bound if the QR iteration stalls
            Err(_) => self.entries.norm(),
        }
    }
}

/// p·q − q·p. Anti-Hermitian when p, q are Hermitian.
pub fn commutator(p: &HermitianOperator, q: &HermitianOperator) -> Result<CMatrix> {
    if p.dim() != q.dim() {
        return Err(Error::DimensionMismatch {
            left: p.dim(),
            right: q.dim(),
        });
    }
    Ok(p.matrix() * q.matrix() - q.matrix() * p.matrix())
}

/// Spectral norm of an anti-Hermitian matrix C via the Hermitian matrix iC.
pub fn anti_hermitian_spectral_norm(c: &CMatrix) -> Result<f64> {
    let ic = c.map(|z| C64::i() * z);
    let eig = eigen_decompose(&ic)?;
    Ok(eig.eigenvalues.iter().fold(0.0f64, |m, &l| m.max(l.abs())))
}

/// Drift + control-coupling pair with a closed control box [a, b].
#[derive(Debug, Clone)]
pub struct BilinearSystem {
    h0: HermitianOperator,
    h1: HermitianOperator,
    lower: f64,
    upper: f64,
}

impl BilinearSystem {
    pub fn new(h0: HermitianOperator, h1: HermitianOperator, bounds: (f64, f64)) -> Result<Self> {
        if h0.dim() != h1.dim() {
            return Err(Error::DimensionMismatch {
                left: h0.dim(),
                right: h1.dim(),
            });
        }
        let (lower, upper) = bounds;
        if !(lower < upper) || !lower.is_finite() || !upper.is_finite() {
            return Err(Error::BadBounds { lower, upper });
        }
        Ok(Self {
            h0,
            h1,
            lower,
            upper,
        })
    }

    pub fn dim(&self) -> usize {
        self.h0.dim()
    }

    pub fn drift(&self) -> &HermitianOperator {
        &self.h0
    }

    pub fn coupling(&self) -> &HermitianOperator {
        &self.h1
    }

    pub fn bounds(&self) -> (f64, f64) {
        (self.lower, self.upper)
    }

    pub fn lower(&self) -> f64 {
        self.lower
    }

    pub fn upper(&self) -> f64 {
        self.upper
    }

    pub fn clamp(&self, u: f64) -> f64 {
        u.clamp(self.lower, self.upper)
    }

    pub fn contains(&self, u: f64) -> bool {
        self.lower <= u && u <= self.upper
    }

    /// H(u) = H⁰ + u·H¹. Bounds are not enforced here; improvers own them.
    pub fn hamiltonian(&self, u: f64) -> HermitianOperator {
        let m = self.h0.matrix() + self.h1.matrix().map(|z| z * u);
        HermitianOperator::from_hermitian_unchecked(m)
    }

    /// Exact one-step propagator exp(−i·H(u)·dt) via Hermitian
    /// eigendecomposition; unitary to [`UNITARITY_TOL`].
    pub fn step_propagator(&self, u: f64, dt: f64) -> Result<CMatrix> {
        if !(dt > 0.0) {
            return Err(Error::BadTimeStep { dt });
        }
        let h = self.hamiltonian(u);
        let eig = eigen_decompose(h.matrix())?;
        let phases = CVector::from_iterator(
            self.dim(),
            eig.eigenvalues
                .iter()
                .map(|&l| C64::new(0.0, -l * dt).exp()),
        );
        let v = eig.eigenvectors;
        Ok(&v * CMatrix::from_diagonal(&phases) * v.adjoint())
    }
}

/// Standard two-level operators, handy for fixtures and problem files.
pub fn pauli_x() -> HermitianOperator {
    HermitianOperator::from_hermitian_unchecked(CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
        ],
    ))
}

pub fn pauli_y() -> HermitianOperator {
    HermitianOperator::from_hermitian_unchecked(CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(0.0, 0.0),
            C64::new(0.0, -1.0),
            C64::new(0.0, 1.0),
            C64::new(0.0, 0.0),
        ],
    ))
}

pub fn pauli_z() -> HermitianOperator {
    HermitianOperator::from_hermitian_unchecked(CMatrix::from_row_slice(
        2,
        2,
        &[
            C64::new(1.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(0.0, 0.0),
            C64::new(-1.0, 0.0),
        ],
    ))
}
