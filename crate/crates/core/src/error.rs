//! Crate-wide error type.

use thiserror::Error;

/// Everything that can go wrong across validation, propagation, improvement
/// and the outer loops. Variants carry the numbers a caller needs to decide
/// what to do next (e.g. `NoImprovement` distinguishes stationarity from a
/// singular arc via the gradient norm and the switching-function magnitude).
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("operator dimension must be at least 1")]
    EmptyOperator,
    #[error(
        "matrix is not Hermitian: max |m[i][j] - conj(m[j][i])| = {max_deviation:.3e} > {tol:.3e}"
    )]
    NonHermitian { max_deviation: f64, tol: f64 },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("control bounds degenerate or inverted: [{lower}, {upper}]")]
    BadBounds { lower: f64, upper: f64 },
    #[error("time step must be positive, got {dt}")]
    BadTimeStep { dt: f64 },
    #[error("eigendecomposition did not converge")]
    EigenFailure,
    #[error("state norm^2 deviates from 1 by {deviation:.3e}")]
    StateNotNormalized { deviation: f64 },
    #[error("norm drift {drift:.3e} breaches the unitary-invariant tolerance {tol:.3e}")]
    NormDrift { drift: f64, tol: f64 },
    #[error("invalid control grid: horizon {horizon}, {n_steps} steps")]
    BadGrid { horizon: f64, n_steps: usize },
    #[error("control value u[{index}] = {value} outside bounds [{lower}, {upper}]")]
    ControlOutOfBounds {
        index: usize,
        value: f64,
        lower: f64,
        upper: f64,
    },
    #[error("target states are not orthonormal: max Gram deviation {max_gram_deviation:.3e}")]
    NotOrthonormal { max_gram_deviation: f64 },
    #[error("operator is not a projector: max |L^2 - L| entry = {deviation:.3e}")]
    NotProjector { deviation: f64 },
    #[error("terminal operator is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("penalty weight must be nonnegative, got {beta}")]
    NegativeBeta { beta: f64 },
    #[error("line-search configuration invalid: {reason}")]
    BadLineSearch { reason: String },
    #[error(
        "no improvement after {trials} line-search trials \
         (gradient norm {gradient_norm:.3e}, max |K1| {k1_max:.3e})"
    )]
    NoImprovement {
        trials: u32,
        gradient_norm: f64,
        k1_max: f64,
    },
    #[error("singular update requested with no singular value available (beta = 0, |K1| below tolerance)")]
    SingularUnavailable,
    #[error(
        "monotonic improvement lost after {damp_trials} damping trials: \
         J rose from {j_before:.12e} to {j_after:.12e} (grid too coarse?)"
    )]
    MonotonicityFailure {
        damp_trials: u32,
        j_before: f64,
        j_after: f64,
    },
    #[error("energy cap must be positive, got {cap}")]
    BadCap { cap: f64 },
    #[error("cannot bracket the energy cap ({reason}); (beta, z(T)) history: {history:?}")]
    BracketFailure {
        reason: String,
        history: Vec<(f64, f64)>,
    },
    #[error("enumeration budget exceeded: {count} sequences > {budget}")]
    BudgetExceeded { count: u128, budget: u128 },
    #[error("finite-difference step leaves the control box at u[{index}] with h = {h}")]
    StepOutOfBounds { index: usize, h: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
