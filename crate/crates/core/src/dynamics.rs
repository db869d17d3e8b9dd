//! Forward propagation of Ψ, backward propagation of the costate χ, the
//! control energy integral and the switching-function profile K¹.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::operator::{BilinearSystem, HermitianOperator};
use crate::state::{StateVector, UNIT_NORM_TOL};

/// Norm-drift budget |‖Ψ(t_k)‖² − 1| for any propagated trajectory.
pub const NORM_DRIFT_TOL: f64 = 1e-9;

/// Piecewise-constant control on a uniform grid: value k holds on
/// [k·Δt, (k+1)·Δt), Δt = T/N.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlProgram {
    horizon: f64,
    values: Vec<f64>,
}

impl ControlProgram {
    pub fn new(horizon: f64, values: Vec<f64>) -> Result<Self> {
        if !(horizon > 0.0) || values.is_empty() {
            return Err(Error::BadGrid {
                horizon,
                n_steps: values.len(),
            });
        }
        Ok(Self { horizon, values })
    }

    pub fn constant(horizon: f64, n_steps: usize, value: f64) -> Result<Self> {
        Self::new(horizon, vec![value; n_steps])
    }

    /// Uniform draws over [lo, hi] from a seeded ChaCha8 stream, so identical
    /// seeds reproduce identical programs on any platform.
    pub fn random(horizon: f64, n_steps: usize, range: (f64, f64), seed: u64) -> Result<Self> {
        let (lo, hi) = range;
        if !(lo < hi) {
            return Err(Error::BadBounds {
                lower: lo,
                upper: hi,
            });
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let values = (0..n_steps).map(|_| rng.random_range(lo..=hi)).collect();
        Self::new(horizon, values)
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn n_steps(&self) -> usize {
        self.values.len()
    }

    pub fn dt(&self) -> f64 {
        self.horizon / self.values.len() as f64
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, k: usize) -> f64 {
        self.values[k]
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::new(self.horizon, values)
    }

    /// The same piecewise-constant control on a grid refined by `factor`
    /// (each interval split evenly); represents u(t) exactly.
    pub fn refined(&self, factor: usize) -> Self {
        let values = self
            .values
            .iter()
            .flat_map(|&u| std::iter::repeat_n(u, factor.max(1)))
            .collect();
        Self {
            horizon: self.horizon,
            values,
        }
    }

    /// All values inside the system's control box.
    pub fn check_feasible(&self, sys: &BilinearSystem) -> Result<()> {
        for (k, &u) in self.values.iter().enumerate() {
            if !sys.contains(u) {
                return Err(Error::ControlOutOfBounds {
                    index: k,
                    value: u,
                    lower: sys.lower(),
                    upper: sys.upper(),
                });
            }
        }
        Ok(())
    }
}

/// Ψ(t_k) at all N+1 grid nodes plus the recorded max norm drift.
#[derive(Debug, Clone)]
pub struct StateTrajectory {
    nodes: Vec<StateVector>,
    max_norm_drift: f64,
}

impl StateTrajectory {
    pub fn nodes(&self) -> &[StateVector] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> &StateVector {
        &self.nodes[k]
    }

    pub fn final_state(&self) -> &StateVector {
        self.nodes.last().expect("trajectory has N+1 >= 2 nodes")
    }

    pub fn max_norm_drift(&self) -> f64 {
        self.max_norm_drift
    }
}

/// χ(t_k) at all N+1 grid nodes. The backward flow is unitary, so
/// ‖χ(t_k)‖ = ‖χ(T)‖ throughout (χ(T) itself need not be unit).
#[derive(Debug, Clone)]
pub struct AdjointTrajectory {
    nodes: Vec<StateVector>,
}

impl AdjointTrajectory {
    pub fn nodes(&self) -> &[StateVector] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> &StateVector {
        &self.nodes[k]
    }

    pub fn initial(&self) -> &StateVector {
        &self.nodes[0]
    }

    pub fn terminal(&self) -> &StateVector {
        self.nodes.last().expect("trajectory has N+1 >= 2 nodes")
    }
}

/// Integrate Ψ(t_{k+1}) = exp(−i·H(u_k)·Δt)·Ψ(t_k) from Ψ(0) = psi0.
///
/// Errors with `NormDrift` if the unitary invariant degrades past
/// [`NORM_DRIFT_TOL`], which signals a propagator defect rather than a
/// modelling choice.
pub fn propagate_forward(
    sys: &BilinearSystem,
    ctrl: &ControlProgram,
    psi0: &StateVector,
) -> Result<StateTrajectory> {
    if psi0.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            left: psi0.dim(),
            right: sys.dim(),
        });
    }
    let dev = (psi0.norm_squared() - 1.0).abs();
    if dev > UNIT_NORM_TOL {
        return Err(Error::StateNotNormalized { deviation: dev });
    }

    let dt = ctrl.dt();
    let mut nodes = Vec::with_capacity(ctrl.n_steps() + 1);
    let mut drift = dev;
    nodes.push(psi0.clone());
    let mut psi = psi0.amplitudes().clone();
    for &u in ctrl.values() {
        let prop = sys.step_propagator(u, dt)?;
        psi = &prop * psi;
        drift = drift.max((psi.norm_squared() - 1.0).abs());
        nodes.push(StateVector::new(psi.clone()));
    }
    if drift > NORM_DRIFT_TOL {
        return Err(Error::NormDrift {
            drift,
            tol: NORM_DRIFT_TOL,
        });
    }
    Ok(StateTrajectory {
        nodes,
        max_norm_drift: drift,
    })
}

/// Integrate the costate backward under the same generator as the state
/// equation: χ(t_k) = exp(−i·H(u_k)·Δt)†·χ(t_{k+1}), χ(t_N) = chi_t.
pub fn propagate_backward(
    sys: &BilinearSystem,
    ctrl: &ControlProgram,
    chi_t: StateVector,
) -> Result<AdjointTrajectory> {
    if chi_t.dim() != sys.dim() {
        return Err(Error::DimensionMismatch {
            left: chi_t.dim(),
            right: sys.dim(),
        });
    }
    let dt = ctrl.dt();
    let n = ctrl.n_steps();
    let mut nodes = vec![chi_t; n + 1];
    for k in (0..n).rev() {
        let prop = sys.step_propagator(ctrl.value(k), dt)?;
        let chi = prop.adjoint() * nodes[k + 1].amplitudes();
        nodes[k] = StateVector::new(chi);
    }
    Ok(AdjointTrajectory { nodes })
}

/// z(T) = Σ_k u_k²·Δt, exact for piecewise-constant controls.
pub fn energy_integral(ctrl: &ControlProgram) -> f64 {
    let dt = ctrl.dt();
    ctrl.values().iter().map(|&u| u * u * dt).sum()
}

fn switching_value(chi: &StateVector, psi: &StateVector, op: &HermitianOperator) -> f64 {
    2.0 * chi.inner(&StateVector::new(op.apply(psi.amplitudes()))).im
}

/// Switching function at one node: K¹ = 2·Im⟨χ, H¹Ψ⟩. Its sign selects the
/// bang branches; its vanishing signals a singular regime.
pub fn k1_value(chi: &StateVector, psi: &StateVector, h1: &HermitianOperator) -> f64 {
    switching_value(chi, psi, h1)
}

/// Drift-side companion K⁰ = 2·Im⟨χ, H⁰Ψ⟩. Control-independent, so it never
/// enters the pointwise update; exposed as a diagnostic only.
pub fn k0_value(chi: &StateVector, psi: &StateVector, h0: &HermitianOperator) -> f64 {
    switching_value(chi, psi, h0)
}

/// K¹(t_k) at every grid node.
pub fn k1_profile(
    adj: &AdjointTrajectory,
    traj: &StateTrajectory,
    sys: &BilinearSystem,
) -> Vec<f64> {
    assert_eq!(
        adj.nodes().len(),
        traj.nodes().len(),
        "trajectories must share the grid"
    );
    adj.nodes()
        .iter()
        .zip(traj.nodes())
        .map(|(chi, psi)| k1_value(chi, psi, sys.coupling()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operator::{pauli_x, pauli_z, CVector, HermitianOperator, C64};

    fn unit(re: Vec<f64>, im: Vec<f64>) -> StateVector {
        StateVector::unit(CVector::from_iterator(
            re.len(),
            re.iter().zip(&im).map(|(&r, &i)| C64::new(r, i)),
        ))
        .unwrap()
    }

    #[test]
    fn stationary_eigenstate_acquires_pure_phase() {
        // u = 0, h0 = sigma_z, psi0 = (1, 0) -> Psi(T) = (e^{-iT}, 0)
        let sys = BilinearSystem::new(pauli_z(), pauli_x(), (-1.0, 1.0)).unwrap();
        let t = 1.3;
        let ctrl = ControlProgram::constant(t, 64, 0.0).unwrap();
        let traj = propagate_forward(&sys, &ctrl, &StateVector::basis_state(2, 0)).unwrap();
        let expect = C64::new(0.0, -t).exp();
        assert!((traj.final_state().amplitudes()[0] - expect).norm() < 1e-12);
        assert!(traj.final_state().amplitudes()[1].norm() < 1e-14);
    }

    #[test]
    fn quarter_area_pulse_transfers_population() {
        // h0 = 0, h1 = sigma_x, u = 1, T = pi/2: full transfer to (0, -i)
        let sys = BilinearSystem::new(HermitianOperator::zero(2), pauli_x(), (0.0, 2.0)).unwrap();
        let ctrl = ControlProgram::constant(std::f64::consts::FRAC_PI_2, 10, 1.0).unwrap();
        let traj = propagate_forward(&sys, &ctrl, &StateVector::basis_state(2, 0)).unwrap();
        let psi_t = traj.final_state();
        assert!(psi_t.amplitudes()[0].norm() < 1e-12);
        assert!((psi_t.amplitudes()[1] - C64::new(0.0, -1.0)).norm() < 1e-12);
        assert!(traj.max_norm_drift() <= NORM_DRIFT_TOL);
    }

    #[test]
    fn frozen_dynamics_keeps_costate_fixed() {
        let sys = BilinearSystem::new(
            HermitianOperator::zero(2),
            HermitianOperator::zero(2),
            (-1.0, 1.0),
        )
        .unwrap();
        let ctrl = ControlProgram::constant(2.0, 8, 0.0).unwrap();
        let chi_t = StateVector::new(CVector::from_vec(vec![
            C64::new(0.3, 0.4),
            C64::new(0., 1.),
        ]));
        let adj = propagate_backward(&sys, &ctrl, chi_t.clone()).unwrap();
        for node in adj.nodes() {
            assert!((node.amplitudes() - chi_t.amplitudes()).norm() < 1e-13);
        }
    }

    #[test]
    fn zero_terminal_costate_stays_zero() {
        let sys = BilinearSystem::new(pauli_z(), pauli_x(), (-1.0, 1.0)).unwrap();
        let ctrl = ControlProgram::random(1.0, 16, (-1.0, 1.0), 7).unwrap();
        let adj = propagate_backward(&sys, &ctrl, StateVector::new(CVector::zeros(2))).unwrap();
        for node in adj.nodes() {
            assert_eq!(node.norm(), 0.0);
        }
    }

    #[test]
    fn forward_backward_round_trip_preserves_pairing() {
        let sys = BilinearSystem::new(pauli_z(), pauli_x(), (-1.0, 1.0)).unwrap();
        let ctrl = ControlProgram::random(2.5, 40, (-1.0, 1.0), 11).unwrap();
        let psi0 = unit(vec![0.6, 0.8], vec![0.0, 0.0]);
        let traj = propagate_forward(&sys, &ctrl, &psi0).unwrap();
        let chi_t = StateVector::new(CVector::from_vec(vec![
            C64::new(0.2, -0.1),
            C64::new(0.9, 0.3),
        ]));
        let adj = propagate_backward(&sys, &ctrl, chi_t.clone()).unwrap();
        let at_t = chi_t.inner(traj.final_state());
        // <chi(t_k), Psi(t_k)> is invariant under the shared unitary flow,
        // and the backward flow preserves ||chi||
        for k in 0..=ctrl.n_steps() {
            let at_k = adj.node(k).inner(traj.node(k));
            assert!((at_k - at_t).norm() < 1e-10);
            assert!((adj.node(k).norm() - chi_t.norm()).abs() < 1e-9);
        }
    }

    #[test]
    fn energy_integral_examples() {
        let c = ControlProgram::constant(3.0, 12, 0.5).unwrap();
        assert!((energy_integral(&c) - 0.25 * 3.0).abs() < 1e-15);
        let z = ControlProgram::constant(3.0, 12, 0.0).unwrap();
        assert_eq!(energy_integral(&z), 0.0);
        let two = ControlProgram::new(2.0, vec![1.0, 3.0]).unwrap();
        assert!((energy_integral(&two) - 10.0).abs() < 1e-15);
    }

    #[test]
    fn grid_refinement_leaves_final_state_unchanged() {
        let sys = BilinearSystem::new(pauli_z(), pauli_x(), (-1.0, 1.0)).unwrap();
        let ctrl = ControlProgram::random(2.0, 25, (-1.0, 1.0), 3).unwrap();
        let psi0 = StateVector::basis_state(2, 0);
        let coarse = propagate_forward(&sys, &ctrl, &psi0).unwrap();
        let fine = propagate_forward(&sys, &ctrl.refined(2), &psi0).unwrap();
        let diff = (coarse.final_state().amplitudes() - fine.final_state().amplitudes()).norm();
        assert!(diff < 1e-12, "refinement changed Psi(T) by {diff:.3e}");
    }

    #[test]
    fn k0_is_control_independent_bookkeeping() {
        // same formula against the drift; real expectation on an eigenstate
        let e0 = StateVector::basis_state(2, 0);
        assert_eq!(k0_value(&e0, &e0, &pauli_z()), 0.0);
        // chi = (i, 0): <chi, sigma_z e0> = conj(i) = -i, so K0 = -2
        let chi = StateVector::new(CVector::from_vec(vec![C64::new(0., 1.), C64::new(0., 0.)]));
        assert!((k0_value(&chi, &e0, &pauli_z()) + 2.0).abs() < 1e-15);
    }

    #[test]
    fn k1_examples() {
        // off-diagonal coupling on the same pole: K1 = 0
        let e0 = StateVector::basis_state(2, 0);
        assert_eq!(k1_value(&e0, &e0, &pauli_x()), 0.0);
        // chi = (0, i), psi = (1, 0): z = conj(i)*1 = -i, K1 = 2 Im(-i) = -2
        let chi = StateVector::new(CVector::from_vec(vec![C64::new(0., 0.), C64::new(0., 1.)]));
        assert!((k1_value(&chi, &e0, &pauli_x()) + 2.0).abs() < 1e-15);
        // real chi, real psi, real symmetric h1: K1 = 0
        let chi = unit(vec![0.6, 0.8], vec![0.0, 0.0]);
        let psi = unit(vec![0.8, -0.6], vec![0.0, 0.0]);
        assert_eq!(k1_value(&chi, &psi, &pauli_x()), 0.0);
    }

    #[test]
    fn constant_control_satisfies_semigroup_consistency() {
        // propagation under u == u* equals one long exact step
        let sys = BilinearSystem::new(pauli_z(), pauli_x(), (-1.0, 1.0)).unwrap();
        let ctrl = ControlProgram::constant(1.7, 31, 0.4).unwrap();
        let psi0 = StateVector::basis_state(2, 1);
        let traj = propagate_forward(&sys, &ctrl, &psi0).unwrap();
        let one_shot = sys.step_propagator(0.4, 1.7).unwrap() * psi0.amplitudes();
        assert!((traj.final_state().amplitudes() - one_shot).norm() < 1e-10);
    }

    #[test]
    fn seeded_random_controls_reproduce() {
        let a = ControlProgram::random(1.0, 30, (-0.5, 1.5), 42).unwrap();
        let b = ControlProgram::random(1.0, 30, (-0.5, 1.5), 42).unwrap();
        assert_eq!(a, b);
        assert!(a.values().iter().all(|&u| (-0.5..=1.5).contains(&u)));
    }
}
