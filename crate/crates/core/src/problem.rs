//! The full control problem: system + objective + initial state, with the
//! shared evaluation path used by both improvement methods.

use crate::dynamics::{energy_integral, propagate_forward, ControlProgram, StateTrajectory};
use crate::error::{Error, Result};
use crate::objective::{terminal_cost, Objective};
use crate::operator::BilinearSystem;
use crate::state::{StateVector, UNIT_NORM_TOL};

#[derive(Debug, Clone)]
pub struct ControlProblem {
    system: BilinearSystem,
    objective: Objective,
    initial_state: StateVector,
}

/// One full cost evaluation of a control program.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub trajectory: StateTrajectory,
    /// I = −⟨Ψ(T), LΨ(T)⟩
    pub terminal: f64,
    /// J = I + β·z(T)
    pub total: f64,
    /// z(T) = ∫u² dt
    pub energy: f64,
}

impl ControlProblem {
    pub fn new(
        system: BilinearSystem,
        objective: Objective,
        initial_state: StateVector,
    ) -> Result<Self> {
        if initial_state.dim() != system.dim() {
            return Err(Error::DimensionMismatch {
                left: initial_state.dim(),
                right: system.dim(),
            });
        }
        if objective.terminal_op().dim() != system.dim() {
            return Err(Error::DimensionMismatch {
                left: objective.terminal_op().dim(),
                right: system.dim(),
            });
        }
        let dev = (initial_state.norm_squared() - 1.0).abs();
        if dev > UNIT_NORM_TOL {
            return Err(Error::StateNotNormalized { deviation: dev });
        }
        Ok(Self {
            system,
            objective,
            initial_state,
        })
    }

    pub fn system(&self) -> &BilinearSystem {
        &self.system
    }

    pub fn objective(&self) -> &Objective {
        &self.objective
    }

    pub fn initial_state(&self) -> &StateVector {
        &self.initial_state
    }

    pub fn with_beta(&self, beta: f64) -> Result<Self> {
        Ok(Self {
            system: self.system.clone(),
            objective: self.objective.with_beta(beta)?,
            initial_state: self.initial_state.clone(),
        })
    }

    pub fn evaluate(&self, ctrl: &ControlProgram) -> Result<Evaluation> {
        let trajectory = propagate_forward(&self.system, ctrl, &self.initial_state)?;
        let terminal = terminal_cost(self.objective.terminal_op(), trajectory.final_state());
        let energy = energy_integral(ctrl);
        Ok(Evaluation {
            total: terminal + self.objective.beta() * energy,
            trajectory,
            terminal,
            energy,
        })
    }
}
