//! One gradient-method improvement step: adjoint pass, gradient assembly,
//! and a backtracking line search projected onto the control box.

use crate::dynamics::{k1_profile, propagate_backward, propagate_forward, ControlProgram};
use crate::error::{Error, Result};
use crate::krotov::SingularConfig;
use crate::problem::ControlProblem;
use crate::state::StateVector;

/// Backtracking schedule: try ε ∈ {eps0, eps0·shrink, …} and accept the first
/// strict decrease of J.
#[derive(Debug, Clone, Copy)]
pub struct LineSearchConfig {
    pub eps0: f64,
    pub shrink: f64,
    pub max_trials: u32,
}

impl Default for LineSearchConfig {
    fn default() -> Self {
        Self {
            eps0: 1.0,
            shrink: 0.5,
            max_trials: 30,
        }
    }
}

impl LineSearchConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0) {
            return Err(Error::BadLineSearch {
                reason: format!("eps0 must be positive, got {}", self.eps0),
            });
        }
        if !(self.shrink > 0.0 && self.shrink < 1.0) {
            return Err(Error::BadLineSearch {
                reason: format!("shrink must lie in (0, 1), got {}", self.shrink),
            });
        }
        if self.max_trials == 0 {
            return Err(Error::BadLineSearch {
                reason: "max_trials must be at least 1".into(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct GradientStepReport {
    pub j_before: f64,
    pub j_after: f64,
    pub i_after: f64,
    pub energy_after: f64,
    /// Accepted step length.
    pub eps_used: f64,
    /// Line-search trials spent (the accepted one included).
    pub trials: u32,
    pub gradient_norm: f64,
    /// max_k |K¹(t_k)|, the singular-regime detector.
    pub k1_max: f64,
    /// Fraction of interval-left nodes with |K¹| at or below the default
    /// scale-aware singular threshold (diagnostic).
    pub singular_fraction: f64,
    /// Max |‖Ψ‖² − 1| along the accepted trajectory.
    pub max_norm_drift: f64,
}

/// Discrete gradient of J: g_k = (−K¹(t_k) + 2β·u_k)·Δt, with the costate
/// started from χ(T) = L·Ψ(T) and K¹ read at each interval's left node.
///
/// Pinned against central finite differences by the oracle suite, which is
/// what fixes this sign convention.
pub fn cost_gradient(problem: &ControlProblem, ctrl: &ControlProgram) -> Result<Vec<f64>> {
    ctrl.check_feasible(problem.system())?;
    let profile = k1_left_nodes(problem, ctrl)?;
    let beta = problem.objective().beta();
    let dt = ctrl.dt();
    Ok(ctrl
        .values()
        .iter()
        .zip(&profile)
        .map(|(&u, &k1)| (-k1 + 2.0 * beta * u) * dt)
        .collect())
}

/// K¹ at nodes 0..=N for the adjoint pair of `ctrl`.
fn k1_nodes(problem: &ControlProblem, ctrl: &ControlProgram) -> Result<Vec<f64>> {
    let sys = problem.system();
    let traj = propagate_forward(sys, ctrl, problem.initial_state())?;
    let chi_t = StateVector::new(
        problem
            .objective()
            .terminal_op()
            .apply(traj.final_state().amplitudes()),
    );
    let adj = propagate_backward(sys, ctrl, chi_t)?;
    Ok(k1_profile(&adj, &traj, sys))
}

fn k1_left_nodes(problem: &ControlProblem, ctrl: &ControlProgram) -> Result<Vec<f64>> {
    let mut profile = k1_nodes(problem, ctrl)?;
    profile.truncate(ctrl.n_steps());
    Ok(profile)
}

/// One improvement step: u'_k = clip(u_k − ε·g_k/Δt, a, b) for the first ε
/// in the backtracking schedule with J(u') < J(u).
///
/// `NoImprovement` after `max_trials` signals stationarity, a singular arc,
/// or an oversized eps0 — the caller separates those via the reported
/// gradient norm and K¹ magnitude.
pub fn gradient_improve_step(
    problem: &ControlProblem,
    ctrl: &ControlProgram,
    cfg: &LineSearchConfig,
) -> Result<(ControlProgram, GradientStepReport)> {
    cfg.validate()?;
    ctrl.check_feasible(problem.system())?;

    let profile = k1_nodes(problem, ctrl)?;
    let beta = problem.objective().beta();
    let dt = ctrl.dt();
    let gradient: Vec<f64> = ctrl
        .values()
        .iter()
        .zip(&profile)
        .map(|(&u, &k1)| (-k1 + 2.0 * beta * u) * dt)
        .collect();
    let gradient_norm = gradient.iter().map(|g| g * g).sum::<f64>().sqrt();
    let k1_max = profile.iter().fold(0.0f64, |m, k| m.max(k.abs()));
    let k1_tol = SingularConfig::default().resolved_k1_tol(problem);
    let singular_count = profile[..ctrl.n_steps()]
        .iter()
        .filter(|k| k.abs() <= k1_tol)
        .count();
    let singular_fraction = singular_count as f64 / ctrl.n_steps() as f64;

    let j_before = problem.evaluate(ctrl)?.total;
    let (lo, hi) = problem.system().bounds();

    let mut eps = cfg.eps0;
    for trial in 1..=cfg.max_trials {
        let candidate: Vec<f64> = ctrl
            .values()
            .iter()
            .zip(&gradient)
            .map(|(&u, &g)| (u - eps * g / dt).clamp(lo, hi))
            .collect();
        let candidate = ctrl.with_values(candidate)?;
        let eval = problem.evaluate(&candidate)?;
        if eval.total < j_before {
            let report = GradientStepReport {
                j_before,
                j_after: eval.total,
                i_after: eval.terminal,
                energy_after: eval.energy,
                eps_used: eps,
                trials: trial,
                gradient_norm,
                k1_max,
                singular_fraction,
                max_norm_drift: eval.trajectory.max_norm_drift(),
            };
            return Ok((candidate, report));
        }
        eps *= cfg.shrink;
    }

    Err(Error::NoImprovement {
        trials: cfg.max_trials,
        gradient_norm,
        k1_max,
    })
}
