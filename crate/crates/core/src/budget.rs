//! Outer loop enforcing the terminal energy constraint z(T) ≤ cap by tuning
//! the penalty weight β: an inner run at β = 0 decides whether the cap binds;
//! if it does, a geometric β-ladder brackets the cap and bisection lands
//! z(T) on it, warm-starting every inner run from the previous control.

use crate::dynamics::ControlProgram;
use crate::error::{Error, Result};
use crate::problem::ControlProblem;
use crate::solve::{optimize, SolveConfig, SolveResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BudgetStatus {
    /// The unconstrained (β = 0) solution already satisfies the cap.
    CapInactive,
    /// Bisection landed |z(T) − cap| within cap_tol·cap.
    Met,
}

#[derive(Debug, Clone)]
pub struct BudgetResult {
    pub beta_star: f64,
    pub z_t: f64,
    pub status: BudgetStatus,
    /// The inner solve at β*.
    pub solution: SolveResult,
    /// Every (β, z(T)) pair in evaluation order, ladder then bisection.
    pub bracket_history: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, Copy)]
pub struct BudgetConfig {
    /// First ladder rung; `None` resolves to 1e-4·|I₀| / z(T)|β=0.
    pub beta0: Option<f64>,
    /// Relative landing tolerance: |z(T) − cap| ≤ cap_tol·cap.
    pub cap_tol: f64,
    pub max_bisections: u32,
    /// Multiplier between ladder rungs.
    pub ladder_factor: f64,
    pub max_ladder_rungs: u32,
    /// Slack allowed before a z(T) rise along the ladder counts as
    /// non-monotone.
    pub noise_tol: f64,
}

impl Default for BudgetConfig {
    fn default() -> Self {
        Self {
            beta0: None,
            cap_tol: 1e-3,
            max_bisections: 40,
            ladder_factor: 4.0,
            max_ladder_rungs: 60,
            noise_tol: 1e-4,
        }
    }
}

/// Optimize under the energy budget z(T) ≤ cap. The problem's own β is
/// irrelevant here: inner runs start at β = 0 and the loop owns β thereafter.
pub fn optimize_with_cap(
    problem: &ControlProblem,
    cap: f64,
    ctrl0: &ControlProgram,
    solve_cfg: &SolveConfig,
    budget_cfg: &BudgetConfig,
) -> Result<BudgetResult> {
    if !(cap > 0.0) {
        return Err(Error::BadCap { cap });
    }

    let mut history = Vec::new();
    let run = |beta: f64, start: &ControlProgram| -> Result<(SolveResult, f64)> {
        let sub = problem.with_beta(beta)?;
        let result = optimize(&sub, start, solve_cfg)?;
        let z = result.final_record().energy;
        Ok((result, z))
    };

    // unconstrained run decides whether the cap binds at all
    let (res0, z0) = run(0.0, ctrl0)?;
    history.push((0.0, z0));
    if z0 <= cap {
        return Ok(BudgetResult {
            beta_star: 0.0,
            z_t: z0,
            status: BudgetStatus::CapInactive,
            solution: res0,
            bracket_history: history,
        });
    }

    let i0 = res0.final_record().terminal;
    let mut beta = budget_cfg
        .beta0
        .unwrap_or(1e-4 * i0.abs() / z0.max(1e-12))
        .max(1e-12);

    // Ladder: grow beta geometrically until the energy drops under the cap.
    // The monotonicity guard compares positive-beta rungs only: switching
    // from the beta = 0 bang rule to the clipped stationary-point rule can
    // re-shape the control and nudge z either way once.
    let mut lo = (0.0, z0, res0); // z > cap side
    let mut hi: Option<(f64, f64, SolveResult)> = None;
    let mut prev_z: Option<f64> = None;
    for _ in 0..budget_cfg.max_ladder_rungs {
        let (res, z) = run(beta, &lo.2.control)?;
        history.push((beta, z));
        if let Some(prev) = prev_z {
            if z > prev + budget_cfg.noise_tol * prev.abs().max(1.0) {
                return Err(Error::BracketFailure {
                    reason: format!("z(T) rose from {prev} to {z} as beta grew to {beta}"),
                    history,
                });
            }
        }
        if z <= cap {
            hi = Some((beta, z, res));
            break;
        }
        prev_z = Some(z);
        lo = (beta, z, res);
        beta *= budget_cfg.ladder_factor;
    }
    let Some(mut hi) = hi else {
        return Err(Error::BracketFailure {
            reason: format!("ladder exhausted at beta = {beta} with z(T) still above the cap"),
            history,
        });
    };

    // Bisect [lo, hi] down to the landing tolerance, keeping a valid bracket.
    // Mid runs warm-start from the lo-side control: the above-cap branch
    // carries a nontrivial control, whereas the below-cap side can sit in the
    // u ~ 0 basin whose stationarity would freeze every later run.
    let tol = budget_cfg.cap_tol * cap;
    let landed = |lo: &(f64, f64, SolveResult), hi: &(f64, f64, SolveResult)| {
        let closer = if (lo.1 - cap).abs() <= (hi.1 - cap).abs() {
            lo
        } else {
            hi
        };
        ((closer.1 - cap).abs() <= tol).then(|| closer.clone())
    };
    for _ in 0..budget_cfg.max_bisections {
        if let Some((beta_star, z_t, solution)) = landed(&lo, &hi) {
            return Ok(BudgetResult {
                beta_star,
                z_t,
                status: BudgetStatus::Met,
                solution,
                bracket_history: history,
            });
        }
        let mid = 0.5 * (lo.0 + hi.0);
        let (res, z) = run(mid, &lo.2.control)?;
        history.push((mid, z));
        if z <= cap {
            hi = (mid, z, res);
        } else {
            lo = (mid, z, res);
        }
    }

    if let Some((beta_star, z_t, solution)) = landed(&lo, &hi) {
        return Ok(BudgetResult {
            beta_star,
            z_t,
            status: BudgetStatus::Met,
            solution,
            bracket_history: history,
        });
    }
    let gap = (hi.1 - cap).abs().min((lo.1 - cap).abs());
    Err(Error::BracketFailure {
        reason: format!("bisection exhausted with |z(T) - cap| = {gap:.3e} > {tol:.3e}"),
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objective::{projector_from_states, Objective};
    use crate::operator::{pauli_x, BilinearSystem, HermitianOperator};
    use crate::state::StateVector;

    fn pulse_area_problem(bounds: (f64, f64), beta: f64) -> ControlProblem {
        let sys = BilinearSystem::new(HermitianOperator::zero(2), pauli_x(), bounds).unwrap();
        let l = projector_from_states(2, &[StateVector::basis_state(2, 1)]).unwrap();
        ControlProblem::new(
            sys,
            Objective::new(l, beta).unwrap(),
            StateVector::basis_state(2, 0),
        )
        .unwrap()
    }

    #[test]
    fn generous_cap_is_inactive_and_j_equals_i() {
        // cap >= b^2 T exceeds any reachable energy
        let problem = pulse_area_problem((0.0, 1.0), 0.0);
        let ctrl = ControlProgram::constant(std::f64::consts::PI, 10, 0.5).unwrap();
        let cap = std::f64::consts::PI + 1.0;
        let res = optimize_with_cap(
            &problem,
            cap,
            &ctrl,
            &SolveConfig::default(),
            &BudgetConfig::default(),
        )
        .unwrap();
        assert_eq!(res.status, BudgetStatus::CapInactive);
        assert_eq!(res.beta_star, 0.0);
        // with beta* = 0 the reported J is exactly the unconstrained I
        let last = res.solution.final_record();
        assert_eq!(last.total, last.terminal);
    }

    #[test]
    fn binding_cap_lands_on_the_budget() {
        let problem = pulse_area_problem((0.0, 1.0), 0.0);
        let ctrl = ControlProgram::constant(std::f64::consts::PI, 10, 0.5).unwrap();
        // unconstrained optimum spends z = pi/2; halve it
        let cfg = SolveConfig {
            max_iterations: 120,
            ..Default::default()
        };
        let res0 = optimize(&problem, &ctrl, &cfg).unwrap();
        let cap = 0.5 * res0.final_record().energy;
        let res = optimize_with_cap(&problem, cap, &ctrl, &cfg, &BudgetConfig::default()).unwrap();
        assert_eq!(res.status, BudgetStatus::Met);
        assert!(
            (res.z_t - cap).abs() <= 1e-3 * cap,
            "landed z = {}, cap = {}",
            res.z_t,
            cap
        );
        assert!(res.beta_star > 0.0);
        // bracket history starts at beta = 0 and includes the landing
        assert_eq!(res.bracket_history[0].0, 0.0);
    }

    #[test]
    fn tiny_cap_drives_the_control_toward_zero() {
        let problem = pulse_area_problem((0.0, 1.0), 0.0);
        let ctrl = ControlProgram::constant(std::f64::consts::PI, 10, 0.5).unwrap();
        let cfg = SolveConfig {
            max_iterations: 120,
            ..Default::default()
        };
        let res0 = optimize(&problem, &ctrl, &cfg).unwrap();
        let cap = 0.05 * res0.final_record().energy;
        let res = optimize_with_cap(&problem, cap, &ctrl, &cfg, &BudgetConfig::default()).unwrap();
        assert!((res.z_t - cap).abs() <= 1e-3 * cap);
        let max_u = res
            .solution
            .control
            .values()
            .iter()
            .fold(0.0f64, |m, &u| m.max(u.abs()));
        assert!(max_u < 0.5, "controls did not shrink: max |u| = {max_u}");
    }

    #[test]
    fn exhausted_ladder_reports_a_bracket_failure_with_history() {
        // one rung cannot reach a cap that needs beta ~ 1
        let problem = pulse_area_problem((0.0, 1.0), 0.0);
        let ctrl = ControlProgram::constant(std::f64::consts::PI, 10, 0.5).unwrap();
        let cfg = SolveConfig {
            max_iterations: 60,
            ..Default::default()
        };
        let budget = BudgetConfig {
            max_ladder_rungs: 1,
            ..Default::default()
        };
        let z0 = optimize(&problem, &ctrl, &cfg)
            .unwrap()
            .final_record()
            .energy;
        match optimize_with_cap(&problem, 0.5 * z0, &ctrl, &cfg, &budget) {
            Err(Error::BracketFailure { history, .. }) => {
                assert_eq!(history.len(), 2, "beta = 0 plus one rung");
                assert_eq!(history[0].0, 0.0);
            }
            other => panic!("expected BracketFailure, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_cap_rejected() {
        let problem = pulse_area_problem((0.0, 1.0), 0.0);
        let ctrl = ControlProgram::constant(1.0, 4, 0.5).unwrap();
        assert!(matches!(
            optimize_with_cap(
                &problem,
                0.0,
                &ctrl,
                &SolveConfig::default(),
                &BudgetConfig::default()
            ),
            Err(Error::BadCap { .. })
        ));
    }
}
