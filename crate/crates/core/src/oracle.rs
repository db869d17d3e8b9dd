//! Independent ground-truth generators: exhaustive bang-bang enumeration,
//! finite-difference gradients, and the analytic pulse-area solution.
//!
//! These arbitrate every sign convention in the improvement methods. The
//! enumeration deliberately shares the exact-step propagator with the main
//! code (it tests method logic, not the integrator); the propagator itself is
//! cross-checked against the closed-form two-level rotation elsewhere.

use crate::dynamics::ControlProgram;
use crate::error::{Error, Result};
use crate::problem::ControlProblem;

/// Hard ceiling on |levels|^N.
pub const ENUMERATION_BUDGET: u128 = 10_000_000;

/// Costs within this margin of the minimum count as ties.
pub const TIE_TOL: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct BruteForceResult {
    pub best_control: ControlProgram,
    pub best_cost: f64,
    /// Number of sequences within [`TIE_TOL`] of the optimum.
    pub optima_count: usize,
    pub evaluated: u128,
    /// Full (sequence, J) table when requested.
    pub table: Option<Vec<(Vec<f64>, f64)>>,
}

/// Exhaustively enumerate piecewise-constant controls drawing each interval
/// value from `levels`, in lexicographic order over ascending levels, and
/// return the minimizer of J (ties keep the lexicographically smallest
/// sequence).
pub fn brute_force_bang_bang(
    problem: &ControlProblem,
    horizon: f64,
    n_steps: usize,
    levels: &[f64],
    collect_table: bool,
) -> Result<BruteForceResult> {
    if levels.is_empty() || n_steps == 0 {
        return Err(Error::BadGrid { horizon, n_steps });
    }
    let mut levels = levels.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();

    let count = (levels.len() as u128)
        .checked_pow(n_steps as u32)
        .unwrap_or(u128::MAX);
    if count > ENUMERATION_BUDGET {
        return Err(Error::BudgetExceeded {
            count,
            budget: ENUMERATION_BUDGET,
        });
    }

    let dt = horizon / n_steps as f64;
    let sys = problem.system();
    let propagators: Vec<_> = levels
        .iter()
        .map(|&u| sys.step_propagator(u, dt))
        .collect::<Result<_>>()?;
    let beta = problem.objective().beta();
    let l = problem.objective().terminal_op();

    // odometer over level indices, least-significant digit last so the
    // sequence order is lexicographic
    let mut digits = vec![0usize; n_steps];
    let mut best_cost = f64::INFINITY;
    let mut best_digits = digits.clone();
    let mut optima_count = 0usize;
    let mut evaluated = 0u128;
    let mut table = collect_table.then(Vec::new);

    loop {
        let mut psi = problem.initial_state().amplitudes().clone();
        let mut energy = 0.0;
        for &d in &digits {
            psi = &propagators[d] * psi;
            energy += levels[d] * levels[d] * dt;
        }
        let psi = crate::state::StateVector::new(psi);
        let cost = crate::objective::terminal_cost(l, &psi) + beta * energy;
        evaluated += 1;

        if let Some(t) = table.as_mut() {
            t.push((digits.iter().map(|&d| levels[d]).collect(), cost));
        }

        if cost < best_cost - TIE_TOL {
            best_cost = cost;
            best_digits = digits.clone();
            optima_count = 1;
        } else if cost <= best_cost + TIE_TOL {
            optima_count += 1;
            if cost < best_cost {
                // tighten the optimum without resetting the tie count
                best_cost = cost;
            }
        }

        // advance the odometer
        let mut pos = n_steps;
        loop {
            if pos == 0 {
                let values = best_digits.iter().map(|&d| levels[d]).collect();
                return Ok(BruteForceResult {
                    best_control: ControlProgram::new(horizon, values)?,
                    best_cost,
                    optima_count,
                    evaluated,
                    table,
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < levels.len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Central difference (J(u_k + h) − J(u_k − h)) / (2h) with fresh full
/// propagations on both sides. Approximates the discrete gradient ∂J/∂u_k
/// (which carries a Δt factor).
pub fn fd_gradient(
    problem: &ControlProblem,
    ctrl: &ControlProgram,
    k: usize,
    h: f64,
) -> Result<f64> {
    let (lo, hi) = problem.system().bounds();
    let u = ctrl.value(k);
    if u + h > hi || u - h < lo {
        return Err(Error::StepOutOfBounds { index: k, h });
    }
    let mut plus = ctrl.values().to_vec();
    plus[k] = u + h;
    let mut minus = ctrl.values().to_vec();
    minus[k] = u - h;
    let j_plus = problem.evaluate(&ctrl.with_values(plus)?)?.total;
    let j_minus = problem.evaluate(&ctrl.with_values(minus)?)?.total;
    Ok((j_plus - j_minus) / (2.0 * h))
}

/// Analytic fixture for the drift-free two-level transfer problem
/// (H⁰ = 0, H¹ = σ_x, Ψ(0) = e₀, L = |e₁⟩⟨e₁|): the transfer probability is
/// sin²(∫u dt), so the optimal pulse area is π/2 when reachable.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseAreaSolution {
    /// The area π/2 that realizes full transfer.
    pub target_area: f64,
    /// Whether u_max·T ≥ π/2.
    pub reachable: bool,
    /// −1 when reachable, otherwise −sin²(u_max·T).
    pub optimal_cost: f64,
}

pub fn pulse_area_solution(u_max: f64, horizon: f64) -> PulseAreaSolution {
    assert!(
        u_max > 0.0 && horizon > 0.0,
        "pulse-area fixture needs u_max > 0, T > 0"
    );
    let max_area = u_max * horizon;
    let target_area = std::f64::consts::FRAC_PI_2;
    let reachable = max_area >= target_area;
    let optimal_cost = if reachable {
        -1.0
    } else {
        -max_area.sin().powi(2)
    };
    PulseAreaSolution {
        target_area,
        reachable,
        optimal_cost,
    }
}
