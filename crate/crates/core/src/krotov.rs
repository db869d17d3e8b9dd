//! One global-method improvement step: a backward costate sweep under the old
//! control followed by a forward sweep applying the pointwise argmax update,
//! with explicit singular-regime synthesis and a damping fallback that
//! restores monotonicity when the explicit discretization overshoots.
//!
//! The improving function is fixed to the linear form Re⟨χ(t), Ψ⟩, which
//! makes R's state dependence vanish along the old trajectory; the update at
//! each interval maximizes the u-dependent part K¹·u − β·u² over the box.

use crate::dynamics::{k1_value, propagate_backward, ControlProgram, NORM_DRIFT_TOL};
use crate::error::{Error, Result};
use crate::operator::{commutator, BilinearSystem, CMatrix};
use crate::problem::ControlProblem;
use crate::state::StateVector;

/// Which branch the forward sweep took on an interval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepBranch {
    /// β = 0, K¹ > k1_tol: control pinned to the upper bound.
    High,
    /// β = 0, K¹ < −k1_tol: control pinned to the lower bound.
    Low,
    /// β = 0, |K¹| ≤ k1_tol: singular synthesis (or a held old value when the
    /// denominator degenerates).
    Singular,
    /// β > 0: the clipped stationary point K¹/(2β).
    Penalized,
}

/// Per-node / per-interval record of the accepted forward sweep.
#[derive(Debug, Clone)]
pub struct SweepTrace {
    /// K¹ at nodes 0..=N, each evaluated with the stored costate and the new
    /// state at that node.
    pub k1: Vec<f64>,
    /// Branch taken on intervals 0..N.
    pub branches: Vec<SweepBranch>,
    /// Max |‖Ψ‖² − 1| along the new trajectory.
    pub max_norm_drift: f64,
}

impl SweepTrace {
    /// Maximal runs of consecutive singular intervals, as (start, length).
    pub fn singular_runs(&self) -> Vec<(usize, usize)> {
        let mut runs = Vec::new();
        let mut start = None;
        for (k, b) in self.branches.iter().enumerate() {
            match (b, start) {
                (SweepBranch::Singular, None) => start = Some(k),
                (SweepBranch::Singular, Some(_)) => {}
                (_, Some(s)) => {
                    runs.push((s, k - s));
                    start = None;
                }
                _ => {}
            }
        }
        if let Some(s) = start {
            runs.push((s, self.branches.len() - s));
        }
        runs
    }
}

/// How to leave (or stay on) a singular arc when alternatives exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SingularPolicy {
    /// Hold u_sing while it lies in [a, b]; on saturation take the bound on
    /// the saturated side.
    #[default]
    StayUntilSaturation,
    /// Prefer dropping to the lower bound whenever admissible.
    AlwaysLeaveLow,
    /// Prefer jumping to the upper bound whenever admissible.
    AlwaysLeaveHigh,
}

#[derive(Debug, Clone, Copy)]
pub struct SingularConfig {
    /// Threshold for |K¹| ≈ 0. `None` resolves to the scale-aware default
    /// 1e-8·‖H¹‖·‖L‖.
    pub k1_tol: Option<f64>,
    /// Guard for the singular denominator Re⟨χ, (H¹)²Ψ⟩.
    pub denom_tol: f64,
    pub policy: SingularPolicy,
}

impl Default for SingularConfig {
    fn default() -> Self {
        Self {
            k1_tol: None,
            denom_tol: 1e-12,
            policy: SingularPolicy::default(),
        }
    }
}

impl SingularConfig {
    /// The effective |K¹| threshold for a given problem.
    pub fn resolved_k1_tol(&self, problem: &ControlProblem) -> f64 {
        match self.k1_tol {
            Some(t) => t,
            None => {
                let scale = problem.system().coupling().spectral_norm()
                    * problem.objective().terminal_op().spectral_norm();
                (1e-8 * scale).max(1e-18)
            }
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrotovConfig {
    pub singular: SingularConfig,
    /// Accepted per-step cost increase (discretization slack).
    pub mono_tol: f64,
    /// Damped re-sweeps (θ halving) before giving up.
    pub damp_max: u32,
}

impl Default for KrotovConfig {
    fn default() -> Self {
        Self {
            singular: SingularConfig::default(),
            mono_tol: 1e-10,
            damp_max: 20,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct KrotovStepReport {
    pub j_before: f64,
    pub j_after: f64,
    pub i_after: f64,
    pub energy_after: f64,
    /// Fraction of intervals that took the singular branch.
    pub singular_fraction: f64,
    pub monotonicity_ok: bool,
    /// Accepted damping factor θ (1.0 when the raw sweep was accepted).
    pub damping_used: f64,
}

/// The pointwise update: for β > 0 the clipped stationary point of
/// K¹·u − β·u²; for β = 0 the bang trichotomy with `singular_value` filling
/// the |K¹| ≤ k1_tol gap.
pub fn krotov_update_rule(
    k1: f64,
    beta: f64,
    bounds: (f64, f64),
    singular_value: Option<f64>,
    k1_tol: f64,
) -> Result<f64> {
    let (a, b) = bounds;
    if beta > 0.0 {
        return Ok((k1 / (2.0 * beta)).clamp(a, b));
    }
    if k1 > k1_tol {
        Ok(b)
    } else if k1 < -k1_tol {
        Ok(a)
    } else {
        singular_value
            .map(|u| u.clamp(a, b))
            .ok_or(Error::SingularUnavailable)
    }
}

fn re_inner(chi: &StateVector, m: &CMatrix, psi: &StateVector) -> f64 {
    chi.amplitudes().dotc(&(m * psi.amplitudes())).re
}

/// The control value holding dK¹/dt = 0 along the new trajectory:
/// u_sing = u_old + Re⟨χ, [H⁰, H¹]Ψ⟩ / Re⟨χ, (H¹)²Ψ⟩.
///
/// Returns `None` when the denominator is below `denom_tol` in magnitude.
pub fn singular_control(
    chi: &StateVector,
    psi: &StateVector,
    sys: &BilinearSystem,
    u_old: f64,
    denom_tol: f64,
) -> Option<f64> {
    let comm = commutator(sys.drift(), sys.coupling()).expect("system dims agree");
    let h1 = sys.coupling().matrix();
    singular_control_cached(chi, psi, &comm, &(h1 * h1), u_old, denom_tol)
}

fn singular_control_cached(
    chi: &StateVector,
    psi: &StateVector,
    comm: &CMatrix,
    h1_sq: &CMatrix,
    u_old: f64,
    denom_tol: f64,
) -> Option<f64> {
    let den = re_inner(chi, h1_sq, psi);
    if den.abs() < denom_tol {
        return None;
    }
    Some(u_old + re_inner(chi, comm, psi) / den)
}

/// Admissible continuations at a singular point per the branch alternative:
/// leaving toward a bound is allowed when dK¹/dt under that bound pushes K¹
/// into the sign consistent with staying there; staying requires
/// u_sing ∈ [a, b].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularBranches {
    pub stay: bool,
    pub leave_low: bool,
    pub leave_high: bool,
    pub u_sing: Option<f64>,
}

pub fn singular_branches(
    chi: &StateVector,
    psi: &StateVector,
    sys: &BilinearSystem,
    u_old: f64,
    denom_tol: f64,
) -> SingularBranches {
    let comm = commutator(sys.drift(), sys.coupling()).expect("system dims agree");
    let h1 = sys.coupling().matrix();
    singular_branches_cached(chi, psi, &comm, &(h1 * h1), sys.bounds(), u_old, denom_tol)
}

fn singular_branches_cached(
    chi: &StateVector,
    psi: &StateVector,
    comm: &CMatrix,
    h1_sq: &CMatrix,
    bounds: (f64, f64),
    u_old: f64,
    denom_tol: f64,
) -> SingularBranches {
    let (a, b) = bounds;
    let num = re_inner(chi, comm, psi);
    let den = re_inner(chi, h1_sq, psi);
    // dK1/dt under a candidate control u
    let ddt = |u: f64| 2.0 * num + 2.0 * (u_old - u) * den;
    let u_sing = if den.abs() < denom_tol {
        None
    } else {
        Some(u_old + num / den)
    };
    SingularBranches {
        stay: u_sing.map(|u| a <= u && u <= b).unwrap_or(false),
        leave_low: ddt(a) < 0.0,
        leave_high: ddt(b) > 0.0,
        u_sing,
    }
}

fn select_singular(
    branches: SingularBranches,
    bounds: (f64, f64),
    u_old: f64,
    policy: SingularPolicy,
) -> f64 {
    let (a, b) = bounds;
    let Some(u_sing) = branches.u_sing else {
        // degenerate denominator: the surrogate is flat, hold the old value
        return u_old;
    };
    match policy {
        // saturation takes the bound on the saturated side, which is the clip
        SingularPolicy::StayUntilSaturation => u_sing.clamp(a, b),
        SingularPolicy::AlwaysLeaveLow => {
            if branches.leave_low {
                a
            } else if branches.stay {
                u_sing
            } else if branches.leave_high {
                b
            } else {
                u_sing.clamp(a, b)
            }
        }
        SingularPolicy::AlwaysLeaveHigh => {
            if branches.leave_high {
                b
            } else if branches.stay {
                u_sing
            } else if branches.leave_low {
                a
            } else {
                u_sing.clamp(a, b)
            }
        }
    }
}

/// Non-fatal diagnostic for the terminal segment: a vanishing K¹(T) means the
/// trajectory piece adjoining t = T is singular and later improvements may
/// stall there.
#[derive(Debug, Clone, Copy)]
pub struct TerminalSingularityCheck {
    pub k1_terminal: f64,
    pub warning: bool,
}

pub fn check_terminal_nonsingular(
    chi_t: &StateVector,
    psi_t: &StateVector,
    sys: &BilinearSystem,
    k1_tol: f64,
) -> TerminalSingularityCheck {
    let k1_terminal = k1_value(chi_t, psi_t, sys.coupling());
    TerminalSingularityCheck {
        k1_terminal,
        warning: k1_terminal.abs() < k1_tol,
    }
}

struct SweepOutcome {
    control: ControlProgram,
    trace: SweepTrace,
    i_after: f64,
    j_after: f64,
    energy_after: f64,
    singular_fraction: f64,
}

#[allow(clippy::too_many_arguments)]
fn forward_sweep(
    problem: &ControlProblem,
    ctrl_old: &ControlProgram,
    adj: &[StateVector],
    theta: f64,
    k1_tol: f64,
    cfg: &SingularConfig,
    comm: &CMatrix,
    h1_sq: &CMatrix,
) -> Result<SweepOutcome> {
    let sys = problem.system();
    let bounds = sys.bounds();
    let (a, b) = bounds;
    let beta = problem.objective().beta();
    let dt = ctrl_old.dt();
    let n = ctrl_old.n_steps();

    let mut psi = problem.initial_state().clone();
    let mut values = Vec::with_capacity(n);
    let mut k1_nodes = Vec::with_capacity(n + 1);
    let mut branches = Vec::with_capacity(n);
    let mut singular_count = 0usize;
    let mut drift = (psi.norm_squared() - 1.0).abs();

    for (k, chi) in adj.iter().enumerate().take(n) {
        let k1 = k1_value(chi, &psi, sys.coupling());
        k1_nodes.push(k1);
        let u_old = ctrl_old.value(k);

        let (branch, raw) = if beta > 0.0 {
            (SweepBranch::Penalized, (k1 / (2.0 * beta)).clamp(a, b))
        } else if k1 > k1_tol {
            (SweepBranch::High, b)
        } else if k1 < -k1_tol {
            (SweepBranch::Low, a)
        } else {
            let br = singular_branches_cached(chi, &psi, comm, h1_sq, bounds, u_old, cfg.denom_tol);
            (
                SweepBranch::Singular,
                select_singular(br, bounds, u_old, cfg.policy),
            )
        };
        if branch == SweepBranch::Singular {
            singular_count += 1;
        }
        branches.push(branch);

        let u_new = if theta == 1.0 {
            raw
        } else {
            (u_old + theta * (raw - u_old)).clamp(a, b)
        };
        values.push(u_new);

        let prop = sys.step_propagator(u_new, dt)?;
        psi = StateVector::new(&prop * psi.amplitudes());
        drift = drift.max((psi.norm_squared() - 1.0).abs());
    }

    k1_nodes.push(k1_value(&adj[n], &psi, sys.coupling()));
    if drift > NORM_DRIFT_TOL {
        return Err(Error::NormDrift {
            drift,
            tol: NORM_DRIFT_TOL,
        });
    }

    let control = ctrl_old.with_values(values)?;
    let i_after = crate::objective::terminal_cost(problem.objective().terminal_op(), &psi);
    let energy_after = crate::dynamics::energy_integral(&control);
    Ok(SweepOutcome {
        j_after: i_after + beta * energy_after,
        control,
        trace: SweepTrace {
            k1: k1_nodes,
            branches,
            max_norm_drift: drift,
        },
        i_after,
        energy_after,
        singular_fraction: singular_count as f64 / n as f64,
    })
}

/// One global improvement step. See [`krotov_improve_step_traced`] for the
/// variant that also returns the per-node sweep trace.
pub fn krotov_improve_step(
    problem: &ControlProblem,
    ctrl_old: &ControlProgram,
    cfg: &KrotovConfig,
) -> Result<(ControlProgram, KrotovStepReport)> {
    krotov_improve_step_traced(problem, ctrl_old, cfg).map(|(c, r, _)| (c, r))
}

/// One global improvement step:
///
/// 1. forward-propagate under the old control, set χ(T) = L·Ψ₀(T) and store
///    the full backward costate sweep;
/// 2. forward sweep: at each interval evaluate K¹ from the stored costate and
///    the *new* state at the interval's left node, apply
///    [`krotov_update_rule`] (with singular synthesis when triggered), and
///    propagate across the interval;
/// 3. if the cost rose beyond `mono_tol`, re-sweep damped toward the old
///    control with θ ∈ {1/2, 1/4, …} until monotone or `damp_max` trials are
///    exhausted.
pub fn krotov_improve_step_traced(
    problem: &ControlProblem,
    ctrl_old: &ControlProgram,
    cfg: &KrotovConfig,
) -> Result<(ControlProgram, KrotovStepReport, SweepTrace)> {
    problem.objective().require_psd()?;
    ctrl_old.check_feasible(problem.system())?;

    let eval_old = problem.evaluate(ctrl_old)?;
    let j_before = eval_old.total;
    let sys = problem.system();
    let chi_t = StateVector::new(
        problem
            .objective()
            .terminal_op()
            .apply(eval_old.trajectory.final_state().amplitudes()),
    );
    let adj = propagate_backward(sys, ctrl_old, chi_t)?;

    let k1_tol = cfg.singular.resolved_k1_tol(problem);
    let comm = commutator(sys.drift(), sys.coupling())?;
    let h1 = sys.coupling().matrix();
    let h1_sq = h1 * h1;

    let mut theta = 1.0;
    let mut last_j = f64::NAN;
    for _trial in 0..=cfg.damp_max {
        let sweep = forward_sweep(
            problem,
            ctrl_old,
            adj.nodes(),
            theta,
            k1_tol,
            &cfg.singular,
            &comm,
            &h1_sq,
        )?;
        if sweep.j_after <= j_before + cfg.mono_tol {
            let report = KrotovStepReport {
                j_before,
                j_after: sweep.j_after,
                i_after: sweep.i_after,
                energy_after: sweep.energy_after,
                singular_fraction: sweep.singular_fraction,
                monotonicity_ok: true,
                damping_used: theta,
            };
            return Ok((sweep.control, report, sweep.trace));
        }
        last_j = sweep.j_after;
        theta *= 0.5;
    }

    Err(Error::MonotonicityFailure {
        damp_trials: cfg.damp_max,
        j_before,
        j_after: last_j,
    })
}
