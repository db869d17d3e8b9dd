//! Run orchestration: iterate an improver to convergence, collect
//! per-iteration records, and compare the two methods on a shared start.

use crate::dynamics::ControlProgram;
use crate::error::{Error, Result};
use crate::gradient::{gradient_improve_step, LineSearchConfig};
use crate::krotov::{krotov_improve_step_traced, KrotovConfig};
use crate::problem::ControlProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Krotov,
    Gradient,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Krotov => "krotov",
            Method::Gradient => "gradient",
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveConfig {
    pub method: Method,
    pub max_iterations: usize,
    /// Stop once |ΔJ| per accepted step falls below this.
    pub j_tol: f64,
    /// Gradient runs stop cleanly (rather than erroring) when the line
    /// search stalls with the gradient norm at or below this.
    pub grad_tol: f64,
    pub krotov: KrotovConfig,
    pub line_search: LineSearchConfig,
    /// Retain every iterate's control values (bounded by the caller's flag;
    /// off by default to bound memory and disk).
    pub trace_controls: bool,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            method: Method::Krotov,
            max_iterations: 200,
            j_tol: 1e-10,
            grad_tol: 1e-8,
            krotov: KrotovConfig::default(),
            line_search: LineSearchConfig::default(),
            trace_controls: false,
        }
    }
}

/// One convergence-table row.
#[derive(Debug, Clone, Copy)]
pub struct IterationRecord {
    pub iter: usize,
    /// Terminal cost I.
    pub terminal: f64,
    /// Total cost J.
    pub total: f64,
    /// z(T) = ∫u² dt.
    pub energy: f64,
    pub norm_drift: f64,
    /// Krotov: fraction of intervals on the singular branch; gradient:
    /// fraction of nodes under the singular threshold; 0 for the initial row.
    pub singular_fraction: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    MaxIterations,
    /// |ΔJ| fell below j_tol.
    CostStalled,
    /// Gradient line search found no descent with a vanishing gradient.
    Stationary,
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub control: ControlProgram,
    pub records: Vec<IterationRecord>,
    pub stop: StopReason,
    /// Krotov steps that needed θ < 1.
    pub damping_events: usize,
    /// Controls per iterate when tracing was requested (index 0 = initial).
    pub control_trace: Option<Vec<Vec<f64>>>,
}

impl SolveResult {
    pub fn final_record(&self) -> &IterationRecord {
        self.records.last().expect("records include iteration 0")
    }

    pub fn initial_record(&self) -> &IterationRecord {
        &self.records[0]
    }
}

/// Iterate the configured improver until `max_iterations`, |ΔJ| < j_tol, or
/// (gradient only) a stationary stall.
pub fn optimize(
    problem: &ControlProblem,
    ctrl0: &ControlProgram,
    cfg: &SolveConfig,
) -> Result<SolveResult> {
    ctrl0.check_feasible(problem.system())?;
    let eval0 = problem.evaluate(ctrl0)?;
    let mut records = vec![IterationRecord {
        iter: 0,
        terminal: eval0.terminal,
        total: eval0.total,
        energy: eval0.energy,
        norm_drift: eval0.trajectory.max_norm_drift(),
        singular_fraction: 0.0,
    }];
    let mut trace = cfg.trace_controls.then(|| vec![ctrl0.values().to_vec()]);
    let mut ctrl = ctrl0.clone();
    let mut damping_events = 0usize;

    for iter in 1..=cfg.max_iterations {
        let (next, record) = match cfg.method {
            Method::Krotov => {
                let (next, report, trace) =
                    krotov_improve_step_traced(problem, &ctrl, &cfg.krotov)?;
                if report.damping_used < 1.0 {
                    damping_events += 1;
                }
                (
                    next,
                    IterationRecord {
                        iter,
                        terminal: report.i_after,
                        total: report.j_after,
                        energy: report.energy_after,
                        norm_drift: trace.max_norm_drift,
                        singular_fraction: report.singular_fraction,
                    },
                )
            }
            Method::Gradient => match gradient_improve_step(problem, &ctrl, &cfg.line_search) {
                Ok((next, report)) => (
                    next,
                    IterationRecord {
                        iter,
                        terminal: report.i_after,
                        total: report.j_after,
                        energy: report.energy_after,
                        norm_drift: report.max_norm_drift,
                        singular_fraction: report.singular_fraction,
                    },
                ),
                Err(Error::NoImprovement { gradient_norm, .. })
                    if gradient_norm <= cfg.grad_tol =>
                {
                    return Ok(SolveResult {
                        control: ctrl,
                        records,
                        stop: StopReason::Stationary,
                        damping_events,
                        control_trace: trace,
                    });
                }
                Err(e) => return Err(e),
            },
        };

        let delta = (record.total - records.last().expect("nonempty").total).abs();
        records.push(record);
        if let Some(t) = trace.as_mut() {
            t.push(next.values().to_vec());
        }
        ctrl = next;

        if delta < cfg.j_tol {
            return Ok(SolveResult {
                control: ctrl,
                records,
                stop: StopReason::CostStalled,
                damping_events,
                control_trace: trace,
            });
        }
    }

    Ok(SolveResult {
        control: ctrl,
        records,
        stop: StopReason::MaxIterations,
        damping_events,
        control_trace: trace,
    })
}

/// First iteration index at which the run has realized `fraction` of its
/// total J-improvement, or `None` when it never improved.
pub fn iterations_to_fraction(records: &[IterationRecord], fraction: f64) -> Option<usize> {
    let j0 = records.first()?.total;
    let j_final = records.last()?.total;
    let gain = j0 - j_final;
    if !(gain > 0.0) {
        return None;
    }
    let target = j0 - fraction * gain;
    records.iter().find(|r| r.total <= target).map(|r| r.iter)
}

#[derive(Debug, Clone)]
pub struct MethodRun {
    pub method: Method,
    pub result: SolveResult,
    pub iterations_to_90pct: Option<usize>,
}

/// Side-by-side run of both methods from the same initial control. The two
/// runs share only immutable inputs, so they execute concurrently.
#[derive(Debug, Clone)]
pub struct MethodComparison {
    pub krotov: MethodRun,
    pub gradient: MethodRun,
}

impl MethodComparison {
    pub fn runs(&self) -> [&MethodRun; 2] {
        [&self.krotov, &self.gradient]
    }

    /// The comparison table: one CSV row per method.
    pub fn table_csv(&self) -> String {
        let mut out = String::from("method,iterations,final_I,final_J,initial_J,iters_to_90pct\n");
        for run in self.runs() {
            let last = run.result.final_record();
            let first = run.result.initial_record();
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                run.method.name(),
                last.iter,
                last.terminal,
                last.total,
                first.total,
                run.iterations_to_90pct
                    .map(|i| i.to_string())
                    .unwrap_or_else(|| "-".into()),
            ));
        }
        out
    }
}

pub fn compare_methods(
    problem: &ControlProblem,
    ctrl0: &ControlProgram,
    base: &SolveConfig,
) -> Result<MethodComparison> {
    let run = |method: Method| -> Result<MethodRun> {
        let cfg = SolveConfig {
            method,
            ..base.clone()
        };
        let result = optimize(problem, ctrl0, &cfg)?;
        let iterations_to_90pct = iterations_to_fraction(&result.records, 0.9);
        Ok(MethodRun {
            method,
            result,
            iterations_to_90pct,
        })
    };

    let (krotov, gradient) = std::thread::scope(|scope| {
        let k = scope.spawn(|| run(Method::Krotov));
        let g = scope.spawn(|| run(Method::Gradient));
        (
            k.join().expect("krotov run"),
            g.join().expect("gradient run"),
        )
    });

    Ok(MethodComparison {
        krotov: krotov?,
        gradient: gradient?,
    })
}
