//! Subcommand implementations: optimize, oracle, compare, check.

use std::path::{Path, PathBuf};

use serde::Serialize;

use qoc_core::budget::{optimize_with_cap, BudgetConfig};
use qoc_core::dynamics::propagate_backward;
use qoc_core::krotov::check_terminal_nonsingular;
use qoc_core::objective::terminal_cost;
use qoc_core::oracle::brute_force_bang_bang;
use qoc_core::solve::{compare_methods, optimize, Method, SolveConfig, SolveResult};
use qoc_core::{Error, StateVector};

use crate::problem_file::{parse_problem, Bundle, MethodSpec};
use crate::report::{
    build_report, control_trace_csv, convergence_csv, write_file, write_json, Header,
};
use crate::CliError;

pub struct RunOutput {
    pub artifacts: Vec<PathBuf>,
}

/// One method run, honoring the energy cap (budget loop) and the optional
/// grid-refinement retry on a monotonicity failure.
fn run_one(
    bundle: &Bundle,
    method: Method,
    trace_controls: bool,
    refine_on_failure: bool,
) -> Result<(SolveResult, Option<f64>, Option<f64>), CliError> {
    let cfg = SolveConfig {
        method,
        trace_controls,
        ..bundle.solve.clone()
    };

    // the gradient method tolerates indefinite L, but flag it: sign-indefinite
    // terminal forms void the global method's improvement guarantee
    if method == Method::Gradient {
        if let Err(e) = bundle.problem.objective().require_psd() {
            eprintln!("warning: {e}; proceeding with the gradient method");
        }
    }

    if let Some(cap) = bundle.energy_cap {
        let res = optimize_with_cap(
            &bundle.problem,
            cap,
            &bundle.initial_control,
            &cfg,
            &BudgetConfig::default(),
        )?;
        return Ok((res.solution, Some(res.beta_star), Some(res.z_t)));
    }

    let mut ctrl = bundle.initial_control.clone();
    let mut refinements = 0;
    loop {
        match optimize(&bundle.problem, &ctrl, &cfg) {
            Ok(res) => return Ok((res, None, None)),
            Err(Error::MonotonicityFailure { .. }) if refine_on_failure && refinements < 3 => {
                refinements += 1;
                ctrl = ctrl.refined(2);
                eprintln!(
                    "monotonicity lost; retrying on a refined grid (N = {})",
                    ctrl.n_steps()
                );
            }
            Err(e) => return Err(e.into()),
        }
    }
}

pub fn cmd_optimize(
    path: &Path,
    out_dir: &Path,
    trace_controls: bool,
    refine_on_failure: bool,
) -> Result<RunOutput, CliError> {
    let bundle = parse_problem(path)?;
    let mut artifacts = Vec::new();

    let methods: &[Method] = match bundle.method {
        MethodSpec::Krotov => &[Method::Krotov],
        MethodSpec::Gradient => &[Method::Gradient],
        MethodSpec::Both => &[Method::Krotov, Method::Gradient],
    };
    let suffix = |name: &str, m: Method| -> String {
        if methods.len() == 1 {
            name.to_string()
        } else {
            let (stem, ext) = name.rsplit_once('.').unwrap();
            format!("{stem}_{}.{ext}", m.name())
        }
    };

    let mut results = Vec::new();
    for &m in methods {
        let (result, beta_star, z_t) = run_one(&bundle, m, trace_controls, refine_on_failure)?;
        let report = build_report(&bundle.file, m.name(), bundle.seed, &result, beta_star, z_t);
        artifacts.push(write_json(out_dir, &suffix("report.json", m), &report)?);
        artifacts.push(write_file(
            out_dir,
            &suffix("convergence.csv", m),
            &convergence_csv(&result.records),
        )?);
        if let Some(trace) = &result.control_trace {
            artifacts.push(write_file(
                out_dir,
                &suffix("controls.csv", m),
                &control_trace_csv(trace),
            )?);
        }
        let last = result.final_record();
        println!(
            "{}: {} iterations, I = {}, J = {}, z(T) = {}{}",
            m.name(),
            last.iter,
            last.terminal,
            last.total,
            last.energy,
            beta_star
                .map(|b| format!(", beta* = {b}"))
                .unwrap_or_default()
        );
        results.push((m, result));
    }

    if results.len() == 2 {
        let to_90 = |r: &SolveResult| qoc_core::solve::iterations_to_fraction(&r.records, 0.9);
        let mut csv = String::from("method,iterations,final_I,final_J,initial_J,iters_to_90pct\n");
        for (m, r) in &results {
            let last = r.final_record();
            csv.push_str(&format!(
                "{},{},{},{},{},{}\n",
                m.name(),
                last.iter,
                last.terminal,
                last.total,
                r.initial_record().total,
                to_90(r)
                    .map(|i| i.to_string())
                    .unwrap_or_else(|| "-".into())
            ));
        }
        artifacts.push(write_file(out_dir, "comparison.csv", &csv)?);
        print!("{csv}");
    }

    Ok(RunOutput { artifacts })
}

pub fn cmd_compare(path: &Path, out_dir: &Path) -> Result<RunOutput, CliError> {
    let bundle = parse_problem(path)?;
    if bundle.energy_cap.is_some() {
        eprintln!("note: compare benchmarks the penalized objective; the energy cap is ignored");
    }
    let cmp = compare_methods(&bundle.problem, &bundle.initial_control, &bundle.solve)?;
    let mut artifacts = Vec::new();
    for run in cmp.runs() {
        let report = build_report(
            &bundle.file,
            run.method.name(),
            bundle.seed,
            &run.result,
            None,
            None,
        );
        artifacts.push(write_json(
            out_dir,
            &format!("report_{}.json", run.method.name()),
            &report,
        )?);
        artifacts.push(write_file(
            out_dir,
            &format!("convergence_{}.csv", run.method.name()),
            &convergence_csv(&run.result.records),
        )?);
    }
    let table = cmp.table_csv();
    artifacts.push(write_file(out_dir, "comparison.csv", &table)?);
    print!("{table}");
    Ok(RunOutput { artifacts })
}

#[derive(Debug, Serialize)]
struct OracleReport {
    schema: u32,
    header: Header,
    levels: Vec<f64>,
    n_steps: usize,
    best_control: Vec<f64>,
    #[serde(rename = "best_J")]
    best_cost: f64,
    optima_count: usize,
    evaluated: u128,
    /// J_method − J_oracle when an optimize report was supplied.
    #[serde(skip_serializing_if = "Option::is_none")]
    gap: Option<f64>,
}

pub fn cmd_oracle(
    path: &Path,
    levels: &[f64],
    n_steps: usize,
    out_dir: &Path,
    against: Option<&Path>,
) -> Result<RunOutput, CliError> {
    let bundle = parse_problem(path)?;
    let result = brute_force_bang_bang(
        &bundle.problem,
        bundle.file.control.horizon,
        n_steps,
        levels,
        false,
    )?;

    let gap = match against {
        None => None,
        Some(report_path) => {
            let text = std::fs::read_to_string(report_path).map_err(CliError::Io)?;
            let value: serde_json::Value = serde_json::from_str(&text)
                .map_err(|e| CliError::Parse(format!("malformed optimize report: {e}")))?;
            let j_method = value
                .get("iterations")
                .and_then(|i| i.as_array())
                .and_then(|a| a.last())
                .and_then(|row| row.get("J"))
                .and_then(|j| j.as_f64())
                .ok_or_else(|| CliError::Parse("optimize report carries no final J".to_string()))?;
            Some(j_method - result.best_cost)
        }
    };

    let report = OracleReport {
        schema: crate::problem_file::SCHEMA_VERSION,
        header: Header::now(),
        levels: levels.to_vec(),
        n_steps,
        best_control: result.best_control.values().to_vec(),
        best_cost: result.best_cost,
        optima_count: result.optima_count,
        evaluated: result.evaluated,
        gap,
    };
    let path = write_json(out_dir, "oracle_report.json", &report)?;
    println!(
        "oracle: best J = {} over {} sequences ({} optima){}",
        report.best_cost,
        report.evaluated,
        report.optima_count,
        gap.map(|g| format!(", gap J_method - J_oracle = {g:e}"))
            .unwrap_or_default()
    );
    Ok(RunOutput {
        artifacts: vec![path],
    })
}

pub fn cmd_check(path: &Path) -> Result<RunOutput, CliError> {
    let bundle = parse_problem(path)?;
    let problem = &bundle.problem;
    let sys = problem.system();
    println!("problem file: {}", path.display());
    println!(
        "  system: dim = {}, bounds = [{}, {}], T = {}, N = {}",
        sys.dim(),
        sys.lower(),
        sys.upper(),
        bundle.file.control.horizon,
        bundle.file.control.n_steps
    );
    println!(
        "  objective: beta = {}, energy cap = {}",
        problem.objective().beta(),
        bundle
            .energy_cap
            .map(|c| c.to_string())
            .unwrap_or_else(|| "none".into())
    );
    match problem.objective().require_psd() {
        Ok(()) => println!("  terminal operator: positive semidefinite (Krotov-ready)"),
        Err(e) => println!("  warning: {e}; the global method will refuse this objective"),
    }

    let eval = problem.evaluate(&bundle.initial_control)?;
    println!(
        "  initial control: I = {}, J = {}, z(T) = {}, norm drift = {:.3e}",
        eval.terminal,
        eval.total,
        eval.energy,
        eval.trajectory.max_norm_drift()
    );

    // terminal-segment singularity diagnostic on the initial trajectory
    let chi_t = StateVector::new(
        problem
            .objective()
            .terminal_op()
            .apply(eval.trajectory.final_state().amplitudes()),
    );
    let adj = propagate_backward(sys, &bundle.initial_control, chi_t)?;
    let k1_tol = bundle.solve.krotov.singular.resolved_k1_tol(problem);
    let check =
        check_terminal_nonsingular(adj.terminal(), eval.trajectory.final_state(), sys, k1_tol);
    if check.warning {
        println!(
            "  warning: terminal segment is singular (|K1(T)| = {:.3e} < {k1_tol:.3e}); \
             improvement may stall near t = T",
            check.k1_terminal.abs()
        );
    } else {
        println!(
            "  terminal segment nonsingular (K1(T) = {:.3e})",
            check.k1_terminal
        );
    }
    let _ = terminal_cost(
        problem.objective().terminal_op(),
        eval.trajectory.final_state(),
    );
    println!("  ok");
    Ok(RunOutput {
        artifacts: Vec::new(),
    })
}
