//! The JSON problem-file schema and its validation into a runnable bundle.
//!
//! Complex matrices are carried as explicit re/im arrays so files stay
//! portable and diffable. Every validation error names the offending field.

use serde::{Deserialize, Serialize};

use qoc_core::krotov::{KrotovConfig, SingularConfig, SingularPolicy};
use qoc_core::objective::{complement, projector_from_states, Objective};
use qoc_core::operator::{BilinearSystem, CMatrix, HermitianOperator, C64};
use qoc_core::problem::ControlProblem;
use qoc_core::solve::{Method, SolveConfig};
use qoc_core::{ControlProgram, StateVector};

use crate::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub schema: u32,
    pub dim: usize,
    pub h0_re: Vec<Vec<f64>>,
    pub h0_im: Vec<Vec<f64>>,
    pub h1_re: Vec<Vec<f64>>,
    pub h1_im: Vec<Vec<f64>>,
    pub psi0_re: Vec<f64>,
    pub psi0_im: Vec<f64>,
    pub objective: ObjectiveSpec,
    pub control: ControlSpec,
    #[serde(default)]
    pub method: MethodSpec,
    #[serde(default = "default_iterations")]
    pub iterations: usize,
    #[serde(default)]
    pub stop: StopSpec,
    #[serde(default)]
    pub singular: SingularSpec,
}

fn default_iterations() -> usize {
    200
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectiveSpec {
    /// Basis indices spanning the target set Q (diagonal 0/1 projector).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target_state_indices: Option<Vec<usize>>,
    /// Explicit terminal operator, exclusive with `target_state_indices`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_re: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_im: Option<Vec<Vec<f64>>>,
    /// Swap Q for its complement (turns "minimize P" into "maximize P'").
    #[serde(default)]
    pub complement: bool,
    #[serde(default)]
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub energy_cap: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ControlSpec {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "T")]
    pub horizon: f64,
    #[serde(rename = "N")]
    pub n_steps: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum InitSpec {
    Constant(f64),
    Random {
        seed: u64,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        amplitude: Option<f64>,
    },
    Provided(Vec<f64>),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MethodSpec {
    #[default]
    Krotov,
    Gradient,
    Both,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StopSpec {
    #[serde(rename = "J_tol", default = "default_j_tol")]
    pub j_tol: f64,
    #[serde(default = "default_grad_tol")]
    pub grad_tol: f64,
}

impl Default for StopSpec {
    fn default() -> Self {
        Self {
            j_tol: default_j_tol(),
            grad_tol: default_grad_tol(),
        }
    }
}

fn default_j_tol() -> f64 {
    1e-10
}

fn default_grad_tol() -> f64 {
    1e-8
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SingularSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k1_tol: Option<f64>,
    #[serde(default = "default_denom_tol")]
    pub denom_tol: f64,
    #[serde(default)]
    pub policy: PolicySpec,
}

impl Default for SingularSpec {
    fn default() -> Self {
        Self {
            k1_tol: None,
            denom_tol: default_denom_tol(),
            policy: PolicySpec::default(),
        }
    }
}

fn default_denom_tol() -> f64 {
    1e-12
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicySpec {
    #[default]
    StayUntilSaturation,
    AlwaysLeaveLow,
    AlwaysLeaveHigh,
}

impl From<PolicySpec> for SingularPolicy {
    fn from(p: PolicySpec) -> Self {
        match p {
            PolicySpec::StayUntilSaturation => SingularPolicy::StayUntilSaturation,
            PolicySpec::AlwaysLeaveLow => SingularPolicy::AlwaysLeaveLow,
            PolicySpec::AlwaysLeaveHigh => SingularPolicy::AlwaysLeaveHigh,
        }
    }
}

/// Everything a run needs, validated and defaulted.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub file: ProblemFile,
    pub problem: ControlProblem,
    pub initial_control: ControlProgram,
    pub solve: SolveConfig,
    pub method: MethodSpec,
    pub energy_cap: Option<f64>,
    /// Seed of the random initial control, when one was drawn.
    pub seed: Option<u64>,
}

fn invalid(field: &str, message: impl Into<String>) -> CliError {
    CliError::Validation {
        field: field.to_string(),
        message: message.into(),
    }
}

fn complex_matrix(
    dim: usize,
    re: &[Vec<f64>],
    im: &[Vec<f64>],
    field: &str,
) -> Result<CMatrix, CliError> {
    let shape_ok = |rows: &[Vec<f64>]| rows.len() == dim && rows.iter().all(|r| r.len() == dim);
    if !shape_ok(re) || !shape_ok(im) {
        return Err(invalid(
            field,
            format!("expected a {dim}x{dim} re/im array pair"),
        ));
    }
    Ok(CMatrix::from_fn(dim, dim, |i, j| {
        C64::new(re[i][j], im[i][j])
    }))
}

fn hermitian(
    dim: usize,
    re: &[Vec<f64>],
    im: &[Vec<f64>],
    field: &str,
) -> Result<HermitianOperator, CliError> {
    HermitianOperator::new(complex_matrix(dim, re, im, field)?)
        .map_err(|e| invalid(field, e.to_string()))
}

fn build_terminal_op(file: &ProblemFile) -> Result<HermitianOperator, CliError> {
    let obj = &file.objective;
    let explicit = obj.l_re.is_some() || obj.l_im.is_some();
    match (&obj.target_state_indices, explicit) {
        (Some(_), true) => Err(invalid(
            "objective",
            "give either target_state_indices or l_re/l_im, not both",
        )),
        (None, false) => Err(invalid(
            "objective",
            "one of target_state_indices or l_re/l_im is required",
        )),
        (Some(indices), false) => {
            let mut seen = vec![false; file.dim];
            for &i in indices {
                if i >= file.dim {
                    return Err(invalid(
                        "objective.target_state_indices",
                        format!("index {i} out of range for dim {}", file.dim),
                    ));
                }
                if std::mem::replace(&mut seen[i], true) {
                    return Err(invalid(
                        "objective.target_state_indices",
                        format!("index {i} repeated"),
                    ));
                }
            }
            let states: Vec<StateVector> = indices
                .iter()
                .map(|&i| StateVector::basis_state(file.dim, i))
                .collect();
            projector_from_states(file.dim, &states)
                .map_err(|e| invalid("objective.target_state_indices", e.to_string()))
        }
        (None, true) => {
            let (Some(re), Some(im)) = (&obj.l_re, &obj.l_im) else {
                return Err(invalid("objective", "l_re and l_im must be given together"));
            };
            hermitian(file.dim, re, im, "objective.l")
        }
    }
}

fn build_initial_control(file: &ProblemFile) -> Result<(ControlProgram, Option<u64>), CliError> {
    let c = &file.control;
    let (a, b) = (c.a, c.b);
    match &c.init {
        None => {
            let mid = 0.5 * (a + b);
            Ok((
                ControlProgram::constant(c.horizon, c.n_steps, mid)
                    .map_err(|e| invalid("control", e.to_string()))?,
                None,
            ))
        }
        Some(InitSpec::Constant(value)) => {
            if !(a..=b).contains(value) {
                return Err(invalid(
                    "control.init.constant",
                    format!("value {value} outside [{a}, {b}]"),
                ));
            }
            Ok((
                ControlProgram::constant(c.horizon, c.n_steps, *value)
                    .map_err(|e| invalid("control", e.to_string()))?,
                None,
            ))
        }
        Some(InitSpec::Random { seed, amplitude }) => {
            // amplitude clips the sampling window, which stays inside [a, b]
            let (lo, hi) = match amplitude {
                Some(amp) if *amp > 0.0 => (a.max(-amp), b.min(*amp)),
                Some(amp) => {
                    return Err(invalid(
                        "control.init.random.amplitude",
                        format!("amplitude must be positive, got {amp}"),
                    ))
                }
                None => (a, b),
            };
            if !(lo < hi) {
                return Err(invalid(
                    "control.init.random.amplitude",
                    format!("sampling window [{lo}, {hi}] is empty"),
                ));
            }
            Ok((
                ControlProgram::random(c.horizon, c.n_steps, (lo, hi), *seed)
                    .map_err(|e| invalid("control", e.to_string()))?,
                Some(*seed),
            ))
        }
        Some(InitSpec::Provided(values)) => {
            if values.len() != c.n_steps {
                return Err(invalid(
                    "control.init.provided",
                    format!("expected {} values, got {}", c.n_steps, values.len()),
                ));
            }
            if let Some((k, &v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !(a..=b).contains(*v))
            {
                return Err(invalid(
                    "control.init.provided",
                    format!("u[{k}] = {v} outside [{a}, {b}]"),
                ));
            }
            Ok((
                ControlProgram::new(c.horizon, values.clone())
                    .map_err(|e| invalid("control", e.to_string()))?,
                None,
            ))
        }
    }
}

/// Parse and validate a problem file into a runnable bundle.
pub fn parse_problem(path: &std::path::Path) -> Result<Bundle, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Parse(format!("cannot read {}: {e}", path.display())))?;
    let file: ProblemFile = serde_json::from_str(&text)
        .map_err(|e| CliError::Parse(format!("malformed problem file: {e}")))?;
    bundle_from_file(file)
}

pub fn bundle_from_file(file: ProblemFile) -> Result<Bundle, CliError> {
    if file.schema != SCHEMA_VERSION {
        return Err(invalid(
            "schema",
            format!(
                "unsupported schema {}, expected {SCHEMA_VERSION}",
                file.schema
            ),
        ));
    }
    if file.dim == 0 {
        return Err(invalid("dim", "dimension must be at least 1"));
    }

    let h0 = hermitian(file.dim, &file.h0_re, &file.h0_im, "h0")?;
    let h1 = hermitian(file.dim, &file.h1_re, &file.h1_im, "h1")?;
    if !(file.control.a < file.control.b) {
        return Err(invalid(
            "control",
            format!(
                "bounds require a < b, got [{}, {}]",
                file.control.a, file.control.b
            ),
        ));
    }
    let system = BilinearSystem::new(h0, h1, (file.control.a, file.control.b))
        .map_err(|e| invalid("control", e.to_string()))?;

    if file.psi0_re.len() != file.dim || file.psi0_im.len() != file.dim {
        return Err(invalid("psi0", format!("expected {} components", file.dim)));
    }
    let psi0 = StateVector::from_re_im(&file.psi0_re, &file.psi0_im)
        .map_err(|e| invalid("psi0", e.to_string()))?;
    let norm_dev = (psi0.norm_squared() - 1.0).abs();
    if norm_dev > qoc_core::state::UNIT_NORM_TOL {
        return Err(invalid(
            "psi0",
            format!("psi0 not normalized (|norm^2 - 1| = {norm_dev:.3e})"),
        ));
    }

    let mut terminal_op = build_terminal_op(&file)?;
    if file.objective.complement {
        terminal_op =
            complement(&terminal_op).map_err(|e| invalid("objective.complement", e.to_string()))?;
    }
    if file.objective.beta < 0.0 {
        return Err(invalid("objective.beta", "beta must be nonnegative"));
    }
    let mut objective = Objective::new(terminal_op, file.objective.beta)
        .map_err(|e| invalid("objective", e.to_string()))?;
    if let Some(cap) = file.objective.energy_cap {
        objective = objective
            .with_energy_cap(cap)
            .map_err(|e| invalid("objective.energy_cap", e.to_string()))?;
    }

    let problem =
        ControlProblem::new(system, objective, psi0).map_err(|e| invalid("psi0", e.to_string()))?;
    let (initial_control, seed) = build_initial_control(&file)?;

    if !(file.stop.j_tol > 0.0) {
        return Err(invalid("stop.J_tol", "tolerance must be positive"));
    }
    if !(file.stop.grad_tol > 0.0) {
        return Err(invalid("stop.grad_tol", "tolerance must be positive"));
    }
    if let Some(t) = file.singular.k1_tol {
        if !(t > 0.0) {
            return Err(invalid("singular.k1_tol", "tolerance must be positive"));
        }
    }
    if !(file.singular.denom_tol > 0.0) {
        return Err(invalid("singular.denom_tol", "tolerance must be positive"));
    }

    let solve = SolveConfig {
        method: match file.method {
            MethodSpec::Gradient => Method::Gradient,
            _ => Method::Krotov,
        },
        max_iterations: file.iterations,
        j_tol: file.stop.j_tol,
        grad_tol: file.stop.grad_tol,
        krotov: KrotovConfig {
            singular: SingularConfig {
                k1_tol: file.singular.k1_tol,
                denom_tol: file.singular.denom_tol,
                policy: file.singular.policy.into(),
            },
            ..Default::default()
        },
        ..Default::default()
    };

    Ok(Bundle {
        method: file.method,
        energy_cap: file.objective.energy_cap,
        seed,
        problem,
        initial_control,
        solve,
        file,
    })
}
