//! End-to-end tests of the `qoc` binary and the problem-file pipeline:
//! exit codes, defaults, determinism of emitted reports, and the artifact
//! layout of each subcommand.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use qoc_cli::problem_file::{bundle_from_file, parse_problem, MethodSpec, ProblemFile};
use qoc_cli::CliError;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_qoc"))
}

fn write_problem(dir: &Path, name: &str, json: &serde_json::Value) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(json).unwrap()).unwrap();
    path
}

fn pulse_area_json() -> serde_json::Value {
    serde_json::json!({
        "schema": 1,
        "dim": 2,
        "h0_re": [[0.0, 0.0], [0.0, 0.0]],
        "h0_im": [[0.0, 0.0], [0.0, 0.0]],
        "h1_re": [[0.0, 1.0], [1.0, 0.0]],
        "h1_im": [[0.0, 0.0], [0.0, 0.0]],
        "psi0_re": [1.0, 0.0],
        "psi0_im": [0.0, 0.0],
        "objective": { "target_state_indices": [1], "beta": 0.0 },
        "control": { "a": 0.0, "b": 1.0, "T": std::f64::consts::PI, "N": 10,
                     "init": { "constant": 0.3 } }
    })
}

fn run(cmd: &mut Command) -> Output {
    cmd.output().expect("binary runs")
}

#[test]
fn exit_codes_map_the_failure_classes() {
    use qoc_core::Error as E;
    let code = |e: E| CliError::from(e).exit_code();
    assert_eq!(
        code(E::NoImprovement {
            trials: 30,
            gradient_norm: 0.5,
            k1_max: 0.5
        }),
        3
    );
    assert_eq!(
        code(E::MonotonicityFailure {
            damp_trials: 20,
            j_before: 0.0,
            j_after: 0.1
        }),
        3
    );
    assert_eq!(
        code(E::BracketFailure {
            reason: "x".into(),
            history: vec![]
        }),
        4
    );
    assert_eq!(
        code(E::BudgetExceeded {
            count: 100,
            budget: 10
        }),
        5
    );
    assert_eq!(code(E::StateNotNormalized { deviation: 0.5 }), 2);
    assert_eq!(code(E::EigenFailure), 1);
}

#[test]
fn check_accepts_a_valid_file_and_prints_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_problem(dir.path(), "p.json", &pulse_area_json());
    let out = run(bin().arg("check").arg(&path));
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("positive semidefinite"));
    assert!(stdout.contains("initial control"));
    assert!(stdout.contains("ok"));
}

#[test]
fn minimal_file_fills_defaults() {
    let minimal: ProblemFile = serde_json::from_value(serde_json::json!({
        "schema": 1,
        "dim": 2,
        "h0_re": [[1.0, 0.0], [0.0, -1.0]],
        "h0_im": [[0.0, 0.0], [0.0, 0.0]],
        "h1_re": [[0.0, 1.0], [1.0, 0.0]],
        "h1_im": [[0.0, 0.0], [0.0, 0.0]],
        "psi0_re": [1.0, 0.0],
        "psi0_im": [0.0, 0.0],
        "objective": { "target_state_indices": [1] },
        "control": { "a": -1.0, "b": 1.0, "T": 1.0, "N": 5 }
    }))
    .unwrap();
    let bundle = bundle_from_file(minimal).unwrap();
    assert_eq!(bundle.method, MethodSpec::Krotov);
    assert_eq!(bundle.solve.max_iterations, 200);
    assert_eq!(bundle.solve.j_tol, 1e-10);
    assert_eq!(bundle.solve.grad_tol, 1e-8);
    // default init is the box midpoint
    assert!(bundle.initial_control.values().iter().all(|&u| u == 0.0));
    assert_eq!(bundle.seed, None);
}

#[test]
fn unnormalized_psi0_is_named_in_the_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut json = pulse_area_json();
    json["psi0_re"] = serde_json::json!([0.5, 0.0]);
    let path = write_problem(dir.path(), "bad.json", &json);

    match parse_problem(&path) {
        Err(CliError::Validation { field, message }) => {
            assert_eq!(field, "psi0");
            assert!(message.contains("not normalized"), "message: {message}");
        }
        other => panic!("expected a psi0 validation error, got {other:?}"),
    }

    let out = run(bin().arg("check").arg(&path));
    assert_eq!(
        out.status.code(),
        Some(2),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn complement_flag_flips_the_projector() {
    let mut json = pulse_area_json();
    json["objective"]["complement"] = serde_json::json!(true);
    let file: ProblemFile = serde_json::from_value(json).unwrap();
    let bundle = bundle_from_file(file).unwrap();
    let l = bundle.problem.objective().terminal_op().matrix();
    // complement of |1><1| is |0><0|
    assert_eq!(l[(0, 0)].re, 1.0);
    assert_eq!(l[(1, 1)].re, 0.0);
}

#[test]
fn malformed_json_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("garbage.json");
    std::fs::write(&path, "{ not json").unwrap();
    let out = run(bin().arg("optimize").arg(&path));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn optimize_writes_report_and_monotone_convergence() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_problem(dir.path(), "p.json", &pulse_area_json());
    let out_dir = dir.path().join("out");
    let out = run(bin().arg("optimize").arg(&path).arg("--out").arg(&out_dir));
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );

    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["schema"], 1);
    assert_eq!(report["exit_status"], 0);
    assert_eq!(report["final_control"].as_array().unwrap().len(), 10);
    assert!(report["header"]["timestamp_unix_ms"].is_number());

    let csv = std::fs::read_to_string(out_dir.join("convergence.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next(),
        Some("iter,I,J,energy,norm_drift,singular_fraction")
    );
    let js: Vec<f64> = lines
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert!(js.len() >= 2);
    for pair in js.windows(2) {
        assert!(pair[1] <= pair[0] + 1e-10, "J rose: {pair:?}");
    }
}

#[test]
fn zero_iterations_reports_only_the_initial_row() {
    let dir = tempfile::tempdir().unwrap();
    let mut json = pulse_area_json();
    json["iterations"] = serde_json::json!(0);
    let path = write_problem(dir.path(), "p.json", &json);
    let out_dir = dir.path().join("out");
    let out = run(bin().arg("optimize").arg(&path).arg("--out").arg(&out_dir));
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    assert_eq!(report["iterations"].as_array().unwrap().len(), 1);
}

#[test]
fn identical_file_and_seed_reproduce_the_report_bitwise_modulo_header() {
    let dir = tempfile::tempdir().unwrap();
    let mut json = pulse_area_json();
    json["control"]["init"] = serde_json::json!({ "random": { "seed": 42 } });
    json["objective"]["beta"] = serde_json::json!(0.01);
    let path = write_problem(dir.path(), "p.json", &json);

    let mut texts = Vec::new();
    for sub in ["a", "b"] {
        let out_dir = dir.path().join(sub);
        let out = run(bin().arg("optimize").arg(&path).arg("--out").arg(&out_dir));
        assert_eq!(out.status.code(), Some(0));
        texts.push((
            std::fs::read_to_string(out_dir.join("report.json")).unwrap(),
            std::fs::read_to_string(out_dir.join("convergence.csv")).unwrap(),
        ));
    }
    // CSV is bitwise identical; the JSON differs only in the header block
    assert_eq!(texts[0].1, texts[1].1);
    let strip = |t: &str| {
        let mut v: serde_json::Value = serde_json::from_str(t).unwrap();
        v.as_object_mut().unwrap().remove("header");
        v
    };
    assert_eq!(strip(&texts[0].0), strip(&texts[1].0));
    let seed = strip(&texts[0].0)["seed"].as_u64();
    assert_eq!(seed, Some(42), "seed must be recorded in the report");
}

#[test]
fn oracle_reports_optima_and_respects_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_problem(dir.path(), "p.json", &pulse_area_json());
    let out_dir = dir.path().join("out");

    let out = run(bin()
        .args(["oracle"])
        .arg(&path)
        .args(["--levels", "0,1", "--n", "10", "--out"])
        .arg(&out_dir));
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("oracle_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["optima_count"], 252);
    assert!((report["best_J"].as_f64().unwrap() + 1.0).abs() < 1e-9);

    // single-level set: one evaluation, J of the zero control
    let out = run(bin()
        .args(["oracle"])
        .arg(&path)
        .args(["--levels", "0", "--n", "10", "--out"])
        .arg(&out_dir));
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("oracle_report.json")).unwrap())
            .unwrap();
    assert_eq!(report["evaluated"], 1);
    assert_eq!(report["best_J"].as_f64().unwrap(), 0.0);

    // 10 levels over 8 intervals blows the 1e7 budget: exit 5
    let out = run(bin()
        .args(["oracle"])
        .arg(&path)
        .args([
            "--levels",
            "0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9",
            "--n",
            "8",
            "--out",
        ])
        .arg(&out_dir));
    assert_eq!(out.status.code(), Some(5));
}

#[test]
fn compare_emits_the_table_with_both_methods() {
    let dir = tempfile::tempdir().unwrap();
    let mut json = pulse_area_json();
    json["objective"]["beta"] = serde_json::json!(0.01);
    json["control"]["init"] = serde_json::json!({ "constant": 0.1 });
    let path = write_problem(dir.path(), "p.json", &json);
    let out_dir = dir.path().join("out");
    let out = run(bin().arg("compare").arg(&path).arg("--out").arg(&out_dir));
    assert_eq!(out.status.code(), Some(0));

    let table = std::fs::read_to_string(out_dir.join("comparison.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next(),
        Some("method,iterations,final_I,final_J,initial_J,iters_to_90pct")
    );
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 2);
    assert!(body[0].starts_with("krotov,"));
    assert!(body[1].starts_with("gradient,"));
    assert!(out_dir.join("report_krotov.json").exists());
    assert!(out_dir.join("report_gradient.json").exists());
}

#[test]
fn boundary_pinned_gradient_run_exits_3() {
    // On [0, 0.4] the unreachable-area optimum sits on the upper bound; from
    // u == b the projected gradient step cannot move, so the line search
    // reports no improvement while the gradient norm stays large.
    let dir = tempfile::tempdir().unwrap();
    let mut json = pulse_area_json();
    json["control"] = serde_json::json!({
        "a": 0.0, "b": 0.4, "T": std::f64::consts::PI, "N": 10,
        "init": { "constant": 0.4 }
    });
    json["method"] = serde_json::json!("gradient");
    let path = write_problem(dir.path(), "p.json", &json);
    let out = run(bin()
        .arg("optimize")
        .arg(&path)
        .arg("--out")
        .arg(dir.path().join("out").as_os_str()));
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn trace_controls_flag_writes_per_iterate_controls() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_problem(dir.path(), "p.json", &pulse_area_json());
    let out_dir = dir.path().join("out");
    let out = run(bin()
        .arg("optimize")
        .arg(&path)
        .arg("--trace-controls")
        .arg("--out")
        .arg(&out_dir));
    assert_eq!(out.status.code(), Some(0));
    let trace = std::fs::read_to_string(out_dir.join("controls.csv")).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let rows = report["iterations"].as_array().unwrap().len();
    assert_eq!(
        trace.lines().count(),
        rows + 1,
        "header plus one row per iterate"
    );
    assert!(trace.starts_with("iter,u0,u1,"));
}

#[test]
fn both_methods_write_two_reports_and_a_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut json = pulse_area_json();
    json["method"] = serde_json::json!("both");
    json["objective"]["beta"] = serde_json::json!(0.01);
    let path = write_problem(dir.path(), "p.json", &json);
    let out_dir = dir.path().join("out");
    let out = run(bin().arg("optimize").arg(&path).arg("--out").arg(&out_dir));
    assert_eq!(out.status.code(), Some(0));
    for f in [
        "report_krotov.json",
        "report_gradient.json",
        "convergence_krotov.csv",
        "convergence_gradient.csv",
        "comparison.csv",
    ] {
        assert!(out_dir.join(f).exists(), "missing {f}");
    }
}

#[test]
fn budget_run_records_beta_star_and_z_t() {
    let dir = tempfile::tempdir().unwrap();
    let mut json = pulse_area_json();
    json["objective"]["energy_cap"] = serde_json::json!(std::f64::consts::PI / 8.0);
    json["control"]["init"] = serde_json::json!({ "constant": 0.5 });
    json["iterations"] = serde_json::json!(150);
    let path = write_problem(dir.path(), "p.json", &json);
    let out_dir = dir.path().join("out");
    let out = run(bin().arg("optimize").arg(&path).arg("--out").arg(&out_dir));
    assert_eq!(
        out.status.code(),
        Some(0),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out_dir.join("report.json")).unwrap())
            .unwrap();
    let cap = std::f64::consts::PI / 8.0;
    let z_t = report["z_T"].as_f64().unwrap();
    assert!((z_t - cap).abs() <= 1e-3 * cap, "z_T = {z_t}, cap = {cap}");
    assert!(report["beta_star"].as_f64().unwrap() > 0.0);
}
