use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use qoc_cli::runner;

#[derive(Parser)]
#[command(
    name = "qoc",
    version,
    about = "Iterative control improvement for bilinear Schrödinger systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the configured improvement method(s) on a problem file
    Optimize {
        file: PathBuf,
        /// Output directory for report.json / convergence.csv
        #[arg(long, default_value = "qoc-out")]
        out: PathBuf,
        /// Also write every iterate's control values (controls.csv)
        #[arg(long)]
        trace_controls: bool,
        /// On a monotonicity failure, double the grid and retry (up to 3x)
        #[arg(long)]
        refine_on_failure: bool,
    },
    /// Exhaustively enumerate piecewise-constant controls over a level set
    Oracle {
        file: PathBuf,
        /// Comma-separated control levels, e.g. --levels 0,1
        #[arg(long, value_delimiter = ',', num_args = 1..)]
        levels: Vec<f64>,
        /// Number of intervals for the enumeration grid
        #[arg(long)]
        n: usize,
        #[arg(long, default_value = "qoc-out")]
        out: PathBuf,
        /// Optimize report to diff against (emits J_method - J_oracle)
        #[arg(long)]
        against: Option<PathBuf>,
    },
    /// Run both methods from the same start and emit the comparison table
    Compare {
        file: PathBuf,
        #[arg(long, default_value = "qoc-out")]
        out: PathBuf,
    },
    /// Validate a problem file and print diagnostics
    Check { file: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Optimize {
            file,
            out,
            trace_controls,
            refine_on_failure,
        } => runner::cmd_optimize(file, out, *trace_controls, *refine_on_failure),
        Command::Oracle {
            file,
            levels,
            n,
            out,
            against,
        } => runner::cmd_oracle(file, levels, *n, out, against.as_deref()),
        Command::Compare { file, out } => runner::cmd_compare(file, out),
        Command::Check { file } => runner::cmd_check(file),
    };
    match result {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
