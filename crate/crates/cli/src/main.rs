use std::path::PathBuf;
use std::process::ExitCode;

use bandlfd_cli::commands::{report_exit_code, EXIT_INPUT};
use bandlfd_cli::verify::GridArg;
use bandlfd_cli::{
    cmd_check, cmd_demo, cmd_solve, Demo, Failure, RunReport, SolveFlags, VerifyOptions,
};
use clap::{Args, Parser, Subcommand};

/// Least favorable densities for band uncertainty models.
#[derive(Parser)]
#[command(name = "bandlfd", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the band pair described by a spec file.
    Solve {
        spec: PathBuf,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run a built-in configuration: clipping, censoring, compress-tight,
    /// compress-loose, huber, spectrum.
    Demo {
        name: String,
        #[command(flatten)]
        solver: SolverArgs,
        #[command(flatten)]
        check: CheckArgs,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Re-run the verification suite on a saved solution.
    Check {
        solution: PathBuf,
        spec: PathBuf,
        #[command(flatten)]
        check: CheckArgs,
        /// Also write report.json here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct SolverArgs {
    #[arg(long)]
    alpha: Option<f64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    /// Fail instead of retrying with alpha = 1 when alpha = 0 has no root.
    #[arg(long)]
    no_auto_alpha: bool,
}

#[derive(Args)]
struct CheckArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// lo:hi:n, log-spaced
    #[arg(long)]
    lambda_grid: Option<GridArg>,
    /// lo:hi:n, linear
    #[arg(long)]
    eta_grid: Option<GridArg>,
}

impl From<SolverArgs> for SolveFlags {
    fn from(a: SolverArgs) -> Self {
        SolveFlags {
            alpha: a.alpha,
            tol: a.tol,
            max_iter: a.max_iter,
            no_auto_alpha: a.no_auto_alpha,
        }
    }
}

impl From<CheckArgs> for VerifyOptions {
    fn from(a: CheckArgs) -> Self {
        VerifyOptions {
            lambda_grid: a.lambda_grid,
            eta_grid: a.eta_grid,
            samples: a.samples,
            seed: a.seed,
        }
    }
}

fn run(cli: Cli) -> Result<RunReport, Failure> {
    match cli.command {
        Command::Solve {
            spec,
            solver,
            check,
            out,
        } => cmd_solve(&spec, &out, &solver.into(), &check.into()),
        Command::Demo {
            name,
            solver,
            check,
            out,
        } => {
            let demo: Demo = name.parse()?;
            cmd_demo(demo, &out, &solver.into(), &check.into())
        }
        Command::Check {
            solution,
            spec,
            check,
            out,
        } => cmd_check(&solution, &spec, out.as_ref(), &check.into()),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT as u8 } else { 0 });
        }
    };
    match run(cli) {
        Ok(report) => {
            print!("{}", report.table());
            for note in &report.notes {
                println!("note: {note}");
            }
            ExitCode::from(report_exit_code(&report) as u8)
        }
        Err(f) => {
            eprintln!("{f}");
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
