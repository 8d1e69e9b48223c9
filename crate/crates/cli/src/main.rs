//! `ckern`: connection Laplacians, heat kernels and residual checks from the
//! command line.
//!
//! Data goes to stdout as JSON or CSV. One `PASS`/`FAIL` line per check goes
//! to stderr, and `--report-file` writes the full run report as JSON.

mod commands;
mod error;
mod parse;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};

use commands::{Form, KernelRoute, RandomGraphArgs, TorusArgs, TorusRoute, ZKernelArgs};
use error::{Result, EXIT_CODES};
use report::{to_json_string, write_csv, Inputs, RunReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(name = "ckern", version, about = "Connection graph Laplacians and heat kernels", after_help = EXIT_CODES)]
struct Cli {
    /// Tolerance for cross-route checks (default 1e-9; 1e-12 for zkernel).
    #[arg(long, global = true)]
    tol: Option<f64>,

    /// Format of the data written to stdout.
    #[arg(long, global = true, value_enum, default_value = "json")]
    out: Format,

    /// Seed for commands that sample random inputs.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Add wall-clock time to the report (makes the report nondeterministic).
    #[arg(long, global = true)]
    timing: bool,

    /// Also write the run report as JSON to this file.
    #[arg(long, global = true, value_name = "PATH")]
    report_file: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List violated connection-graph invariants.
    #[command(after_help = EXIT_CODES)]
    Validate { file: PathBuf },

    /// Decide whether every cycle has identity signature.
    #[command(after_help = EXIT_CODES)]
    Consistent { file: PathBuf },

    /// Emit the connection Laplacian D - A, or the normalized one.
    #[command(after_help = EXIT_CODES)]
    Laplacian {
        file: PathBuf,
        #[arg(long)]
        normalized: bool,
    },

    /// Heat kernel blocks H_t(x, y) of a graph file.
    #[command(after_help = EXIT_CODES)]
    Kernel {
        file: PathBuf,
        #[arg(long)]
        t: f64,
        /// `all` or a list of vertex pairs `u:v,u:v`.
        #[arg(long, default_value = "all")]
        pairs: String,
        /// `both` compares the dense kernel with the consistent shortcut.
        #[arg(long, value_enum, default_value = "dense")]
        route: KernelRoute,
    },

    /// Heat kernel block H_t(x, x+a) on the integer line with constant connection.
    #[command(after_help = EXIT_CODES)]
    Zkernel {
        /// Connection dimension; the identity is used when --sigma is omitted.
        #[arg(long)]
        dims: Option<usize>,
        /// `rotation:THETA`, `identity:D`, or a CSV matrix file.
        #[arg(long)]
        sigma: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        a: i64,
        #[arg(long, allow_hyphen_values = true, default_value_t = 0)]
        x: i64,
        #[arg(long)]
        t: f64,
    },

    /// Heat kernel blocks on the torus Z^n / M Z^n.
    #[command(after_help = EXIT_CODES)]
    Torus {
        /// Row-major integer matrix, e.g. `5` or `2,1,0,3`.
        #[arg(long = "M", value_name = "INTS")]
        m: String,
        /// `AXIS:rotation:THETA`, `AXIS:identity:D` or `AXIS:FILE`, axes from 1.
        #[arg(long)]
        sigma: Vec<String>,
        #[arg(long)]
        t: f64,
        #[arg(long, value_enum, default_value = "both")]
        route: TorusRoute,
        /// Axis generator for the spectral route.
        #[arg(long, value_enum, default_value = "hermitian")]
        form: Form,
        /// `X:Y` with comma-separated coordinates; defaults to the origin pair.
        #[arg(long, allow_hyphen_values = true)]
        pair: Vec<String>,
    },

    /// Compare lattice and spectral torus kernels over a grid of times.
    #[command(after_help = EXIT_CODES)]
    TraceCheck {
        #[arg(long = "M", value_name = "INTS")]
        m: String,
        #[arg(long)]
        sigma: Vec<String>,
        #[arg(long, value_delimiter = ',', required = true)]
        t_grid: Vec<f64>,
        /// Format of the residual table; overrides --out.
        #[arg(long, value_enum)]
        report: Option<Format>,
    },

    /// Vector diffusion distances.
    #[command(after_help = EXIT_CODES)]
    Vdm {
        file: PathBuf,
        #[arg(long)]
        t: f64,
        /// Number of eigenpairs kept; all of them by default.
        #[arg(long = "K", value_name = "K")]
        k: Option<usize>,
        #[arg(long, default_value = "all")]
        pairs: String,
    },

    /// Write a random connection graph in the JSON graph format.
    #[command(after_help = EXIT_CODES)]
    RandomGraph {
        #[arg(long)]
        vertices: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long, default_value_t = 0)]
        extra_edges: usize,
        /// Derive every connection from vertex frames so all cycles are trivial.
        #[arg(long)]
        consistent: bool,
    },
}

fn run(cli: &Cli, args: Vec<String>) -> Result<bool> {
    let start = Instant::now();
    let mut inputs = Inputs::default();
    let tol = cli.tol.unwrap_or(1e-9);
    let mut format = cli.out;
    let outcome = match &cli.command {
        Command::Validate { file } => commands::validate_cmd(&mut inputs, file)?,
        Command::Consistent { file } => commands::consistent_cmd(&mut inputs, file)?,
        Command::Laplacian { file, normalized } => commands::laplacian_cmd(&mut inputs, file, *normalized)?,
        Command::Kernel { file, t, pairs, route } => {
            commands::kernel_cmd(&mut inputs, file, *t, pairs, *route, tol)?
        }
        Command::Zkernel { dims, sigma, a, x, t } => {
            let args = ZKernelArgs {
                dims: *dims,
                sigma: sigma.as_deref(),
                x: *x,
                a: *a,
                t: *t,
            };
            commands::zkernel_cmd(&mut inputs, &args, cli.tol.unwrap_or(1e-12))?
        }
        Command::Torus {
            m,
            sigma,
            t,
            route,
            form,
            pair,
        } => {
            let args = TorusArgs {
                m,
                sigma,
                t: *t,
                route: *route,
                form: *form,
                pairs: pair,
            };
            commands::torus_cmd(&mut inputs, &args, tol)?
        }
        Command::TraceCheck {
            m,
            sigma,
            t_grid,
            report,
        } => {
            format = report.unwrap_or(format);
            commands::trace_check_cmd(&mut inputs, m, sigma, t_grid, tol)?
        }
        Command::Vdm { file, t, k, pairs } => commands::vdm_cmd(&mut inputs, file, *t, *k, pairs, tol)?,
        Command::RandomGraph {
            vertices,
            dim,
            extra_edges,
            consistent,
        } => {
            let args = RandomGraphArgs {
                vertices: *vertices,
                dim: *dim,
                extra_edges: *extra_edges,
                consistent: *consistent,
            };
            commands::random_graph_cmd(&args, cli.seed)?
        }
    };
    let report = RunReport {
        inputs_digest: inputs.digest(&args),
        command: args,
        checks: outcome.checks,
        timing_ms: cli.timing.then(|| start.elapsed().as_secs_f64() * 1e3),
    };

    let stdout = io::stdout();
    match format {
        Format::Json => {
            let mut out = stdout.lock();
            writeln!(out, "{}", to_json_string(&outcome.data))?;
            out.flush()?;
        }
        Format::Csv => write_csv(stdout.lock(), &outcome.table)?,
    }
    let mut err = io::stderr().lock();
    for c in &report.checks {
        let verdict = if c.pass() { "PASS" } else { "FAIL" };
        writeln!(err, "{verdict} {} residual {:.3e} (tol {:.1e})", c.name, c.residual, c.tolerance)?;
    }
    if let Some(ms) = report.timing_ms {
        writeln!(err, "time {ms:.1} ms")?;
    }
    if let Some(path) = &cli.report_file {
        fs::write(path, to_json_string(&report.to_json()) + "\n")?;
    }
    Ok(report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let args: Vec<String> = std::env::args().skip(1).collect();
    match run(&cli, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("ckern: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
