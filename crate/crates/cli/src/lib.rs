//! Command-line front end for `lattice-heat`.
//!
//! Exit codes: 0 on success, 2 on usage or input errors, 1 when a
//! computation fails. All arguments and inputs are validated before any
//! computation starts, and output files are written only once every result
//! is in memory, so a failed run never leaves partial output behind.

mod commands;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use lattice_heat::analysis::dyadic_grid;
use lattice_heat::kernel::{KernelQuantity, LpExponent};

pub use commands::Output;

#[derive(Debug, Parser)]
#[command(
    name = "lattice-heat",
    version,
    about = "Discrete heat semigroup on the integer lattice"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Heat kernel G(t, n) over its certified window.
    Kernel {
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Solve from initial data, optionally with a forcing term.
    Evolve {
        #[arg(long)]
        f: PathBuf,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Forced solution with zero initial data.
    Duhamel {
        #[arg(long)]
        g: PathBuf,
        #[arg(long)]
        t: f64,
        #[command(flatten)]
        common: Common,
    },
    /// Kernel moments of order 0..=2·kmax against the moment polynomials.
    Moments {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Moment polynomial coefficients, or their zeros with --roots.
    Poly {
        #[arg(long, default_value_t = 6)]
        kmax: usize,
        #[arg(long)]
        roots: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Decay of kernel norms, or of the l2 norm of a solution with --f.
    Decay {
        #[arg(long, value_parser = parse_quantity)]
        quantity: Option<KernelQuantity>,
        /// Defaults to inf for kernel norms; must be 2 (or omitted) with --f.
        #[arg(long, value_parser = parse_p)]
        p: Option<LpExponent>,
        #[arg(long, value_parser = parse_grid, default_value = "dyadic:16:1024")]
        grid: Grid,
        #[arg(long)]
        f: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Large-time profile of a solution against its mass times the kernel.
    Converge {
        #[arg(long)]
        f: Option<PathBuf>,
        #[arg(long)]
        g: Option<PathBuf>,
        #[arg(long, value_parser = parse_p, default_value = "inf")]
        p: LpExponent,
        #[arg(long, value_parser = parse_grid, default_value = "dyadic:16:1024")]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
    /// Truncated Fourier transform of the kernel against its closed form.
    Fourier {
        #[arg(long)]
        t: f64,
        #[arg(long, default_value_t = 64)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Decay of iterated forward differences of the kernel.
    Diffdecay {
        #[arg(long)]
        order: u32,
        #[arg(long, value_parser = parse_p, default_value = "1")]
        p: LpExponent,
        #[arg(long, value_parser = parse_grid, default_value = "dyadic:16:1024")]
        grid: Grid,
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct Common {
    /// Certified truncation tolerance.
    #[arg(long, default_value_t = lattice_heat::DEFAULT_EPS)]
    eps: f64,
    /// Also write an SVG plot next to the CSV.
    #[arg(long)]
    plot: bool,
    /// Output CSV path; sidecars share its stem.
    #[arg(long)]
    out: PathBuf,
}

fn parse_p(s: &str) -> Result<LpExponent, String> {
    s.parse()
        .map_err(|e: lattice_heat::kernel::KernelError| e.to_string())
}

fn parse_quantity(s: &str) -> Result<KernelQuantity, String> {
    s.parse()
}

/// Time grid parsed from `dyadic:A:B`.
#[derive(Clone, Debug)]
struct Grid(Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let ["dyadic", a, b] = parts[..] else {
        return Err(format!("expected dyadic:A:B, got `{s}`"));
    };
    let a: f64 = a.parse().map_err(|_| format!("bad grid start `{a}`"))?;
    let b: f64 = b.parse().map_err(|_| format!("bad grid end `{b}`"))?;
    dyadic_grid(a, b).map(Grid).map_err(|e| e.to_string())
}

/// A failed run: usage errors exit with 2, computation errors with 1.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Compute(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Compute(_) => 1,
        }
    }
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = commands::execute(cli.command).and_then(|outputs| {
        for out in &outputs {
            out.write().map_err(Failure::Compute)?;
        }
        Ok(outputs)
    });
    match result {
        Ok(outputs) => {
            for out in outputs {
                println!("wrote {}", out.path.display());
            }
            0
        }
        Err(failure) => {
            match &failure {
                Failure::Usage(msg) => eprintln!("usage error: {msg}"),
                Failure::Compute(msg) => eprintln!("error: {msg}"),
            }
            failure.code()
        }
    }
}
