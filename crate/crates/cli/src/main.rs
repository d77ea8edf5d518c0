//! `boxpart`: exact counts, tilt solvers, asymptotic estimates, local-limit
//! checks and samplers for partitions in a box.
//!
//! Exit codes: 0 success, 1 validation failure (bad input domain or a failed
//! `validate` check), 2 usage error, 3 numerical non-convergence.

mod commands;
mod report;
mod validate;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Family, Method};
use report::{Format, Report};

#[derive(Parser, Debug)]
#[command(
    name = "boxpart",
    version,
    about = "Partitions of n fitting in an m x l box"
)]
struct Cli {
    /// Output format.
    #[arg(long, value_enum, default_value = "csv", global = true)]
    format: Format,
    /// Write to this file instead of stdout. Relative paths are taken under
    /// $BOXPART_OUTPUT_DIR when it is set.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Exact coefficient N_n, or the whole coefficient vector when n is omitted.
    Exact {
        m: u64,
        l: u64,
        n: Option<u64>,
        /// Largest coefficient-vector length to build.
        #[arg(long, default_value_t = boxpart::exact::DEFAULT_CAP)]
        cap: u64,
    },
    /// Exact difference N_{n+1} - N_n for n < lm/2.
    Diff { m: u64, l: u64, n: u64 },
    /// Continuum tilt (c, d) and Delta for aspect A = l/m and fill B = n/m^2.
    Solve {
        #[arg(allow_negative_numbers = true)]
        a: f64,
        #[arg(allow_negative_numbers = true)]
        b: f64,
        /// Largest accepted residual in (A, B) before reporting non-convergence.
        #[arg(long, default_value_t = 1e-9)]
        max_residual: f64,
    },
    /// Finite-m tilt (c_m, d_m) and its moments.
    SolveDiscrete {
        m: u64,
        l: u64,
        n: u64,
        /// Largest accepted relative residual in the mean equations.
        #[arg(long, default_value_t = 1e-8)]
        max_residual: f64,
    },
    /// Asymptotic estimate of N_n (or of the difference, or the lower bound).
    Estimate {
        m: u64,
        l: u64,
        n: u64,
        #[arg(long, value_enum, default_value = "t1")]
        method: Method,
    },
    /// Exact against estimates along l = round(A m), n = round(B m^2).
    Compare {
        /// start:end[:step]
        #[arg(value_parser = commands::parse_range)]
        m_range: commands::MRange,
        /// Aspect A setting l = round(A m).
        aspect: f64,
        /// Fill B setting n = round(B m^2).
        fill: f64,
        #[arg(long, default_value_t = boxpart::exact::DEFAULT_CAP)]
        cap: u64,
    },
    /// Exponential rates of the fair-coin and tilted estimates across B.
    Rates {
        aspect: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Uniform random partitions of n in the box, with distances to the limit curve.
    Sample {
        m: u64,
        l: u64,
        n: u64,
        #[arg(long, default_value_t = 1)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Proposal budget per sample; defaults to 100 times the expected count.
        #[arg(long)]
        max_tries: Option<u64>,
    },
    /// Limit curve y(x) on a uniform grid.
    Shape {
        a: f64,
        b: f64,
        #[arg(long, default_value_t = boxpart::shape::DEFAULT_GRID)]
        grid: usize,
    },
    /// Local-limit errors against the exact joint PMF.
    Lclt {
        m: usize,
        #[arg(long, value_enum, default_value = "tilted")]
        family: Family,
        /// Aspect of the tilted family.
        #[arg(long, default_value_t = 1.0)]
        aspect: f64,
        /// Fill of the tilted family.
        #[arg(long, default_value_t = 1.0 / 3.0)]
        fill: f64,
    },
    /// Run the invariant suite; exits 1 if any check fails.
    Validate,
}

enum Failure {
    Lib(boxpart::Error),
    Validation,
    Io(String),
}

impl From<boxpart::Error> for Failure {
    fn from(e: boxpart::Error) -> Self {
        Failure::Lib(e)
    }
}

fn exit_code(e: &boxpart::Error) -> u8 {
    use boxpart::Error::*;
    match e {
        NonConvergence { .. } | TriesExhausted { .. } | Singular { .. } => 3,
        Domain { .. }
        | Degenerate { .. }
        | CapExceeded { .. }
        | Range { .. }
        | SizeGuard { .. } => 1,
    }
}

fn dispatch(command: Command) -> Result<(Report, bool), Failure> {
    let ok = |r: Report| Ok((r, true));
    match command {
        Command::Exact { m, l, n, cap } => ok(commands::exact(m, l, n, cap)?),
        Command::Diff { m, l, n } => ok(commands::diff(m, l, n)?),
        Command::Solve { a, b, max_residual } => ok(commands::solve(a, b, max_residual)?),
        Command::SolveDiscrete {
            m,
            l,
            n,
            max_residual,
        } => ok(commands::solve_discrete(m, l, n, max_residual)?),
        Command::Estimate { m, l, n, method } => ok(commands::estimate(m, l, n, method)?),
        Command::Compare {
            m_range,
            aspect,
            fill,
            cap,
        } => ok(commands::compare(&m_range.0, aspect, fill, cap)?),
        Command::Rates { aspect, points } => ok(commands::rates(aspect, points)?),
        Command::Sample {
            m,
            l,
            n,
            count,
            seed,
            max_tries,
        } => ok(commands::sample(m, l, n, count, seed, max_tries)?),
        Command::Shape { a, b, grid } => ok(commands::shape(a, b, grid)?),
        Command::Lclt {
            m,
            family,
            aspect,
            fill,
        } => ok(commands::lclt(m, family, aspect, fill)?),
        Command::Validate => Ok(validate::run()),
    }
}

fn emit(report: &Report, cli: &Cli) -> Result<(), Failure> {
    let bytes = report.render(cli.format);
    match &cli.output {
        Some(path) => {
            let path = report::resolve_output(path);
            std::fs::write(&path, bytes)
                .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        }
        None => std::io::stdout()
            .write_all(&bytes)
            .map_err(|e| Failure::Io(e.to_string()))?,
    }
    if cli.format == Format::Csv {
        for line in report.diagnostic_lines() {
            eprintln!("{line}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    let command = std::mem::replace(&mut cli.command, Command::Validate);
    let result = dispatch(command).and_then(|(report, passed)| {
        emit(&report, &cli)?;
        if passed {
            Ok(())
        } else {
            Err(Failure::Validation)
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Lib(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
        Err(Failure::Validation) => {
            eprintln!("error: validation failed");
            ExitCode::from(1)
        }
        Err(Failure::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
