mod bench;
mod files;
mod retime;
mod run;
mod svg;
mod switch;

use clap::{Parser, Subcommand, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;
use topp_mpc::topp::ReductionMethod;

/// Exit status of a failed command.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub message: String,
}

impl Failure {
    pub const INPUT: u8 = 1;
    pub const PLANNER_FAILED: u8 = 2;
    pub const TIMEOUT: u8 = 3;
    pub const NOT_PARAMETERIZABLE: u8 = 4;

    pub fn input(message: impl Into<String>) -> Self {
        Self {
            code: Self::INPUT,
            message: message.into(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::input(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Dual convex hull
    Hull,
    /// Recursive projection
    Bl,
    /// Both, reporting the latency of each
    Both,
}

impl Method {
    pub fn reductions(self) -> Vec<ReductionMethod> {
        match self {
            Method::Hull => vec![ReductionMethod::DualHull],
            Method::Bl => vec![ReductionMethod::BretlLall],
            Method::Both => vec![ReductionMethod::DualHull, ReductionMethod::BretlLall],
        }
    }
}

#[derive(Parser)]
#[command(
    name = "topp-mpc",
    version,
    about = "Walking MPC with time-optimal retiming"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a scenario and write logs, a summary, a plot and a report.
    Run {
        scenario: PathBuf,
        #[arg(long, value_enum, default_value = "hull")]
        method: Method,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Polygon sizes and reduction latency per stance class, as CSV.
    BenchPolygons {
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Quasi-static and critical stance switches around one single support.
    SwitchAnalysis {
        scenario: PathBuf,
        /// Support foot of the analyzed single support.
        #[arg(long, default_value_t = 1)]
        step: usize,
        /// Path indices of the polygon snapshots (defaults to an even spread).
        #[arg(long, value_delimiter = ',')]
        at: Vec<f64>,
        /// SVG of the polygon snapshots.
        #[arg(long)]
        svg: Option<PathBuf>,
    },
    /// Retime a path under a constraints file; prints `s, sdot2, t` as CSV.
    Retime {
        path: PathBuf,
        constraints: PathBuf,
        /// Write the CSV here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("TOPP_MPC_LOG", "error")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run {
            scenario,
            method,
            out,
        } => run::cmd_run(&scenario, method, &out),
        Command::BenchPolygons { trials, seed } => bench::cmd_bench_polygons(trials, seed),
        Command::SwitchAnalysis {
            scenario,
            step,
            at,
            svg,
        } => switch::cmd_switch_analysis(&scenario, step, &at, svg.as_deref()),
        Command::Retime {
            path,
            constraints,
            out,
        } => retime::cmd_retime(&path, &constraints, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
