mod bench;
mod commands;
mod emit;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use vrpwdn::ils::IlsParams;
use vrpwdn::instance::Instance;
use vrpwdn::io::{read_instance, read_solution};
use vrpwdn::solution::Solution;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    /// The run completed but the answer is "no": infeasible input or a
    /// solution with violations.
    #[error("{0}")]
    Rejected(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Rejected(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<vrpwdn::io::FormatError> for CliError {
    fn from(e: vrpwdn::io::FormatError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<vrpwdn::milp::MilpError> for CliError {
    fn from(e: vrpwdn::milp::MilpError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<vrpwdn::generator::GenError> for CliError {
    fn from(e: vrpwdn::generator::GenError) -> Self {
        use vrpwdn::generator::GenError;
        match e {
            GenError::Impossible(_) | GenError::SingleNode => CliError::Usage(e.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<vrpwdn::ils::IlsError> for CliError {
    fn from(e: vrpwdn::ils::IlsError) -> Self {
        match e {
            vrpwdn::ils::IlsError::InvalidParams(m) => CliError::Usage(m),
            other => CliError::Rejected(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "vrpwdn", version, about = "Routing for water distribution network inspections")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate instance files for a benchmark suite or a single subset.
    Gen(commands::GenArgs),
    /// Run the iterated local search on one instance.
    Solve(commands::SolveArgs),
    /// Solve a tiny instance to optimality by enumeration.
    Exact(commands::ExactArgs),
    /// Run repeated searches over many instances and write CSV tables.
    Bench(bench::BenchArgs),
    /// Write MILP models as LP or MPS files.
    Emit(emit::EmitArgs),
    /// Check a solution file, or solver output against a model.
    Validate(commands::ValidateArgs),
    /// Sweep the parameter grid over a set of instances.
    Tune(bench::TuneArgs),
}

/// Search parameters shared by `solve`, `bench` and `tune`.
#[derive(Args, Debug, Clone)]
pub struct SearchArgs {
    /// Share of demand nodes the perturbations remove.
    #[arg(long, default_value_t = 0.10)]
    alpha: f64,
    /// Size of the best-known solution set.
    #[arg(long, default_value_t = 5)]
    beta: usize,
    /// 3-opt scan budget per local search call.
    #[arg(long, default_value_t = 50)]
    gamma: usize,
    /// Non-improving iterations before a loop stops.
    #[arg(long, default_value_t = 1000)]
    max_iter: usize,
    /// Master seed.
    #[arg(long, env = "VRPWDN_SEED", default_value_t = 0)]
    seed: u64,
    /// Independent runs per instance.
    #[arg(long, default_value_t = 5)]
    runs: usize,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    jobs: usize,
}

impl SearchArgs {
    pub fn params(&self) -> IlsParams {
        IlsParams { alpha: self.alpha, beta: self.beta, gamma: self.gamma, max_iter: self.max_iter, seed: self.seed, runs: self.runs, ..IlsParams::default() }
    }

    pub fn pool(&self) -> Result<rayon::ThreadPool, CliError> {
        rayon::ThreadPoolBuilder::new().num_threads(self.jobs).build().map_err(|e| CliError::Usage(e.to_string()))
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Text,
    Json,
}

pub fn load_instance(path: &Path) -> Result<Instance, CliError> {
    read_instance(path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

pub fn load_solution(inst: &Instance, path: &Path) -> Result<Solution, CliError> {
    read_solution(inst, path).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))
}

/// Instance files named directly or found in directories (`*.txt`).
pub fn collect_instances(paths: &[PathBuf]) -> Result<Vec<PathBuf>, CliError> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut found: Vec<PathBuf> =
                std::fs::read_dir(p)?.filter_map(|e| e.ok().map(|e| e.path())).filter(|f| f.extension().is_some_and(|x| x == "txt")).collect();
            found.sort();
            out.extend(found);
        } else if p.exists() {
            out.push(p.clone());
        } else {
            return Err(CliError::Input(format!("{} does not exist", p.display())));
        }
    }
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Gen(a) => commands::gen(a),
        Command::Solve(a) => commands::solve(a),
        Command::Exact(a) => commands::exact(a),
        Command::Bench(a) => bench::bench(a),
        Command::Emit(a) => emit::emit(a),
        Command::Validate(a) => commands::validate(a),
        Command::Tune(a) => bench::tune(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
