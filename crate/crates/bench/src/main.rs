use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use seqplane_bench::experiment::format_comparison;
use seqplane_bench::{compare, read_csv, run_experiment, write_csv, ExperimentConfig, FunctionKind, Method, Simulation};
use seqplane_core::GridSpec;

#[derive(Parser)]
#[command(name = "bench", about = "Simulated-user benchmark for sequential plane search")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run trials and write per-iteration optimality gaps as CSV.
    Run(RunArgs),
    /// Summarize a CSV at one iteration with pairwise Mann-Whitney tests.
    Compare {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        iter: usize,
        #[arg(long, default_value_t = 0.05)]
        alpha: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sls,
    SpsRandom,
    SpsBo,
    All,
}

#[derive(Clone, Copy, ValueEnum)]
enum FunctionArg {
    Gaussian,
    Rosenbrock,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, value_enum, default_value = "all")]
    method: MethodArg,
    #[arg(long, value_enum)]
    function: FunctionArg,
    #[arg(long)]
    dim: usize,
    #[arg(long, default_value_t = 15)]
    iters: usize,
    #[arg(long, default_value_t = 50)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 5)]
    grid_res: usize,
    #[arg(long, default_value_t = 4)]
    grid_levels: usize,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Simulated plane answers pick the best of a 129x129 lattice instead of using the grid.
    #[arg(long)]
    continuous_sim: bool,
}

fn run(args: RunArgs) -> Result<(), Box<dyn std::error::Error>> {
    let methods = match args.method {
        MethodArg::Sls => vec![Method::Sls],
        MethodArg::SpsRandom => vec![Method::SpsRandom],
        MethodArg::SpsBo => vec![Method::SpsBo],
        MethodArg::All => Method::ALL.to_vec(),
    };
    let function = match args.function {
        FunctionArg::Gaussian => FunctionKind::IsotropicGaussian,
        FunctionArg::Rosenbrock => FunctionKind::NegScaledRosenbrock,
    };
    let mut config = ExperimentConfig::new(methods, vec![function], vec![args.dim], args.trials, args.iters);
    config.base_seed = args.seed;
    config.grid = GridSpec::new(args.grid_res, args.grid_levels, 2.0)?;
    if args.continuous_sim {
        config.simulation = Simulation::Continuous { side: 129 };
    }
    let rows = run_experiment(&config)?;
    let failures = rows.iter().filter(|r| !r.error.is_empty()).count();
    match args.out {
        Some(path) => write_csv(&rows, BufWriter::new(File::create(path)?))?,
        None => write_csv(&rows, std::io::stdout().lock())?,
    }
    if failures > 0 {
        eprintln!("{failures} trial(s) failed; see the error column");
    }
    Ok(())
}

fn main() -> ExitCode {
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Compare { input, iter, alpha } => (|| {
            let rows = read_csv(File::open(input)?)?;
            let mut out = std::io::stdout().lock();
            for c in compare(&rows, iter, alpha)? {
                write!(out, "{}", format_comparison(&c))?;
            }
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
