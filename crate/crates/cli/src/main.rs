use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use locmc_cli::bounds::verify_bounds;
use locmc_cli::config::{ExampleId, ExperimentConfig, CONFIG_TEMPLATE};
use locmc_cli::report::{write_bounds, write_experiment};
use locmc_cli::run_experiment;
use locmc_cli::CliError;

const EXIT_CONFIG: u8 = 1;
const EXIT_FAILED_CELL: u8 = 2;

#[derive(Parser)]
#[command(name = "locmc", version, about = "Run localized MCMC experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed of the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Overrides the output directory of the config file.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for concurrent cells; 0 uses all cores.
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (sampler, size) cell and write results.csv and summary.json.
    Run(RunArgs),
    /// Evaluate perturbation and rate bounds against exact values.
    VerifyBounds(RunArgs),
    /// List the available examples and their samplers.
    ListExamples,
    /// Print a commented configuration file.
    PrintConfigTemplate,
}

fn load(args: &RunArgs) -> Result<ExperimentConfig, CliError> {
    let mut cfg = ExperimentConfig::from_path(&args.config)?;
    if let Some(s) = args.seed {
        cfg.experiment.seed = s;
    }
    if let Some(o) = &args.out {
        cfg.experiment.out = o.clone();
    }
    if args.threads > 0 {
        rayon::ThreadPoolBuilder::new().num_threads(args.threads).build_global().map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(cfg)
}

fn exit_for(e: &CliError) -> ExitCode {
    eprintln!("error: {e}");
    match e {
        CliError::Config(_) => ExitCode::from(EXIT_CONFIG),
        _ => ExitCode::from(EXIT_FAILED_CELL),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::ListExamples => {
            for ex in ExampleId::ALL {
                let names: Vec<&str> = ex.samplers().iter().map(|s| s.name()).collect();
                println!("{:<4} {}\n     samplers: {}", ex.name(), ex.description(), names.join(", "));
            }
            ExitCode::SUCCESS
        }
        Command::PrintConfigTemplate => {
            print!("{CONFIG_TEMPLATE}");
            ExitCode::SUCCESS
        }
        Command::Run(args) => {
            let cfg = match load(&args) {
                Ok(c) => c,
                Err(e) => return exit_for(&e),
            };
            let report = match run_experiment(&cfg).and_then(|r| write_experiment(&cfg.experiment.out, &r).map(|_| r)) {
                Ok(r) => r,
                Err(e) => return exit_for(&e),
            };
            for r in report.rows.iter().filter(|r| !r.ok()) {
                eprintln!("cell {} {} failed: {}", r.sampler, r.l_or_side, r.error.as_deref().unwrap_or(""));
            }
            println!("wrote {} rows to {}", report.rows.len(), cfg.experiment.out.display());
            if report.failed_cells() > 0 {
                ExitCode::from(EXIT_FAILED_CELL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Command::VerifyBounds(args) => {
            let cfg = match load(&args) {
                Ok(c) => c,
                Err(e) => return exit_for(&e),
            };
            let report = match verify_bounds(&cfg).and_then(|r| write_bounds(&cfg.experiment.out, &r).map(|_| r)) {
                Ok(r) => r,
                Err(e) => return exit_for(&e),
            };
            println!("wrote {} bound rows to {}", report.rows.len(), cfg.experiment.out.display());
            if report.all_dominant() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED_CELL)
            }
        }
    }
}
