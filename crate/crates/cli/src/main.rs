mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::{ConfigError, FileConfig, Globals};

#[derive(Debug, Parser)]
#[command(name = "higs", version, about = "Fractional-order HIGS simulation and describing-function analysis")]
struct Cli {
    /// TOML file with the same keys as the flags; flags win.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Directory for CSV data and the run manifest.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Sample period in seconds.
    #[arg(long, global = true)]
    dt: Option<f64>,
    /// Simulated time in seconds.
    #[arg(long, global = true)]
    duration: Option<f64>,
    /// Worker threads for sweeps (0 picks the core count).
    #[arg(long, global = true, value_name = "N")]
    parallel: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Describing function of the fractional HIGS over a frequency grid.
    Df(commands::df::DfArgs),
    /// Time-domain response of the fractional HIGS.
    Simulate(commands::simulate::SimulateArgs),
    /// Harmonic content of generalized HIGS architectures a and b.
    Harmonics(commands::harmonics::HarmonicsArgs),
    /// Closed-loop step response with the nonlinear PID.
    Step(commands::step::StepArgs),
}

const EXIT_CONFIG: u8 = 2;
const EXIT_NUMERICAL: u8 = 3;

fn run(cli: Cli) -> anyhow::Result<()> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let globals = Globals::resolve(cli.out, cli.dt, cli.duration, cli.parallel, &file)?;
    let pool = rayon::ThreadPoolBuilder::new().num_threads(globals.parallel).build()?;
    pool.install(|| match cli.command {
        Command::Df(args) => commands::df::run(args, file.df.unwrap_or_default(), &globals),
        Command::Simulate(args) => commands::simulate::run(args, file.simulate.unwrap_or_default(), &globals),
        Command::Harmonics(args) => commands::harmonics::run(args, file.harmonics.unwrap_or_default(), &globals),
        Command::Step(args) => commands::step::run(args, file.step.unwrap_or_default(), &globals),
    })
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.downcast_ref::<ConfigError>().is_some() {
            return EXIT_CONFIG;
        }
        if let Some(e) = cause.downcast_ref::<higs::HigsError>() {
            return if config::is_parameter_error(e) { EXIT_CONFIG } else { EXIT_NUMERICAL };
        }
    }
    1
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
