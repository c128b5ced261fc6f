use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod error;

use error::CliError;

#[derive(Parser, Debug)]
#[command(
    name = "nmkit",
    version,
    about = "Trace-distance non-Markovianity toolkit"
)]
struct Cli {
    /// Worker threads for parallel sections.
    #[arg(long, env = "NMKIT_THREADS", global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Memory amplitude G(t) of the decay model with its rates.
    Gfun {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = GMode::Numeric)]
        mode: GMode,
    },
    /// Evolve a state under a time-local generator or the decay model.
    Evolve {
        #[command(flatten)]
        common: Common,
    },
    /// Non-Markovianity measure maximized over initial pairs.
    Measure {
        #[command(flatten)]
        common: Common,
    },
    /// Complete-positivity audit of the intermediate maps of a family.
    Divisibility {
        #[command(flatten)]
        common: Common,
    },
    /// Local witness for initial system-environment correlations.
    Witness {
        #[command(flatten)]
        common: Common,
    },
    /// Measure of the decay model over a list of coupling strengths.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Scenario file (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output file; standard output if omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long = "t-max")]
    pub t_max: Option<f64>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum GMode {
    Analytic,
    Numeric,
    Both,
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(e.to_string()))?;
    }
    match cli.command {
        Command::Gfun { common, mode } => commands::gfun(&common, mode),
        Command::Evolve { common } => commands::evolve(&common),
        Command::Measure { common } => commands::measure(&common),
        Command::Divisibility { common } => commands::divisibility(&common),
        Command::Witness { common } => commands::witness(&common),
        Command::Sweep { common } => commands::sweep(&common),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("nmkit: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
