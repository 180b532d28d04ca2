//! `covert-dht`: exponents, covertness checks and error-probability sweeps
//! for covert distributed hypothesis testing.
//!
//! Monte-Carlo trials run on the rayon global pool; set `RAYON_NUM_THREADS`
//! to control its size. Results do not depend on the thread count.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use covert_dht::commands::{self, Overrides};
use covert_dht::config::{ExperimentConfig, Format, OutputSpec};
use covert_dht::{exit, CliError};

#[derive(Parser)]
#[command(name = "covert-dht", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Check the covert-channel conditions and report connectivity.
    CheckChannel(ConfigArg),
    /// Compute E1, E2, E3, the improvement check and the achievable exponent.
    Exponents {
        #[command(flatten)]
        config: ConfigArg,
        /// Type-I error ceiling (recorded only).
        #[arg(long, default_value_t = 0.05)]
        eps: f64,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Estimate type-I/II error probabilities over the sweep.
    Simulate(RunArgs),
    /// Compare the warden's exact divergence with its bounds over the sweep.
    VerifyCovertness(RunArgs),
    /// Reproduce the binary example with pass/fail checks.
    Example,
}

#[derive(Args)]
struct ConfigArg {
    /// Experiment configuration (JSON).
    #[arg(long)]
    config: PathBuf,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    config: ConfigArg,
    /// Blocklengths, overriding `sweep.n_grid`.
    #[arg(long, value_delimiter = ',')]
    n: Option<Vec<usize>>,
    /// Monte-Carlo trials per point, overriding `sweep.trials`.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Sparsity parameters, overriding `sweep.mu_grid`.
    #[arg(long, value_delimiter = ',')]
    mu: Option<Vec<f64>>,
    /// Output file, overriding `output.path`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn load(arg: &ConfigArg) -> Result<ExperimentConfig, CliError> {
    let text = std::fs::read_to_string(&arg.config)
        .map_err(|e| CliError::Parse(format!("{}: {e}", arg.config.display())))?;
    ExperimentConfig::from_json(&text).map_err(|e| CliError::Parse(format!("{}: {e}", arg.config.display())))
}

fn prepare(args: &RunArgs) -> Result<(ExperimentConfig, Format), CliError> {
    let overrides = Overrides { n: args.n.clone(), trials: args.trials, seed: args.seed, mu: args.mu.clone() };
    let mut cfg = overrides.apply(&load(&args.config)?);
    let format = args.format.or(cfg.output.as_ref().map(|o| o.format)).unwrap_or(Format::Csv);
    if let Some(path) = &args.out {
        cfg.output = Some(OutputSpec { path: path.clone(), format });
    }
    Ok((cfg, format))
}

fn run(cli: Cli) -> Result<i32, CliError> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    let code = match cli.command {
        Command::CheckChannel(c) => commands::check_channel(&load(&c)?, &mut out)?,
        Command::Exponents { config, eps, json } => commands::exponents(&load(&config)?, eps, json, &mut out)?,
        Command::Simulate(args) => {
            let (cfg, format) = prepare(&args)?;
            let mut err = std::io::stderr();
            commands::with_output(&cfg, &mut out, |w| commands::simulate(&cfg, format, w, &mut err))?
        }
        Command::VerifyCovertness(args) => {
            let (cfg, format) = prepare(&args)?;
            commands::with_output(&cfg, &mut out, |w| commands::verify_covertness(&cfg, format, w))?
        }
        Command::Example => commands::example(&mut out)?,
    };
    out.flush()?;
    Ok(code)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::PARSE as u8 } else { exit::OK as u8 });
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
