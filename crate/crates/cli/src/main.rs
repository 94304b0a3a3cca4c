use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use forward_ec_cli::{cmd_bench, cmd_mixture, cmd_sample, cmd_scaling, CliError, ConfigError, ExperimentConfig};

#[derive(Parser)]
#[command(name = "forward-ec", version, about = "Forward event-chain Monte Carlo experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one trajectory and write its segments and samples.
    Sample(Common),
    /// Replicated runs with autocorrelation times and ESS per observable.
    Bench(Common),
    /// Autocorrelation times across dimensions with power-law fits.
    Scaling(Common),
    /// Mode occupancy and first-coordinate histograms on a mixture target.
    Mixture(Common),
}

#[derive(Args)]
struct Common {
    /// Flat key = value configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set run.delta=0.5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Print the resolved configuration before running.
    #[arg(long)]
    print_config: bool,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, CliError> {
        let text = match &self.config {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| ConfigError::new("--config", format!("{}: {e}", p.display())))?,
            None => String::new(),
        };
        let mut overrides = self.set.clone();
        let mut flag = |key: &str, v: Option<String>| {
            if let Some(v) = v {
                overrides.push(format!("{key}={v}"));
            }
        };
        flag("run.seed", self.seed.map(|v| v.to_string()));
        flag("run.replicas", self.replicas.map(|v| v.to_string()));
        flag("run.workers", self.workers.map(|v| v.to_string()));
        flag("run.out", self.out.as_ref().map(|p| p.display().to_string()));
        Ok(ExperimentConfig::parse(&text, &overrides)?)
    }
}

type CommandFn = fn(&ExperimentConfig) -> Result<Vec<PathBuf>, CliError>;

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let (common, f): (&Common, CommandFn) = match &cli.command {
        Command::Sample(c) => (c, cmd_sample),
        Command::Bench(c) => (c, cmd_bench),
        Command::Scaling(c) => (c, cmd_scaling),
        Command::Mixture(c) => (c, cmd_mixture),
    };
    let cfg = common.load()?;
    if common.print_config {
        eprint!("{}", cfg.to_text());
    }
    f(&cfg)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(files) => {
            for f in files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
