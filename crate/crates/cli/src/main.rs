use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qdc_core::experiment::{
    run_config, run_generate, run_partition, run_profile, run_sweep, ExperimentConfig, PipelineError,
};

/// Partition circuits across QPUs and simulate entanglement scheduling on a
/// Clos quantum data-center network.
#[derive(Parser)]
#[command(name = "qdc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the configured circuit as QASM.
    Generate(Common),
    /// Partition the circuit and report EPR costs.
    Partition(Common),
    /// Run every configured strategy and write statistics.
    Simulate(Common),
    /// Simulate with unlimited resources and report peak BSM usage.
    Profile(Common),
    /// Run the cartesian product of the sweep lists.
    Sweep(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; omitted fields take their defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<u64>,
    /// Also write the trial-0 event log as JSON lines.
    #[arg(long)]
    emit_events: bool,
}

impl Common {
    fn load(&self) -> Result<(ExperimentConfig, PathBuf), PipelineError> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load(path)?,
            None => ExperimentConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(trials) = self.trials {
            cfg.trials = trials;
        }
        cfg.emit_events |= self.emit_events;
        if let Some(out) = &self.out {
            cfg.output = out.clone();
        }
        let out = cfg.output.clone();
        Ok((cfg, out))
    }
}

type Action = fn(&ExperimentConfig, &std::path::Path) -> Result<String, PipelineError>;

fn run(cli: Cli) -> Result<String, PipelineError> {
    let (common, action): (&Common, Action) = match &cli.command {
        Command::Generate(c) => (c, run_generate),
        Command::Partition(c) => (c, run_partition),
        Command::Simulate(c) => (c, run_config),
        Command::Profile(c) => (c, run_profile),
        Command::Sweep(c) => (c, run_sweep),
    };
    let (cfg, out) = common.load()?;
    action(&cfg, &out)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            let code = if e.is_validation() { 2 } else { 1 };
            eprintln!("error: {:#}", anyhow::Error::new(e));
            ExitCode::from(code)
        }
    }
}
