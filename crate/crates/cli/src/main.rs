use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use localest::harness::{self, ExperimentConfig, RunSummary, Study};

/// Local-measurement diffusivity estimation for the stochastic heat equation.
#[derive(Parser, Debug)]
#[command(name = "localest", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample one replication and store the full measurement paths.
    Simulate(Common),
    /// Estimate θ from stored paths (written by `simulate`).
    Estimate {
        #[command(flatten)]
        common: Common,
        /// Directory holding paths.csv; defaults to the output directory.
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Run the study named in the config.
    Experiment(Common),
    /// Run the internal oracle consistency checks.
    ValidateOracle(Common),
    /// Print the asymptotic constants table as CSV.
    Asymptotics(Common),
}

#[derive(Args, Debug)]
struct Common {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self, fallback: Option<Study>) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.config, fallback) {
            (Some(path), _) => ExperimentConfig::from_file(path).with_context(|| format!("loading {}", path.display()))?,
            (None, Some(study)) => ExperimentConfig::defaults(study),
            (None, None) => bail!("--config is required"),
        };
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(o) = &self.out {
            cfg.output_dir = o.clone();
        }
        Ok(cfg)
    }
}

fn report(summary: &RunSummary) -> ExitCode {
    for w in &summary.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "{}: wrote {} file(s) to {} (config {})",
        summary.study,
        summary.manifest.files.len(),
        summary.dir.display(),
        &summary.manifest.config_hash[..12]
    );
    if summary.failed > 0 {
        eprintln!("{}: {} item(s) did not finish ok", summary.study, summary.failed);
    }
    ExitCode::SUCCESS
}

fn print_file(path: &Path) -> Result<()> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    print!("{text}");
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Simulate(c) => {
            let cfg = c.load(None)?;
            Ok(report(&harness::simulate_paths(&cfg)?))
        }
        Command::Estimate { common, input } => {
            let cfg = common.load(None)?;
            let input = input.unwrap_or_else(|| cfg.output_dir.clone());
            Ok(report(&harness::estimate_paths(&cfg, &input)?))
        }
        Command::Experiment(c) => {
            let cfg = c.load(None)?;
            Ok(report(&harness::run(&cfg)?))
        }
        Command::ValidateOracle(c) => {
            let mut cfg = c.load(Some(Study::ValidateOracle))?;
            cfg.study = Study::ValidateOracle;
            let summary = harness::run(&cfg)?;
            print_file(&summary.dir.join("oracle.csv"))?;
            report(&summary);
            // a failed check is a failed validation
            Ok(if summary.failed > 0 { ExitCode::from(1) } else { ExitCode::SUCCESS })
        }
        Command::Asymptotics(c) => {
            let mut cfg = c.load(Some(Study::AsymptoticsTable))?;
            cfg.study = Study::AsymptoticsTable;
            let summary = harness::run(&cfg)?;
            print_file(&summary.dir.join("asymptotics.csv"))?;
            Ok(report(&summary))
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
