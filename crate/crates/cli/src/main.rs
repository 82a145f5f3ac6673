use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, Result};
use clap::{Parser, Subcommand, ValueEnum};
use hin_recovery::FeatureAggregation;
use hin_recovery_cli::commands;
use hin_recovery_cli::config::ExperimentConfig;
use hin_recovery_cli::ingest::{self, EdgeList};

/// Recover link weights in a heterogeneous network from meta-path random walks.
#[derive(Parser)]
#[command(name = "hinrec", version)]
struct Cli {
    /// Experiment configuration (TOML).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Edge list to use instead of the configured one.
    #[arg(long, global = true)]
    input: Option<PathBuf>,
    /// The edge list starts with a header line.
    #[arg(long, global = true)]
    header: bool,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Significance level for admitting a regressor.
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Keep the hole target column in the regression.
    #[arg(long, global = true)]
    keep_holes: bool,
    /// How feature groups combine their tables.
    #[arg(long, global = true, value_enum)]
    feature_agg: Option<Agg>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Agg {
    Mean,
    Sum,
}

#[derive(Subcommand)]
enum Command {
    /// Forward selection on the whole network; writes the trace and fitted values.
    Describe,
    /// Monte Carlo cross-validation of the selected model.
    Recover {
        /// Split the pivot type by category and validate each part separately.
        #[arg(long)]
        per_category: bool,
    },
    /// Compare the real selection against reshuffled null networks.
    Nullcheck {
        /// Number of null networks (overrides the config).
        #[arg(long)]
        replicates: Option<usize>,
    },
    /// Print a random-walk table as `src,dst,prob`.
    Pcrw {
        #[arg(long)]
        metapath: String,
        /// Only the row of this source node id.
        #[arg(long)]
        source: Option<String>,
    },
    /// Print node and link types.
    Schema,
}

impl Cli {
    fn experiment(&self) -> Result<ExperimentConfig> {
        let path = self
            .config
            .as_ref()
            .ok_or_else(|| anyhow!("this command needs --config"))?;
        let mut cfg = ExperimentConfig::load(path)?;
        if let Some(input) = &self.input {
            cfg.input = input.clone();
            cfg.header = self.header;
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        if let Some(alpha) = self.alpha {
            cfg.alpha = alpha;
        }
        if let Some(out) = &self.out {
            cfg.out = out.clone();
        }
        cfg.keep_holes |= self.keep_holes;
        if let Some(agg) = self.feature_agg {
            cfg.feature_agg = match agg {
                Agg::Mean => FeatureAggregation::Mean,
                Agg::Sum => FeatureAggregation::Sum,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The network for inspection commands: `--input` alone, or the
    /// configured one with its inverses and merges.
    fn network(&self) -> Result<EdgeList> {
        match (&self.config, &self.input) {
            (Some(_), _) => commands::load_network(&self.experiment()?),
            (None, Some(input)) => Ok(ingest::load(input, self.header)?),
            (None, None) => Err(anyhow!("give --input or --config")),
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Describe => commands::describe(&cli.experiment()?),
        Command::Recover { per_category } => commands::recover(&cli.experiment()?, *per_category),
        Command::Nullcheck { replicates } => {
            let mut cfg = cli.experiment()?;
            if let Some(r) = replicates {
                cfg.null.replicates = *r;
            }
            commands::nullcheck(&cfg)
        }
        Command::Pcrw { metapath, source } => {
            let list = cli.network()?;
            let mut out = io::stdout().lock();
            commands::pcrw_dump(&list, metapath, source.as_deref(), &mut out)?;
            out.flush()?;
            Ok(())
        }
        Command::Schema => {
            let list = cli.network()?;
            let mut out = io::stdout().lock();
            commands::schema_dump(&list, &mut out)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
