//! Thin command-line front end: one subcommand per experiment, all logic in
//! the library. Exits nonzero with a machine-readable error record on
//! failure.

use clap::{Parser, Subcommand};
use kedmd::experiments::{ExperimentConfig, ExperimentId, OutputFormat};

#[derive(Parser)]
#[command(
    name = "kedmd",
    about = "Kernel EDMD Koopman surrogates with probabilistic error certificates",
    version
)]
struct Cli {
    /// Configuration file (TOML); defaults are used when omitted.
    #[arg(long, global = true)]
    config: Option<std::path::PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Output directory override.
    #[arg(long, global = true)]
    out: Option<std::path::PathBuf>,

    /// Output format override: csv or json.
    #[arg(long, global = true)]
    format: Option<OutputFormat>,

    /// Worker thread count override (0 = all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Concentration bound versus empirical estimation-error percentile for
    /// the Ornstein-Uhlenbeck process.
    OuBound,
    /// Kernel EDMD prediction against the closed-form Koopman image of RBF
    /// features on the Ornstein-Uhlenbeck process.
    OuAnalytic,
    /// Train the chosen bilinear Duffing surrogate and save the model file.
    DuffingTrain,
    /// Hyperparameter validation sweep for the Duffing RFF Koopman models.
    DuffingValidate,
    /// Long-horizon bilinear prediction under constant and time-varying
    /// controls.
    DuffingLonghorizon,
    /// Unbounded-growth diagnostic for the logistic-flow Koopman semigroup.
    SemigroupCounterexample,
}

impl Command {
    fn id(&self) -> ExperimentId {
        match self {
            Command::OuBound => ExperimentId::OuBound,
            Command::OuAnalytic => ExperimentId::OuAnalytic,
            Command::DuffingTrain => ExperimentId::DuffingTrain,
            Command::DuffingValidate => ExperimentId::DuffingValidate,
            Command::DuffingLonghorizon => ExperimentId::DuffingLonghorizon,
            Command::SemigroupCounterexample => ExperimentId::SemigroupCounterexample,
        }
    }
}

fn run(cli: Cli) -> kedmd::Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.run.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.run.out = out.display().to_string();
    }
    if let Some(format) = cli.format {
        cfg.run.format = format;
    }
    if let Some(threads) = cli.threads {
        cfg.run.threads = threads;
    }
    if cfg.run.threads > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cfg.run.threads)
            .build_global()
            .ok();
    }

    let id = cli.command.id();
    let tables = kedmd::experiments::run_experiment(id, &cfg)?;
    for t in &tables {
        let ext = match cfg.run.format {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        };
        eprintln!(
            "{}: wrote {}/{}.{ext} ({} rows)",
            id.name(),
            cfg.run.out,
            t.name,
            t.rows.len()
        );
    }
    Ok(())
}

fn main() {
    let cli = Cli::parse();
    let experiment = cli.command.id().name().to_string();
    if let Err(e) = run(cli) {
        let record = serde_json::json!({
            "error": e.to_string(),
            "experiment": experiment,
        });
        eprintln!("{record}");
        std::process::exit(1);
    }
}
