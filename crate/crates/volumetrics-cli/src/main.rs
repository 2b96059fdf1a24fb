//! Command-line front end for the volumetrics toolkit.
//!
//! Every command is a pure function of its input files, the resolved
//! configuration, and the seed: outputs land in a seed-named run
//! directory under `--out`, and rerunning with identical settings
//! overwrites them with identical bytes. Options resolve in a fixed
//! order: built-in defaults, then `--config FILE`, then flags.

mod commands;
mod config;
mod errors;

use std::path::PathBuf;
use std::str::FromStr;

use chrono::NaiveDate;
use clap::{ArgAction, Args, Parser, Subcommand};

use config::{MethodName, QuintileKeyName, RunConfig, StudyName};
use errors::CliError;

#[derive(Parser)]
#[command(
    name = "volumetrics",
    version,
    about = "Estimate hourly traffic volumes from probe data and evaluate the estimators"
)]
struct Cli {
    /// Flat `key = value` config file applied before any flags.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic dataset with known ground truth.
    Generate(GenerateArgs),
    /// Train a volume model and save it with its standardizer.
    Train(TrainArgs),
    /// Score hours without sensor coverage using a saved model.
    Predict(PredictArgs),
    /// Leave-one-station-out cross-validation for one method.
    Cv(MethodArgs),
    /// Compare two methods carriageway by carriageway.
    Compare(CompareArgs),
    /// Accuracy split into probe-observability quintiles.
    Quintiles(QuintilesArgs),
    /// Overfitting or dropout study on the network.
    Study(StudyArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Seed for every derived random stream; required, never defaulted
    /// from the clock.
    #[arg(long)]
    seed: Option<u64>,
    /// Dataset directory holding observations.csv and stations.csv.
    #[arg(long, value_name = "DIR")]
    dataset: Option<PathBuf>,
    /// Root for run directories.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Replacement per-lane capacity table CSV.
    #[arg(long, value_name = "FILE")]
    capacity_table: Option<PathBuf>,
    /// Worker threads for parallel folds; 0 means one per core.
    #[arg(long, value_name = "N")]
    jobs: Option<usize>,
}

impl CommonArgs {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(seed) = self.seed {
            config.seed = Some(seed);
        }
        if let Some(dataset) = &self.dataset {
            config.dataset = Some(dataset.clone());
        }
        if let Some(out) = &self.out {
            config.out = out.clone();
        }
        if let Some(table) = &self.capacity_table {
            config.capacity_table = Some(table.clone());
        }
        if let Some(jobs) = self.jobs {
            config.jobs = jobs;
        }
    }
}

#[derive(Args)]
struct NetworkArgs {
    /// Hidden layer widths, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "N,N,...")]
    hidden: Option<Vec<usize>>,
    /// Dropout keep probability in (0, 1]; 1 disables dropout.
    #[arg(long)]
    keep_prob: Option<f64>,
    /// Training epochs.
    #[arg(long)]
    epochs: Option<usize>,
    /// Mini-batch size.
    #[arg(long)]
    batch_size: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    learning_rate: Option<f64>,
    /// Batch normalization for `train` and `study` (true or false).
    #[arg(long, value_name = "BOOL")]
    batchnorm: Option<bool>,
}

impl NetworkArgs {
    fn apply(&self, config: &mut RunConfig) {
        if let Some(hidden) = &self.hidden {
            config.hidden = hidden.clone();
        }
        if let Some(keep_prob) = self.keep_prob {
            config.keep_prob = keep_prob;
        }
        if let Some(epochs) = self.epochs {
            config.epochs = epochs;
        }
        if let Some(batch_size) = self.batch_size {
            config.batch_size = batch_size;
        }
        if let Some(learning_rate) = self.learning_rate {
            config.learning_rate = learning_rate;
        }
        if let Some(batchnorm) = self.batchnorm {
            config.batchnorm = batchnorm;
        }
    }
}

#[derive(Args)]
struct GenerateArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Number of count stations in the synthetic world.
    #[arg(long)]
    n_stations: Option<usize>,
    /// Days of hourly data to generate (at least 7).
    #[arg(long)]
    n_days: Option<usize>,
    /// First day of the generated range, e.g. 2019-06-03.
    #[arg(long, value_name = "DATE")]
    start_date: Option<NaiveDate>,
    /// Lowest probe penetration rate across stations.
    #[arg(long)]
    penetration_lo: Option<f64>,
    /// Highest probe penetration rate across stations.
    #[arg(long)]
    penetration_hi: Option<f64>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    network: NetworkArgs,
    /// Station left out of training to watch generalization.
    #[arg(long, value_name = "STATION")]
    holdout: Option<String>,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Saved model file from `train`.
    #[arg(long, value_name = "FILE")]
    model: Option<PathBuf>,
    /// Also score hours that already have sensor coverage.
    #[arg(long, action = ArgAction::SetTrue)]
    include_covered: bool,
}

#[derive(Args)]
struct MethodArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    network: NetworkArgs,
    /// Estimator: ann, ann_nobn, profile, linreg, knn or ensemble.
    #[arg(long, value_parser = MethodName::from_str)]
    method: Option<MethodName>,
    /// Neighbors for the knn method.
    #[arg(long)]
    knn_k: Option<usize>,
    /// Networks in the ensemble method.
    #[arg(long)]
    ensemble_members: Option<usize>,
}

impl MethodArgs {
    fn apply(&self, config: &mut RunConfig) {
        self.common.apply(config);
        self.network.apply(config);
        if let Some(method) = self.method {
            config.method = Some(method);
        }
        if let Some(k) = self.knn_k {
            config.knn_k = k;
        }
        if let Some(members) = self.ensemble_members {
            config.ensemble_members = members;
        }
    }
}

#[derive(Args)]
struct CompareArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    network: NetworkArgs,
    /// First estimator of the pair.
    #[arg(long, value_parser = MethodName::from_str, value_name = "METHOD")]
    method_a: Option<MethodName>,
    /// Second estimator of the pair.
    #[arg(long, value_parser = MethodName::from_str, value_name = "METHOD")]
    method_b: Option<MethodName>,
    /// Neighbors for the knn method.
    #[arg(long)]
    knn_k: Option<usize>,
    /// Networks in the ensemble method.
    #[arg(long)]
    ensemble_members: Option<usize>,
}

#[derive(Args)]
struct QuintilesArgs {
    #[command(flatten)]
    method_args: MethodArgs,
    /// Ranking key: penetration or probe-volume.
    #[arg(long, value_parser = QuintileKeyName::from_str, value_name = "KEY")]
    key: Option<QuintileKeyName>,
}

#[derive(Args)]
struct StudyArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[command(flatten)]
    network: NetworkArgs,
    /// Which study to run: overfit or dropout.
    #[arg(long, value_parser = StudyName::from_str, value_name = "STUDY")]
    which: Option<StudyName>,
    /// Held-out station for the overfit study; defaults to the first.
    #[arg(long, value_name = "STATION")]
    station: Option<String>,
}

fn resolve(file: &Option<PathBuf>, apply: impl FnOnce(&mut RunConfig)) -> Result<RunConfig, CliError> {
    let mut config = RunConfig::default();
    if let Some(path) = file {
        config.apply_file(path)?;
    }
    apply(&mut config);
    Ok(config)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Generate(args) => {
            let config = resolve(&cli.config, |c| {
                args.common.apply(c);
                if let Some(n) = args.n_stations {
                    c.n_stations = n;
                }
                if let Some(n) = args.n_days {
                    c.n_days = n;
                }
                if let Some(date) = args.start_date {
                    c.start_date = date;
                }
                if let Some(lo) = args.penetration_lo {
                    c.penetration_lo = lo;
                }
                if let Some(hi) = args.penetration_hi {
                    c.penetration_hi = hi;
                }
            })?;
            commands::cmd_generate(&config)
        }
        Command::Train(args) => {
            let config = resolve(&cli.config, |c| {
                args.common.apply(c);
                args.network.apply(c);
                if let Some(holdout) = &args.holdout {
                    c.holdout = Some(holdout.clone());
                }
            })?;
            commands::cmd_train(&config)
        }
        Command::Predict(args) => {
            let config = resolve(&cli.config, |c| {
                args.common.apply(c);
                if let Some(model) = &args.model {
                    c.model = Some(model.clone());
                }
                if args.include_covered {
                    c.include_covered = true;
                }
            })?;
            commands::cmd_predict(&config)
        }
        Command::Cv(args) => {
            let config = resolve(&cli.config, |c| args.apply(c))?;
            commands::cmd_cv(&config)
        }
        Command::Compare(args) => {
            let config = resolve(&cli.config, |c| {
                args.common.apply(c);
                args.network.apply(c);
                if let Some(a) = args.method_a {
                    c.method_a = Some(a);
                }
                if let Some(b) = args.method_b {
                    c.method_b = Some(b);
                }
                if let Some(k) = args.knn_k {
                    c.knn_k = k;
                }
                if let Some(members) = args.ensemble_members {
                    c.ensemble_members = members;
                }
            })?;
            commands::cmd_compare(&config)
        }
        Command::Quintiles(args) => {
            let config = resolve(&cli.config, |c| {
                args.method_args.apply(c);
                if let Some(key) = args.key {
                    c.key = key;
                }
            })?;
            commands::cmd_quintiles(&config)
        }
        Command::Study(args) => {
            let config = resolve(&cli.config, |c| {
                args.common.apply(c);
                args.network.apply(c);
                if let Some(which) = args.which {
                    c.which = Some(which);
                }
                if let Some(station) = &args.station {
                    c.station = Some(station.clone());
                }
            })?;
            commands::cmd_study(&config)
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(error) = run(&cli) {
        eprintln!("error ({}): {error}", error.category());
        std::process::exit(error.exit_code());
    }
}
