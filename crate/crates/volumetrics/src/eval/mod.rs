//! Leave-one-station-out evaluation harness.
//!
//! Every fold holds out one count station entirely: both of its
//! carriageways disappear from the training pool, the standardizer and
//! any profile factors are fit on the remaining stations only, and the
//! trained estimator then predicts the held-out hours. Each carriageway
//! of the held-out station becomes one [`CarriagewayOutcome`] scored
//! with the four volume metrics, so methods can be compared pairwise
//! across carriageways afterwards.
//!
//! Folds are independent and run in parallel. All randomness is derived
//! from the base seed and the fold position, never from thread timing,
//! so a run's results are byte-identical at any worker count.

mod report;
mod studies;
mod summary;

pub use report::{write_cv_report, LONG_CSV_FILE, REPORT_JSON_FILE, REPORT_TEXT_FILE};
pub use studies::{dropout_study, overfit_study, trend_slope, DropoutArm, DropoutStudy, OverfitStudy};
pub use summary::{
    five_number_summary, quintile_analysis, quintile_sizes, FiveNumberSummary, QuintileBucket,
    QuintileKey,
};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;

use chrono::NaiveDateTime;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::{
    derive_profile_factors, ensemble_average, estimate_profile, knn_fit, knn_predict, linreg_fit,
    linreg_predict, BaselineError,
};
use crate::features::{
    assemble, layout, read_ground_truth, read_holidays, read_observations, read_stations,
    Direction, FeatureError, FeatureVector, GroundTruthRow, HolidayCalendar, HourlyObservation,
    Standardizer, StationMeta,
};
use crate::metrics::{
    mape, metric_report, r_squared, wilcoxon_signed_rank, CapacityTable, Facility, MetricReport,
    MetricsError, WilcoxonResult,
};
use crate::nn::{
    train, Activation, AdamHyper, DatasetView, LayerSpec, Loss, LossHistory, Mat, NnError,
    TrainConfig,
};
use crate::synth::{
    SyntheticDataset, GROUND_TRUTH_FILE, HOLIDAYS_FILE, OBSERVATIONS_FILE, STATIONS_FILE,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("dataset has no observations")]
    EmptyDataset,
    #[error("{0} stations are not enough for leave-one-station-out evaluation")]
    TooFewStations(usize),
    #[error("no station metadata for carriageway {0}")]
    MissingStationMeta(String),
    #[error("observation {carriageway} at {timestamp} has no target volume")]
    MissingTarget { carriageway: String, timestamp: NaiveDateTime },
    #[error("invalid evaluation config: {0}")]
    InvalidConfig(String),
    #[error("station {0} is not in the dataset")]
    UnknownStation(String),
    #[error("methods cover different carriageways: {0}")]
    MismatchedOutcomes(String),
    #[error("worker pool: {0}")]
    ThreadPool(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Network(#[from] NnError),
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
}

/// Estimation method under evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Method {
    /// The feedforward network, optionally without batch normalization.
    Ann { use_batchnorm: bool },
    /// Day-of-week, hour-of-day factors applied to the station AADT.
    Profile,
    /// Ridge-stabilized least squares on the standardized features.
    LinearRegression,
    /// k-nearest-neighbor regression on the standardized features.
    Knn { k: usize },
    /// Mean of several networks trained from different seeds.
    AnnEnsemble { members: usize },
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Ann { use_batchnorm: true } => write!(f, "ann"),
            Method::Ann { use_batchnorm: false } => write!(f, "ann-no-batchnorm"),
            Method::Profile => write!(f, "profile"),
            Method::LinearRegression => write!(f, "linear-regression"),
            Method::Knn { k } => write!(f, "knn-{k}"),
            Method::AnnEnsemble { members } => write!(f, "ann-ensemble-{members}"),
        }
    }
}

/// Settings for one cross-validation run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvConfig {
    pub method: Method,
    /// Hidden layer widths for the network methods.
    pub hidden_dims: Vec<usize>,
    pub keep_prob: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Root of all per-fold seeds; equal base seeds give equal results.
    pub base_seed: u64,
    /// Worker threads for fold parallelism; 0 means one per core.
    pub jobs: usize,
}

impl Default for CvConfig {
    fn default() -> Self {
        CvConfig {
            method: Method::Ann { use_batchnorm: true },
            hidden_dims: vec![256, 256, 256],
            keep_prob: 0.5,
            epochs: 200,
            batch_size: 256,
            learning_rate: 1e-3,
            base_seed: 0,
            jobs: 0,
        }
    }
}

impl CvConfig {
    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::InvalidConfig(m));
        if let Method::Knn { k } = self.method {
            if k == 0 {
                return bad("knn needs k >= 1".into());
            }
        }
        if let Method::AnnEnsemble { members } = self.method {
            if !(2..=32).contains(&members) {
                return bad(format!("ensemble size {members} must be between 2 and 32"));
            }
        }
        if self.uses_network() {
            if self.hidden_dims.is_empty() || self.hidden_dims.iter().any(|d| *d == 0) {
                return bad(format!("hidden dims {:?} must be positive", self.hidden_dims));
            }
            if !(self.keep_prob > 0.0 && self.keep_prob <= 1.0) {
                return bad(format!("keep_prob {} must be in (0, 1]", self.keep_prob));
            }
            if self.epochs == 0 {
                return bad("epochs must be at least 1".into());
            }
            if self.batch_size == 0 {
                return bad("batch_size must be at least 1".into());
            }
            if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
                return bad(format!("learning rate {} must be positive", self.learning_rate));
            }
        }
        Ok(())
    }

    fn uses_network(&self) -> bool {
        matches!(self.method, Method::Ann { .. } | Method::AnnEnsemble { .. })
    }
}

/// A loaded evaluation dataset. Ground truth is optional; without it the
/// per-carriageway penetration rates are simply unknown. A replacement
/// capacity table can be attached; `None` means the bundled one.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub observations: Vec<HourlyObservation>,
    pub stations: Vec<StationMeta>,
    pub holidays: HolidayCalendar,
    pub ground_truth: Option<Vec<GroundTruthRow>>,
    pub capacity_table: Option<CapacityTable>,
}

fn carriageway_key(station_id: &str, direction: Direction) -> String {
    format!("{station_id}-{direction}")
}

impl Dataset {
    pub fn from_synthetic(world: SyntheticDataset) -> Self {
        Dataset {
            observations: world.observations,
            stations: world.stations,
            holidays: world.holidays,
            ground_truth: Some(world.ground_truth),
            capacity_table: None,
        }
    }

    /// Reads a dataset directory. Observations and stations are
    /// required; the holiday file and ground truth sidecar are optional.
    pub fn load_dir(dir: &Path) -> Result<Self, EvalError> {
        let observations = read_observations(dir.join(OBSERVATIONS_FILE))?;
        let stations = read_stations(dir.join(STATIONS_FILE))?;
        let holidays_path = dir.join(HOLIDAYS_FILE);
        let holidays = if holidays_path.exists() {
            read_holidays(holidays_path)?
        } else {
            HolidayCalendar::empty()
        };
        let truth_path = dir.join(GROUND_TRUTH_FILE);
        let ground_truth =
            if truth_path.exists() { Some(read_ground_truth(truth_path)?) } else { None };
        Ok(Dataset { observations, stations, holidays, ground_truth, capacity_table: None })
    }

    /// Station ids that actually carry observations, sorted.
    pub fn station_ids(&self) -> Vec<String> {
        let set: BTreeSet<&str> =
            self.observations.iter().map(|o| o.station_id.as_str()).collect();
        set.into_iter().map(str::to_string).collect()
    }

    fn meta_by_carriageway(&self) -> BTreeMap<String, &StationMeta> {
        self.stations
            .iter()
            .map(|s| (carriageway_key(&s.station_id, s.direction), s))
            .collect()
    }

    /// Mean recorded penetration rate per carriageway, if truth is present.
    fn penetration_by_carriageway(&self) -> Option<BTreeMap<String, f64>> {
        let truth = self.ground_truth.as_ref()?;
        let mut sums: BTreeMap<String, (f64, usize)> = BTreeMap::new();
        for row in truth {
            let entry = sums
                .entry(carriageway_key(&row.station_id, row.direction))
                .or_insert((0.0, 0));
            entry.0 += row.penetration_rate;
            entry.1 += 1;
        }
        Some(sums.into_iter().map(|(k, (s, n))| (k, s / n as f64)).collect())
    }

    fn check_ready(&self) -> Result<BTreeMap<String, &StationMeta>, EvalError> {
        if self.observations.is_empty() {
            return Err(EvalError::EmptyDataset);
        }
        let meta = self.meta_by_carriageway();
        for obs in &self.observations {
            let key = carriageway_key(&obs.station_id, obs.direction);
            if !meta.contains_key(&key) {
                return Err(EvalError::MissingStationMeta(key));
            }
            if obs.target_volume.is_none() {
                return Err(EvalError::MissingTarget {
                    carriageway: key,
                    timestamp: obs.timestamp,
                });
            }
        }
        Ok(meta)
    }
}

/// Scored predictions for one held-out carriageway.
#[derive(Clone, Debug, PartialEq)]
pub struct CarriagewayOutcome {
    pub station_id: String,
    pub direction: Direction,
    pub lanes: u32,
    pub capacity_per_lane: f64,
    pub timestamps: Vec<NaiveDateTime>,
    pub actuals: Vec<f64>,
    pub predictions: Vec<f64>,
    pub report: MetricReport,
    /// Mean true volume over the held-out hours.
    pub avg_volume: f64,
    /// Mean in-hour probe count over the held-out hours.
    pub avg_probe_volume: f64,
    /// Mean recorded penetration rate, when ground truth is available.
    pub penetration: Option<f64>,
    /// Training-pool MAPE of the fold's fitted model, where computed.
    pub fold_train_mape_percent: Option<f64>,
}

impl CarriagewayOutcome {
    pub fn carriageway_id(&self) -> String {
        carriageway_key(&self.station_id, self.direction)
    }
}

/// Per-epoch loss curves for the fold that held out `station_id`.
#[derive(Clone, Debug, PartialEq)]
pub struct FoldHistory {
    pub station_id: String,
    pub history: LossHistory,
}

/// Everything one cross-validation run produced.
#[derive(Clone, Debug, PartialEq)]
pub struct CvResult {
    pub method: Method,
    /// One entry per carriageway, sorted by station then direction.
    pub outcomes: Vec<CarriagewayOutcome>,
    /// Hour-weighted pooled metrics over every held-out hour.
    pub pooled: MetricReport,
    /// Loss curves per fold; empty for the non-network methods.
    pub histories: Vec<FoldHistory>,
}

/// SplitMix64 finalizer; a cheap, well-mixed hash for seed derivation.
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The training seed for one fold (and ensemble member). Depends only
/// on the base seed and the fold position, never on thread scheduling.
pub fn fold_seed(base_seed: u64, fold_index: usize, member: usize) -> u64 {
    splitmix64(base_seed ^ splitmix64((fold_index as u64) * 64 + member as u64))
}

struct FoldOutput {
    outcomes: Vec<CarriagewayOutcome>,
    history: Option<FoldHistory>,
}

/// Runs the full leave-one-station-out evaluation for one method.
pub fn run_cv(dataset: &Dataset, config: &CvConfig) -> Result<CvResult, EvalError> {
    config.validate()?;
    let meta = dataset.check_ready()?;
    let station_ids = dataset.station_ids();
    if station_ids.len() < 2 {
        return Err(EvalError::TooFewStations(station_ids.len()));
    }
    let features: Vec<FeatureVector> = dataset
        .observations
        .iter()
        .map(|obs| {
            let key = carriageway_key(&obs.station_id, obs.direction);
            assemble(obs, meta[&key], &dataset.holidays)
        })
        .collect::<Result<_, _>>()?;
    let penetration = dataset.penetration_by_carriageway();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.jobs)
        .build()
        .map_err(|e| EvalError::ThreadPool(e.to_string()))?;
    let fold_outputs: Result<Vec<FoldOutput>, EvalError> = pool.install(|| {
        station_ids
            .par_iter()
            .enumerate()
            .map(|(fold_index, station_id)| {
                run_fold(dataset, &meta, &features, penetration.as_ref(), station_id, fold_index, config)
            })
            .collect()
    });
    let fold_outputs = fold_outputs?;

    let mut outcomes = Vec::new();
    let mut histories = Vec::new();
    for output in fold_outputs {
        outcomes.extend(output.outcomes);
        histories.extend(output.history);
    }
    let pooled = pooled_report(&outcomes)?;
    Ok(CvResult { method: config.method, outcomes, pooled, histories })
}

/// Pooled metrics over all held-out hours. The coefficient of
/// determination and MAPE are computed on the concatenated hours; the
/// capacity- and maximum-flow-relative measures keep their
/// per-carriageway denominators and pool as hour-weighted means.
fn pooled_report(outcomes: &[CarriagewayOutcome]) -> Result<MetricReport, EvalError> {
    let mut actuals = Vec::new();
    let mut predictions = Vec::new();
    let mut etcr_weighted = 0.0;
    let mut emfr_weighted = 0.0;
    for outcome in outcomes {
        actuals.extend_from_slice(&outcome.actuals);
        predictions.extend_from_slice(&outcome.predictions);
        etcr_weighted += outcome.report.etcr_percent * outcome.report.n_hours as f64;
        emfr_weighted += outcome.report.emfr_percent * outcome.report.n_hours as f64;
    }
    let n = actuals.len();
    let mape = mape(&actuals, &predictions)?;
    Ok(MetricReport {
        r_squared: r_squared(&actuals, &predictions)?,
        mape_percent: mape.percent,
        etcr_percent: etcr_weighted / n as f64,
        emfr_percent: emfr_weighted / n as f64,
        n_hours: n,
        n_zero_target_hours: mape.n_excluded_zero_targets,
    })
}

fn run_fold(
    dataset: &Dataset,
    meta: &BTreeMap<String, &StationMeta>,
    features: &[FeatureVector],
    penetration: Option<&BTreeMap<String, f64>>,
    station_id: &str,
    fold_index: usize,
    config: &CvConfig,
) -> Result<FoldOutput, EvalError> {
    let (train_idx, test_idx): (Vec<usize>, Vec<usize>) =
        (0..dataset.observations.len()).partition(|&i| dataset.observations[i].station_id != station_id);

    let targets: Vec<f64> = dataset
        .observations
        .iter()
        .map(|o| o.target_volume.expect("checked by check_ready"))
        .collect();

    // Predictions for every held-out row, aligned with test_idx.
    let (test_predictions, history, train_mape) = match config.method {
        Method::Profile => {
            let train_obs: Vec<HourlyObservation> =
                train_idx.iter().map(|&i| dataset.observations[i].clone()).collect();
            let train_stations: Vec<StationMeta> = dataset
                .stations
                .iter()
                .filter(|s| s.station_id != station_id)
                .cloned()
                .collect();
            let factors = derive_profile_factors(&train_obs, &train_stations)?;
            let estimate = |i: usize| {
                let obs = &dataset.observations[i];
                let key = carriageway_key(&obs.station_id, obs.direction);
                estimate_profile(&factors, meta[&key].aadt, obs.timestamp)
            };
            let predictions: Vec<f64> = test_idx.iter().map(|&i| estimate(i)).collect();
            let train_predictions: Vec<f64> = train_idx.iter().map(|&i| estimate(i)).collect();
            let train_actuals: Vec<f64> = train_idx.iter().map(|&i| targets[i]).collect();
            let train_mape = mape(&train_actuals, &train_predictions)?.percent;
            (predictions, None, Some(train_mape))
        }
        Method::LinearRegression | Method::Knn { .. } => {
            let (x_train, y_train, x_test) =
                standardized_split(features, &targets, &train_idx, &test_idx)?;
            match config.method {
                Method::LinearRegression => {
                    let model = linreg_fit(&x_train, &y_train)?;
                    let predictions = linreg_predict(&model, &x_test)?;
                    let train_predictions = linreg_predict(&model, &x_train)?;
                    let train_mape = mape(&y_train, &train_predictions)?.percent;
                    (predictions, None, Some(train_mape))
                }
                _ => {
                    let k = match config.method {
                        Method::Knn { k } => k,
                        _ => unreachable!("outer match arm is knn"),
                    };
                    let model = knn_fit(&x_train, &y_train, k)?;
                    // Training-pool MAPE is skipped: scoring every training
                    // row against the whole pool is quadratic.
                    (knn_predict(&model, &x_test)?, None, None)
                }
            }
        }
        Method::Ann { use_batchnorm } => {
            let (x_train, y_train, x_test) =
                standardized_split(features, &targets, &train_idx, &test_idx)?;
            let y_test: Vec<f64> = test_idx.iter().map(|&i| targets[i]).collect();
            let seed = fold_seed(config.base_seed, fold_index, 0);
            let (network, history) = train(
                &network_spec(config, use_batchnorm),
                DatasetView::new(&x_train, &y_train),
                DatasetView::new(&x_test, &y_test),
                &train_config(config, seed),
            )?;
            let predictions = network.predict_batch(&x_test)?;
            let train_predictions = network.predict_batch(&x_train)?;
            let train_mape = mape(&y_train, &train_predictions)?.percent;
            let fold_history =
                FoldHistory { station_id: station_id.to_string(), history };
            (predictions, Some(fold_history), Some(train_mape))
        }
        Method::AnnEnsemble { members } => {
            let (x_train, y_train, x_test) =
                standardized_split(features, &targets, &train_idx, &test_idx)?;
            let y_test: Vec<f64> = test_idx.iter().map(|&i| targets[i]).collect();
            let mut member_predictions = Vec::with_capacity(members);
            let mut member_train_predictions = Vec::with_capacity(members);
            let mut first_history = None;
            for member in 0..members {
                let seed = fold_seed(config.base_seed, fold_index, member);
                let (network, history) = train(
                    &network_spec(config, true),
                    DatasetView::new(&x_train, &y_train),
                    DatasetView::new(&x_test, &y_test),
                    &train_config(config, seed),
                )?;
                member_predictions.push(network.predict_batch(&x_test)?);
                member_train_predictions.push(network.predict_batch(&x_train)?);
                if member == 0 {
                    first_history =
                        Some(FoldHistory { station_id: station_id.to_string(), history });
                }
            }
            let predictions = ensemble_average(&member_predictions)?;
            let train_predictions = ensemble_average(&member_train_predictions)?;
            let train_mape = mape(&y_train, &train_predictions)?.percent;
            (predictions, first_history, Some(train_mape))
        }
    };

    // Split the held-out rows back into their two carriageways.
    let table = dataset.capacity_table.as_ref().unwrap_or_else(|| CapacityTable::builtin());
    let mut outcomes = Vec::new();
    for direction in [Direction::A, Direction::B] {
        let rows: Vec<(usize, usize)> = test_idx
            .iter()
            .enumerate()
            .filter(|(_, &i)| dataset.observations[i].direction == direction)
            .map(|(pos, &i)| (pos, i))
            .collect();
        if rows.is_empty() {
            continue;
        }
        let key = carriageway_key(station_id, direction);
        let station = meta[&key];
        let actuals: Vec<f64> = rows.iter().map(|&(_, i)| targets[i]).collect();
        let predictions: Vec<f64> =
            rows.iter().map(|&(pos, _)| test_predictions[pos]).collect();
        let timestamps: Vec<NaiveDateTime> =
            rows.iter().map(|&(_, i)| dataset.observations[i].timestamp).collect();
        let mean_ffs = rows
            .iter()
            .map(|&(_, i)| dataset.observations[i].free_flow_speed)
            .sum::<f64>()
            / rows.len() as f64;
        let capacity_per_lane =
            table.capacity_per_lane(mean_ffs, Facility::for_road_class(station.road_class))?;
        let report = metric_report(&actuals, &predictions, capacity_per_lane, station.lanes)?;
        let avg_volume = actuals.iter().sum::<f64>() / actuals.len() as f64;
        let avg_probe_volume = rows
            .iter()
            .map(|&(_, i)| f64::from(dataset.observations[i].probes.in_hour_total()))
            .sum::<f64>()
            / rows.len() as f64;
        outcomes.push(CarriagewayOutcome {
            station_id: station_id.to_string(),
            direction,
            lanes: station.lanes,
            capacity_per_lane,
            timestamps,
            actuals,
            predictions,
            report,
            avg_volume,
            avg_probe_volume,
            penetration: penetration.and_then(|m| m.get(&key).copied()),
            fold_train_mape_percent: train_mape,
        });
    }
    Ok(FoldOutput { outcomes, history })
}

fn network_spec(config: &CvConfig, use_batchnorm: bool) -> LayerSpec {
    LayerSpec {
        input_dim: layout::LEN,
        hidden_dims: config.hidden_dims.clone(),
        output_dim: 1,
        activation: Activation::Elu { alpha: 1.0 },
        use_batchnorm,
        keep_prob: config.keep_prob,
    }
}

fn train_config(config: &CvConfig, seed: u64) -> TrainConfig {
    TrainConfig {
        epochs: config.epochs,
        batch_size: config.batch_size,
        adam: AdamHyper { learning_rate: config.learning_rate, ..AdamHyper::default() },
        loss: Loss::MeanAbsolute,
        seed,
    }
}

/// Fits the standardizer on the training rows only and applies it to
/// both splits. Fitting on anything that includes the held-out rows
/// would leak the test station into the features.
fn standardized_split(
    features: &[FeatureVector],
    targets: &[f64],
    train_idx: &[usize],
    test_idx: &[usize],
) -> Result<(Mat, Vec<f64>, Mat), EvalError> {
    let train_rows: Vec<FeatureVector> =
        train_idx.iter().map(|&i| features[i].clone()).collect();
    let standardizer = Standardizer::fit(&train_rows)?;
    let x_train = standardizer.apply_matrix(&train_rows)?;
    let y_train: Vec<f64> = train_idx.iter().map(|&i| targets[i]).collect();
    let test_rows: Vec<FeatureVector> =
        test_idx.iter().map(|&i| features[i].clone()).collect();
    let x_test = standardizer.apply_matrix(&test_rows)?;
    Ok((x_train, y_train, x_test))
}

/// Paired comparison of two cross-validation runs over the same world.
#[derive(Clone, Debug, PartialEq)]
pub struct MethodComparison {
    pub method_a: Method,
    pub method_b: Method,
    pub n_carriageways: usize,
    pub median_mape_a: f64,
    pub median_mape_b: f64,
    pub mean_mape_a: f64,
    pub mean_mape_b: f64,
    /// How much of method B's median MAPE method A removes, in percent.
    pub median_improvement_percent: f64,
    /// Signed-rank test over per-carriageway MAPE differences, absent
    /// when the test's preconditions fail.
    pub wilcoxon: Option<WilcoxonResult>,
    /// Why the test is absent, when it is.
    pub wilcoxon_note: Option<String>,
    /// Per carriageway: (id, MAPE under A, MAPE under B).
    pub per_carriageway: Vec<(String, f64, f64)>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Pairs two runs by carriageway and tests their MAPE differences.
pub fn compare_methods(a: &CvResult, b: &CvResult) -> Result<MethodComparison, EvalError> {
    let map_a: BTreeMap<String, f64> = a
        .outcomes
        .iter()
        .map(|o| (o.carriageway_id(), o.report.mape_percent))
        .collect();
    let map_b: BTreeMap<String, f64> = b
        .outcomes
        .iter()
        .map(|o| (o.carriageway_id(), o.report.mape_percent))
        .collect();
    if map_a.len() != a.outcomes.len() || map_b.len() != b.outcomes.len() {
        return Err(EvalError::MismatchedOutcomes("duplicate carriageway in a run".into()));
    }
    let keys_a: BTreeSet<&String> = map_a.keys().collect();
    let keys_b: BTreeSet<&String> = map_b.keys().collect();
    if keys_a != keys_b {
        let only_a: Vec<&str> = keys_a.difference(&keys_b).map(|k| k.as_str()).collect();
        let only_b: Vec<&str> = keys_b.difference(&keys_a).map(|k| k.as_str()).collect();
        return Err(EvalError::MismatchedOutcomes(format!(
            "only in first: {only_a:?}, only in second: {only_b:?}"
        )));
    }
    if map_a.is_empty() {
        return Err(EvalError::EmptyDataset);
    }

    let per_carriageway: Vec<(String, f64, f64)> =
        map_a.iter().map(|(k, &va)| (k.clone(), va, map_b[k])).collect();
    let differences: Vec<f64> = per_carriageway.iter().map(|(_, va, vb)| vb - va).collect();
    let (wilcoxon, note) = match wilcoxon_signed_rank(&differences) {
        Ok(result) => (Some(result), None),
        Err(MetricsError::TooFewDifferences { min, got }) => (
            None,
            Some(format!("only {got} nonzero differences, the test needs {min}")),
        ),
        Err(other) => return Err(other.into()),
    };

    let mut sorted_a: Vec<f64> = per_carriageway.iter().map(|p| p.1).collect();
    let mut sorted_b: Vec<f64> = per_carriageway.iter().map(|p| p.2).collect();
    sorted_a.sort_by(f64::total_cmp);
    sorted_b.sort_by(f64::total_cmp);
    let median_a = median(&sorted_a);
    let median_b = median(&sorted_b);
    let n = per_carriageway.len();
    Ok(MethodComparison {
        method_a: a.method,
        method_b: b.method,
        n_carriageways: n,
        median_mape_a: median_a,
        median_mape_b: median_b,
        mean_mape_a: sorted_a.iter().sum::<f64>() / n as f64,
        mean_mape_b: sorted_b.iter().sum::<f64>() / n as f64,
        median_improvement_percent: 100.0 * (median_b - median_a) / median_b,
        wilcoxon,
        wilcoxon_note: note,
        per_carriageway,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::synth::{generate, GeneratorConfig};

    /// A small world and a fast network configuration shared by the
    /// evaluation tests: three stations so the training pool always
    /// holds two, one week of hours, and a thin two-layer net.
    pub(crate) fn tiny_world() -> Dataset {
        let config = GeneratorConfig {
            n_stations: 3,
            start_date: chrono::NaiveDate::from_ymd_opt(2019, 3, 4).unwrap(),
            n_days: 7,
            seed: 5,
            ..GeneratorConfig::default()
        };
        Dataset::from_synthetic(generate(&config).unwrap())
    }

    pub(crate) fn tiny_cv(method: Method) -> CvConfig {
        CvConfig {
            method,
            hidden_dims: vec![8, 8],
            keep_prob: 0.9,
            epochs: 3,
            batch_size: 128,
            learning_rate: 1e-3,
            base_seed: 11,
            jobs: 2,
            ..CvConfig::default()
        }
    }

    #[test]
    fn every_method_produces_finite_scored_outcomes() {
        let dataset = tiny_world();
        for method in [
            Method::Ann { use_batchnorm: true },
            Method::Ann { use_batchnorm: false },
            Method::Profile,
            Method::LinearRegression,
            Method::Knn { k: 5 },
            Method::AnnEnsemble { members: 2 },
        ] {
            let result = run_cv(&dataset, &tiny_cv(method)).unwrap();
            assert_eq!(result.outcomes.len(), 6, "{method}");
            for outcome in &result.outcomes {
                assert!(outcome.report.mape_percent.is_finite(), "{method}");
                assert!(outcome.report.r_squared.is_finite(), "{method}");
                assert!(outcome.predictions.iter().all(|p| *p >= 0.0 && p.is_finite()));
                assert_eq!(outcome.predictions.len(), outcome.actuals.len());
                assert_eq!(outcome.report.n_hours, 7 * 24);
                assert!(outcome.penetration.is_some());
            }
            assert!(result.pooled.n_hours == 6 * 7 * 24);
            let has_history = matches!(method, Method::Ann { .. } | Method::AnnEnsemble { .. });
            assert_eq!(!result.histories.is_empty(), has_history, "{method}");
        }
    }

    #[test]
    fn results_are_identical_across_worker_counts() {
        let dataset = tiny_world();
        let mut config = tiny_cv(Method::Ann { use_batchnorm: true });
        config.jobs = 1;
        let serial = run_cv(&dataset, &config).unwrap();
        config.jobs = 4;
        let parallel = run_cv(&dataset, &config).unwrap();
        assert_eq!(serial, parallel);
    }

    #[test]
    fn held_out_predictions_ignore_held_out_targets() {
        let dataset = tiny_world();
        let config = tiny_cv(Method::Ann { use_batchnorm: true });
        let baseline = run_cv(&dataset, &config).unwrap();

        // Doubling the held-out station's targets must not move its own
        // predictions by a single bit; nothing about that station ever
        // enters the fold's training pool or standardizer.
        let mut perturbed = dataset.clone();
        for obs in &mut perturbed.observations {
            if obs.station_id == "S01" {
                obs.target_volume = obs.target_volume.map(|v| v * 2.0);
            }
        }
        let shifted = run_cv(&perturbed, &config).unwrap();
        for (a, b) in baseline.outcomes.iter().zip(&shifted.outcomes) {
            assert_eq!(a.carriageway_id(), b.carriageway_id());
            if a.station_id == "S01" {
                assert_eq!(a.predictions, b.predictions);
                assert_ne!(a.report.mape_percent, b.report.mape_percent);
            }
        }
    }

    #[test]
    fn profile_baseline_tracks_the_weekly_pattern() {
        // On a world built from a weekly curve, profiling lands close;
        // its pooled MAPE should at least be far below a coin flip.
        let dataset = tiny_world();
        let result = run_cv(&dataset, &tiny_cv(Method::Profile)).unwrap();
        assert!(result.pooled.mape_percent < 60.0, "{}", result.pooled.mape_percent);
        assert!(result.pooled.r_squared > 0.5, "{}", result.pooled.r_squared);
    }

    #[test]
    fn fold_seeds_differ_by_fold_and_member_but_not_run() {
        assert_eq!(fold_seed(1, 0, 0), fold_seed(1, 0, 0));
        assert_ne!(fold_seed(1, 0, 0), fold_seed(1, 1, 0));
        assert_ne!(fold_seed(1, 0, 0), fold_seed(1, 0, 1));
        assert_ne!(fold_seed(1, 0, 0), fold_seed(2, 0, 0));
    }

    #[test]
    fn load_dir_round_trips_an_exported_world() {
        let dataset = tiny_world();
        let world = generate(&GeneratorConfig {
            n_stations: 3,
            start_date: chrono::NaiveDate::from_ymd_opt(2019, 3, 4).unwrap(),
            n_days: 7,
            seed: 5,
            ..GeneratorConfig::default()
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        crate::synth::export_dataset(&world, dir.path()).unwrap();
        let loaded = Dataset::load_dir(dir.path()).unwrap();
        assert_eq!(loaded.observations, dataset.observations);
        assert_eq!(loaded.stations, dataset.stations);
        assert_eq!(loaded.ground_truth, dataset.ground_truth);

        // Optional files may be absent.
        std::fs::remove_file(dir.path().join(GROUND_TRUTH_FILE)).unwrap();
        std::fs::remove_file(dir.path().join(HOLIDAYS_FILE)).unwrap();
        let partial = Dataset::load_dir(dir.path()).unwrap();
        assert!(partial.ground_truth.is_none());
        assert!(partial.holidays.is_empty());

        // Required files may not.
        std::fs::remove_file(dir.path().join(OBSERVATIONS_FILE)).unwrap();
        assert!(Dataset::load_dir(dir.path()).is_err());
    }

    #[test]
    fn datasets_missing_metadata_or_targets_are_rejected() {
        let mut dataset = tiny_world();
        dataset.observations[17].target_volume = None;
        assert!(matches!(
            run_cv(&dataset, &tiny_cv(Method::Profile)),
            Err(EvalError::MissingTarget { .. })
        ));

        let mut dataset = tiny_world();
        dataset.stations.remove(0);
        assert!(matches!(
            run_cv(&dataset, &tiny_cv(Method::Profile)),
            Err(EvalError::MissingStationMeta(_))
        ));

        let mut dataset = tiny_world();
        dataset.observations.retain(|o| o.station_id == "S01");
        assert!(matches!(
            run_cv(&dataset, &tiny_cv(Method::Profile)),
            Err(EvalError::TooFewStations(1))
        ));
    }

    #[test]
    fn comparison_pairs_by_carriageway_and_tests_differences() {
        let dataset = tiny_world();
        let ann = run_cv(&dataset, &tiny_cv(Method::Ann { use_batchnorm: true })).unwrap();
        let profile = run_cv(&dataset, &tiny_cv(Method::Profile)).unwrap();
        let comparison = compare_methods(&ann, &profile).unwrap();
        assert_eq!(comparison.n_carriageways, 6);
        assert_eq!(comparison.per_carriageway.len(), 6);
        assert!(comparison.wilcoxon.is_some() || comparison.wilcoxon_note.is_some());
        if let Some(w) = &comparison.wilcoxon {
            assert!(w.p_value > 0.0 && w.p_value <= 1.0);
        }
        // Self-comparison has all-zero differences: no test, full note.
        let self_cmp = compare_methods(&profile, &profile).unwrap();
        assert!(self_cmp.wilcoxon.is_none());
        assert!(self_cmp.wilcoxon_note.is_some());
        assert_eq!(self_cmp.median_improvement_percent, 0.0);

        // Mismatched carriageway sets are an error.
        let mut truncated = profile.clone();
        truncated.outcomes.pop();
        assert!(matches!(
            compare_methods(&ann, &truncated),
            Err(EvalError::MismatchedOutcomes(_))
        ));
    }

    #[test]
    fn invalid_configs_are_rejected_before_any_work() {
        let dataset = tiny_world();
        for (name, config) in [
            ("zero k", tiny_cv(Method::Knn { k: 0 })),
            ("one member", tiny_cv(Method::AnnEnsemble { members: 1 })),
            (
                "zero hidden width",
                CvConfig {
                    hidden_dims: vec![8, 0],
                    ..tiny_cv(Method::Ann { use_batchnorm: true })
                },
            ),
            (
                "zero epochs",
                CvConfig { epochs: 0, ..tiny_cv(Method::Ann { use_batchnorm: true }) },
            ),
            (
                "bad keep prob",
                CvConfig { keep_prob: 1.5, ..tiny_cv(Method::Ann { use_batchnorm: true }) },
            ),
        ] {
            assert!(
                matches!(run_cv(&dataset, &config), Err(EvalError::InvalidConfig(_))),
                "{name} slipped through"
            );
        }
    }

    #[test]
    fn method_names_are_stable() {
        assert_eq!(Method::Ann { use_batchnorm: true }.to_string(), "ann");
        assert_eq!(Method::Ann { use_batchnorm: false }.to_string(), "ann-no-batchnorm");
        assert_eq!(Method::Profile.to_string(), "profile");
        assert_eq!(Method::LinearRegression.to_string(), "linear-regression");
        assert_eq!(Method::Knn { k: 7 }.to_string(), "knn-7");
        assert_eq!(Method::AnnEnsemble { members: 3 }.to_string(), "ann-ensemble-3");
    }
}
