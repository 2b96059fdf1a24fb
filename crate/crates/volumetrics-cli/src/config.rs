//! Run configuration: defaults, the flat key-value config file, and
//! flag overrides.
//!
//! Precedence is fixed: built-in defaults, then the config file, then
//! command-line flags. The file is plain text, one `key = value` per
//! line, `#` comments and blank lines ignored. Keys are spelled exactly
//! like the long flags without the leading dashes, so any flag can move
//! into the file unchanged. One file may hold keys for several commands;
//! each command reads the keys it understands and ignores the rest, but
//! a key no command knows is an error.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use chrono::NaiveDate;

use crate::errors::{config_error, CliError};
use volumetrics::eval::{CvConfig, Method, QuintileKey};

/// Estimator names accepted by `--method`, `--method-a`, `--method-b`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MethodName {
    Ann,
    AnnNobn,
    Profile,
    Linreg,
    Knn,
    Ensemble,
}

impl FromStr for MethodName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "ann" => Ok(MethodName::Ann),
            "ann-nobn" => Ok(MethodName::AnnNobn),
            "profile" => Ok(MethodName::Profile),
            "linreg" => Ok(MethodName::Linreg),
            "knn" => Ok(MethodName::Knn),
            "ensemble" => Ok(MethodName::Ensemble),
            other => Err(format!(
                "unknown method '{other}' (expected ann, ann_nobn, profile, linreg, knn or ensemble)"
            )),
        }
    }
}

impl fmt::Display for MethodName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            MethodName::Ann => "ann",
            MethodName::AnnNobn => "ann_nobn",
            MethodName::Profile => "profile",
            MethodName::Linreg => "linreg",
            MethodName::Knn => "knn",
            MethodName::Ensemble => "ensemble",
        };
        write!(f, "{name}")
    }
}

/// Ranking key accepted by `--key`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QuintileKeyName {
    Penetration,
    ProbeVolume,
}

impl FromStr for QuintileKeyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.replace('_', "-").as_str() {
            "penetration" => Ok(QuintileKeyName::Penetration),
            "probe-volume" => Ok(QuintileKeyName::ProbeVolume),
            other => Err(format!(
                "unknown quintile key '{other}' (expected penetration or probe-volume)"
            )),
        }
    }
}

impl QuintileKeyName {
    pub fn to_key(self) -> QuintileKey {
        match self {
            QuintileKeyName::Penetration => QuintileKey::Penetration,
            QuintileKeyName::ProbeVolume => QuintileKey::AvgProbeVolume,
        }
    }
}

/// Study selector accepted by `--which`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StudyName {
    Overfit,
    Dropout,
}

impl FromStr for StudyName {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "overfit" => Ok(StudyName::Overfit),
            "dropout" => Ok(StudyName::Dropout),
            other => Err(format!("unknown study '{other}' (expected overfit or dropout)")),
        }
    }
}

/// Every option a command can draw on, after defaults, file, and flags
/// are merged.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    /// Mandatory for every command; there is no wall-clock fallback.
    pub seed: Option<u64>,
    pub dataset: Option<PathBuf>,
    pub out: PathBuf,
    pub capacity_table: Option<PathBuf>,
    pub jobs: usize,
    pub method: Option<MethodName>,
    pub method_a: Option<MethodName>,
    pub method_b: Option<MethodName>,
    pub key: QuintileKeyName,
    pub which: Option<StudyName>,
    pub station: Option<String>,
    pub hidden: Vec<usize>,
    pub keep_prob: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Batch normalization for `train`; `cv` methods carry their own.
    pub batchnorm: bool,
    pub knn_k: usize,
    pub ensemble_members: usize,
    pub model: Option<PathBuf>,
    pub holdout: Option<String>,
    pub include_covered: bool,
    pub n_stations: usize,
    pub n_days: usize,
    pub start_date: NaiveDate,
    pub penetration_lo: f64,
    pub penetration_hi: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: None,
            dataset: None,
            out: PathBuf::from("runs"),
            capacity_table: None,
            jobs: 0,
            method: None,
            method_a: None,
            method_b: None,
            key: QuintileKeyName::Penetration,
            which: None,
            station: None,
            hidden: vec![256, 256, 256],
            keep_prob: 0.5,
            epochs: 200,
            batch_size: 256,
            learning_rate: 1e-3,
            batchnorm: true,
            knn_k: 5,
            ensemble_members: 4,
            model: None,
            holdout: None,
            include_covered: false,
            n_stations: 10,
            n_days: 28,
            start_date: NaiveDate::from_ymd_opt(2019, 6, 3).expect("valid default date"),
            penetration_lo: 0.008,
            penetration_hi: 0.045,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, CliError>
where
    T::Err: fmt::Display,
{
    value
        .parse()
        .map_err(|e| config_error(format!("config key '{key}': cannot parse '{value}': {e}")))
}

fn parse_hidden(key: &str, value: &str) -> Result<Vec<usize>, CliError> {
    value
        .split(',')
        .map(|part| parse_value(key, part.trim()))
        .collect()
}

impl RunConfig {
    /// Applies one key-value pair from the config file.
    pub fn apply_kv(&mut self, key: &str, value: &str) -> Result<(), CliError> {
        match key {
            "seed" => self.seed = Some(parse_value(key, value)?),
            "dataset" => self.dataset = Some(PathBuf::from(value)),
            "out" => self.out = PathBuf::from(value),
            "capacity-table" => self.capacity_table = Some(PathBuf::from(value)),
            "jobs" => self.jobs = parse_value(key, value)?,
            "method" => self.method = Some(parse_value(key, value)?),
            "method-a" => self.method_a = Some(parse_value(key, value)?),
            "method-b" => self.method_b = Some(parse_value(key, value)?),
            "key" => self.key = parse_value(key, value)?,
            "which" => self.which = Some(parse_value(key, value)?),
            "station" => self.station = Some(value.to_string()),
            "hidden" => self.hidden = parse_hidden(key, value)?,
            "keep-prob" => self.keep_prob = parse_value(key, value)?,
            "epochs" => self.epochs = parse_value(key, value)?,
            "batch-size" => self.batch_size = parse_value(key, value)?,
            "learning-rate" => self.learning_rate = parse_value(key, value)?,
            "batchnorm" => self.batchnorm = parse_value(key, value)?,
            "knn-k" => self.knn_k = parse_value(key, value)?,
            "ensemble-members" => self.ensemble_members = parse_value(key, value)?,
            "model" => self.model = Some(PathBuf::from(value)),
            "holdout" => self.holdout = Some(value.to_string()),
            "include-covered" => self.include_covered = parse_value(key, value)?,
            "n-stations" => self.n_stations = parse_value(key, value)?,
            "n-days" => self.n_days = parse_value(key, value)?,
            "start-date" => self.start_date = parse_value(key, value)?,
            "penetration-lo" => self.penetration_lo = parse_value(key, value)?,
            "penetration-hi" => self.penetration_hi = parse_value(key, value)?,
            other => {
                return Err(config_error(format!(
                    "unknown config key '{other}' (keys are spelled like the long flags)"
                )))
            }
        }
        Ok(())
    }

    /// Loads and applies a config file on top of the current values.
    pub fn apply_file(&mut self, path: &Path) -> Result<(), CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| config_error(format!("cannot read config file {}: {e}", path.display())))?;
        for (line_no, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                config_error(format!(
                    "{} line {}: expected 'key = value', got '{line}'",
                    path.display(),
                    line_no + 1
                ))
            })?;
            self.apply_kv(key.trim(), value.trim())?;
        }
        Ok(())
    }

    pub fn require_seed(&self) -> Result<u64, CliError> {
        self.seed.ok_or_else(|| {
            config_error("a seed is required (--seed N or 'seed = N' in the config file)")
        })
    }

    /// The dataset directory, checked to contain the two required files.
    pub fn require_dataset(&self) -> Result<&Path, CliError> {
        let dir = self
            .dataset
            .as_deref()
            .ok_or_else(|| config_error("a dataset directory is required (--dataset DIR)"))?;
        for required in [volumetrics::synth::OBSERVATIONS_FILE, volumetrics::synth::STATIONS_FILE] {
            let path = dir.join(required);
            if !path.exists() {
                return Err(config_error(format!("referenced file {} does not exist", path.display())));
            }
        }
        Ok(dir)
    }

    pub fn require_method(&self) -> Result<MethodName, CliError> {
        self.method
            .ok_or_else(|| config_error("a method is required (--method NAME)"))
    }

    /// Maps a method name onto the evaluation harness method, pulling k
    /// and the ensemble size from the config.
    pub fn resolve_method(&self, name: MethodName) -> Method {
        match name {
            MethodName::Ann => Method::Ann { use_batchnorm: true },
            MethodName::AnnNobn => Method::Ann { use_batchnorm: false },
            MethodName::Profile => Method::Profile,
            MethodName::Linreg => Method::LinearRegression,
            MethodName::Knn => Method::Knn { k: self.knn_k },
            MethodName::Ensemble => Method::AnnEnsemble { members: self.ensemble_members },
        }
    }

    pub fn cv_config(&self, method: Method) -> Result<CvConfig, CliError> {
        Ok(CvConfig {
            method,
            hidden_dims: self.hidden.clone(),
            keep_prob: self.keep_prob,
            epochs: self.epochs,
            batch_size: self.batch_size,
            learning_rate: self.learning_rate,
            base_seed: self.require_seed()?,
            jobs: self.jobs,
        })
    }

    /// The run directory for one command: `<out>/<command>-seed<seed>`.
    /// Seed-named and timestamp-free, so a rerun overwrites in place.
    pub fn run_dir(&self, command: &str) -> Result<PathBuf, CliError> {
        let seed = self.require_seed()?;
        let dir = self.out.join(format!("{command}-seed{seed}"));
        std::fs::create_dir_all(&dir)
            .map_err(|e| config_error(format!("cannot create run directory {}: {e}", dir.display())))?;
        Ok(dir)
    }
}
