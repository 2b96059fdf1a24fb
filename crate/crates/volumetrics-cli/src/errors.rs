//! Error categories and their process exit codes.
//!
//! Every failure is folded into one of three categories so scripts can
//! react to the class of problem without parsing messages: bad
//! configuration (exit 2), unreadable or ill-formed data (exit 3), and
//! numeric failure during fitting or scoring (exit 4).

use thiserror::Error;
use volumetrics::baselines::BaselineError;
use volumetrics::eval::EvalError;
use volumetrics::features::FeatureError;
use volumetrics::metrics::MetricsError;
use volumetrics::model::ModelError;
use volumetrics::nn::NnError;
use volumetrics::synth::SynthError;

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_DATA: i32 = 3;
pub const EXIT_NUMERIC: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Invalid options, missing referenced files, contradictory flags.
    #[error("{0}")]
    Config(String),
    /// Input files that exist but cannot be read or fail the schema.
    #[error("{0}")]
    Data(String),
    /// Fitting or scoring broke down numerically.
    #[error("{0}")]
    Numeric(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numeric(_) => EXIT_NUMERIC,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Data(_) => "data",
            CliError::Numeric(_) => "numeric",
        }
    }
}

pub fn config_error(message: impl Into<String>) -> CliError {
    CliError::Config(message.into())
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<NnError> for CliError {
    fn from(e: NnError) -> Self {
        match e {
            NnError::InvalidSpec(_) | NnError::MultiOutputTraining(_) => {
                CliError::Config(e.to_string())
            }
            NnError::InputWidth { .. } | NnError::LengthMismatch { .. } | NnError::EmptyDataset => {
                CliError::Data(e.to_string())
            }
            NnError::NonFinite(_) => CliError::Numeric(e.to_string()),
        }
    }
}

impl From<BaselineError> for CliError {
    fn from(e: BaselineError) -> Self {
        match e {
            BaselineError::InvalidK(_) | BaselineError::KExceedsTraining { .. } => {
                CliError::Config(e.to_string())
            }
            BaselineError::SingularSystem | BaselineError::NonFinite(_) => {
                CliError::Numeric(e.to_string())
            }
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<MetricsError> for CliError {
    fn from(e: MetricsError) -> Self {
        match e {
            MetricsError::NonFinite
            | MetricsError::ZeroVariance
            | MetricsError::AllTargetsZero
            | MetricsError::MaxTargetZero => CliError::Numeric(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Network(inner) => inner.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        match e {
            SynthError::InvalidConfig(_) => CliError::Config(e.to_string()),
            SynthError::Feature(inner) => inner.into(),
            SynthError::Metrics(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::InvalidConfig(_) | EvalError::ThreadPool(_) => {
                CliError::Config(e.to_string())
            }
            EvalError::Feature(inner) => inner.into(),
            EvalError::Network(inner) => inner.into(),
            EvalError::Baseline(inner) => inner.into(),
            EvalError::Metrics(inner) => inner.into(),
            _ => CliError::Data(e.to_string()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn each_category_maps_to_its_documented_exit_code() {
        assert_eq!(CliError::Config("x".into()).exit_code(), 2);
        assert_eq!(CliError::Data("x".into()).exit_code(), 3);
        assert_eq!(CliError::Numeric("x".into()).exit_code(), 4);
    }

    #[test]
    fn library_errors_land_in_the_right_category() {
        let numeric: CliError = NnError::NonFinite("loss").into();
        assert_eq!(numeric.exit_code(), EXIT_NUMERIC);

        let config: CliError = NnError::InvalidSpec("bad".into()).into();
        assert_eq!(config.exit_code(), EXIT_CONFIG);

        let config: CliError = BaselineError::InvalidK(0).into();
        assert_eq!(config.exit_code(), EXIT_CONFIG);

        let numeric: CliError = BaselineError::SingularSystem.into();
        assert_eq!(numeric.exit_code(), EXIT_NUMERIC);

        let data: CliError = MetricsError::Empty.into();
        assert_eq!(data.exit_code(), EXIT_DATA);

        let numeric: CliError = MetricsError::AllTargetsZero.into();
        assert_eq!(numeric.exit_code(), EXIT_NUMERIC);

        let config: CliError = EvalError::InvalidConfig("bad".into()).into();
        assert_eq!(config.exit_code(), EXIT_CONFIG);

        let data: CliError = EvalError::TooFewStations(1).into();
        assert_eq!(data.exit_code(), EXIT_DATA);

        // Wrapped errors keep their inner category through the layers.
        let numeric: CliError = EvalError::Network(NnError::NonFinite("gradient")).into();
        assert_eq!(numeric.exit_code(), EXIT_NUMERIC);
    }
}
