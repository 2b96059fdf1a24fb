//! The 84-feature encoding of a carriageway-hour and its dataset contract.
//!
//! An estimation target is one direction of one station during one clock
//! hour. Everything the network sees about that hour is packed into a fixed
//! feature vector whose layout is defined once in [`layout`]:
//!
//! | block          | indices | contents                                         |
//! |----------------|---------|--------------------------------------------------|
//! | probe counts   | 0..9    | 3 weight classes x (first 30, second 30, prior 30) |
//! | speeds         | 9..11   | average probe speed, free-flow speed             |
//! | weather values | 11..14  | temperature, visibility, precipitation           |
//! | weather class  | 14..47  | one-hot over the 33 condition descriptions       |
//! | infrastructure | 47..54  | lanes, speed limit, road class and type flags    |
//! | temporal       | 54..83  | hour one-hot, weekend flags, holiday flags       |
//! | profile        | 83      | profiling-method estimate for the same hour      |
//!
//! Continuous blocks are z-scored by a [`Standardizer`] fit on training data
//! only; indicator (one-hot and flag) entries pass through untouched.

mod schema;
mod standardize;
mod temporal;
mod weather;

pub use schema::{
    read_ground_truth, read_holidays, read_observations, read_stations, write_ground_truth,
    write_holidays, write_observations, write_stations, GroundTruthRow, GROUND_TRUTH_COLUMNS,
    OBSERVATION_COLUMNS, STATION_COLUMNS,
};
pub use standardize::Standardizer;
pub use temporal::{encode_temporal, Holiday, HolidayCalendar};
pub use weather::{encode_weather, weather_category_index, WEATHER_CATEGORIES};

use chrono::{NaiveDateTime, Timelike};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("io error reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed csv in {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("{path} is missing required columns: {missing:?}")]
    MissingColumns { path: String, missing: Vec<String> },
    #[error("{path} has unknown columns: {unknown:?}")]
    UnknownColumns { path: String, unknown: Vec<String> },
    #[error("{path} row {row}: {message}")]
    Row { path: String, row: usize, message: String },
    #[error("{path} line {line}: {message}")]
    HolidayLine { path: String, line: usize, message: String },
    #[error("observation belongs to {got}, expected station {expected}")]
    StationMismatch { expected: String, got: String },
    #[error("invalid {field}: {message}")]
    InvalidValue { field: &'static str, message: String },
    #[error("cannot fit a standardizer on an empty dataset")]
    EmptyFit,
    #[error("feature vector has {got} entries, expected {expected}")]
    WidthMismatch { expected: usize, got: usize },
}

/// Index layout of the feature vector. `LEN` and the block ranges are the
/// single source of truth; encoders and tests both derive from them.
pub mod layout {
    use std::ops::Range;

    pub const LEN: usize = 84;
    pub const PROBE: Range<usize> = 0..9;
    pub const SPEED: Range<usize> = 9..11;
    pub const WEATHER_NUMERIC: Range<usize> = 11..14;
    pub const WEATHER_ONEHOT: Range<usize> = 14..47;
    pub const INFRASTRUCTURE: Range<usize> = 47..54;
    pub const TEMPORAL: Range<usize> = 54..83;
    pub const PROFILE: usize = 83;

    /// True for entries that are one-hot or binary flags. Indicator entries
    /// are exempt from standardization. Lanes and the speed limit (the first
    /// two infrastructure entries) are magnitudes, not flags.
    pub fn is_indicator(index: usize) -> bool {
        WEATHER_ONEHOT.contains(&index)
            || (INFRASTRUCTURE.contains(&index) && index >= INFRASTRUCTURE.start + 2)
            || TEMPORAL.contains(&index)
    }
}

/// Travel direction of a carriageway. Directions of one station are
/// evaluated as separate units.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Direction {
    A,
    B,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::A => "A",
            Direction::B => "B",
        })
    }
}

impl FromStr for Direction {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "A" => Ok(Direction::A),
            "B" => Ok(Direction::B),
            other => Err(format!("direction must be A or B, got {other:?}")),
        }
    }
}

/// Administrative classification of the road a station sits on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoadType {
    Interstate,
    Us,
    Md,
}

impl fmt::Display for RoadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoadType::Interstate => "Interstate",
            RoadType::Us => "US",
            RoadType::Md => "MD",
        })
    }
}

impl FromStr for RoadType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Interstate" => Ok(RoadType::Interstate),
            "US" => Ok(RoadType::Us),
            "MD" => Ok(RoadType::Md),
            other => Err(format!("road type must be Interstate, US, or MD, got {other:?}")),
        }
    }
}

/// Functional classification, mirroring the two OpenStreetMap classes the
/// stations fall into. Motorways are access-controlled freeways; trunks are
/// the highest class of ordinary highway.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoadClass {
    Motorway,
    Trunk,
}

impl fmt::Display for RoadClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RoadClass::Motorway => "Motorway",
            RoadClass::Trunk => "Trunk",
        })
    }
}

impl FromStr for RoadClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Motorway" => Ok(RoadClass::Motorway),
            "Trunk" => Ok(RoadClass::Trunk),
            other => Err(format!("road class must be Motorway or Trunk, got {other:?}")),
        }
    }
}

/// Static description of one carriageway (one direction of one station).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StationMeta {
    pub station_id: String,
    pub direction: Direction,
    pub road_type: RoadType,
    pub road_class: RoadClass,
    pub lanes: u32,
    pub speed_limit: f64,
    /// Annual average daily traffic for this direction, vehicles per day.
    pub aadt: f64,
    pub latitude: f64,
    pub longitude: f64,
}

impl StationMeta {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let fail = |field, message: String| Err(FeatureError::InvalidValue { field, message });
        if self.station_id.is_empty() {
            return fail("station_id", "must not be empty".into());
        }
        if self.lanes == 0 {
            return fail("lanes", "must be at least 1".into());
        }
        if !(self.speed_limit.is_finite() && self.speed_limit > 0.0) {
            return fail("speed_limit", format!("must be positive, got {}", self.speed_limit));
        }
        if !(self.aadt.is_finite() && self.aadt > 0.0) {
            return fail("aadt", format!("must be positive, got {}", self.aadt));
        }
        if !self.latitude.is_finite() || !self.longitude.is_finite() {
            return fail("coordinates", "must be finite".into());
        }
        Ok(())
    }

    /// Key identifying the carriageway, e.g. `"S03-B"`.
    pub fn carriageway_id(&self) -> String {
        format!("{}-{}", self.station_id, self.direction)
    }
}

/// Probe counts for one weight class across the three 30-minute windows:
/// the two halves of the target hour and the half hour before it.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub first30: u32,
    pub second30: u32,
    pub prior30: u32,
}

/// Probe counts per vehicle weight class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProbeCounts {
    pub light: WindowCounts,
    pub medium: WindowCounts,
    pub heavy: WindowCounts,
}

impl ProbeCounts {
    /// Probes observed inside the target hour itself (prior window excluded).
    pub fn in_hour_total(&self) -> u32 {
        [self.light, self.medium, self.heavy]
            .iter()
            .map(|w| w.first30 + w.second30)
            .sum()
    }

    /// The nine probe features in layout order: weight class major, window
    /// minor.
    pub fn flatten(&self) -> [f64; 9] {
        let f = |w: WindowCounts| [f64::from(w.first30), f64::from(w.second30), f64::from(w.prior30)];
        let (l, m, h) = (f(self.light), f(self.medium), f(self.heavy));
        [l[0], l[1], l[2], m[0], m[1], m[2], h[0], h[1], h[2]]
    }
}

/// Everything observed about one carriageway-hour.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HourlyObservation {
    pub station_id: String,
    pub direction: Direction,
    /// Start of the hour; minutes and seconds are always zero.
    pub timestamp: NaiveDateTime,
    pub probes: ProbeCounts,
    /// Mean probe speed over the hour, mi/h.
    pub avg_speed: f64,
    /// Free-flow speed of the segment, mi/h.
    pub free_flow_speed: f64,
    /// Air temperature, degrees Fahrenheit.
    pub temperature: f64,
    /// Visibility, miles.
    pub visibility: f64,
    /// Hourly precipitation, inches.
    pub precipitation: f64,
    /// Weather condition description, matched against [`WEATHER_CATEGORIES`].
    pub weather_desc: String,
    /// Profiling-method estimate for this hour, vehicles.
    pub profile_estimate: f64,
    /// Sensor-measured volume, vehicles. Absent outside station coverage.
    pub target_volume: Option<f64>,
}

impl HourlyObservation {
    pub fn validate(&self) -> Result<(), FeatureError> {
        let fail = |field, message: String| Err(FeatureError::InvalidValue { field, message });
        if self.timestamp.minute() != 0 || self.timestamp.second() != 0 {
            return fail("timestamp", format!("must be on the hour, got {}", self.timestamp));
        }
        if !(self.avg_speed.is_finite() && self.avg_speed > 0.0) {
            return fail("avg_speed", format!("must be positive, got {}", self.avg_speed));
        }
        if !(self.free_flow_speed.is_finite() && self.free_flow_speed > 0.0) {
            return fail("free_flow_speed", format!("must be positive, got {}", self.free_flow_speed));
        }
        if !self.temperature.is_finite() {
            return fail("temperature", format!("must be finite, got {}", self.temperature));
        }
        if !(self.visibility.is_finite() && self.visibility >= 0.0) {
            return fail("visibility", format!("must be non-negative, got {}", self.visibility));
        }
        if !(self.precipitation.is_finite() && self.precipitation >= 0.0) {
            return fail("precipitation", format!("must be non-negative, got {}", self.precipitation));
        }
        if !(self.profile_estimate.is_finite() && self.profile_estimate >= 0.0) {
            return fail("profile_estimate", format!("must be non-negative, got {}", self.profile_estimate));
        }
        if let Some(t) = self.target_volume {
            if !(t.is_finite() && t >= 0.0) {
                return fail("target_volume", format!("must be non-negative, got {t}"));
            }
        }
        Ok(())
    }
}

/// One encoded training or prediction example.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    /// The 84 features in [`layout`] order, unstandardized.
    pub values: Vec<f64>,
    /// Measured volume when the hour lies inside sensor coverage.
    pub target: Option<f64>,
}

/// The seven infrastructure features:
/// `[lanes, speed_limit, motorway, trunk, interstate, us, md]`.
pub fn encode_infrastructure(meta: &StationMeta) -> [f64; 7] {
    let class = |c| if meta.road_class == c { 1.0 } else { 0.0 };
    let rtype = |t| if meta.road_type == t { 1.0 } else { 0.0 };
    [
        f64::from(meta.lanes),
        meta.speed_limit,
        class(RoadClass::Motorway),
        class(RoadClass::Trunk),
        rtype(RoadType::Interstate),
        rtype(RoadType::Us),
        rtype(RoadType::Md),
    ]
}

/// Builds the 84-entry feature vector for one observation.
///
/// `meta` must describe the same carriageway the observation belongs to;
/// a mismatch is an error rather than a silent misjoin.
pub fn assemble(
    obs: &HourlyObservation,
    meta: &StationMeta,
    holidays: &HolidayCalendar,
) -> Result<FeatureVector, FeatureError> {
    if obs.station_id != meta.station_id || obs.direction != meta.direction {
        return Err(FeatureError::StationMismatch {
            expected: meta.carriageway_id(),
            got: format!("{}-{}", obs.station_id, obs.direction),
        });
    }
    obs.validate()?;
    meta.validate()?;

    let mut values = Vec::with_capacity(layout::LEN);
    values.extend_from_slice(&obs.probes.flatten());
    values.push(obs.avg_speed);
    values.push(obs.free_flow_speed);
    values.extend_from_slice(&encode_weather(
        obs.temperature,
        obs.visibility,
        obs.precipitation,
        &obs.weather_desc,
    ));
    values.extend_from_slice(&encode_infrastructure(meta));
    values.extend_from_slice(&encode_temporal(obs.timestamp, holidays));
    values.push(obs.profile_estimate);
    debug_assert_eq!(values.len(), layout::LEN);
    Ok(FeatureVector { values, target: obs.target_volume })
}
