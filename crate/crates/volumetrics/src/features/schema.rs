//! The on-disk dataset contract: strict CSV readers and writers.
//!
//! Four files make up a dataset:
//!
//! * `observations.csv` — one row per carriageway-hour (the model inputs).
//! * `stations.csv` — one row per carriageway (static metadata).
//! * `holidays.txt` — `YYYY-MM-DD <holiday name>` lines.
//! * `ground_truth.csv` — sensor volumes and probe penetration rates,
//!   used only by evaluation, never by models.
//!
//! Readers validate the header against the expected column set: a missing
//! column and an unrecognized column are both hard errors, so a silently
//! misnamed column cannot produce a dataset of zeros. Value errors carry
//! the file and 1-based data row number.

use super::{
    Direction, FeatureError, Holiday, HolidayCalendar, HourlyObservation, ProbeCounts, RoadClass,
    RoadType, StationMeta, WindowCounts,
};
use chrono::{NaiveDate, NaiveDateTime};
use std::collections::HashMap;
use std::fmt::Display;
use std::fs;
use std::path::Path;
use std::str::FromStr;

/// Hour-resolution timestamp format used across all dataset files.
pub const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M";

pub const OBSERVATION_COLUMNS: [&str; 20] = [
    "station_id",
    "direction",
    "timestamp",
    "probe_light_first30",
    "probe_light_second30",
    "probe_light_prior30",
    "probe_medium_first30",
    "probe_medium_second30",
    "probe_medium_prior30",
    "probe_heavy_first30",
    "probe_heavy_second30",
    "probe_heavy_prior30",
    "avg_speed",
    "free_flow_speed",
    "temperature",
    "visibility",
    "precipitation",
    "weather_desc",
    "profile_estimate",
    "target_volume",
];

pub const STATION_COLUMNS: [&str; 9] = [
    "station_id",
    "direction",
    "road_type",
    "road_class",
    "lanes",
    "speed_limit",
    "aadt",
    "latitude",
    "longitude",
];

pub const GROUND_TRUTH_COLUMNS: [&str; 5] =
    ["station_id", "direction", "timestamp", "true_volume", "penetration_rate"];

/// One evaluation-only truth row: the sensor volume and the realized probe
/// penetration for a carriageway-hour.
#[derive(Clone, Debug, PartialEq)]
pub struct GroundTruthRow {
    pub station_id: String,
    pub direction: Direction,
    pub timestamp: NaiveDateTime,
    pub true_volume: f64,
    pub penetration_rate: f64,
}

fn path_str(path: &Path) -> String {
    path.display().to_string()
}

fn io_err(path: &Path, source: std::io::Error) -> FeatureError {
    FeatureError::Io { path: path_str(path), source }
}

/// Maps each expected column name to its index, rejecting missing,
/// unknown, and duplicated columns.
fn check_header(
    path: &Path,
    headers: &csv::StringRecord,
    expected: &[&str],
) -> Result<HashMap<String, usize>, FeatureError> {
    let mut index = HashMap::new();
    let mut unknown = Vec::new();
    for (i, name) in headers.iter().enumerate() {
        let name = name.trim();
        if !expected.contains(&name) {
            unknown.push(name.to_string());
        } else if index.insert(name.to_string(), i).is_some() {
            return Err(FeatureError::Row {
                path: path_str(path),
                row: 0,
                message: format!("column {name:?} appears more than once"),
            });
        }
    }
    if !unknown.is_empty() {
        return Err(FeatureError::UnknownColumns { path: path_str(path), unknown });
    }
    let missing: Vec<String> =
        expected.iter().filter(|c| !index.contains_key(**c)).map(|c| c.to_string()).collect();
    if !missing.is_empty() {
        return Err(FeatureError::MissingColumns { path: path_str(path), missing });
    }
    Ok(index)
}

struct RowReader<'a> {
    path: &'a Path,
    row: usize,
    index: &'a HashMap<String, usize>,
    record: &'a csv::StringRecord,
}

impl RowReader<'_> {
    fn fail(&self, message: String) -> FeatureError {
        FeatureError::Row { path: path_str(self.path), row: self.row, message }
    }

    fn raw(&self, column: &str) -> Result<&str, FeatureError> {
        self.record
            .get(self.index[column])
            .map(str::trim)
            .ok_or_else(|| self.fail(format!("missing value for {column}")))
    }

    fn parse<T>(&self, column: &str) -> Result<T, FeatureError>
    where
        T: FromStr,
        T::Err: Display,
    {
        let raw = self.raw(column)?;
        raw.parse().map_err(|e| self.fail(format!("bad {column} {raw:?}: {e}")))
    }

    fn timestamp(&self, column: &str) -> Result<NaiveDateTime, FeatureError> {
        let raw = self.raw(column)?;
        NaiveDateTime::parse_from_str(raw, TIMESTAMP_FORMAT)
            .map_err(|e| self.fail(format!("bad {column} {raw:?} (expected YYYY-MM-DDTHH:MM): {e}")))
    }
}

fn read_csv<T>(
    path: &Path,
    expected: &[&str],
    mut parse_row: impl FnMut(&RowReader) -> Result<T, FeatureError>,
) -> Result<Vec<T>, FeatureError> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| csv_open_error(path, e))?;
    let headers = reader.headers().map_err(|e| csv_err(path, e))?.clone();
    let index = check_header(path, &headers, expected)?;
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| csv_err(path, e))?;
        let row = RowReader { path, row: i + 1, index: &index, record: &record };
        out.push(parse_row(&row)?);
    }
    Ok(out)
}

fn csv_err(path: &Path, source: csv::Error) -> FeatureError {
    FeatureError::Csv { path: path_str(path), source }
}

fn csv_open_error(path: &Path, source: csv::Error) -> FeatureError {
    match source.kind() {
        csv::ErrorKind::Io(_) => {
            if let csv::ErrorKind::Io(io) = source.into_kind() {
                io_err(path, io)
            } else {
                unreachable!()
            }
        }
        _ => csv_err(path, source),
    }
}

/// Reads and validates `observations.csv`.
pub fn read_observations(path: impl AsRef<Path>) -> Result<Vec<HourlyObservation>, FeatureError> {
    let path = path.as_ref();
    read_csv(path, &OBSERVATION_COLUMNS, |row| {
        let window = |prefix: &str| -> Result<WindowCounts, FeatureError> {
            Ok(WindowCounts {
                first30: row.parse(&format!("{prefix}_first30"))?,
                second30: row.parse(&format!("{prefix}_second30"))?,
                prior30: row.parse(&format!("{prefix}_prior30"))?,
            })
        };
        let target_raw = row.raw("target_volume")?;
        let obs = HourlyObservation {
            station_id: row.parse("station_id")?,
            direction: row.parse("direction")?,
            timestamp: row.timestamp("timestamp")?,
            probes: ProbeCounts {
                light: window("probe_light")?,
                medium: window("probe_medium")?,
                heavy: window("probe_heavy")?,
            },
            avg_speed: row.parse("avg_speed")?,
            free_flow_speed: row.parse("free_flow_speed")?,
            temperature: row.parse("temperature")?,
            visibility: row.parse("visibility")?,
            precipitation: row.parse("precipitation")?,
            weather_desc: row.raw("weather_desc")?.to_string(),
            profile_estimate: row.parse("profile_estimate")?,
            target_volume: if target_raw.is_empty() { None } else { Some(row.parse("target_volume")?) },
        };
        obs.validate().map_err(|e| row.fail(e.to_string()))?;
        Ok(obs)
    })
}

/// Writes `observations.csv` in the canonical column order. An absent
/// target becomes an empty cell.
pub fn write_observations(
    path: impl AsRef<Path>,
    observations: &[HourlyObservation],
) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_open_error(path, e))?;
    writer.write_record(OBSERVATION_COLUMNS).map_err(|e| csv_err(path, e))?;
    for obs in observations {
        let p = &obs.probes;
        writer
            .write_record([
                obs.station_id.clone(),
                obs.direction.to_string(),
                obs.timestamp.format(TIMESTAMP_FORMAT).to_string(),
                p.light.first30.to_string(),
                p.light.second30.to_string(),
                p.light.prior30.to_string(),
                p.medium.first30.to_string(),
                p.medium.second30.to_string(),
                p.medium.prior30.to_string(),
                p.heavy.first30.to_string(),
                p.heavy.second30.to_string(),
                p.heavy.prior30.to_string(),
                obs.avg_speed.to_string(),
                obs.free_flow_speed.to_string(),
                obs.temperature.to_string(),
                obs.visibility.to_string(),
                obs.precipitation.to_string(),
                obs.weather_desc.clone(),
                obs.profile_estimate.to_string(),
                obs.target_volume.map(|t| t.to_string()).unwrap_or_default(),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Reads and validates `stations.csv`.
pub fn read_stations(path: impl AsRef<Path>) -> Result<Vec<StationMeta>, FeatureError> {
    let path = path.as_ref();
    read_csv(path, &STATION_COLUMNS, |row| {
        let meta = StationMeta {
            station_id: row.parse("station_id")?,
            direction: row.parse("direction")?,
            road_type: row.parse::<RoadType>("road_type")?,
            road_class: row.parse::<RoadClass>("road_class")?,
            lanes: row.parse("lanes")?,
            speed_limit: row.parse("speed_limit")?,
            aadt: row.parse("aadt")?,
            latitude: row.parse("latitude")?,
            longitude: row.parse("longitude")?,
        };
        meta.validate().map_err(|e| row.fail(e.to_string()))?;
        Ok(meta)
    })
}

pub fn write_stations(path: impl AsRef<Path>, stations: &[StationMeta]) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_open_error(path, e))?;
    writer.write_record(STATION_COLUMNS).map_err(|e| csv_err(path, e))?;
    for s in stations {
        writer
            .write_record([
                s.station_id.clone(),
                s.direction.to_string(),
                s.road_type.to_string(),
                s.road_class.to_string(),
                s.lanes.to_string(),
                s.speed_limit.to_string(),
                s.aadt.to_string(),
                s.latitude.to_string(),
                s.longitude.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}

/// Reads `holidays.txt`: one `YYYY-MM-DD <name>` entry per line. Blank
/// lines and `#` comments are ignored; an unrecognized holiday name is an
/// error because a typo would silently drop a feature.
pub fn read_holidays(path: impl AsRef<Path>) -> Result<HolidayCalendar, FeatureError> {
    let path = path.as_ref();
    let content = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut entries = Vec::new();
    for (i, line) in content.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fail = |message: String| FeatureError::HolidayLine {
            path: path_str(path),
            line: i + 1,
            message,
        };
        let (date_part, name_part) = line
            .split_once(' ')
            .ok_or_else(|| fail(format!("expected `YYYY-MM-DD <name>`, got {line:?}")))?;
        let date = NaiveDate::parse_from_str(date_part, "%Y-%m-%d")
            .map_err(|e| fail(format!("bad date {date_part:?}: {e}")))?;
        let holiday: Holiday = name_part.parse().map_err(fail)?;
        entries.push((date, holiday));
    }
    Ok(HolidayCalendar::new(entries))
}

pub fn write_holidays(
    path: impl AsRef<Path>,
    calendar: &HolidayCalendar,
) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let mut out = String::new();
    for (date, holiday) in calendar.iter() {
        out.push_str(&format!("{} {}\n", date.format("%Y-%m-%d"), holiday.name()));
    }
    fs::write(path, out).map_err(|e| io_err(path, e))
}

/// Reads `ground_truth.csv`.
pub fn read_ground_truth(path: impl AsRef<Path>) -> Result<Vec<GroundTruthRow>, FeatureError> {
    let path = path.as_ref();
    read_csv(path, &GROUND_TRUTH_COLUMNS, |row| {
        let truth = GroundTruthRow {
            station_id: row.parse("station_id")?,
            direction: row.parse("direction")?,
            timestamp: row.timestamp("timestamp")?,
            true_volume: row.parse("true_volume")?,
            penetration_rate: row.parse("penetration_rate")?,
        };
        if !(truth.true_volume.is_finite() && truth.true_volume >= 0.0) {
            return Err(row.fail(format!("bad true_volume {}", truth.true_volume)));
        }
        if !(truth.penetration_rate.is_finite() && (0.0..=1.0).contains(&truth.penetration_rate)) {
            return Err(row.fail(format!("bad penetration_rate {}", truth.penetration_rate)));
        }
        Ok(truth)
    })
}

pub fn write_ground_truth(
    path: impl AsRef<Path>,
    rows: &[GroundTruthRow],
) -> Result<(), FeatureError> {
    let path = path.as_ref();
    let mut writer = csv::Writer::from_path(path).map_err(|e| csv_open_error(path, e))?;
    writer.write_record(GROUND_TRUTH_COLUMNS).map_err(|e| csv_err(path, e))?;
    for r in rows {
        writer
            .write_record([
                r.station_id.clone(),
                r.direction.to_string(),
                r.timestamp.format(TIMESTAMP_FORMAT).to_string(),
                r.true_volume.to_string(),
                r.penetration_rate.to_string(),
            ])
            .map_err(|e| csv_err(path, e))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;
    Ok(())
}
