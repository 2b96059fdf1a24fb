//! Profiling baseline: AADT spread over the week by learned factors.
//!
//! The estimate for a carriageway at a given hour is
//!
//! ```text
//! volume(d, h) = AADT * day_factor(d) * hourly_share(d, h)
//! ```
//!
//! where `d` is the day of week and `h` the hour of day. Factors are
//! learned from the training carriageways only: each carriageway
//! contributes its own daily weight (mean daily total over AADT) and
//! hourly shape (hour mean over daily total), and the per-carriageway
//! curves are averaged with equal weight so large stations do not
//! dominate. After averaging, day factors are rescaled to sum to 7 and
//! each day's shares to sum to 1.

use std::collections::BTreeMap;
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};

use super::BaselineError;
use crate::features::{HourlyObservation, StationMeta};

/// Tolerance for the normalization checks applied when loading factors.
const NORMALIZATION_TOLERANCE: f64 = 1e-6;

/// Day-of-week factors and hour-of-day shares, Monday first.
///
/// Invariants: all entries are non-negative and finite, `day_factors`
/// sums to 7, and every row of `hourly_shares` sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileFactors {
    pub day_factors: [f64; 7],
    pub hourly_shares: [[f64; 24]; 7],
}

fn weekday_index(day: Weekday) -> usize {
    day.num_days_from_monday() as usize
}

const WEEKDAY_NAMES: [&str; 7] = ["Mon", "Tue", "Wed", "Thu", "Fri", "Sat", "Sun"];

impl ProfileFactors {
    /// Checks the normalization invariants, returning a description of
    /// the first violation.
    fn validate(&self) -> Result<(), String> {
        let day_sum: f64 = self.day_factors.iter().sum();
        if self.day_factors.iter().any(|f| !f.is_finite() || *f < 0.0) {
            return Err("day factors must be finite and non-negative".into());
        }
        if (day_sum - 7.0).abs() > NORMALIZATION_TOLERANCE {
            return Err(format!("day factors sum to {day_sum}, expected 7"));
        }
        for (d, row) in self.hourly_shares.iter().enumerate() {
            if row.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return Err(format!("hourly shares for {} must be finite and non-negative", WEEKDAY_NAMES[d]));
            }
            let row_sum: f64 = row.iter().sum();
            if (row_sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                return Err(format!("hourly shares for {} sum to {row_sum}, expected 1", WEEKDAY_NAMES[d]));
            }
        }
        Ok(())
    }

    /// Writes the factors as CSV with columns `day,hour,share,day_factor`.
    pub fn to_csv_path(&self, path: &Path) -> Result<(), BaselineError> {
        let io_err = |source| BaselineError::Io { path: path.display().to_string(), source };
        let mut writer = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(source) => io_err(source),
            other => BaselineError::FactorsFormat {
                path: path.display().to_string(),
                message: format!("{other:?}"),
            },
        })?;
        writer
            .write_record(["day", "hour", "share", "day_factor"])
            .and_then(|()| {
                for d in 0..7 {
                    for h in 0..24 {
                        writer.write_record([
                            WEEKDAY_NAMES[d].to_string(),
                            h.to_string(),
                            format!("{:.17e}", self.hourly_shares[d][h]),
                            format!("{:.17e}", self.day_factors[d]),
                        ])?;
                    }
                }
                writer.flush().map_err(csv::Error::from)
            })
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(source) => io_err(source),
                other => BaselineError::FactorsFormat {
                    path: path.display().to_string(),
                    message: format!("{other:?}"),
                },
            })
    }

    /// Reads factors written by [`Self::to_csv_path`], checking that all
    /// 168 day-hour cells are present exactly once and that the
    /// normalization invariants hold.
    pub fn from_csv_path(path: &Path) -> Result<Self, BaselineError> {
        let text = std::fs::read_to_string(path).map_err(|source| BaselineError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let bad = |message: String| BaselineError::FactorsFormat {
            path: path.display().to_string(),
            message,
        };
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());
        let header = reader.headers().map_err(|e| bad(e.to_string()))?;
        if header.iter().ne(["day", "hour", "share", "day_factor"]) {
            return Err(bad(format!("unexpected header {header:?}")));
        }
        let mut day_factors = [f64::NAN; 7];
        let mut hourly_shares = [[f64::NAN; 24]; 7];
        let mut seen = [[false; 24]; 7];
        for (i, record) in reader.records().enumerate() {
            let record = record.map_err(|e| bad(e.to_string()))?;
            let line = i + 2;
            if record.len() != 4 {
                return Err(bad(format!("line {line}: expected 4 fields, got {}", record.len())));
            }
            let day = Weekday::from_str(&record[0])
                .map_err(|_| bad(format!("line {line}: unknown day {:?}", &record[0])))?;
            let d = weekday_index(day);
            let hour: usize = record[1]
                .parse()
                .ok()
                .filter(|h| *h < 24)
                .ok_or_else(|| bad(format!("line {line}: invalid hour {:?}", &record[1])))?;
            if seen[d][hour] {
                return Err(bad(format!("line {line}: duplicate cell {} {hour}", WEEKDAY_NAMES[d])));
            }
            seen[d][hour] = true;
            let share: f64 = record[2]
                .parse()
                .map_err(|_| bad(format!("line {line}: invalid share {:?}", &record[2])))?;
            let factor: f64 = record[3]
                .parse()
                .map_err(|_| bad(format!("line {line}: invalid day factor {:?}", &record[3])))?;
            hourly_shares[d][hour] = share;
            if day_factors[d].is_nan() {
                day_factors[d] = factor;
            } else if (day_factors[d] - factor).abs() > NORMALIZATION_TOLERANCE {
                return Err(bad(format!(
                    "line {line}: day factor {factor} disagrees with {} for {}",
                    day_factors[d], WEEKDAY_NAMES[d]
                )));
            }
        }
        if let Some((d, h)) = (0..7).flat_map(|d| (0..24).map(move |h| (d, h))).find(|&(d, h)| !seen[d][h]) {
            return Err(bad(format!("missing cell {} {h}", WEEKDAY_NAMES[d])));
        }
        let factors = ProfileFactors { day_factors, hourly_shares };
        factors.validate().map_err(bad)?;
        Ok(factors)
    }
}

/// Per-carriageway accumulator of hour-of-week volume means.
#[derive(Default)]
struct CellSums {
    sum: [[f64; 24]; 7],
    count: [[u32; 24]; 7],
}

/// Learns profile factors from training observations.
///
/// Observations without a target volume are skipped. Every carriageway
/// in `observations` must appear in `stations`, and after grouping each
/// day of the week must be covered by at least one carriageway.
pub fn derive_profile_factors(
    observations: &[HourlyObservation],
    stations: &[StationMeta],
) -> Result<ProfileFactors, BaselineError> {
    let aadt_by_carriageway: BTreeMap<String, f64> = stations
        .iter()
        .map(|s| (s.carriageway_id(), s.aadt))
        .collect();

    let mut cells: BTreeMap<String, CellSums> = BTreeMap::new();
    let mut any_target = false;
    for obs in observations {
        let Some(volume) = obs.target_volume else { continue };
        any_target = true;
        let key = format!("{}-{}", obs.station_id, obs.direction);
        if !aadt_by_carriageway.contains_key(&key) {
            return Err(BaselineError::UnknownStation(key));
        }
        let cell = cells.entry(key).or_default();
        let d = weekday_index(obs.timestamp.weekday());
        let h = obs.timestamp.hour() as usize;
        cell.sum[d][h] += volume;
        cell.count[d][h] += 1;
    }
    if !any_target {
        if observations.is_empty() {
            return Err(BaselineError::EmptyTraining);
        }
        return Err(BaselineError::NoTargets);
    }

    // Equal-weight average of the per-carriageway weights and shapes.
    let mut day_sum = [0.0f64; 7];
    let mut day_n = [0u32; 7];
    let mut share_sum = [[0.0f64; 24]; 7];
    let mut share_n = [[0u32; 24]; 7];
    for (key, cell) in &cells {
        let aadt = aadt_by_carriageway[key];
        for d in 0..7 {
            let hour_means: Vec<(usize, f64)> = (0..24)
                .filter(|&h| cell.count[d][h] > 0)
                .map(|h| (h, cell.sum[d][h] / f64::from(cell.count[d][h])))
                .collect();
            if hour_means.is_empty() {
                continue;
            }
            let daily_total: f64 = hour_means.iter().map(|(_, m)| m).sum();
            day_sum[d] += daily_total / aadt;
            day_n[d] += 1;
            if daily_total > 0.0 {
                for (h, mean) in hour_means {
                    share_sum[d][h] += mean / daily_total;
                    share_n[d][h] += 1;
                }
            }
        }
    }

    let mut day_factors = [0.0f64; 7];
    let mut hourly_shares = [[0.0f64; 24]; 7];
    for d in 0..7 {
        if day_n[d] == 0 {
            let day = Weekday::try_from(d as u8).expect("index in 0..7");
            return Err(BaselineError::MissingDayType(day));
        }
        day_factors[d] = day_sum[d] / f64::from(day_n[d]);
        for h in 0..24 {
            if share_n[d][h] > 0 {
                hourly_shares[d][h] = share_sum[d][h] / f64::from(share_n[d][h]);
            }
        }
        let row_sum: f64 = hourly_shares[d].iter().sum();
        if row_sum <= 0.0 {
            let day = Weekday::try_from(d as u8).expect("index in 0..7");
            return Err(BaselineError::MissingDayType(day));
        }
        for share in &mut hourly_shares[d] {
            *share /= row_sum;
        }
    }
    let factor_sum: f64 = day_factors.iter().sum();
    if factor_sum <= 0.0 || !factor_sum.is_finite() {
        return Err(BaselineError::NoTargets);
    }
    for f in &mut day_factors {
        *f *= 7.0 / factor_sum;
    }

    let factors = ProfileFactors { day_factors, hourly_shares };
    debug_assert!(factors.validate().is_ok());
    Ok(factors)
}

/// Applies the profiling formula: `aadt * day_factor * hourly_share`.
pub fn estimate_profile(factors: &ProfileFactors, aadt: f64, timestamp: NaiveDateTime) -> f64 {
    let d = weekday_index(timestamp.weekday());
    let h = timestamp.hour() as usize;
    aadt * factors.day_factors[d] * factors.hourly_shares[d][h]
}
