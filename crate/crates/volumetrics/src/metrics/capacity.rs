//! Per-lane capacity lookup keyed by free-flow speed.
//!
//! The bundled table holds the standard highway-capacity values for basic
//! freeway segments and multilane highways on a 5 mi/h free-flow-speed
//! grid. Agencies with their own capacity guidance can load a replacement
//! table from CSV; the lookup semantics stay the same.

use super::MetricsError;
use std::io::Read;
use std::path::Path;
use std::sync::LazyLock;

/// Facility type selecting the capacity column.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Facility {
    Freeway,
    MultilaneHighway,
}

impl Facility {
    /// Motorways are rated as freeways, trunks as multilane highways.
    pub fn for_road_class(class: crate::features::RoadClass) -> Self {
        match class {
            crate::features::RoadClass::Motorway => Facility::Freeway,
            crate::features::RoadClass::Trunk => Facility::MultilaneHighway,
        }
    }
}

/// One table row: a free-flow speed and the per-lane capacities defined for
/// it. `None` marks speeds outside a facility's defined range.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityRow {
    pub free_flow_speed: f64,
    pub freeway: Option<f64>,
    pub multilane: Option<f64>,
}

/// Capacity per lane (vehicles/hour/lane) as a function of free-flow speed.
#[derive(Clone, Debug, PartialEq)]
pub struct CapacityTable {
    /// Sorted by descending free-flow speed.
    rows: Vec<CapacityRow>,
}

static BUILTIN: LazyLock<CapacityTable> = LazyLock::new(|| {
    CapacityTable::from_reader(include_str!("../../data/hcm_capacity.csv").as_bytes(), "builtin")
        .expect("bundled capacity table is valid")
});

impl CapacityTable {
    /// The bundled highway-capacity table.
    pub fn builtin() -> &'static CapacityTable {
        &BUILTIN
    }

    /// Loads a replacement table from a CSV file with the same three-column
    /// layout as the bundled one (`NA` or an empty cell for undefined).
    pub fn from_csv_path(path: impl AsRef<Path>) -> Result<CapacityTable, MetricsError> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| MetricsError::TableIo {
            path: path.display().to_string(),
            source: e,
        })?;
        Self::from_reader(file, &path.display().to_string())
    }

    /// Parses a table from any reader; `origin` labels error messages.
    pub fn from_reader(reader: impl Read, origin: &str) -> Result<CapacityTable, MetricsError> {
        let bad = |message: String| MetricsError::TableParse { origin: origin.to_string(), message };
        let mut csv_reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = csv_reader
            .headers()
            .map_err(|e| bad(format!("unreadable header: {e}")))?
            .clone();
        let expected = ["free_flow_speed", "freeway_capacity", "multilane_capacity"];
        let got: Vec<&str> = headers.iter().collect();
        if got != expected {
            return Err(bad(format!("header must be {expected:?}, got {got:?}")));
        }

        let parse_capacity = |raw: &str, row: usize| -> Result<Option<f64>, MetricsError> {
            if raw.is_empty() || raw.eq_ignore_ascii_case("na") {
                return Ok(None);
            }
            let value: f64 = raw
                .parse()
                .map_err(|e| bad(format!("row {row}: bad capacity {raw:?}: {e}")))?;
            if value > 0.0 && value.is_finite() {
                Ok(Some(value))
            } else {
                Err(bad(format!("row {row}: capacity must be positive, got {value}")))
            }
        };

        let mut rows = Vec::new();
        for (i, record) in csv_reader.records().enumerate() {
            let record = record.map_err(|e| bad(format!("row {}: {e}", i + 1)))?;
            if record.len() != 3 {
                return Err(bad(format!("row {}: expected 3 fields, got {}", i + 1, record.len())));
            }
            let ffs: f64 = record[0]
                .parse()
                .map_err(|e| bad(format!("row {}: bad free_flow_speed {:?}: {e}", i + 1, &record[0])))?;
            if !(ffs.is_finite() && ffs > 0.0) {
                return Err(bad(format!("row {}: free_flow_speed must be positive", i + 1)));
            }
            rows.push(CapacityRow {
                free_flow_speed: ffs,
                freeway: parse_capacity(&record[1], i + 1)?,
                multilane: parse_capacity(&record[2], i + 1)?,
            });
        }
        if rows.is_empty() {
            return Err(bad("table has no rows".into()));
        }
        rows.sort_by(|a, b| b.free_flow_speed.total_cmp(&a.free_flow_speed));
        if rows.windows(2).any(|w| w[0].free_flow_speed == w[1].free_flow_speed) {
            return Err(bad("duplicate free_flow_speed rows".into()));
        }
        for facility in [Facility::Freeway, Facility::MultilaneHighway] {
            if !rows.iter().any(|r| capacity_for(r, facility).is_some()) {
                return Err(bad(format!("no capacities defined for {facility:?}")));
            }
        }
        Ok(CapacityTable { rows })
    }

    /// Rows in descending free-flow-speed order.
    pub fn rows(&self) -> &[CapacityRow] {
        &self.rows
    }

    /// Capacity per lane for a facility at the given free-flow speed.
    ///
    /// The speed is clamped into the facility's defined range, then matched
    /// to the nearest defined row (ties go to the higher speed). Lookup is
    /// therefore total for any positive finite speed.
    pub fn capacity_per_lane(&self, free_flow_speed: f64, facility: Facility) -> Result<f64, MetricsError> {
        if !(free_flow_speed.is_finite() && free_flow_speed > 0.0) {
            return Err(MetricsError::InvalidFreeFlowSpeed(free_flow_speed));
        }
        let defined: Vec<&CapacityRow> =
            self.rows.iter().filter(|r| capacity_for(r, facility).is_some()).collect();
        let max = defined.first().unwrap().free_flow_speed;
        let min = defined.last().unwrap().free_flow_speed;
        let clamped = free_flow_speed.clamp(min, max);
        // Rows are in descending order, so on a distance tie the first
        // (higher-speed) row wins.
        let nearest = defined
            .iter()
            .min_by(|a, b| {
                (a.free_flow_speed - clamped)
                    .abs()
                    .total_cmp(&(b.free_flow_speed - clamped).abs())
            })
            .unwrap();
        Ok(capacity_for(nearest, facility).unwrap())
    }
}

fn capacity_for(row: &CapacityRow, facility: Facility) -> Option<f64> {
    match facility {
        Facility::Freeway => row.freeway,
        Facility::MultilaneHighway => row.multilane,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_table_matches_published_values() {
        let t = CapacityTable::builtin();
        let freeway: Vec<(f64, Option<f64>)> =
            t.rows().iter().map(|r| (r.free_flow_speed, r.freeway)).collect();
        assert_eq!(
            freeway,
            vec![
                (75.0, Some(2400.0)),
                (70.0, Some(2400.0)),
                (65.0, Some(2350.0)),
                (60.0, Some(2300.0)),
                (55.0, Some(2250.0)),
                (50.0, None),
                (45.0, None),
            ]
        );
        let multilane: Vec<Option<f64>> = t.rows().iter().map(|r| r.multilane).collect();
        assert_eq!(
            multilane,
            vec![
                None,
                Some(2300.0),
                Some(2300.0),
                Some(2200.0),
                Some(2100.0),
                Some(2000.0),
                Some(1900.0)
            ]
        );
    }

    #[test]
    fn exact_grid_speeds_hit_their_row() {
        let t = CapacityTable::builtin();
        assert_eq!(t.capacity_per_lane(65.0, Facility::Freeway).unwrap(), 2350.0);
        assert_eq!(t.capacity_per_lane(65.0, Facility::MultilaneHighway).unwrap(), 2300.0);
        assert_eq!(t.capacity_per_lane(45.0, Facility::MultilaneHighway).unwrap(), 1900.0);
    }

    #[test]
    fn off_grid_speeds_round_to_the_nearest_row() {
        let t = CapacityTable::builtin();
        assert_eq!(t.capacity_per_lane(63.0, Facility::Freeway).unwrap(), 2350.0);
        assert_eq!(t.capacity_per_lane(61.0, Facility::Freeway).unwrap(), 2300.0);
        // Half-way ties go to the higher speed.
        assert_eq!(t.capacity_per_lane(62.5, Facility::Freeway).unwrap(), 2350.0);
        assert_eq!(t.capacity_per_lane(57.5, Facility::MultilaneHighway).unwrap(), 2200.0);
    }

    #[test]
    fn out_of_range_speeds_clamp_to_the_facility_range() {
        let t = CapacityTable::builtin();
        // Freeway capacities are defined for 55..=75 only.
        assert_eq!(t.capacity_per_lane(90.0, Facility::Freeway).unwrap(), 2400.0);
        assert_eq!(t.capacity_per_lane(40.0, Facility::Freeway).unwrap(), 2250.0);
        // Multilane highways are defined for 45..=70.
        assert_eq!(t.capacity_per_lane(75.0, Facility::MultilaneHighway).unwrap(), 2300.0);
        assert_eq!(t.capacity_per_lane(20.0, Facility::MultilaneHighway).unwrap(), 1900.0);
    }

    #[test]
    fn invalid_speeds_are_errors() {
        let t = CapacityTable::builtin();
        assert!(t.capacity_per_lane(0.0, Facility::Freeway).is_err());
        assert!(t.capacity_per_lane(-5.0, Facility::Freeway).is_err());
        assert!(t.capacity_per_lane(f64::NAN, Facility::Freeway).is_err());
    }

    #[test]
    fn custom_tables_load_from_csv_text() {
        let csv = "free_flow_speed,freeway_capacity,multilane_capacity\n\
                   100,3000,NA\n80,2500,2400\n";
        let t = CapacityTable::from_reader(csv.as_bytes(), "test").unwrap();
        assert_eq!(t.capacity_per_lane(95.0, Facility::Freeway).unwrap(), 3000.0);
        assert_eq!(t.capacity_per_lane(50.0, Facility::MultilaneHighway).unwrap(), 2400.0);
    }

    #[test]
    fn malformed_tables_are_rejected() {
        let cases = [
            "speed,freeway_capacity,multilane_capacity\n75,2400,NA\n",
            "free_flow_speed,freeway_capacity,multilane_capacity\n",
            "free_flow_speed,freeway_capacity,multilane_capacity\n75,-100,2000\n",
            "free_flow_speed,freeway_capacity,multilane_capacity\n75,2400,2300\n75,2300,2200\n",
            "free_flow_speed,freeway_capacity,multilane_capacity\n75,NA,2300\n",
            "free_flow_speed,freeway_capacity,multilane_capacity\n75,abc,2300\n",
        ];
        for csv in cases {
            assert!(
                CapacityTable::from_reader(csv.as_bytes(), "test").is_err(),
                "accepted: {csv}"
            );
        }
    }

    #[test]
    fn missing_table_file_reports_io_error() {
        let err = CapacityTable::from_csv_path("/nonexistent/capacity.csv").unwrap_err();
        assert!(matches!(err, MetricsError::TableIo { .. }));
    }
}
