//! Deterministic report writers for a cross-validation run.
//!
//! Three files land in the output directory: a machine-readable
//! `report.json`, a human-oriented `report.txt`, and `long.csv` with one
//! row per held-out hour. Equal runs produce byte-identical files, so
//! reruns can be diffed directly.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CarriagewayOutcome, CvResult, EvalError, Method};
use crate::metrics::MetricReport;

pub const REPORT_JSON_FILE: &str = "report.json";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const LONG_CSV_FILE: &str = "long.csv";

#[derive(Serialize, Deserialize)]
struct JsonOutcome {
    carriageway: String,
    station_id: String,
    direction: String,
    lanes: u32,
    capacity_per_lane: f64,
    avg_volume: f64,
    avg_probe_volume: f64,
    penetration: Option<f64>,
    fold_train_mape_percent: Option<f64>,
    #[serde(flatten)]
    report: MetricReport,
}

#[derive(Serialize, Deserialize)]
struct JsonReport {
    method: Method,
    pooled: MetricReport,
    outcomes: Vec<JsonOutcome>,
}

fn json_bytes(result: &CvResult) -> Result<Vec<u8>, EvalError> {
    let report = JsonReport {
        method: result.method,
        pooled: result.pooled,
        outcomes: result
            .outcomes
            .iter()
            .map(|o| JsonOutcome {
                carriageway: o.carriageway_id(),
                station_id: o.station_id.clone(),
                direction: o.direction.to_string(),
                lanes: o.lanes,
                capacity_per_lane: o.capacity_per_lane,
                avg_volume: o.avg_volume,
                avg_probe_volume: o.avg_probe_volume,
                penetration: o.penetration,
                fold_train_mape_percent: o.fold_train_mape_percent,
                report: o.report,
            })
            .collect(),
    };
    let mut bytes = serde_json::to_vec_pretty(&report)
        .map_err(|e| EvalError::InvalidConfig(format!("report serialization: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

fn text_bytes(result: &CvResult) -> Vec<u8> {
    let mut out = String::new();
    let p = &result.pooled;
    out.push_str(&format!("method: {}\n", result.method));
    out.push_str(&format!(
        "pooled over {} held-out hours across {} carriageways\n",
        p.n_hours,
        result.outcomes.len()
    ));
    out.push_str(&format!(
        "  r^2 {:.4}   mape {:.2}%   etcr {:.2}%   emfr {:.2}%   zero-target hours {}\n\n",
        p.r_squared, p.mape_percent, p.etcr_percent, p.emfr_percent, p.n_zero_target_hours
    ));
    out.push_str(&format!(
        "{:<12} {:>6} {:>8} {:>8} {:>8} {:>8} {:>9} {:>10} {:>8}\n",
        "carriageway", "hours", "r^2", "mape%", "etcr%", "emfr%", "avg_vol", "probe_vol", "penetr"
    ));
    for o in &result.outcomes {
        let penetration = match o.penetration {
            Some(p) => format!("{p:.4}"),
            None => "-".to_string(),
        };
        out.push_str(&format!(
            "{:<12} {:>6} {:>8.4} {:>8.2} {:>8.2} {:>8.2} {:>9.1} {:>10.1} {:>8}\n",
            o.carriageway_id(),
            o.report.n_hours,
            o.report.r_squared,
            o.report.mape_percent,
            o.report.etcr_percent,
            o.report.emfr_percent,
            o.avg_volume,
            o.avg_probe_volume,
            penetration,
        ));
    }
    out.into_bytes()
}

fn long_csv_bytes(outcomes: &[CarriagewayOutcome]) -> Result<Vec<u8>, EvalError> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    let as_eval = |e: csv::Error| EvalError::InvalidConfig(format!("long csv: {e}"));
    writer
        .write_record(["carriageway", "timestamp", "actual", "predicted", "abs_error"])
        .map_err(as_eval)?;
    for outcome in outcomes {
        let id = outcome.carriageway_id();
        for ((ts, actual), predicted) in outcome
            .timestamps
            .iter()
            .zip(&outcome.actuals)
            .zip(&outcome.predictions)
        {
            writer
                .write_record([
                    id.as_str(),
                    &ts.format("%Y-%m-%dT%H:%M:%S").to_string(),
                    &format!("{actual}"),
                    &format!("{predicted}"),
                    &format!("{}", (actual - predicted).abs()),
                ])
                .map_err(as_eval)?;
        }
    }
    writer
        .into_inner()
        .map_err(|e| EvalError::InvalidConfig(format!("long csv: {e}")))
}

fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<(), EvalError> {
    let path = dir.join(name);
    std::fs::write(&path, bytes).map_err(|source| EvalError::Io {
        path: path.display().to_string(),
        source,
    })
}

/// Writes `report.json`, `report.txt` and `long.csv` into `dir`, which
/// must already exist. Equal results give byte-identical files.
pub fn write_cv_report(result: &CvResult, dir: &Path) -> Result<(), EvalError> {
    write_file(dir, REPORT_JSON_FILE, &json_bytes(result)?)?;
    write_file(dir, REPORT_TEXT_FILE, &text_bytes(result))?;
    write_file(dir, LONG_CSV_FILE, &long_csv_bytes(&result.outcomes)?)?;
    Ok(())
}
