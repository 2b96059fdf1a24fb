//! Distribution summaries over per-carriageway outcomes.
//!
//! The quintile analysis sorts carriageways by an observability measure
//! (probe penetration or raw probe volume) and splits them into five
//! groups of near-equal size, so accuracy can be read as a function of
//! how much probe data each carriageway actually had.

use serde::{Deserialize, Serialize};

use super::{CarriagewayOutcome, EvalError};

/// Minimum, lower quartile, median, upper quartile, maximum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiveNumberSummary {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
}

/// Quantile by linear interpolation at rank `q * (n - 1)`, the same
/// convention NumPy's default `quantile` uses.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let n = sorted.len();
    if n == 1 {
        return sorted[0];
    }
    let h = q * (n - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn five_number_summary(values: &[f64]) -> Result<FiveNumberSummary, EvalError> {
    if values.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(EvalError::InvalidConfig("summary over non-finite values".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(FiveNumberSummary {
        min: sorted[0],
        q1: quantile(&sorted, 0.25),
        median: quantile(&sorted, 0.5),
        q3: quantile(&sorted, 0.75),
        max: sorted[sorted.len() - 1],
    })
}

/// What the carriageways are ranked by before the quintile split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuintileKey {
    /// Recorded probe penetration rate; needs ground truth.
    Penetration,
    /// Mean in-hour probe count, available on any dataset.
    AvgProbeVolume,
}

/// One of the five groups, lowest key values first.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuintileBucket {
    /// 1 (lowest key values) through 5 (highest).
    pub rank: usize,
    pub carriageway_ids: Vec<String>,
    pub key_min: f64,
    pub key_max: f64,
    pub mape: FiveNumberSummary,
    pub mean_mape: f64,
}

/// Bucket sizes for `n` items over five groups: `n / 5` each, with the
/// remainder spread one apiece over the leading buckets.
pub fn quintile_sizes(n: usize) -> [usize; 5] {
    let base = n / 5;
    let extra = n % 5;
    std::array::from_fn(|i| base + usize::from(i < extra))
}

/// Splits the outcomes into penetration (or probe-volume) quintiles and
/// summarizes per-carriageway MAPE inside each.
///
/// Ties on the key break by carriageway id so the split never depends on
/// input order. Needs at least five carriageways, one per bucket.
pub fn quintile_analysis(
    outcomes: &[CarriagewayOutcome],
    key: QuintileKey,
) -> Result<Vec<QuintileBucket>, EvalError> {
    if outcomes.len() < 5 {
        return Err(EvalError::InvalidConfig(format!(
            "quintile analysis needs at least 5 carriageways, got {}",
            outcomes.len()
        )));
    }
    let mut keyed: Vec<(f64, String, f64)> = outcomes
        .iter()
        .map(|o| {
            let value = match key {
                QuintileKey::Penetration => o.penetration.ok_or_else(|| {
                    EvalError::InvalidConfig(format!(
                        "no penetration rate for {}; rank by probe volume instead",
                        o.carriageway_id()
                    ))
                })?,
                QuintileKey::AvgProbeVolume => o.avg_probe_volume,
            };
            Ok((value, o.carriageway_id(), o.report.mape_percent))
        })
        .collect::<Result<_, EvalError>>()?;
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(&b.1)));

    let sizes = quintile_sizes(keyed.len());
    let mut buckets = Vec::with_capacity(5);
    let mut start = 0;
    for (rank0, &size) in sizes.iter().enumerate() {
        let group = &keyed[start..start + size];
        start += size;
        let mapes: Vec<f64> = group.iter().map(|g| g.2).collect();
        buckets.push(QuintileBucket {
            rank: rank0 + 1,
            carriageway_ids: group.iter().map(|g| g.1.clone()).collect(),
            key_min: group.first().map(|g| g.0).unwrap_or(f64::NAN),
            key_max: group.last().map(|g| g.0).unwrap_or(f64::NAN),
            mape: five_number_summary(&mapes)?,
            mean_mape: mapes.iter().sum::<f64>() / mapes.len() as f64,
        });
    }
    Ok(buckets)
}
