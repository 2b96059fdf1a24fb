//! Two-sided Wilcoxon signed-rank test for paired method comparisons.
//!
//! The statistic is `W+`, the sum of ranks of the positive differences
//! after zero differences are dropped and absolute values are ranked with
//! average ranks for ties. Small samples get an exact p-value by dynamic
//! programming over the achievable rank sums; larger samples use the
//! normal approximation with continuity correction and the tie-corrected
//! variance.
//!
//! Ranks are represented internally as doubled integers so that average
//! ranks (which are multiples of one half) stay exact.

use super::MetricsError;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

/// Largest sample size for which the exact distribution is enumerated by
/// default. At `n = 20` the exact path sums over at most `2^20` subsets'
/// worth of counts, which is instant; beyond that the normal approximation
/// is already accurate to well under a hundredth.
pub const EXACT_N_LIMIT: usize = 20;

/// Minimum number of non-zero differences for the test to be meaningful.
/// Below five pairs even a perfectly one-sided sample cannot reach p < 0.05.
pub const MIN_NONZERO_DIFFERENCES: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WilcoxonMethod {
    Exact,
    NormalApproximation,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WilcoxonResult {
    /// Sum of the ranks of positive differences.
    pub w_plus: f64,
    /// Non-zero differences used by the test.
    pub n_used: usize,
    /// Zero differences dropped before ranking.
    pub n_zero_dropped: usize,
    /// Two-sided p-value.
    pub p_value: f64,
    pub method: WilcoxonMethod,
}

/// Runs the test, choosing the exact distribution for up to
/// [`EXACT_N_LIMIT`] non-zero differences and the normal approximation
/// beyond.
pub fn wilcoxon_signed_rank(differences: &[f64]) -> Result<WilcoxonResult, MetricsError> {
    let ranked = rank_differences(differences)?;
    let method = if ranked.doubled_ranks.len() <= EXACT_N_LIMIT {
        WilcoxonMethod::Exact
    } else {
        WilcoxonMethod::NormalApproximation
    };
    finish(ranked, method)
}

/// Runs the test with an explicitly chosen p-value method, regardless of
/// sample size. Exists so the two paths can be compared on the same data.
///
/// The exact path enumerates sign-pattern counts in 64-bit integers, which
/// is lossless up to 63 non-zero differences; beyond that the method falls
/// back to the normal approximation (and says so in the result).
pub fn wilcoxon_signed_rank_with(
    differences: &[f64],
    method: WilcoxonMethod,
) -> Result<WilcoxonResult, MetricsError> {
    let ranked = rank_differences(differences)?;
    let method = if ranked.doubled_ranks.len() > 63 {
        WilcoxonMethod::NormalApproximation
    } else {
        method
    };
    finish(ranked, method)
}

struct RankedDifferences {
    /// Doubled average rank of each non-zero difference, paired with the
    /// sign of the difference. Doubling keeps half-ranks integral.
    doubled_ranks: Vec<(u64, bool)>,
    /// Sizes of tie groups (for the variance correction).
    tie_groups: Vec<u64>,
    n_zero_dropped: usize,
}

fn rank_differences(differences: &[f64]) -> Result<RankedDifferences, MetricsError> {
    if differences.iter().any(|d| !d.is_finite()) {
        return Err(MetricsError::NonFinite);
    }
    let mut nonzero: Vec<f64> = differences.iter().copied().filter(|d| *d != 0.0).collect();
    let n_zero_dropped = differences.len() - nonzero.len();
    if nonzero.len() < MIN_NONZERO_DIFFERENCES {
        return Err(MetricsError::TooFewDifferences {
            min: MIN_NONZERO_DIFFERENCES,
            got: nonzero.len(),
        });
    }
    nonzero.sort_by(|a, b| a.abs().total_cmp(&b.abs()));

    let mut doubled_ranks = Vec::with_capacity(nonzero.len());
    let mut tie_groups = Vec::new();
    let mut i = 0;
    while i < nonzero.len() {
        let mut j = i;
        while j < nonzero.len() && nonzero[j].abs() == nonzero[i].abs() {
            j += 1;
        }
        // Members of the tie group share the average of ranks i+1..=j,
        // whose doubled value is (i + 1) + j exactly.
        let doubled = (i as u64 + 1) + j as u64;
        for d in &nonzero[i..j] {
            doubled_ranks.push((doubled, *d > 0.0));
        }
        if j - i > 1 {
            tie_groups.push((j - i) as u64);
        }
        i = j;
    }
    Ok(RankedDifferences { doubled_ranks, tie_groups, n_zero_dropped })
}

fn finish(ranked: RankedDifferences, method: WilcoxonMethod) -> Result<WilcoxonResult, MetricsError> {
    let n = ranked.doubled_ranks.len();
    let doubled_w_plus: u64 =
        ranked.doubled_ranks.iter().filter(|(_, positive)| *positive).map(|(r, _)| *r).sum();
    let p_value = match method {
        WilcoxonMethod::Exact => exact_two_sided_p(&ranked.doubled_ranks, doubled_w_plus),
        WilcoxonMethod::NormalApproximation => {
            approx_two_sided_p(n as u64, &ranked.tie_groups, doubled_w_plus)
        }
    };
    Ok(WilcoxonResult {
        w_plus: doubled_w_plus as f64 / 2.0,
        n_used: n,
        n_zero_dropped: ranked.n_zero_dropped,
        p_value,
        method,
    })
}

/// Exact two-sided p-value: the probability, under random signs, that `W+`
/// lands at least as far from its mean `n(n+1)/4` as observed.
///
/// Enumerates the distribution of the doubled rank sum by dynamic
/// programming; with doubled ranks the total sum is `n(n+1)`, so the count
/// table stays small even with ties.
fn exact_two_sided_p(doubled_ranks: &[(u64, bool)], doubled_w_plus: u64) -> f64 {
    let total: u64 = doubled_ranks.iter().map(|(r, _)| *r).sum();
    let mut counts = vec![0u64; total as usize + 1];
    counts[0] = 1;
    for (rank, _) in doubled_ranks {
        // Walk downward so each rank is used at most once.
        for s in (*rank as usize..counts.len()).rev() {
            counts[s] += counts[s - *rank as usize];
        }
    }
    // |2s - total| >= |2w - total| in exact integer arithmetic. Casting to
    // i128 sidesteps any overflow concern for large n.
    let observed = (2 * i128::from(doubled_w_plus) - i128::from(total)).abs();
    let mut extreme = 0u64;
    for (s, c) in counts.iter().enumerate() {
        if (2 * s as i128 - i128::from(total)).abs() >= observed {
            extreme += c;
        }
    }
    extreme as f64 / 2f64.powi(doubled_ranks.len() as i32)
}

/// Normal approximation with continuity correction:
/// `z = (|W - mu| - 0.5) / sigma`, `p = 2 (1 - Phi(z))`, where
/// `mu = n(n+1)/4` and the variance carries the tie correction
/// `sum(t^3 - t) / 48`.
fn approx_two_sided_p(n: u64, tie_groups: &[u64], doubled_w_plus: u64) -> f64 {
    let nf = n as f64;
    let mu = nf * (nf + 1.0) / 4.0;
    let tie_correction: f64 = tie_groups.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
    let variance = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_correction;
    let w_plus = doubled_w_plus as f64 / 2.0;
    let z = ((w_plus - mu).abs() - 0.5).max(0.0) / variance.sqrt();
    let normal = Normal::new(0.0, 1.0).expect("unit normal parameters are valid");
    (2.0 * (1.0 - normal.cdf(z))).min(1.0)
}
