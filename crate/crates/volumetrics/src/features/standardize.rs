//! Z-score standardization of the continuous feature entries.

use super::{layout, FeatureError, FeatureVector};
use crate::nn::Mat;
use serde::{Deserialize, Serialize};

/// Per-feature centering and scaling parameters, fit on training data.
///
/// Indicator entries (one-hot and flag features) are exempt: they keep mean
/// 0 and scale 1 so `apply` is a uniform `(x - mean) / std` over the whole
/// vector. In leave-one-station-out evaluation the standardizer must be fit
/// on the training stations only; fitting on data that includes the held-out
/// station is a leak, and the evaluation harness tests guard against it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    means: Vec<f64>,
    stds: Vec<f64>,
}

impl Standardizer {
    /// Fits means and population standard deviations per continuous entry.
    ///
    /// A constant column gets a standard deviation of 1, so after centering
    /// it standardizes to exactly zero instead of dividing by zero.
    pub fn fit(rows: &[FeatureVector]) -> Result<Self, FeatureError> {
        if rows.is_empty() {
            return Err(FeatureError::EmptyFit);
        }
        for row in rows {
            if row.values.len() != layout::LEN {
                return Err(FeatureError::WidthMismatch {
                    expected: layout::LEN,
                    got: row.values.len(),
                });
            }
        }
        let n = rows.len() as f64;
        let mut means = vec![0.0; layout::LEN];
        let mut stds = vec![1.0; layout::LEN];
        for j in 0..layout::LEN {
            if layout::is_indicator(j) {
                continue;
            }
            let mean = rows.iter().map(|r| r.values[j]).sum::<f64>() / n;
            let var = rows.iter().map(|r| (r.values[j] - mean).powi(2)).sum::<f64>() / n;
            means[j] = mean;
            stds[j] = if var.sqrt() > 1e-12 { var.sqrt() } else { 1.0 };
        }
        Ok(Standardizer { means, stds })
    }

    /// True when the parameter arrays are full width, finite, and scaled
    /// by strictly positive deviations. Fitting always produces a
    /// well-formed standardizer; deserialized ones need the check.
    pub fn is_well_formed(&self) -> bool {
        self.means.len() == layout::LEN
            && self.stds.len() == layout::LEN
            && self.means.iter().all(|m| m.is_finite())
            && self.stds.iter().all(|s| s.is_finite() && *s > 0.0)
    }

    /// Standardizes one raw feature slice.
    pub fn apply_slice(&self, values: &[f64]) -> Result<Vec<f64>, FeatureError> {
        if values.len() != layout::LEN {
            return Err(FeatureError::WidthMismatch { expected: layout::LEN, got: values.len() });
        }
        Ok(values
            .iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    /// Standardizes a feature vector, leaving the target untouched.
    pub fn apply(&self, row: &FeatureVector) -> Result<FeatureVector, FeatureError> {
        Ok(FeatureVector { values: self.apply_slice(&row.values)?, target: row.target })
    }

    /// Stacks standardized rows into a design matrix.
    pub fn apply_matrix(&self, rows: &[FeatureVector]) -> Result<Mat, FeatureError> {
        let mut out = Mat::zeros(rows.len(), layout::LEN);
        for (r, row) in rows.iter().enumerate() {
            let std_row = self.apply_slice(&row.values)?;
            out.row_mut(r).copy_from_slice(&std_row);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn raw_rows(n: usize, seed: u64) -> Vec<FeatureVector> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let values = (0..layout::LEN)
                    .map(|j| {
                        if layout::is_indicator(j) {
                            if rng.random::<f64>() < 0.3 { 1.0 } else { 0.0 }
                        } else {
                            rng.random_range(-5.0..50.0) * (j as f64 + 1.0)
                        }
                    })
                    .collect();
                FeatureVector { values, target: Some(rng.random_range(0.0..1000.0)) }
            })
            .collect()
    }

    #[test]
    fn standardized_columns_have_zero_mean_unit_std() {
        let rows = raw_rows(64, 1);
        let st = Standardizer::fit(&rows).unwrap();
        let std_rows: Vec<_> = rows.iter().map(|r| st.apply(r).unwrap()).collect();
        for j in 0..layout::LEN {
            if layout::is_indicator(j) {
                continue;
            }
            let n = std_rows.len() as f64;
            let mean = std_rows.iter().map(|r| r.values[j]).sum::<f64>() / n;
            let var = std_rows.iter().map(|r| (r.values[j] - mean).powi(2)).sum::<f64>() / n;
            assert!(mean.abs() < 1e-10, "column {j} mean {mean}");
            assert!((var - 1.0).abs() < 1e-9, "column {j} var {var}");
        }
    }

    #[test]
    fn indicator_entries_pass_through_unchanged() {
        let rows = raw_rows(32, 2);
        let st = Standardizer::fit(&rows).unwrap();
        let out = st.apply(&rows[7]).unwrap();
        for j in 0..layout::LEN {
            if layout::is_indicator(j) {
                assert_eq!(out.values[j], rows[7].values[j], "indicator {j} was rescaled");
            }
        }
        assert_eq!(out.target, rows[7].target);
    }

    #[test]
    fn constant_columns_standardize_to_zero() {
        let mut rows = raw_rows(16, 3);
        for row in &mut rows {
            row.values[0] = 42.0;
        }
        let st = Standardizer::fit(&rows).unwrap();
        for row in &rows {
            assert_eq!(st.apply(row).unwrap().values[0], 0.0);
        }
    }

    #[test]
    fn single_row_fit_is_degenerate_but_defined() {
        let rows = raw_rows(1, 4);
        let st = Standardizer::fit(&rows).unwrap();
        let out = st.apply(&rows[0]).unwrap();
        for j in 0..layout::LEN {
            if !layout::is_indicator(j) {
                assert_eq!(out.values[j], 0.0);
            }
        }
    }

    #[test]
    fn empty_fit_is_an_error() {
        assert!(matches!(Standardizer::fit(&[]), Err(FeatureError::EmptyFit)));
    }

    #[test]
    fn width_mismatches_are_rejected() {
        let rows = raw_rows(4, 5);
        let st = Standardizer::fit(&rows).unwrap();
        let short = FeatureVector { values: vec![0.0; 10], target: None };
        assert!(matches!(st.apply(&short), Err(FeatureError::WidthMismatch { .. })));
        assert!(Standardizer::fit(&[short]).is_err());
    }

    #[test]
    fn apply_matrix_matches_row_by_row_application() {
        let rows = raw_rows(8, 6);
        let st = Standardizer::fit(&rows).unwrap();
        let mat = st.apply_matrix(&rows).unwrap();
        for (r, row) in rows.iter().enumerate() {
            assert_eq!(mat.row(r), st.apply_slice(&row.values).unwrap().as_slice());
        }
    }
}
