//! Brute-force k-nearest-neighbor regression.
//!
//! Distances are plain Euclidean over whatever feature space the model
//! was fit in, so callers standardize first. Neighbor selection breaks
//! distance ties by training-row order, which keeps predictions
//! deterministic for duplicated rows.

use super::BaselineError;
use crate::nn::Mat;

/// The training set held verbatim, plus the neighborhood size.
#[derive(Debug, Clone)]
pub struct KnnModel {
    x: Mat,
    y: Vec<f64>,
    k: usize,
}

impl KnnModel {
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_training(&self) -> usize {
        self.x.rows()
    }
}

/// Validates and stores the training set.
pub fn knn_fit(x: &Mat, y: &[f64], k: usize) -> Result<KnnModel, BaselineError> {
    let n = x.rows();
    if n == 0 {
        return Err(BaselineError::EmptyTraining);
    }
    if n != y.len() {
        return Err(BaselineError::LengthMismatch { x: n, y: y.len() });
    }
    if k == 0 {
        return Err(BaselineError::InvalidK(k));
    }
    if k > n {
        return Err(BaselineError::KExceedsTraining { k, n });
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(BaselineError::NonFinite("training data"));
    }
    Ok(KnnModel { x: x.clone(), y: y.to_vec(), k })
}

/// Mean target of the k nearest training rows for each query row.
pub fn knn_predict(model: &KnnModel, queries: &Mat) -> Result<Vec<f64>, BaselineError> {
    if queries.cols() != model.x.cols() {
        return Err(BaselineError::WidthMismatch {
            expected: model.x.cols(),
            got: queries.cols(),
        });
    }
    if !queries.is_finite() {
        return Err(BaselineError::NonFinite("query features"));
    }
    let n = model.x.rows();
    let mut out = Vec::with_capacity(queries.rows());
    let mut scored: Vec<(f64, usize)> = Vec::with_capacity(n);
    for q in 0..queries.rows() {
        let query = queries.row(q);
        scored.clear();
        scored.extend((0..n).map(|i| {
            let dist_sq: f64 = model
                .x
                .row(i)
                .iter()
                .zip(query)
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            (dist_sq, i)
        }));
        let order = |a: &(f64, usize), b: &(f64, usize)| {
            a.0.total_cmp(&b.0).then(a.1.cmp(&b.1))
        };
        if model.k < n {
            scored.select_nth_unstable_by(model.k - 1, order);
        }
        let mean = scored[..model.k].iter().map(|(_, i)| model.y[*i]).sum::<f64>() / model.k as f64;
        out.push(mean);
    }
    Ok(out)
}
