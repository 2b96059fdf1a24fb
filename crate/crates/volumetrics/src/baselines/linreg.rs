//! Ordinary least squares with a trace-scaled ridge term.
//!
//! The model is fit through the normal equations on the design matrix
//! augmented with an intercept column. A small ridge term, scaled by
//! the mean diagonal of the Gram matrix, is added to the feature block
//! only. It leaves well-posed problems untouched to nine decimal
//! places while keeping the system positive definite when columns are
//! duplicated or identically zero, both of which standardized
//! indicator features produce routinely.

use super::BaselineError;
use crate::nn::Mat;

/// Relative ridge weight: the penalty is this times `trace(X'X)/d`.
const RIDGE_SCALE: f64 = 1e-9;

/// Linear predictor `y = coefficients . x + intercept`, clamped at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub coefficients: Vec<f64>,
    pub intercept: f64,
}

/// Fits the model by Cholesky-solving the ridge normal equations.
pub fn linreg_fit(x: &Mat, y: &[f64]) -> Result<LinearModel, BaselineError> {
    let n = x.rows();
    let d = x.cols();
    if n == 0 {
        return Err(BaselineError::EmptyTraining);
    }
    if n != y.len() {
        return Err(BaselineError::LengthMismatch { x: n, y: y.len() });
    }
    if !x.is_finite() || y.iter().any(|v| !v.is_finite()) {
        return Err(BaselineError::NonFinite("training data"));
    }

    // Gram matrix of [X | 1] with the intercept in the last slot.
    let k = d + 1;
    let mut a = Mat::zeros(k, k);
    let mut b = vec![0.0; k];
    for row in 0..n {
        let xi = x.row(row);
        for p in 0..d {
            for q in p..d {
                a[(p, q)] += xi[p] * xi[q];
            }
            a[(p, d)] += xi[p];
            b[p] += xi[p] * y[row];
        }
        a[(d, d)] += 1.0;
        b[d] += y[row];
    }
    for p in 0..k {
        for q in 0..p {
            a[(p, q)] = a[(q, p)];
        }
    }
    if d > 0 {
        let trace: f64 = (0..d).map(|p| a[(p, p)]).sum();
        let ridge = RIDGE_SCALE * trace / d as f64;
        for p in 0..d {
            a[(p, p)] += ridge;
        }
    }

    let solution = cholesky_solve(&mut a, &b)?;
    let (coefficients, intercept) = solution.split_at(d);
    Ok(LinearModel { coefficients: coefficients.to_vec(), intercept: intercept[0] })
}

/// Applies the model row by row, clamping predictions at zero.
pub fn linreg_predict(model: &LinearModel, x: &Mat) -> Result<Vec<f64>, BaselineError> {
    if x.cols() != model.coefficients.len() {
        return Err(BaselineError::WidthMismatch {
            expected: model.coefficients.len(),
            got: x.cols(),
        });
    }
    Ok((0..x.rows())
        .map(|row| {
            let dot: f64 = x
                .row(row)
                .iter()
                .zip(&model.coefficients)
                .map(|(v, c)| v * c)
                .sum();
            (dot + model.intercept).max(0.0)
        })
        .collect())
}

/// Solves `A s = b` for symmetric positive definite `A`, overwriting the
/// lower triangle of `a` with its Cholesky factor.
fn cholesky_solve(a: &mut Mat, b: &[f64]) -> Result<Vec<f64>, BaselineError> {
    let k = a.rows();
    for j in 0..k {
        for i in j..k {
            let mut sum = a[(i, j)];
            for p in 0..j {
                sum -= a[(i, p)] * a[(j, p)];
            }
            if i == j {
                if sum <= 0.0 || !sum.is_finite() {
                    return Err(BaselineError::SingularSystem);
                }
                a[(j, j)] = sum.sqrt();
            } else {
                a[(i, j)] = sum / a[(j, j)];
            }
        }
    }
    let mut z = vec![0.0; k];
    for i in 0..k {
        let mut sum = b[i];
        for p in 0..i {
            sum -= a[(i, p)] * z[p];
        }
        z[i] = sum / a[(i, i)];
    }
    let mut s = vec![0.0; k];
    for i in (0..k).rev() {
        let mut sum = z[i];
        for p in i + 1..k {
            sum -= a[(p, i)] * s[p];
        }
        s[i] = sum / a[(i, i)];
    }
    Ok(s)
}
