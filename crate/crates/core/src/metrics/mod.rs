//! Error, accuracy and Chebyshev-center measurements, plus per-run traces.

mod chebyshev;
mod trace;

pub use chebyshev::{chebyshev_center, chebyshev_error, ChebyshevResult};
pub use trace::{Aggregation, IterationTrace, TraceRecorder};

use crate::error::Result;
use crate::matrix::{check_len, distance, dot, DenseMatrix};

/// `‖x − x*‖₂`.
pub fn approximation_error(x: &[f64], x_star: &[f64]) -> f64 {
    distance(x, x_star)
}

/// `+1` for non-negative values, matching the labelling rule.
#[inline]
pub fn sign(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Fraction of rows with `sign(⟨aᵢ, x⟩) = bᵢ`.
pub fn classification_accuracy(a: &DenseMatrix, labels: &[f64], x: &[f64]) -> Result<f64> {
    check_len("labels", a.rows(), labels.len())?;
    check_len("iterate", a.cols(), x.len())?;
    let hits = a
        .row_iter()
        .zip(labels)
        .filter(|(row, &b)| sign(dot(row, x)) == b)
        .count();
    Ok(hits as f64 / a.rows() as f64)
}

/// `|⟨x − x*, vⱼ⟩|` for every column `vⱼ` of `v`.
pub fn singular_errors(x: &[f64], x_star: &[f64], v: &DenseMatrix) -> Result<Vec<f64>> {
    check_len("ground truth", x.len(), x_star.len())?;
    check_len("singular vectors", v.rows(), x.len())?;
    let d: Vec<f64> = x.iter().zip(x_star).map(|(a, b)| a - b).collect();
    Ok(v.tr_matvec(&d)?.into_iter().map(f64::abs).collect())
}
