//! Small dense helpers shared by the solvers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Column-major flattening of a square matrix.
pub fn mat_to_vec(m: &DMatrix<f64>) -> DVector<f64> {
    DVector::from_column_slice(m.as_slice())
}

/// Inverse of [`mat_to_vec`] for an `n x n` matrix.
pub fn vec_to_mat(v: &DVector<f64>, n: usize) -> Result<DMatrix<f64>> {
    if v.len() != n * n {
        return Err(Error::DimensionMismatch {
            expected: n * n,
            found: v.len(),
        });
    }
    Ok(DMatrix::from_column_slice(n, n, v.as_slice()))
}

/// Side length of a square matrix stored as a flat vector.
pub fn square_side(len: usize) -> Option<usize> {
    let n = (len as f64).sqrt().round() as usize;
    (n * n == len).then_some(n)
}

pub fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for j in 0..n {
        for i in 0..j {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

/// Symmetrizes `m` after checking that its asymmetry is within roundoff
/// (`1e-12` relative to `max(1, max |m_ij|)`).
pub fn checked_symmetric(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "expected a square matrix, got {}x{}",
            m.nrows(),
            m.ncols()
        )));
    }
    let scale = m.amax().max(1.0);
    let asymmetry = max_asymmetry(m);
    if asymmetry > 1e-12 * scale {
        return Err(Error::NotSymmetric { asymmetry });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Relative change used by the stopping rule: `||new - old|| / (||old|| + 1)`.
pub fn step_ratio(old: &DVector<f64>, new: &DVector<f64>) -> f64 {
    (new - old).norm() / (old.norm() + 1.0)
}

pub fn all_finite(v: &DVector<f64>) -> bool {
    v.iter().all(|x| x.is_finite())
}

/// Median with the lower-median convention for even lengths.
pub fn lower_median(values: &mut [f64]) -> f64 {
    assert!(!values.is_empty(), "median of an empty slice");
    values.sort_by(|a, b| a.total_cmp(b));
    values[(values.len() - 1) / 2]
}
