//! Projection onto the doubly nonnegative matrices.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::MethodConfig;
use crate::dual::{dual_solve, DualProblem};
use crate::error::Result;
use crate::linalg::{checked_symmetric, mat_to_vec};
use crate::penalty::{solve, PenaltyProblem, Solution, SquaredDistance, Violation};
use crate::projections::ConvexSet;

#[derive(Debug, Clone)]
pub struct DnnResult {
    pub matrix: DMatrix<f64>,
    /// Frobenius distance to the input.
    pub distance: f64,
    /// `|most negative eigenvalue|`, zero when positive semidefinite.
    pub eigen_violation: f64,
    /// `|most negative entry|`, zero when entrywise nonnegative.
    pub entry_violation: f64,
    pub solution: Solution,
}

/// Both violation measures of a flattened `n x n` matrix; the signed value
/// is the smaller of the least eigenvalue and the least entry.
pub fn dnn_violation(x: &DVector<f64>, n: usize) -> Violation {
    let m = DMatrix::from_column_slice(n, n, x.as_slice());
    let sym = (&m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym).eigenvalues.min();
    let entry = x.min();
    let signed = eig.min(entry);
    Violation {
        max_abs: (-signed).max(0.0),
        signed,
    }
}

/// Nearest doubly nonnegative matrix to the symmetric `s` in Frobenius norm.
pub fn dnn_project(s: &DMatrix<f64>, config: &MethodConfig) -> Result<DnnResult> {
    let s = checked_symmetric(s)?;
    let n = s.nrows();
    let target = mat_to_vec(&s);
    let loss = SquaredDistance::new(target.clone());
    let sets = vec![ConvexSet::psd_cone(n), ConvexSet::nonnegative_matrices(n)];
    let violation = Arc::new(move |x: &DVector<f64>| dnn_violation(x, n));

    let solution = if config.method.is_dual() {
        let problem = DualProblem::new(loss, sets)?.with_violation(violation);
        dual_solve(&problem, &config.dual_config())?
    } else {
        let problem = PenaltyProblem::new(loss, sets)?.with_violation(violation);
        solve(&problem, &config.penalty_config(2), &DVector::zeros(n * n))?
    };
    let matrix = DMatrix::from_column_slice(n, n, solution.x.as_slice());
    let matrix = (&matrix + matrix.transpose()) * 0.5;
    let eigen = SymmetricEigen::new(matrix.clone()).eigenvalues.min();
    Ok(DnnResult {
        distance: (&matrix - &s).norm(),
        eigen_violation: (-eigen).max(0.0),
        entry_violation: (-matrix.min()).max(0.0),
        matrix,
        solution,
    })
}
