//! Soft-margin support vector machines by distance majorization.
//!
//! The primal problem minimizes `sum eps_j + lambda/2 ||theta||^2` subject to
//! `eps >= 0` and the margin halfspaces `eps_j + y_j x_j' theta >= 1`. The
//! halfspaces are penalized; `eps >= 0` is kept as a hard constraint of the
//! separable surrogate, whose minimizer is explicit.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::RegressionData;
use crate::error::{check_dim, Error, Result};
use crate::linalg::checked_symmetric;
use crate::penalty::{solve, Evaluation, PenalizedModel, Solution, SolverConfig, Violation};

/// The penalized SVM on stacked variables `(eps_1..eps_n, theta)`.
#[derive(Debug, Clone)]
pub struct SvmProblem {
    features: DMatrix<f64>,
    labels: DVector<f64>,
    lambda: f64,
    /// `1 + ||x_j||^2`
    norms: DVector<f64>,
}

impl SvmProblem {
    /// `features` rows are cases; include a column of ones for an intercept.
    pub fn new(features: DMatrix<f64>, labels: DVector<f64>, lambda: f64) -> Result<Self> {
        check_dim(features.nrows(), labels.len())?;
        if labels.iter().any(|&y| y != 1.0 && y != -1.0) {
            return Err(Error::invalid("labels must be -1 or 1"));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid("lambda must be positive"));
        }
        let norms = DVector::from_fn(features.nrows(), |j, _| 1.0 + features.row(j).norm_squared());
        Ok(Self {
            features,
            labels,
            lambda,
            norms,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn p(&self) -> usize {
        self.features.ncols()
    }

    fn split<'a>(&self, z: &'a DVector<f64>) -> (nalgebra::DVectorView<'a, f64>, nalgebra::DVectorView<'a, f64>) {
        (z.rows(0, self.n()), z.rows(self.n(), self.p()))
    }

    /// Margin shortfalls `1 - eps_j - y_j x_j' theta`.
    fn shortfalls(&self, z: &DVector<f64>) -> DVector<f64> {
        let (eps, theta) = self.split(z);
        let margins = &self.features * theta;
        DVector::from_fn(self.n(), |j, _| 1.0 - eps[j] - self.labels[j] * margins[j])
    }

    /// `sum eps + lambda/2 ||theta||^2`.
    pub fn objective(&self, z: &DVector<f64>) -> f64 {
        let (eps, theta) = self.split(z);
        eps.sum() + 0.5 * self.lambda * theta.norm_squared()
    }
}

impl PenalizedModel for SvmProblem {
    fn dim(&self) -> usize {
        self.n() + self.p()
    }

    fn evaluate(&self, mu: f64, z: &DVector<f64>) -> Result<Evaluation> {
        check_dim(self.dim(), z.len())?;
        let short = self.shortfalls(z);
        // r_j: projection coefficient of margin set j
        let r = DVector::from_fn(self.n(), |j, _| short[j].max(0.0) / self.norms[j]);
        let penalty: f64 = r.iter().zip(self.norms.iter()).map(|(r, a)| r * r * a).sum();
        let mut objective = self.objective(z) + 0.5 * mu * penalty;
        if !objective.is_finite() {
            return Err(Error::NonFinite("SVM objective"));
        }
        // slack is confined to eps >= 0 by the surrogate, so points outside
        // (such as extrapolations) are infeasible for the model
        if z.rows(0, self.n()).min() < 0.0 {
            objective = f64::INFINITY;
        }
        let signed = -short.max();
        let violation = Violation {
            max_abs: (-signed).max(0.0),
            signed,
        };
        // sum_j r_j y_j x_j
        let pull = self.features.tr_mul(&r.component_mul(&self.labels));
        let (eps, theta) = self.split(z);
        let mut grad_sq = 0.0;
        for j in 0..self.n() {
            let g = 1.0 - mu * r[j];
            // projected gradient for the bound eps >= 0
            let g = if eps[j] <= 0.0 { g.min(0.0) } else { g };
            grad_sq += g * g;
        }
        grad_sq += (theta * self.lambda - &pull * mu).norm_squared();
        let mut anchor = r;
        anchor.extend(pull.iter().copied());
        Ok(Evaluation {
            objective,
            violation,
            residual: grad_sq.sqrt(),
            anchor,
        })
    }

    fn update(&self, mu: f64, z: &DVector<f64>, eval: &Evaluation) -> Result<DVector<f64>> {
        let n = self.n() as f64;
        let (eps, theta) = self.split(z);
        let r = eval.anchor.rows(0, self.n());
        let pull = eval.anchor.rows(self.n(), self.p());
        let mut next = DVector::zeros(self.dim());
        for j in 0..self.n() {
            // (1/n)[sum_i P_i(eps)_j - 1/mu]_+ with sum_i P_i(eps)_j = n eps_j + r_j
            next[j] = ((n * eps[j] + r[j] - 1.0 / mu) / n).max(0.0);
        }
        let theta_next = (theta * n + pull) * (mu / (self.lambda + n * mu));
        next.rows_mut(self.n(), self.p()).copy_from(&theta_next);
        Ok(next)
    }
}

#[derive(Debug, Clone)]
pub struct SvmModel {
    pub theta: DVector<f64>,
    pub slack: DVector<f64>,
    pub lambda: f64,
    /// `sum slack + lambda/2 ||theta||^2`
    pub objective: f64,
    pub solution: Solution,
}

impl SvmModel {
    pub fn decision(&self, features: &DVector<f64>) -> f64 {
        self.theta.dot(features)
    }
}

/// Fits from zero slack and coefficients. `data.x` rows are the features
/// (the caller supplies any intercept column) and `data.y` the labels.
pub fn svm_fit(data: &RegressionData, lambda: f64, config: &SolverConfig) -> Result<SvmModel> {
    let problem = SvmProblem::new(data.x.clone(), data.y.clone(), lambda)?;
    let solution = solve(&problem, config, &DVector::zeros(problem.dim()))?;
    let slack = solution.x.rows(0, problem.n()).into_owned();
    let theta = solution.x.rows(problem.n(), problem.p()).into_owned();
    Ok(SvmModel {
        objective: problem.objective(&solution.x),
        theta,
        slack,
        lambda,
        solution,
    })
}

/// Factor `L` with `L L' = K` for a positive semidefinite kernel matrix.
///
/// Without `rank` this is a Cholesky factor when `K` is definite and an
/// eigenvector factor otherwise; with `rank = r` it is the best rank-`r`
/// factor `U_r D_r^{1/2}`.
pub fn kernel_svm_prepare(k: &DMatrix<f64>, rank: Option<usize>) -> Result<DMatrix<f64>> {
    let k = checked_symmetric(k)?;
    let n = k.nrows();
    if let Some(r) = rank {
        if r == 0 || r > n {
            return Err(Error::invalid(format!("rank must be in 1..={n}")));
        }
    }
    let eig = SymmetricEigen::new(k.clone());
    let scale = eig.eigenvalues.amax().max(1.0);
    if eig.eigenvalues.min() < -1e-10 * scale {
        return Err(Error::invalid(format!(
            "kernel matrix is indefinite (eigenvalue {:.3e})",
            eig.eigenvalues.min()
        )));
    }
    if rank.is_none() {
        if let Some(chol) = k.clone().cholesky() {
            return Ok(chol.l());
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let keep: Vec<usize> = order
        .into_iter()
        .take(rank.unwrap_or(n))
        .filter(|&i| eig.eigenvalues[i] > 1e-14 * scale)
        .collect();
    let mut l = DMatrix::zeros(n, keep.len().max(1));
    for (col, &i) in keep.iter().enumerate() {
        l.set_column(col, &(eig.eigenvectors.column(i) * eig.eigenvalues[i].sqrt()));
    }
    Ok(l)
}

/// Kernel SVM: the linear SVM on the rows of the kernel factor, with an
/// intercept column prepended.
pub fn kernel_svm_fit(
    k: &DMatrix<f64>,
    labels: &DVector<f64>,
    lambda: f64,
    rank: Option<usize>,
    config: &SolverConfig,
) -> Result<SvmModel> {
    let l = kernel_svm_prepare(k, rank)?;
    let n = l.nrows();
    let features = DMatrix::from_fn(n, l.ncols() + 1, |i, j| if j == 0 { 1.0 } else { l[(i, j - 1)] });
    let data = RegressionData::unweighted(features, labels.clone())?;
    svm_fit(&data, lambda, config)
}
