//! Convex regression by distance majorization.
//!
//! Fitted values `theta_i` and subgradients `xi_i` must satisfy
//! `xi_k' (x_j - x_k) <= theta_j - theta_k` for every ordered pair, which
//! makes `max_j theta_j + xi_j' (x - x_j)` a convex interpolant. Each pair
//! is a halfspace in the stacked variable `(theta, xi_1, ..., xi_n)`; its
//! projection moves `theta_j`, `theta_k` and `xi_k` by multiples of
//!
//! ```text
//! r_jk = [((x_j - x_k)' xi_k - theta_j + theta_k) / (2 + ||x_j - x_k||^2)]_+
//! ```
//!
//! The penalty is the plain sum over the `n(n-1)` pairs, and the surrogate
//! minimizer is explicit in both blocks.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::RegressionData;
use crate::error::{check_dim, Error, Result};
use crate::penalty::{solve, Evaluation, PenalizedModel, Solution, SolverConfig, Violation};

/// Cases above which the pair loop runs in parallel.
const PARALLEL_CASES: usize = 64;

#[derive(Debug, Clone)]
pub struct ConvexRegModel {
    data: RegressionData,
}

/// Per-pair quantities reduced in case order.
struct PairSums {
    /// `sum_k r_ik - sum_j r_ji`
    theta_shift: DVector<f64>,
    /// column `l`: `sum_j r_jl (x_j - x_l)`
    xi_pull: DMatrix<f64>,
    /// `sum r_jk^2 (2 + ||x_j - x_k||^2)`
    penalty: f64,
    /// `min_{j,k} theta_j - theta_k - xi_k' (x_j - x_k)`
    worst_slack: f64,
}

impl ConvexRegModel {
    pub fn new(data: RegressionData) -> Result<Self> {
        if data.n() < 2 {
            return Err(Error::invalid("convex regression needs at least two cases"));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &RegressionData {
        &self.data
    }

    fn n(&self) -> usize {
        self.data.n()
    }

    fn p(&self) -> usize {
        self.data.p()
    }

    fn xi(&self, z: &DVector<f64>, l: usize) -> DVector<f64> {
        z.rows(self.n() + l * self.p(), self.p()).into_owned()
    }

    /// Contributions of all pairs `(j, k)` for one `k`.
    fn column(&self, z: &DVector<f64>, k: usize) -> (Vec<(usize, f64)>, DVector<f64>, f64, f64) {
        let n = self.n();
        let xi_k = self.xi(z, k);
        let x_k = self.data.case(k);
        let mut pairs = Vec::new();
        let mut pull = DVector::zeros(self.p());
        let mut penalty = 0.0;
        let mut worst = f64::INFINITY;
        for j in (0..n).filter(|&j| j != k) {
            let d = self.data.case(j) - &x_k;
            let excess = d.dot(&xi_k) - z[j] + z[k];
            worst = worst.min(-excess);
            let norm = 2.0 + d.norm_squared();
            let r = excess.max(0.0) / norm;
            if r > 0.0 {
                pairs.push((j, r));
                pull += &d * r;
                penalty += r * r * norm;
            }
        }
        (pairs, pull, penalty, worst)
    }

    fn pair_sums(&self, z: &DVector<f64>) -> PairSums {
        let n = self.n();
        let columns: Vec<_> = if n >= PARALLEL_CASES {
            (0..n).into_par_iter().map(|k| self.column(z, k)).collect()
        } else {
            (0..n).map(|k| self.column(z, k)).collect()
        };
        let mut theta_shift = DVector::zeros(n);
        let mut xi_pull = DMatrix::zeros(self.p(), n);
        let mut penalty = 0.0;
        let mut worst_slack = f64::INFINITY;
        for (k, (pairs, pull, pen, worst)) in columns.into_iter().enumerate() {
            for (j, r) in pairs {
                theta_shift[j] += r;
                theta_shift[k] -= r;
            }
            xi_pull.set_column(k, &pull);
            penalty += pen;
            worst_slack = worst_slack.min(worst);
        }
        PairSums {
            theta_shift,
            xi_pull,
            penalty,
            worst_slack,
        }
    }

    fn loss(&self, z: &DVector<f64>) -> f64 {
        (0..self.n())
            .map(|i| 0.5 * self.data.w[i] * (z[i] - self.data.y[i]).powi(2))
            .sum()
    }
}

impl PenalizedModel for ConvexRegModel {
    fn dim(&self) -> usize {
        self.n() * (1 + self.p())
    }

    fn evaluate(&self, mu: f64, z: &DVector<f64>) -> Result<Evaluation> {
        check_dim(self.dim(), z.len())?;
        let sums = self.pair_sums(z);
        let objective = self.loss(z) + 0.5 * mu * sums.penalty;
        if !objective.is_finite() {
            return Err(Error::NonFinite("convex regression objective"));
        }
        let n = self.n();
        let mut grad_sq = 0.0;
        for i in 0..n {
            let g = self.data.w[i] * (z[i] - self.data.y[i]) - mu * sums.theta_shift[i];
            grad_sq += g * g;
        }
        grad_sq += sums.xi_pull.norm_squared() * mu * mu;
        let mut anchor = sums.theta_shift;
        anchor.extend(sums.xi_pull.iter().copied());
        Ok(Evaluation {
            objective,
            violation: Violation {
                max_abs: (-sums.worst_slack).max(0.0),
                signed: sums.worst_slack,
            },
            residual: grad_sq.sqrt(),
            anchor,
        })
    }

    fn update(&self, mu: f64, z: &DVector<f64>, eval: &Evaluation) -> Result<DVector<f64>> {
        let n = self.n();
        let pairs = (n * (n - 1)) as f64;
        let mut next = z.clone();
        for i in 0..n {
            let w = self.data.w[i];
            // sum over all sets of P(theta)_i = n(n-1) theta_i + shift_i
            let projected = pairs * z[i] + eval.anchor[i];
            next[i] = (w * self.data.y[i] + mu * projected) / (w + pairs * mu);
        }
        for idx in n..self.dim() {
            next[idx] = z[idx] - eval.anchor[idx] / pairs;
        }
        Ok(next)
    }
}

#[derive(Debug, Clone)]
pub struct ConvexRegFit {
    pub theta: DVector<f64>,
    /// Column `i` is the subgradient at case `i`.
    pub xi: DMatrix<f64>,
    /// `1/2 sum w_i (y_i - theta_i)^2`
    pub objective: f64,
    pub solution: Solution,
}

/// Fits from `theta = y`, `xi = 0`.
pub fn convex_reg_fit(data: &RegressionData, config: &SolverConfig) -> Result<ConvexRegFit> {
    let model = ConvexRegModel::new(data.clone())?;
    let (n, p) = (data.n(), data.p());
    let mut start = DVector::zeros(model.dim());
    start.rows_mut(0, n).copy_from(&data.y);
    let solution = solve(&model, config, &start)?;
    let theta = solution.x.rows(0, n).into_owned();
    let xi = DMatrix::from_column_slice(p, n, solution.x.rows(n, n * p).as_slice());
    Ok(ConvexRegFit {
        objective: model.loss(&solution.x),
        theta,
        xi,
        solution,
    })
}

/// `max_j theta_j + xi_j' (x - x_j)`.
pub fn predict_convex(fit: &ConvexRegFit, data: &RegressionData, x: &DVector<f64>) -> f64 {
    (0..fit.theta.len())
        .map(|j| fit.theta[j] + fit.xi.column(j).dot(&(x - data.case(j))))
        .fold(f64::NEG_INFINITY, f64::max)
}
