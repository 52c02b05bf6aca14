//! Robust regression with Tukey's biweight.
//!
//! The biweight `phi` is bounded, so the regression loss
//! `sum_i phi(y_i - x_i' beta)` is not convex. Its second derivative is
//! bounded below by `-4/5`, which makes `l(beta) + kappa/2 ||beta||^2`
//! convex for `kappa = 4/5 rho(X'X)`. Any penalty above `kappa` therefore
//! gives strongly convex MM surrogates.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::penalty::{solve, MuSchedule, PenaltyProblem, SmoothLoss, Solution, SolverConfig};
use crate::projections::ConvexSet;

/// `phi(t) = c^2/6 [1 - (1 - (t/c)^2)^3]` for `|t| <= c`, `c^2/6` beyond.
pub fn tukey_value(t: f64, c: f64) -> f64 {
    let cap = c * c / 6.0;
    if t.abs() > c {
        return cap;
    }
    // 1 - (1 - s)^3 expanded to avoid cancellation for small t
    let s = (t / c).powi(2);
    cap * s * (3.0 - 3.0 * s + s * s)
}

pub fn tukey_d1(t: f64, c: f64) -> f64 {
    if t.abs() > c {
        return 0.0;
    }
    let u = 1.0 - (t / c).powi(2);
    t * u * u
}

pub fn tukey_d2(t: f64, c: f64) -> f64 {
    if t.abs() > c {
        return 0.0;
    }
    let s = (t / c).powi(2);
    1.0 - 6.0 * s + 5.0 * s * s
}

/// `4/5` times the largest eigenvalue of `X'X`, by power iteration.
pub fn kappa_bound(x: &DMatrix<f64>) -> f64 {
    0.8 * largest_gram_eigenvalue(x)
}

fn largest_gram_eigenvalue(x: &DMatrix<f64>) -> f64 {
    let p = x.ncols();
    if p == 0 || x.nrows() == 0 {
        return 0.0;
    }
    // deterministic start with unequal entries so it is rarely orthogonal
    // to the leading eigenvector
    let mut v = DVector::from_fn(p, |i, _| 1.0 + (i as f64 + 1.0).sqrt() * 0.1);
    v.normalize_mut();
    let mut estimate = 0.0;
    for _ in 0..10_000 {
        let w = x.tr_mul(&(x * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        if (next - estimate).abs() <= 1e-12 * next.abs() && (norm - next).abs() <= 1e-10 * norm {
            return norm;
        }
        estimate = next;
    }
    log::debug!("power iteration stalled; using a dense eigensolver");
    SymmetricEigen::new(x.tr_mul(x)).eigenvalues.max()
}

/// `sum_i phi(y_i - x_i' beta)`.
#[derive(Debug, Clone)]
pub struct TukeyLoss {
    design: DMatrix<f64>,
    response: DVector<f64>,
    cutoff: f64,
    kappa: f64,
}

impl TukeyLoss {
    pub fn new(design: DMatrix<f64>, response: DVector<f64>, cutoff: f64) -> Result<Self> {
        check_dim(design.nrows(), response.len())?;
        if !(cutoff > 0.0 && cutoff.is_finite()) {
            return Err(Error::invalid("Tukey cutoff must be positive"));
        }
        let kappa = kappa_bound(&design);
        Ok(Self {
            design,
            response,
            cutoff,
            kappa,
        })
    }

    fn residuals(&self, beta: &DVector<f64>) -> DVector<f64> {
        &self.response - &self.design * beta
    }
}

impl SmoothLoss for TukeyLoss {
    fn dim(&self) -> usize {
        self.design.ncols()
    }

    fn value(&self, beta: &DVector<f64>) -> f64 {
        self.residuals(beta).iter().map(|&r| tukey_value(r, self.cutoff)).sum()
    }

    fn gradient(&self, beta: &DVector<f64>) -> DVector<f64> {
        let weights = self.residuals(beta).map(|r| tukey_d1(r, self.cutoff));
        -self.design.tr_mul(&weights)
    }

    fn curvature(&self) -> f64 {
        self.kappa
    }
}

/// Ordinary least squares by SVD.
pub fn least_squares(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(x.nrows(), y.len())?;
    x.clone()
        .svd(true, true)
        .solve(y, 1e-12)
        .map_err(|e| Error::invalid(format!("least squares failed: {e}")))
}

#[derive(Debug, Clone)]
pub struct RobustConfig {
    /// Outer-loop settings; `None` picks a schedule from the curvature bound.
    pub solver: Option<SolverConfig>,
    /// Number of starts; the first is the least squares fit.
    pub starts: usize,
    pub seed: u64,
}

impl Default for RobustConfig {
    fn default() -> Self {
        Self {
            solver: None,
            starts: 5,
            seed: 0,
        }
    }
}

/// Default settings for a loss with curvature `kappa`.
pub fn default_solver_config(kappa: f64) -> SolverConfig {
    SolverConfig {
        schedule: MuSchedule::scaled_geometric(12, 1.25 * kappa.max(1e-3)),
        rho: 1e-10,
        residual_tol: Some(1e-6),
        violation_tol: 1e-6,
        ..SolverConfig::default()
    }
}

#[derive(Debug, Clone)]
pub struct RobustFit {
    pub beta: DVector<f64>,
    /// Solve of the winning start.
    pub solution: Solution,
    pub start_index: usize,
    /// The schedule had to be raised above the curvature bound.
    pub mu_raised: bool,
    pub kappa: f64,
}

/// Distance-majorization fit of Tukey regression over the intersection of
/// `sets`, best of several starts by final penalized objective.
pub fn robust_regression(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cutoff: f64,
    sets: Vec<ConvexSet>,
    config: &RobustConfig,
) -> Result<RobustFit> {
    let loss = TukeyLoss::new(x.clone(), y.clone(), cutoff)?;
    let kappa = loss.curvature();
    let mut solver = config.solver.clone().unwrap_or_else(|| default_solver_config(kappa));
    let mut mu_raised = false;
    let first = solver.schedule.values().first().copied().unwrap_or(0.0);
    if first > 0.0 && first <= kappa {
        let factor = 1.01 * kappa / first;
        log::warn!(
            "first penalty {first} does not exceed the curvature bound {kappa}; scaling the schedule by {factor}"
        );
        solver.schedule = MuSchedule::Explicit(solver.schedule.values().into_iter().map(|m| m * factor).collect());
        mu_raised = true;
    }
    let problem = PenaltyProblem::new(loss, sets)?;

    let ols = least_squares(x, y)?;
    let spread = 1.0 + ols.amax();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let starts: Vec<DVector<f64>> = (0..config.starts.max(1))
        .map(|k| {
            let jitter = DVector::from_fn(ols.len(), |_, _| StandardNormal.sample(&mut rng));
            if k == 0 {
                ols.clone()
            } else {
                &ols + jitter * spread
            }
        })
        .collect();
    let runs: Vec<Solution> = starts
        .par_iter()
        .map(|x0| solve(&problem, &solver, x0))
        .collect::<Result<_>>()?;
    let (start_index, solution) = runs
        .into_iter()
        .enumerate()
        .min_by(|(i, a), (j, b)| a.objective.total_cmp(&b.objective).then(i.cmp(j)))
        .expect("at least one start");
    Ok(RobustFit {
        beta: solution.x.clone(),
        solution,
        start_index,
        mu_raised,
        kappa,
    })
}
