//! Penalized problems built from a smooth loss and a list of convex sets.

use std::sync::Arc;

use nalgebra::DVector;
use rayon::prelude::*;

use super::loss::SmoothLoss;
use super::solver::{Evaluation, PenalizedModel, Violation};
use crate::error::{check_dim, Error, Result};
use crate::projections::{ConvexSet, Displacement};

/// Custom violation measure replacing the default `max_i dist(x, C_i)`.
pub type ViolationFn = Arc<dyn Fn(&DVector<f64>) -> Violation + Send + Sync>;

/// Work below which projections run sequentially.
const PARALLEL_WORK: usize = 1 << 14;

/// `f_mu(x) = l(x) + mu/2 sum_i gamma_i dist(x, C_i)^2` with weights
/// normalized to sum to one.
#[derive(Clone)]
pub struct PenaltyProblem<L> {
    loss: L,
    sets: Vec<ConvexSet>,
    weights: Vec<f64>,
    violation_fn: Option<ViolationFn>,
    inner_tol: f64,
    inner_max_iter: usize,
}

impl<L: SmoothLoss> PenaltyProblem<L> {
    /// Uniform weights.
    pub fn new(loss: L, sets: Vec<ConvexSet>) -> Result<Self> {
        let weights = vec![1.0; sets.len()];
        Self::with_weights(loss, sets, weights)
    }

    /// Positive weights, rescaled to sum to one.
    pub fn with_weights(loss: L, sets: Vec<ConvexSet>, weights: Vec<f64>) -> Result<Self> {
        check_dim(sets.len(), weights.len())?;
        for set in &sets {
            check_dim(loss.dim(), set.dim())?;
        }
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("set weights must be positive and finite"));
        }
        let total: f64 = weights.iter().sum();
        let weights = weights.into_iter().map(|w| w / total).collect();
        Ok(Self {
            loss,
            sets,
            weights,
            violation_fn: None,
            inner_tol: 1e-10,
            inner_max_iter: 10_000,
        })
    }

    pub fn with_violation(mut self, f: ViolationFn) -> Self {
        self.violation_fn = Some(f);
        self
    }

    /// Tolerance and iteration cap for the generic inner minimizer used when
    /// the loss has no closed-form proximal map.
    pub fn with_inner_solver(mut self, tol: f64, max_iter: usize) -> Self {
        self.inner_tol = tol;
        self.inner_max_iter = max_iter;
        self
    }

    pub fn loss(&self) -> &L {
        &self.loss
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.sets
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// `P_i(x) - x` for every set, in set order.
    pub fn displacements(&self, x: &DVector<f64>) -> Result<Vec<Displacement>> {
        let heavy = self.sets.iter().any(|s| matches!(s, ConvexSet::PsdCone { .. }));
        if self.sets.len() > 1 && (heavy || self.sets.len() * x.len() >= PARALLEL_WORK) {
            self.sets.par_iter().map(|s| s.displacement(x)).collect()
        } else {
            self.sets.iter().map(|s| s.displacement(x)).collect()
        }
    }

    /// Weighted mean of the projections and the weighted sum of squared
    /// distances, reduced in set order.
    fn anchor(&self, x: &DVector<f64>) -> Result<(DVector<f64>, f64, f64)> {
        let mut anchor = x.clone();
        let mut weighted = 0.0;
        let mut worst = 0.0_f64;
        for (d, &w) in self.displacements(x)?.iter().zip(&self.weights) {
            d.add_scaled_to(w, &mut anchor);
            let sq = d.norm_squared();
            weighted += w * sq;
            worst = worst.max(sq);
        }
        Ok((anchor, weighted, worst.sqrt()))
    }

    pub fn objective(&self, mu: f64, x: &DVector<f64>) -> Result<f64> {
        let (_, weighted, _) = self.anchor(x)?;
        Ok(self.loss.value(x) + 0.5 * mu * weighted)
    }

    /// `argmin_u l(u) + mu/2 ||u - anchor||^2`, warm-started at `start`.
    fn minimize_surrogate(&self, mu: f64, anchor: &DVector<f64>, start: &DVector<f64>) -> Result<DVector<f64>> {
        if let Some(u) = self.loss.proximal(anchor, mu) {
            return Ok(u);
        }
        minimize_surrogate(&self.loss, mu, anchor, start, self.inner_tol, self.inner_max_iter)
    }
}

impl<L: SmoothLoss> PenalizedModel for PenaltyProblem<L> {
    fn dim(&self) -> usize {
        self.loss.dim()
    }

    fn curvature(&self) -> f64 {
        self.loss.curvature()
    }

    fn evaluate(&self, mu: f64, x: &DVector<f64>) -> Result<Evaluation> {
        check_dim(self.loss.dim(), x.len())?;
        let (anchor, weighted, worst) = self.anchor(x)?;
        let value = self.loss.value(x);
        if !value.is_finite() {
            return Err(Error::NonFinite("loss value"));
        }
        let residual = (self.loss.gradient(x) - (&anchor - x) * mu).norm();
        let violation = match &self.violation_fn {
            Some(f) => f(x),
            None => Violation::from_distance(worst),
        };
        Ok(Evaluation {
            objective: value + 0.5 * mu * weighted,
            violation,
            residual,
            anchor,
        })
    }

    fn update(&self, mu: f64, x: &DVector<f64>, eval: &Evaluation) -> Result<DVector<f64>> {
        self.minimize_surrogate(mu, &eval.anchor, x)
    }
}

/// One MM step: the minimizer of the distance-majorization surrogate at `x`.
pub fn mm_step<L: SmoothLoss>(problem: &PenaltyProblem<L>, mu: f64, x: &DVector<f64>) -> Result<DVector<f64>> {
    if !(mu > problem.loss.curvature()) {
        return Err(Error::invalid(format!(
            "penalty {mu} must exceed the loss curvature {}",
            problem.loss.curvature()
        )));
    }
    if !crate::linalg::all_finite(x) {
        return Err(Error::NonFinite("MM input"));
    }
    let eval = problem.evaluate(mu, x)?;
    problem.update(mu, x, &eval)
}

/// `||grad l(x) + mu sum_i gamma_i (x - P_i(x))||`.
pub fn stationarity_residual<L: SmoothLoss>(problem: &PenaltyProblem<L>, mu: f64, x: &DVector<f64>) -> Result<f64> {
    Ok(problem.evaluate(mu, x)?.residual)
}

/// Armijo gradient descent on `g(u) = l(u) + mu/2 ||u - anchor||^2` from
/// `start`. Every accepted step decreases `g`, so the result never has a
/// larger surrogate value than the start.
pub fn minimize_surrogate<L: SmoothLoss + ?Sized>(
    loss: &L,
    mu: f64,
    anchor: &DVector<f64>,
    start: &DVector<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<DVector<f64>> {
    let surrogate = |u: &DVector<f64>| loss.value(u) + 0.5 * mu * (u - anchor).norm_squared();
    let gradient = |u: &DVector<f64>| loss.gradient(u) + (u - anchor) * mu;

    let mut u = start.clone();
    let mut value = surrogate(&u);
    let mut grad = gradient(&u);
    let mut step = 1.0 / mu;
    for iteration in 0..max_iter {
        let grad_norm = grad.norm();
        if grad_norm <= tol {
            return Ok(u);
        }
        let grad_sq = grad_norm * grad_norm;
        // decreases below this are indistinguishable from rounding
        let noise = 8.0 * f64::EPSILON * value.abs().max(1.0);
        let mut t = step;
        let accepted = loop {
            let trial = &u - &grad * t;
            let trial_value = surrogate(&trial);
            let decrease = value - trial_value;
            if decrease >= 1e-4 * t * grad_sq && decrease > noise {
                break Some((trial, trial_value, None));
            }
            if decrease >= -noise {
                let trial_grad = gradient(&trial);
                if trial_grad.norm() <= 0.9 * grad_norm {
                    break Some((trial, trial_value, Some(trial_grad)));
                }
            }
            t *= 0.5;
            if t < 1e-30 / mu.max(1.0) {
                break None;
            }
        };
        match accepted {
            Some((trial, trial_value, trial_grad)) => {
                u = trial;
                value = trial_value;
                grad = trial_grad.unwrap_or_else(|| gradient(&u));
                step = 2.0 * t;
            }
            None => {
                // Roundoff floor: the surrogate cannot be decreased further.
                let scale = 1.0 + loss.gradient(&u).norm() + mu * (&u - anchor).norm();
                if grad_norm <= 1e-8 * scale {
                    return Ok(u);
                }
                return Err(Error::InnerNonconvergence {
                    iterations: iteration,
                    gradient_norm: grad_norm,
                    last_iterate: u,
                });
            }
        }
        if !value.is_finite() {
            return Err(Error::NonFinite("surrogate value"));
        }
    }
    let gradient_norm = grad.norm();
    if gradient_norm <= tol {
        return Ok(u);
    }
    Err(Error::InnerNonconvergence {
        iterations: max_iter,
        gradient_norm,
        last_iterate: u,
    })
}
