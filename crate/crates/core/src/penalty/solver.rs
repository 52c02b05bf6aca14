//! The increasing-penalty outer loop around MM inner iterations.

use std::time::Instant;

use nalgebra::DVector;

use super::trace::{SolveTrace, TraceRecord};
use crate::acceleration::{extrapolate, SecantHistory};
use crate::error::{check_dim, Error, Result};
use crate::linalg::{all_finite, step_ratio};

/// Constraint violation of a point, as a largest absolute violation and a
/// signed worst value (negative when some constraint is violated).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Violation {
    pub max_abs: f64,
    pub signed: f64,
}

impl Violation {
    pub fn from_distance(distance: f64) -> Self {
        Self {
            max_abs: distance,
            signed: 0.0 - distance,
        }
    }
}

/// Everything the solver needs to know about the current iterate.
#[derive(Debug, Clone)]
pub struct Evaluation {
    /// `f_mu(x)`
    pub objective: f64,
    pub violation: Violation,
    /// Norm of the gradient of `f_mu` at `x`.
    pub residual: f64,
    /// Model-specific data carried into [`PenalizedModel::update`]; for a
    /// [`super::PenaltyProblem`] this is the weighted mean of the projections.
    pub anchor: DVector<f64>,
}

/// A penalized objective with an MM update.
///
/// `update` must return a point whose objective does not exceed
/// `eval.objective`, where `eval` is the evaluation of `x` at the same `mu`.
pub trait PenalizedModel: Sync {
    fn dim(&self) -> usize;

    /// Curvature bound of the loss; the first penalty must exceed it.
    fn curvature(&self) -> f64 {
        0.0
    }

    fn evaluate(&self, mu: f64, x: &DVector<f64>) -> Result<Evaluation>;

    fn update(&self, mu: f64, x: &DVector<f64>, eval: &Evaluation) -> Result<DVector<f64>>;
}

/// Penalty parameters for the outer loop.
#[derive(Debug, Clone, PartialEq)]
pub enum MuSchedule {
    /// `mu_k = 2^(k+1) - 1` for `k = 0..stages`.
    Geometric { stages: usize },
    /// A strictly increasing list.
    Explicit(Vec<f64>),
}

impl MuSchedule {
    pub fn values(&self) -> Vec<f64> {
        match self {
            MuSchedule::Geometric { stages } => (0..*stages).map(|k| 2f64.powi(k as i32 + 1) - 1.0).collect(),
            MuSchedule::Explicit(v) => v.clone(),
        }
    }

    /// The geometric schedule multiplied by `factor`.
    pub fn scaled_geometric(stages: usize, factor: f64) -> Self {
        MuSchedule::Explicit(
            MuSchedule::Geometric { stages }
                .values()
                .into_iter()
                .map(|m| m * factor)
                .collect(),
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub schedule: MuSchedule,
    /// Inner stopping threshold on `||x_{n+1} - x_n|| / (||x_n|| + 1)`.
    pub rho: f64,
    /// Cap on MM iterations per penalty stage.
    pub max_inner: usize,
    /// Number of secants for quasi-Newton acceleration; `None` for plain MM.
    pub acceleration: Option<usize>,
    /// Reject extrapolations that do not improve on the plain step.
    pub safeguard: bool,
    /// Final violation above this marks the solve as not converged.
    pub violation_tol: f64,
    /// Leave the outer loop as soon as a converged stage is within
    /// `violation_tol`.
    pub stop_when_feasible: bool,
    /// Additionally require `||grad f_mu|| <= residual_tol` to end a stage.
    pub residual_tol: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            schedule: MuSchedule::Geometric { stages: 20 },
            rho: 1e-4,
            max_inner: 100_000,
            acceleration: None,
            safeguard: true,
            violation_tol: 1e-3,
            stop_when_feasible: false,
            residual_tol: None,
        }
    }
}

impl SolverConfig {
    // At large mu the MM map contracts slowly, so a small step no longer
    // means a small error. The presets below also bound the stationarity
    // residual so that a stage cannot end on a short step alone.

    /// Matrix projection problems such as the doubly nonnegative one.
    pub fn projection() -> Self {
        Self {
            residual_tol: Some(1e-2),
            ..Self::default()
        }
    }

    pub fn isotone() -> Self {
        Self {
            rho: 1e-6,
            residual_tol: Some(1e-2),
            ..Self::default()
        }
    }

    /// Tight preset for the SVM and convex regression fits.
    pub fn tight() -> Self {
        Self {
            rho: 1e-8,
            schedule: MuSchedule::Geometric { stages: 30 },
            violation_tol: 1e-6,
            stop_when_feasible: true,
            residual_tol: Some(1e-4),
            ..Self::default()
        }
    }

    pub fn with_acceleration(mut self, secants: usize) -> Self {
        self.acceleration = Some(secants);
        self
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_schedule(mut self, schedule: MuSchedule) -> Self {
        self.schedule = schedule;
        self
    }

    /// Checks the schedule and tolerances; returns the penalty values.
    pub fn validate(&self, curvature: f64) -> Result<Vec<f64>> {
        let mus = self.schedule.values();
        if mus.is_empty() {
            return Err(Error::invalid("penalty schedule is empty"));
        }
        if mus.iter().any(|m| !(m.is_finite() && *m > 0.0)) {
            return Err(Error::invalid("penalty values must be positive and finite"));
        }
        if mus.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("penalty schedule must be strictly increasing"));
        }
        if mus[0] <= curvature {
            return Err(Error::invalid(format!(
                "first penalty {} must exceed the loss curvature {}",
                mus[0], curvature
            )));
        }
        if !(self.rho > 0.0) {
            return Err(Error::invalid("rho must be positive"));
        }
        if self.max_inner == 0 {
            return Err(Error::invalid("max_inner must be positive"));
        }
        Ok(mus)
    }
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub x: DVector<f64>,
    /// `f_mu(x)` at the final penalty.
    pub objective: f64,
    pub violation: Violation,
    /// Stationarity residual at the final penalty.
    pub residual: f64,
    /// Accepted MM steps over all stages.
    pub iterations: usize,
    pub mu_final: f64,
    pub converged: bool,
    pub trace: SolveTrace,
}

/// Runs the outer penalty loop from `x0`.
pub fn solve<M: PenalizedModel + ?Sized>(model: &M, config: &SolverConfig, x0: &DVector<f64>) -> Result<Solution> {
    let mus = config.validate(model.curvature())?;
    check_dim(model.dim(), x0.len())?;
    if !all_finite(x0) {
        return Err(Error::NonFinite("initial point"));
    }
    let start = Instant::now();
    let mut trace = SolveTrace::default();
    let mut x = x0.clone();
    let mut iterations = 0;
    let mut history = SecantHistory::new(config.acceleration.unwrap_or(0));
    let mut last_eval = None;
    let mut mu_final = mus[0];
    let mut stage_converged = false;

    for (stage, &mu) in mus.iter().enumerate() {
        mu_final = mu;
        history.clear();
        let mut eval = model.evaluate(mu, &x)?;
        let record = |trace: &mut SolveTrace, iter: usize, eval: &Evaluation, extrapolated: bool| {
            trace.push(TraceRecord {
                iter,
                stage,
                mu,
                objective: eval.objective,
                violation: eval.violation.max_abs,
                residual: eval.residual,
                seconds: start.elapsed().as_secs_f64(),
                extrapolated,
            })
        };
        record(&mut trace, iterations, &eval, false);
        stage_converged = false;
        for _ in 0..config.max_inner {
            let mapped = model.update(mu, &x, &eval)?;
            if !all_finite(&mapped) {
                return Err(Error::NonFinite("MM update"));
            }
            let mapped_eval = model.evaluate(mu, &mapped)?;
            let (next, next_eval, extrapolated) = match config.acceleration {
                Some(q) if q > 0 => {
                    let candidate = extrapolate(&history, &x, &mapped)
                        .and_then(|c| model.evaluate(mu, &c).ok().map(|e| (c, e)))
                        .filter(|(_, e)| {
                            // compared with both the plain step and the current point, so an
                            // accepted extrapolation never raises the objective even when the
                            // plain step does so by roundoff
                            let bound = mapped_eval.objective.min(eval.objective);
                            e.objective.is_finite() && (!config.safeguard || e.objective <= bound)
                        });
                    history.push(x.clone(), mapped.clone());
                    match candidate {
                        Some((c, e)) => (c, e, true),
                        None => (mapped, mapped_eval, false),
                    }
                }
                _ => (mapped, mapped_eval, false),
            };
            let ratio = step_ratio(&x, &next);
            x = next;
            eval = next_eval;
            iterations += 1;
            record(&mut trace, iterations, &eval, extrapolated);
            let residual_ok = config.residual_tol.is_none_or(|tol| eval.residual <= tol);
            if ratio < config.rho && residual_ok {
                stage_converged = true;
                break;
            }
        }
        let feasible = eval.violation.max_abs <= config.violation_tol;
        last_eval = Some(eval);
        if config.stop_when_feasible && stage_converged && feasible {
            break;
        }
    }

    let eval = last_eval.expect("schedule is nonempty");
    let converged = stage_converged && eval.violation.max_abs <= config.violation_tol;
    if !converged {
        log::warn!(
            "penalty solve stopped without convergence (violation {:.3e}, mu {})",
            eval.violation.max_abs,
            mu_final
        );
    }
    Ok(Solution {
        x,
        objective: eval.objective,
        violation: eval.violation,
        residual: eval.residual,
        iterations,
        mu_final,
        converged,
        trace,
    })
}
