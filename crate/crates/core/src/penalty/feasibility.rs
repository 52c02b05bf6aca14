//! Finding a point in an intersection by simultaneous projection.

use std::time::Instant;

use nalgebra::DVector;

use super::trace::{SolveTrace, TraceRecord};
use crate::acceleration::{accelerate, SecantHistory};
use crate::error::{check_dim, Error, Result};
use crate::linalg::step_ratio;
use crate::projections::{max_distance, proximity, simultaneous_projection_step, ConvexSet};

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityConfig {
    /// Stop once every set is within this distance.
    pub tol: f64,
    /// Stop when the relative step falls below this (a stationary point of
    /// the proximity function).
    pub step_tol: f64,
    pub max_iter: usize,
    pub acceleration: Option<usize>,
    /// Largest distance still reported as feasible.
    pub feasible_tol: f64,
}

impl Default for FeasibilityConfig {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            step_tol: 1e-13,
            max_iter: 100_000,
            acceleration: None,
            feasible_tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FeasibilityOutcome {
    pub point: DVector<f64>,
    /// `sum_i dist(point, C_i)^2`
    pub proximity: f64,
    pub max_distance: f64,
    pub iterations: usize,
    /// `max_distance <= feasible_tol`; `false` for an (apparently) empty
    /// intersection, where `point` is a stationary point of the proximity.
    pub feasible: bool,
    /// Proximity (as `objective`) and largest distance after every step;
    /// `mu` is zero and `residual` is the step length.
    pub trace: SolveTrace,
}

/// Iterates the simultaneous projection map from `x0`.
pub fn feasibility_solve(
    sets: &[ConvexSet],
    x0: &DVector<f64>,
    config: &FeasibilityConfig,
) -> Result<FeasibilityOutcome> {
    let first = sets
        .first()
        .ok_or_else(|| Error::invalid("feasibility needs at least one set"))?;
    check_dim(first.dim(), x0.len())?;
    let mut history = SecantHistory::new(config.acceleration.unwrap_or(0));
    let objective = |y: &DVector<f64>| proximity(sets, y).unwrap_or(f64::INFINITY);
    let start = Instant::now();
    let mut trace = SolveTrace::default();
    let record = |trace: &mut SolveTrace, iter: usize, x: &DVector<f64>, step: f64| -> Result<f64> {
        let worst = max_distance(sets, x)?;
        trace.push(TraceRecord {
            iter,
            stage: 0,
            mu: 0.0,
            objective: proximity(sets, x)?,
            violation: worst,
            residual: step,
            seconds: start.elapsed().as_secs_f64(),
            extrapolated: false,
        });
        Ok(worst)
    };
    let mut x = x0.clone();
    let mut iterations = 0;
    let mut worst = record(&mut trace, 0, &x, 0.0)?;
    while iterations < config.max_iter && worst > config.tol {
        let next = if history.capacity() > 0 {
            accelerate(|y| simultaneous_projection_step(sets, y), objective, &x, &mut history)?.point
        } else {
            simultaneous_projection_step(sets, &x)?
        };
        iterations += 1;
        let ratio = step_ratio(&x, &next);
        let step = (&next - &x).norm();
        x = next;
        worst = record(&mut trace, iterations, &x, step)?;
        if ratio < config.step_tol {
            break;
        }
    }
    Ok(FeasibilityOutcome {
        proximity: trace.last().map_or(0.0, |r| r.objective),
        max_distance: worst,
        iterations,
        feasible: worst <= config.feasible_tol,
        point: x,
        trace,
    })
}
