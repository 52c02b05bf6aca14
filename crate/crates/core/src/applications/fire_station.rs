//! Locating a fire station nearest, in total, to a set of buildings.
//!
//! Buildings are axis-aligned rectangles and the objective is the sum of the
//! distances from the station to the buildings, in the l1 or l2 metric. For
//! rectangles both metric projections are the coordinate clamp. The l1
//! surrogate is minimized by the coordinatewise median of the projections;
//! the l2 surrogate is a Fermat-Weber problem solved by Weiszfeld iterations.

use nalgebra::Vector2;

use crate::error::{Error, Result};
use crate::linalg::lower_median;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectangle {
    pub center: Vector2<f64>,
    pub half_sides: Vector2<f64>,
}

impl Rectangle {
    pub fn new(center: Vector2<f64>, half_sides: Vector2<f64>) -> Result<Self> {
        if half_sides.iter().any(|h| !(*h > 0.0 && h.is_finite())) || !center.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid("rectangle half-sides must be positive"));
        }
        Ok(Self { center, half_sides })
    }

    pub fn project(&self, x: &Vector2<f64>) -> Vector2<f64> {
        let lo = self.center - self.half_sides;
        let hi = self.center + self.half_sides;
        Vector2::new(x[0].clamp(lo[0], hi[0]), x[1].clamp(lo[1], hi[1]))
    }

    pub fn distance(&self, x: &Vector2<f64>, norm: Norm) -> f64 {
        let d = x - self.project(x);
        match norm {
            Norm::L1 => d.abs().sum(),
            Norm::L2 => d.norm(),
        }
    }
}

/// The five buildings of the worked example, half-sides 0.5.
pub fn paper_rectangles() -> Vec<Rectangle> {
    [(-7.0, 0.5), (-5.0, -8.0), (4.0, 7.0), (5.0, 2.0), (-4.0, 6.0)]
        .iter()
        .map(|&(x, y)| Rectangle {
            center: Vector2::new(x, y),
            half_sides: Vector2::new(0.5, 0.5),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    L1,
    L2,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FireStationResult {
    pub location: Vector2<f64>,
    /// Sum of distances to the rectangles.
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Objective after every MM step, starting from the initial point.
    pub history: Vec<f64>,
}

pub fn total_distance(rects: &[Rectangle], x: &Vector2<f64>, norm: Norm) -> f64 {
    rects.iter().map(|r| r.distance(x, norm)).sum()
}

const STEP_TOL: f64 = 1e-10;

/// MM minimization of the summed distance from `start`.
pub fn fire_station(
    rects: &[Rectangle],
    norm: Norm,
    start: Vector2<f64>,
    max_iter: usize,
) -> Result<FireStationResult> {
    if rects.is_empty() {
        return Err(Error::invalid("fire station needs at least one rectangle"));
    }
    let mut x = start;
    let mut history = vec![total_distance(rects, &x, norm)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iter {
        let anchors: Vec<Vector2<f64>> = rects.iter().map(|r| r.project(&x)).collect();
        let next = match norm {
            Norm::L1 => {
                let mut xs: Vec<f64> = anchors.iter().map(|a| a[0]).collect();
                let mut ys: Vec<f64> = anchors.iter().map(|a| a[1]).collect();
                Vector2::new(lower_median(&mut xs), lower_median(&mut ys))
            }
            Norm::L2 => weiszfeld(&anchors, x),
        };
        iterations += 1;
        let step = (next - x).norm();
        x = next;
        history.push(total_distance(rects, &x, norm));
        if step <= STEP_TOL {
            converged = true;
            break;
        }
    }
    Ok(FireStationResult {
        location: x,
        objective: total_distance(rects, &x, norm),
        iterations,
        converged,
        history,
    })
}

/// Minimizer of `sum_i ||x - a_i||` by Weiszfeld iterations from `start`,
/// with the Vardi-Zhang modification when an iterate lands on an anchor.
fn weiszfeld(anchors: &[Vector2<f64>], start: Vector2<f64>) -> Vector2<f64> {
    let mut y = start;
    for _ in 0..10_000 {
        let mut numerator = Vector2::zeros();
        let mut denominator = 0.0;
        let mut pull = Vector2::zeros();
        let mut coincident = 0.0;
        for a in anchors {
            let d = (a - y).norm();
            if d <= 1e-14 * (1.0 + a.norm()) {
                coincident += 1.0;
                continue;
            }
            numerator += a / d;
            denominator += 1.0 / d;
            pull += (a - y) / d;
        }
        if denominator == 0.0 {
            return y;
        }
        let t = numerator / denominator;
        let next = if coincident > 0.0 {
            let r = pull.norm();
            if r <= coincident {
                // the anchor itself satisfies the optimality condition
                return y;
            }
            let keep = coincident / r;
            t * (1.0 - keep) + y * keep
        } else {
            t
        };
        let step = (next - y).norm();
        y = next;
        if step <= STEP_TOL * 1e-2 {
            break;
        }
    }
    y
}
