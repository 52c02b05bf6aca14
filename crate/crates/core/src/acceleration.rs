//! Secant quasi-Newton acceleration of fixed-point maps.
//!
//! Near a fixed point the algorithm map `F` behaves like an affine map
//! `F(y) ~ F(x) + M (y - x)`. The differential `M` is approximated by the
//! minimum-norm matrix satisfying the secant conditions `M u_i = v_i`, where
//! `u_i` and `v_i` are consecutive differences of recent iterates and of their
//! images. The extrapolated point is the fixed point of that linear model:
//!
//! ```text
//! x_acc = F(x) + V (U'(U - V))^{-1} U' (F(x) - x)
//! ```
//!
//! which is exact when `F` is affine and the secants span the space. The
//! caller's objective guards every extrapolation: a candidate that is not
//! finite or does not beat the plain step `F(x)` is discarded.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::Result;
use crate::linalg::all_finite;

/// Ring buffer of the most recent `(x, F(x))` pairs.
#[derive(Debug, Clone)]
pub struct SecantHistory {
    capacity: usize,
    pairs: VecDeque<(DVector<f64>, DVector<f64>)>,
}

impl SecantHistory {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            pairs: VecDeque::with_capacity(capacity),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn clear(&mut self) {
        self.pairs.clear();
    }

    /// Records a pair; non-finite pairs are dropped.
    pub fn push(&mut self, x: DVector<f64>, fx: DVector<f64>) {
        if self.capacity == 0 || !all_finite(&x) || !all_finite(&fx) {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((x, fx));
    }

    fn iter(&self) -> impl Iterator<Item = &(DVector<f64>, DVector<f64>)> {
        self.pairs.iter()
    }
}

/// Fixed point of the secant model built from `history` followed by the
/// current pair `(x, fx)`. Returns `None` when no secant is available or the
/// secant system is numerically singular.
pub fn extrapolate(history: &SecantHistory, x: &DVector<f64>, fx: &DVector<f64>) -> Option<DVector<f64>> {
    let k = history.len();
    if k == 0 {
        return None;
    }
    let p = x.len();
    let mut u = DMatrix::zeros(p, k);
    let mut v = DMatrix::zeros(p, k);
    let points: Vec<(&DVector<f64>, &DVector<f64>)> = history
        .iter()
        .map(|(a, b)| (a, b))
        .chain(std::iter::once((x, fx)))
        .collect();
    for (col, w) in points.windows(2).enumerate() {
        u.set_column(col, &(w[1].0 - w[0].0));
        v.set_column(col, &(w[1].1 - w[0].1));
    }

    let residual = fx - x;
    let mut system = u.transpose() * (&u - &v);
    let rhs = u.transpose() * &residual;
    // ridge keeps rank-deficient secant sets solvable
    let ridge = 1e-12 * system.norm().max(f64::MIN_POSITIVE);
    for i in 0..k {
        system[(i, i)] += ridge;
    }
    let coef = system.lu().solve(&rhs)?;
    if !all_finite(&coef) {
        return None;
    }
    let candidate = fx + v * coef;
    all_finite(&candidate).then_some(candidate)
}

/// Result of one [`accelerate`] call.
#[derive(Debug, Clone)]
pub struct AcceleratedStep {
    pub point: DVector<f64>,
    /// The plain step `F(x)`.
    pub mapped: DVector<f64>,
    /// `true` when the extrapolated point was accepted.
    pub extrapolated: bool,
}

/// One safeguarded quasi-Newton step for the map `map` at `x`.
///
/// The returned point never has a larger objective than `F(x)`. The pair
/// `(x, F(x))` is appended to `history` afterwards.
pub fn accelerate<F, G>(map: F, objective: G, x: &DVector<f64>, history: &mut SecantHistory) -> Result<AcceleratedStep>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
    G: Fn(&DVector<f64>) -> f64,
{
    let mapped = map(x)?;
    let mut point = mapped.clone();
    let mut extrapolated = false;
    if let Some(candidate) = extrapolate(history, x, &mapped) {
        let plain = objective(&mapped);
        let trial = objective(&candidate);
        if trial.is_finite() && trial <= plain {
            point = candidate;
            extrapolated = true;
        }
    }
    history.push(x.clone(), mapped.clone());
    Ok(AcceleratedStep {
        point,
        mapped,
        extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{dmatrix, dvector};

    fn affine<'a>(a: &'a DMatrix<f64>, b: &'a DVector<f64>) -> impl Fn(&DVector<f64>) -> Result<DVector<f64>> + 'a {
        move |x| Ok(a * x + b)
    }

    #[test]
    fn affine_contraction_solved_in_one_step() {
        let a = dmatrix![0.5, 0.2; -0.1, 0.3];
        let b = dvector![1.0, -2.0];
        // (I - A) x* = b, solved by hand: det = 0.5*0.7 + 0.02 = 0.37
        let fixed = dvector![(0.7 * 1.0 + 0.2 * -2.0) / 0.37, (-0.1 * 1.0 + 0.5 * -2.0) / 0.37];
        let map = affine(&a, &b);
        let mut history = SecantHistory::new(2);
        let mut x = dvector![3.0, 4.0];
        for _ in 0..2 {
            let fx = map(&x).unwrap();
            history.push(x.clone(), fx.clone());
            x = fx;
        }
        let step = accelerate(&map, |_| 0.0, &x, &mut history).unwrap();
        assert!(step.extrapolated);
        assert!((step.point - fixed).norm() < 1e-8);
    }

    #[test]
    fn zero_capacity_is_plain_step() {
        let a = dmatrix![0.5, 0.0; 0.0, 0.5];
        let b = dvector![1.0, 1.0];
        let map = affine(&a, &b);
        let mut history = SecantHistory::new(0);
        let x = dvector![0.0, 0.0];
        let step = accelerate(&map, |_| 0.0, &x, &mut history).unwrap();
        assert_eq!(step.point, dvector![1.0, 1.0]);
        assert!(!step.extrapolated);
        assert!(history.is_empty());
    }

    #[test]
    fn identity_map_returns_input() {
        let map = |x: &DVector<f64>| Ok(x.clone());
        let mut history = SecantHistory::new(2);
        history.push(dvector![1.0, 2.0], dvector![1.0, 2.0]);
        history.push(dvector![0.0, 1.0], dvector![0.0, 1.0]);
        let x = dvector![5.0, -1.0];
        let step = accelerate(map, |_| 0.0, &x, &mut history).unwrap();
        assert_eq!(step.point, x);
    }

    #[test]
    fn safeguard_rejects_worse_candidate() {
        let a = dmatrix![0.5, 0.2; -0.1, 0.3];
        let b = dvector![1.0, -2.0];
        let map = affine(&a, &b);
        let mut history = SecantHistory::new(2);
        let mut x = dvector![3.0, 4.0];
        for _ in 0..2 {
            let fx = map(&x).unwrap();
            history.push(x.clone(), fx.clone());
            x = fx;
        }
        let plain = map(&x).unwrap();
        // objective that penalizes moving away from the plain step
        let objective = |y: &DVector<f64>| (y - &plain).norm();
        let step = accelerate(&map, objective, &x, &mut history).unwrap();
        assert!(!step.extrapolated);
        assert_eq!(step.point, plain);
    }

    #[test]
    fn singular_secants_fall_back() {
        let map = |x: &DVector<f64>| Ok(x * 0.5);
        let mut history = SecantHistory::new(3);
        // repeated identical pairs give zero secants
        history.push(dvector![1.0], dvector![0.5]);
        history.push(dvector![1.0], dvector![0.5]);
        let x = dvector![1.0];
        let step = accelerate(map, |y| y[0].abs(), &x, &mut history).unwrap();
        assert!(step.point.iter().all(|v| v.is_finite()));
        assert!(step.point[0].abs() <= 0.5);
    }

    #[test]
    fn history_is_bounded() {
        let mut history = SecantHistory::new(2);
        for i in 0..5 {
            history.push(dvector![i as f64], dvector![i as f64]);
        }
        assert_eq!(history.len(), 2);
        history.push(dvector![f64::NAN], dvector![0.0]);
        assert_eq!(history.len(), 2);
    }
}
