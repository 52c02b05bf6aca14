//! Smooth losses and the built-in quadratic ones.

use nalgebra::DVector;

use crate::error::{check_dim, Error, Result};

/// A differentiable loss `l(x)`.
///
/// `curvature` is a bound `kappa >= 0` such that `l(x) + kappa/2 ||x||^2` is
/// convex; the penalty parameter must exceed it so every surrogate is
/// strongly convex.
pub trait SmoothLoss: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &DVector<f64>) -> f64;

    fn gradient(&self, x: &DVector<f64>) -> DVector<f64>;

    /// `argmin_u l(u) + (c/2) ||u - v||^2` when it has a closed form.
    fn proximal(&self, _v: &DVector<f64>, _c: f64) -> Option<DVector<f64>> {
        None
    }

    fn curvature(&self) -> f64 {
        0.0
    }
}

impl<L: SmoothLoss + ?Sized> SmoothLoss for Box<L> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        (**self).value(x)
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (**self).gradient(x)
    }
    fn proximal(&self, v: &DVector<f64>, c: f64) -> Option<DVector<f64>> {
        (**self).proximal(v, c)
    }
    fn curvature(&self) -> f64 {
        (**self).curvature()
    }
}

/// `l = 0`; the penalized problem is then a pure feasibility problem.
#[derive(Debug, Clone)]
pub struct ZeroLoss {
    pub dim: usize,
}

impl SmoothLoss for ZeroLoss {
    fn dim(&self) -> usize {
        self.dim
    }
    fn value(&self, _x: &DVector<f64>) -> f64 {
        0.0
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        DVector::zeros(x.len())
    }
    fn proximal(&self, v: &DVector<f64>, _c: f64) -> Option<DVector<f64>> {
        Some(v.clone())
    }
}

/// `l(x) = 1/2 ||x - y||^2`, the projection objective.
#[derive(Debug, Clone)]
pub struct SquaredDistance {
    pub target: DVector<f64>,
}

impl SquaredDistance {
    pub fn new(target: DVector<f64>) -> Self {
        Self { target }
    }
}

impl SmoothLoss for SquaredDistance {
    fn dim(&self) -> usize {
        self.target.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * (x - &self.target).norm_squared()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        x - &self.target
    }
    fn proximal(&self, v: &DVector<f64>, c: f64) -> Option<DVector<f64>> {
        Some((&self.target + v * c) / (1.0 + c))
    }
}

/// `l(x) = 1/2 sum w_i (x_i - y_i)^2` with positive weights.
#[derive(Debug, Clone)]
pub struct WeightedSquaredDistance {
    pub target: DVector<f64>,
    pub weights: DVector<f64>,
}

impl WeightedSquaredDistance {
    pub fn new(target: DVector<f64>, weights: DVector<f64>) -> Result<Self> {
        check_dim(target.len(), weights.len())?;
        if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
            return Err(Error::invalid("weights must be positive and finite"));
        }
        Ok(Self { target, weights })
    }
}

impl SmoothLoss for WeightedSquaredDistance {
    fn dim(&self) -> usize {
        self.target.len()
    }
    fn value(&self, x: &DVector<f64>) -> f64 {
        0.5 * x
            .iter()
            .zip(self.target.iter())
            .zip(self.weights.iter())
            .map(|((a, b), w)| w * (a - b) * (a - b))
            .sum::<f64>()
    }
    fn gradient(&self, x: &DVector<f64>) -> DVector<f64> {
        (x - &self.target).component_mul(&self.weights)
    }
    fn proximal(&self, v: &DVector<f64>, c: f64) -> Option<DVector<f64>> {
        Some(DVector::from_fn(v.len(), |i, _| {
            let w = self.weights[i];
            (w * self.target[i] + c * v[i]) / (w + c)
        }))
    }
}
