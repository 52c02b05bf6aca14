//! Seeded data generators for the worked problems.
//!
//! Every generator draws from its own `ChaCha8Rng` seeded with the caller's
//! seed, so output depends only on `(size, seed)` and not on the platform or
//! thread count.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::applications::{paper_rectangles, Rectangle, RegressionData};
use crate::error::{Error, Result};

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard normal `n x n` matrix symmetrized as `(A + A') / 2`.
pub fn symmetric_normal(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = rng(seed);
    let a = DMatrix::from_fn(n, n, |_, _| normal(&mut rng));
    (&a + a.transpose()) * 0.5
}

/// `y_i = x_i^2 + e_i` on `n` equally spaced points of `[1, 3]`, standard
/// normal noise, unit weights.
pub fn isotone_data(n: usize, seed: u64) -> Result<RegressionData> {
    if n < 2 {
        return Err(Error::invalid("isotone data needs n >= 2"));
    }
    let mut rng = rng(seed);
    let x = DVector::from_fn(n, |i, _| 1.0 + 2.0 * i as f64 / (n - 1) as f64);
    let y = x.map(|v| v * v + normal(&mut rng));
    RegressionData::unweighted(DMatrix::from_column_slice(n, 1, x.as_slice()), y)
}

/// Predictors uniform on `[-2, 2]^p` and `y = ||x||^2 + e/2` with standard
/// normal `e`.
pub fn convex_regression_data(n: usize, p: usize, seed: u64) -> Result<RegressionData> {
    if n < 2 || p == 0 {
        return Err(Error::invalid("convex regression data needs n >= 2 and p >= 1"));
    }
    let mut rng = rng(seed);
    let x = DMatrix::from_fn(n, p, |_, _| rng.random_range(-2.0..2.0));
    let y = DVector::from_fn(n, |i, _| x.row(i).norm_squared() + 0.5 * normal(&mut rng));
    RegressionData::unweighted(x, y)
}

/// Labelled cases for a linear SVM with `p` feature columns, the first
/// being the intercept column of ones.
///
/// The other features are standard normal. Labels are the sign of a random
/// linear score plus normal noise of scale 1/2, so the classes overlap.
pub fn svm_data(n: usize, p: usize, seed: u64) -> Result<RegressionData> {
    if n < 2 || p < 2 {
        return Err(Error::invalid("svm data needs n >= 2 and p >= 2"));
    }
    let mut rng = rng(seed);
    let truth = DVector::from_fn(p, |_, _| normal(&mut rng));
    let x = DMatrix::from_fn(n, p, |_, j| if j == 0 { 1.0 } else { normal(&mut rng) });
    let y = DVector::from_fn(n, |i, _| {
        let score = x.row(i).transpose().dot(&truth) + 0.5 * normal(&mut rng);
        if score >= 0.0 {
            1.0
        } else {
            -1.0
        }
    });
    RegressionData::unweighted(x, y)
}

/// Regression data with true coefficients `beta`, standard normal design
/// and noise of scale `0.1`, and one response shifted by `outlier`.
pub fn contaminated_regression(n: usize, beta: &DVector<f64>, outlier: f64, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
    let mut rng = rng(seed);
    let x = DMatrix::from_fn(n, beta.len(), |_, _| normal(&mut rng));
    let mut y = &x * beta + DVector::from_fn(n, |_, _| 0.1 * normal(&mut rng));
    if n > 0 {
        let i = rng.random_range(0..n);
        y[i] += outlier;
    }
    (x, y)
}

/// `m` halfspaces `a_i' x <= b_i` in `R^p` with standard normal normals,
/// all containing a common standard normal point with slack in `[0, 1)`.
/// Returns the normals as rows and the offsets.
pub fn halfspace_system(m: usize, p: usize, seed: u64) -> Result<(DMatrix<f64>, DVector<f64>)> {
    if m == 0 || p == 0 {
        return Err(Error::invalid("halfspace system needs m >= 1 and p >= 1"));
    }
    let mut rng = rng(seed);
    let point = DVector::from_fn(p, |_, _| normal(&mut rng));
    let a = DMatrix::from_fn(m, p, |_, _| normal(&mut rng));
    let b = DVector::from_fn(m, |i, _| a.row(i).transpose().dot(&point) + rng.random_range(0.0..1.0));
    Ok((a, b))
}

/// The five buildings of the fire-station example.
pub fn fire_station_rectangles() -> Vec<Rectangle> {
    paper_rectangles()
}
