//! Independent reference solutions used by the integration tests.
//!
//! None of these call the library's solvers or projections.

#![allow(dead_code)]

use clarabel::algebra::CscMatrix;
use clarabel::solver::{
    DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus, SupportedConeT,
};
use distmaj::applications::RegressionData;
use nalgebra::{DMatrix, DVector};

/// Weighted isotonic regression by the max-min formula
/// `f_i = max_{j <= i} min_{k >= i} avg_w(y_j..y_k)`.
pub fn isotone_max_min(y: &[f64], w: &[f64]) -> Vec<f64> {
    let n = y.len();
    let mut wy = vec![0.0; n + 1];
    let mut ws = vec![0.0; n + 1];
    for i in 0..n {
        wy[i + 1] = wy[i] + w[i] * y[i];
        ws[i + 1] = ws[i] + w[i];
    }
    let avg = |j: usize, k: usize| (wy[k + 1] - wy[j]) / (ws[k + 1] - ws[j]);
    (0..n)
        .map(|i| {
            (0..=i)
                .map(|j| (i..n).map(|k| avg(j, k)).fold(f64::INFINITY, f64::min))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .collect()
}

/// Linear constraints `a' x <= b` (inequalities) and `a' x = b` (equalities).
#[derive(Debug, Clone, Default)]
pub struct Polyhedron {
    pub ineq: Vec<(DVector<f64>, f64)>,
    pub eq: Vec<(DVector<f64>, f64)>,
}

impl Polyhedron {
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> bool {
        self.ineq.iter().all(|(a, b)| a.dot(x) <= b + tol) && self.eq.iter().all(|(a, b)| (a.dot(x) - b).abs() <= tol)
    }
}

/// Euclidean projection onto a polyhedron by enumerating active sets: the
/// projection is the projection onto the affine hull of its active
/// constraints, so it is the closest feasible candidate among those.
pub fn project_polyhedron(poly: &Polyhedron, y: &DVector<f64>) -> DVector<f64> {
    let d = y.len();
    let m = poly.ineq.len();
    let mut best: Option<(f64, DVector<f64>)> = None;
    let mut consider = |x: DVector<f64>| {
        if poly.contains(&x, 1e-9) {
            let dist = (&x - y).norm();
            if best.as_ref().is_none_or(|(b, _)| dist < *b) {
                best = Some((dist, x));
            }
        }
    };
    let max_active = d.saturating_sub(poly.eq.len());
    let mut subset = Vec::new();
    enumerate_subsets(m, max_active, 0, &mut subset, &mut |active| {
        let rows: Vec<&(DVector<f64>, f64)> = poly.eq.iter().chain(active.iter().map(|&i| &poly.ineq[i])).collect();
        consider(affine_projection(&rows, y));
    });
    best.expect("polyhedron is empty").1
}

fn enumerate_subsets(m: usize, max: usize, start: usize, current: &mut Vec<usize>, f: &mut dyn FnMut(&[usize])) {
    f(current);
    if current.len() == max {
        return;
    }
    for i in start..m {
        current.push(i);
        enumerate_subsets(m, max, i + 1, current, f);
        current.pop();
    }
}

/// Projection onto `{x : a_i' x = b_i}` by the normal equations, solved
/// with a pseudo-inverse so dependent rows are harmless.
fn affine_projection(rows: &[&(DVector<f64>, f64)], y: &DVector<f64>) -> DVector<f64> {
    if rows.is_empty() {
        return y.clone();
    }
    let a = DMatrix::from_fn(rows.len(), y.len(), |i, j| rows[i].0[j]);
    let b = DVector::from_fn(rows.len(), |i, _| rows[i].1);
    let gram = &a * a.transpose();
    let lambda = gram.svd(true, true).solve(&(&a * y - b), 1e-12).expect("svd solve");
    y - a.transpose() * lambda
}

/// Projection onto a ball by bisection on the multiplier of
/// `min ||x - y||^2 + lambda ||x - c||^2`.
pub fn project_ball_bisection(center: &DVector<f64>, radius: f64, y: &DVector<f64>) -> DVector<f64> {
    let at = |lambda: f64| (y + center * lambda) / (1.0 + lambda);
    if (y - center).norm() <= radius {
        return y.clone();
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while (at(hi) - center).norm() > radius {
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (at(mid) - center).norm() > radius {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    at(hi)
}

/// Square root of a symmetric positive definite matrix by the
/// Denman-Beavers iteration.
pub fn sqrt_denman_beavers(a: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let mut y = a.clone();
    let mut z = DMatrix::identity(n, n);
    for _ in 0..100 {
        let y_inv = y.clone().try_inverse().expect("invertible");
        let z_inv = z.clone().try_inverse().expect("invertible");
        let next = (&y + z_inv) * 0.5;
        z = (&z + y_inv) * 0.5;
        let step = (&next - &y).norm();
        y = next;
        if step <= 1e-15 * y.norm() {
            break;
        }
    }
    y
}

/// Nearest positive semidefinite matrix `(A + |A|) / 2` with
/// `|A| = sqrt(A^2)`.
pub fn project_psd_oracle(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + sqrt_denman_beavers(&(a * a))) * 0.5
}

/// Exact objective of the soft-margin SVM
/// `sum_j [1 - y_j x_j' theta]_+ + lambda/2 ||theta||^2` at `theta`.
pub fn svm_primal(data: &RegressionData, lambda: f64, theta: &DVector<f64>) -> f64 {
    let hinge: f64 = (0..data.n())
        .map(|j| (1.0 - data.y[j] * data.case(j).dot(theta)).max(0.0))
        .sum();
    hinge + 0.5 * lambda * theta.norm_squared()
}

/// SVM optimum from the box-constrained dual
/// `max sum a - ||sum a_j y_j x_j||^2 / (2 lambda)`, `0 <= a <= 1`,
/// by long-run accelerated projected gradient. Returns the primal objective
/// at `theta = sum a_j y_j x_j / lambda` and the final duality gap.
pub fn svm_qp_oracle(data: &RegressionData, lambda: f64) -> (f64, f64) {
    let n = data.n();
    let yx = DMatrix::from_fn(n, data.p(), |i, j| data.y[i] * data.x[(i, j)]);
    let lip = yx.clone().svd(false, false).singular_values.max().powi(2) / lambda;
    let step = 1.0 / lip;
    let theta_of = |a: &DVector<f64>| yx.tr_mul(a) / lambda;
    let dual = |a: &DVector<f64>| a.sum() - 0.5 * lambda * theta_of(a).norm_squared();
    let mut a = DVector::zeros(n);
    let mut prev = a.clone();
    let mut gap = f64::INFINITY;
    for k in 1..=200_000 {
        let beta = (k as f64 - 2.0) / (k as f64 + 1.0);
        let v = &a + (&a - &prev) * beta.max(0.0);
        let grad = DVector::from_element(n, 1.0) - &yx * theta_of(&v);
        prev = a.clone();
        a = (v + grad * step).map(|t| t.clamp(0.0, 1.0));
        if k % 100 == 0 {
            gap = svm_primal(data, lambda, &theta_of(&a)) - dual(&a);
            if gap <= 1e-10 * dual(&a).abs().max(1.0) {
                break;
            }
        }
    }
    (svm_primal(data, lambda, &theta_of(&a)), gap)
}

/// Convex regression by an interior-point QP solve of
/// `min 1/2 sum w_i (theta_i - y_i)^2` subject to
/// `xi_k' (x_j - x_k) - theta_j + theta_k <= 0` for all `j != k`.
/// Returns the objective and the stacked optimum `(theta, xi_1, .., xi_n)`.
pub fn convex_regression_qp(data: &RegressionData) -> (f64, DVector<f64>) {
    let (n, p) = (data.n(), data.p());
    let dim = n * (1 + p);
    let p_mat = CscMatrix::new_from_triplets(
        dim,
        dim,
        (0..n).collect(),
        (0..n).collect(),
        data.w.iter().copied().collect(),
    );
    let mut q = vec![0.0; dim];
    for i in 0..n {
        q[i] = -data.w[i] * data.y[i];
    }
    let (mut rows, mut cols, mut vals) = (Vec::new(), Vec::new(), Vec::new());
    let mut r = 0;
    for j in 0..n {
        for k in (0..n).filter(|&k| k != j) {
            rows.extend([r, r]);
            cols.extend([j, k]);
            vals.extend([-1.0, 1.0]);
            for l in 0..p {
                rows.push(r);
                cols.push(n + k * p + l);
                vals.push(data.x[(j, l)] - data.x[(k, l)]);
            }
            r += 1;
        }
    }
    let a = CscMatrix::new_from_triplets(r, dim, rows, cols, vals);
    let b = vec![0.0; r];
    let cones: [SupportedConeT<f64>; 1] = [NonnegativeConeT(r)];
    let settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .tol_gap_abs(1e-12)
        .tol_gap_rel(1e-12)
        .tol_feas(1e-12)
        .max_iter(500)
        .build()
        .unwrap();
    let mut solver = DefaultSolver::new(&p_mat, &q, &a, &b, &cones, settings).expect("valid QP");
    solver.solve();
    assert!(
        matches!(
            solver.solution.status,
            SolverStatus::Solved | SolverStatus::AlmostSolved
        ),
        "QP oracle failed: {:?}",
        solver.solution.status
    );
    let z = DVector::from_vec(solver.solution.x.clone());
    let objective = (0..n).map(|i| 0.5 * data.w[i] * (z[i] - data.y[i]).powi(2)).sum();
    (objective, z)
}

/// Minimizers of `f` on the grid `lo + k h` in both coordinates, within
/// `slack` of the grid minimum.
pub fn grid_minimizers(f: impl Fn(f64, f64) -> f64, lo: f64, hi: f64, h: f64, slack: f64) -> (f64, Vec<(f64, f64)>) {
    let steps = ((hi - lo) / h).round() as usize;
    let coord = |k: usize| lo + k as f64 * h;
    let mut values = Vec::with_capacity((steps + 1) * (steps + 1));
    let mut best = f64::INFINITY;
    for a in 0..=steps {
        for b in 0..=steps {
            let v = f(coord(a), coord(b));
            best = best.min(v);
            values.push((v, coord(a), coord(b)));
        }
    }
    let points = values
        .into_iter()
        .filter(|(v, _, _)| *v <= best + slack)
        .map(|(_, x, y)| (x, y))
        .collect();
    (best, points)
}
