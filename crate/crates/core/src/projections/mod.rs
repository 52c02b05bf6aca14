//! Projection oracles for the elementary closed convex sets.
//!
//! Every set is a variant of [`ConvexSet`]. Points are flat vectors; matrix
//! sets ([`ConvexSet::PsdCone`], and [`ConvexSet::NonnegativeOrthant`] when it
//! is used for matrices) act on the column-major flattening of an `n x n`
//! symmetric matrix, so the Euclidean norm of the flat vector is the
//! Frobenius norm of the matrix.
//!
//! All operations are pure functions of their inputs.

mod pava;
mod simplex;

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{checked_symmetric, mat_to_vec};

pub use pava::pava;
pub use simplex::{project_l1_ball, project_scaled_simplex};

/// An elementary closed convex set together with its projection oracle.
#[derive(Debug, Clone, PartialEq)]
pub enum ConvexSet {
    /// `{x : lower <= x <= upper}`; infinite bounds are allowed.
    Box { lower: DVector<f64>, upper: DVector<f64> },
    /// `{x : ||x - center|| <= radius}`.
    Ball { center: DVector<f64>, radius: f64 },
    /// `{x : <normal, x> = offset}`.
    Hyperplane { normal: DVector<f64>, offset: f64 },
    /// `{x : <normal, x> <= offset}`.
    Halfspace { normal: DVector<f64>, offset: f64 },
    /// The unit simplex `{x >= 0 : sum x = 1}`.
    Simplex { dim: usize },
    /// `{x : ||x||_1 <= radius}`.
    L1Ball { dim: usize, radius: f64 },
    /// `{x : x_1 <= ... <= x_n}`. The projection minimizes
    /// `sum w_i (x_i - y_i)^2`; with unit weights it is the Euclidean one.
    IsotoneCone { weights: DVector<f64> },
    /// `{x : x_i <= x_j}` inside `R^dim`.
    PairwiseOrder { dim: usize, i: usize, j: usize },
    /// Positive semidefinite `n x n` matrices.
    PsdCone { n: usize },
    /// `{x : x >= 0}`; for matrices use `dim = n * n`.
    NonnegativeOrthant { dim: usize },
    /// Margin constraint `eps_j + label * <features, theta> >= 1` on the
    /// stacked SVM vector `(eps_1..eps_cases, theta)`.
    SvmHalfspace {
        cases: usize,
        j: usize,
        label: f64,
        features: DVector<f64>,
    },
    /// Convexity constraint `xi_k' (x_j - x_k) <= theta_j - theta_k` on the
    /// stacked vector `(theta_1..theta_n, xi_1, .., xi_n)` with `xi_l in R^p`.
    ConvexRegHalfspace {
        cases: usize,
        j: usize,
        k: usize,
        /// `x_j - x_k`
        direction: DVector<f64>,
    },
}

/// `P(x) - x`, kept sparse when a projection moves only a few coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum Displacement {
    Zero,
    Sparse(Vec<(usize, f64)>),
    Dense(DVector<f64>),
}

impl Displacement {
    pub fn norm_squared(&self) -> f64 {
        match self {
            Displacement::Zero => 0.0,
            Displacement::Sparse(entries) => entries.iter().map(|(_, v)| v * v).sum(),
            Displacement::Dense(d) => d.norm_squared(),
        }
    }

    /// `target += scale * self`
    pub fn add_scaled_to(&self, scale: f64, target: &mut DVector<f64>) {
        match self {
            Displacement::Zero => {}
            Displacement::Sparse(entries) => {
                for &(i, v) in entries {
                    target[i] += scale * v;
                }
            }
            Displacement::Dense(d) => target.axpy(scale, d, 1.0),
        }
    }

    pub fn apply_to(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut out = x.clone();
        self.add_scaled_to(1.0, &mut out);
        out
    }
}

impl ConvexSet {
    pub fn box_set(lower: DVector<f64>, upper: DVector<f64>) -> Result<Self> {
        check_dim(lower.len(), upper.len())?;
        if lower.iter().zip(upper.iter()).any(|(a, b)| !(a <= b)) {
            return Err(Error::invalid("box requires lower <= upper componentwise"));
        }
        Ok(ConvexSet::Box { lower, upper })
    }

    /// The whole space `R^dim`, as a box with infinite bounds.
    pub fn whole_space(dim: usize) -> Self {
        ConvexSet::Box {
            lower: DVector::from_element(dim, f64::NEG_INFINITY),
            upper: DVector::from_element(dim, f64::INFINITY),
        }
    }

    pub fn ball(center: DVector<f64>, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("ball radius must be positive"));
        }
        Ok(ConvexSet::Ball { center, radius })
    }

    pub fn hyperplane(normal: DVector<f64>, offset: f64) -> Result<Self> {
        if normal.norm_squared() == 0.0 {
            return Err(Error::invalid("hyperplane normal must be nonzero"));
        }
        Ok(ConvexSet::Hyperplane { normal, offset })
    }

    pub fn halfspace(normal: DVector<f64>, offset: f64) -> Result<Self> {
        if normal.norm_squared() == 0.0 {
            return Err(Error::invalid("halfspace normal must be nonzero"));
        }
        Ok(ConvexSet::Halfspace { normal, offset })
    }

    pub fn simplex(dim: usize) -> Self {
        ConvexSet::Simplex { dim }
    }

    pub fn l1_ball(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid("l1 ball radius must be positive"));
        }
        Ok(ConvexSet::L1Ball { dim, radius })
    }

    pub fn isotone(weights: DVector<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(*w > 0.0)) {
            return Err(Error::invalid("isotone cone weights must be positive"));
        }
        Ok(ConvexSet::IsotoneCone { weights })
    }

    pub fn pairwise_order(dim: usize, i: usize, j: usize) -> Result<Self> {
        if i == j {
            return Err(Error::invalid("pairwise order requires i != j"));
        }
        if i >= dim || j >= dim {
            return Err(Error::invalid(format!(
                "pairwise order indices ({i}, {j}) out of range for dimension {dim}"
            )));
        }
        Ok(ConvexSet::PairwiseOrder { dim, i, j })
    }

    pub fn psd_cone(n: usize) -> Self {
        ConvexSet::PsdCone { n }
    }

    pub fn nonnegative(dim: usize) -> Self {
        ConvexSet::NonnegativeOrthant { dim }
    }

    pub fn nonnegative_matrices(n: usize) -> Self {
        ConvexSet::NonnegativeOrthant { dim: n * n }
    }

    pub fn svm_halfspace(cases: usize, j: usize, label: f64, features: DVector<f64>) -> Result<Self> {
        if j >= cases {
            return Err(Error::invalid(format!("case index {j} out of range ({cases} cases)")));
        }
        Ok(ConvexSet::SvmHalfspace {
            cases,
            j,
            label,
            features,
        })
    }

    pub fn convex_reg_halfspace(
        cases: usize,
        j: usize,
        k: usize,
        x_j: &DVector<f64>,
        x_k: &DVector<f64>,
    ) -> Result<Self> {
        check_dim(x_j.len(), x_k.len())?;
        if j == k || j >= cases || k >= cases {
            return Err(Error::invalid(format!(
                "convex regression pair ({j}, {k}) invalid for {cases} cases"
            )));
        }
        Ok(ConvexSet::ConvexRegHalfspace {
            cases,
            j,
            k,
            direction: x_j - x_k,
        })
    }

    /// Length of the flat vectors this set acts on.
    pub fn dim(&self) -> usize {
        match self {
            ConvexSet::Box { lower, .. } => lower.len(),
            ConvexSet::Ball { center, .. } => center.len(),
            ConvexSet::Hyperplane { normal, .. } | ConvexSet::Halfspace { normal, .. } => normal.len(),
            ConvexSet::Simplex { dim }
            | ConvexSet::L1Ball { dim, .. }
            | ConvexSet::PairwiseOrder { dim, .. }
            | ConvexSet::NonnegativeOrthant { dim } => *dim,
            ConvexSet::IsotoneCone { weights } => weights.len(),
            ConvexSet::PsdCone { n } => n * n,
            ConvexSet::SvmHalfspace { cases, features, .. } => cases + features.len(),
            ConvexSet::ConvexRegHalfspace { cases, direction, .. } => cases + cases * direction.len(),
        }
    }

    /// Coordinates the projection can move, or `None` for all of them.
    pub fn support(&self) -> Option<Vec<usize>> {
        match self {
            ConvexSet::PairwiseOrder { i, j, .. } => Some(vec![*i, *j]),
            ConvexSet::SvmHalfspace { cases, j, features, .. } => {
                let mut s = vec![*j];
                s.extend(*cases..cases + features.len());
                Some(s)
            }
            ConvexSet::ConvexRegHalfspace { cases, j, k, direction } => {
                let p = direction.len();
                let mut s = vec![*j, *k];
                let start = cases + k * p;
                s.extend(start..start + p);
                Some(s)
            }
            _ => None,
        }
    }

    /// `P(x) - x`.
    pub fn displacement(&self, x: &DVector<f64>) -> Result<Displacement> {
        check_dim(self.dim(), x.len())?;
        let disp = match self {
            ConvexSet::Box { lower, upper } => {
                let entries: Vec<(usize, f64)> = x
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &v)| {
                        let c = v.clamp(lower[i], upper[i]);
                        (c != v).then_some((i, c - v))
                    })
                    .collect();
                sparse_or_zero(entries)
            }
            ConvexSet::Ball { center, radius } => {
                let offset = x - center;
                let r = offset.norm();
                if r <= *radius {
                    Displacement::Zero
                } else {
                    Displacement::Dense(offset * (radius / r - 1.0))
                }
            }
            ConvexSet::Hyperplane { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess == 0.0 {
                    Displacement::Zero
                } else {
                    Displacement::Dense(normal * (-excess / normal.norm_squared()))
                }
            }
            ConvexSet::Halfspace { normal, offset } => {
                let excess = normal.dot(x) - offset;
                if excess <= 0.0 {
                    Displacement::Zero
                } else {
                    Displacement::Dense(normal * (-excess / normal.norm_squared()))
                }
            }
            ConvexSet::Simplex { .. } => dense_from(x, project_scaled_simplex(x.as_slice(), 1.0)),
            ConvexSet::L1Ball { radius, .. } => dense_from(x, project_l1_ball(x.as_slice(), *radius)),
            ConvexSet::IsotoneCone { weights } => dense_from(x, pava(x.as_slice(), weights.as_slice())),
            ConvexSet::PairwiseOrder { i, j, .. } => {
                let gap = x[*i] - x[*j];
                if gap <= 0.0 {
                    Displacement::Zero
                } else {
                    Displacement::Sparse(vec![(*i, -0.5 * gap), (*j, 0.5 * gap)])
                }
            }
            ConvexSet::PsdCone { n } => {
                let m = DMatrix::from_column_slice(*n, *n, x.as_slice());
                let projected = project_psd(&m)?;
                Displacement::Dense(mat_to_vec(&projected) - x)
            }
            ConvexSet::NonnegativeOrthant { .. } => {
                let entries: Vec<(usize, f64)> = x
                    .iter()
                    .enumerate()
                    .filter_map(|(i, &v)| (v < 0.0).then_some((i, -v)))
                    .collect();
                sparse_or_zero(entries)
            }
            ConvexSet::SvmHalfspace {
                cases,
                j,
                label,
                features,
            } => {
                let theta = x.rows(*cases, features.len());
                let shortfall = 1.0 - x[*j] - label * features.dot(&theta);
                if shortfall <= 0.0 {
                    Displacement::Zero
                } else {
                    let step = shortfall / (1.0 + label * label * features.norm_squared());
                    let mut entries = Vec::with_capacity(1 + features.len());
                    entries.push((*j, step));
                    for (l, f) in features.iter().enumerate() {
                        entries.push((cases + l, step * label * f));
                    }
                    Displacement::Sparse(entries)
                }
            }
            ConvexSet::ConvexRegHalfspace { cases, j, k, direction } => {
                let p = direction.len();
                let start = cases + k * p;
                let xi_k = x.rows(start, p);
                let excess = direction.dot(&xi_k) - x[*j] + x[*k];
                if excess <= 0.0 {
                    Displacement::Zero
                } else {
                    let r = excess / (2.0 + direction.norm_squared());
                    let mut entries = Vec::with_capacity(2 + p);
                    entries.push((*j, r));
                    entries.push((*k, -r));
                    for (l, d) in direction.iter().enumerate() {
                        entries.push((start + l, -r * d));
                    }
                    Displacement::Sparse(entries)
                }
            }
        };
        Ok(disp)
    }

    /// Nearest point of the set.
    pub fn project(&self, x: &DVector<f64>) -> Result<DVector<f64>> {
        Ok(self.displacement(x)?.apply_to(x))
    }

    /// Euclidean distance from `x` to the set.
    pub fn dist(&self, x: &DVector<f64>) -> Result<f64> {
        Ok(self.displacement(x)?.norm_squared().sqrt())
    }

    /// Matrix form of [`ConvexSet::project`] for the matrix sets.
    pub fn project_matrix(&self, m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
        let n = m.nrows();
        if !m.is_square() {
            return Err(Error::invalid("expected a square matrix"));
        }
        let projected = self.project(&mat_to_vec(m))?;
        Ok(DMatrix::from_column_slice(n, n, projected.as_slice()))
    }

    /// Membership test with an absolute tolerance on the defining inequalities.
    pub fn contains(&self, x: &DVector<f64>, tol: f64) -> Result<bool> {
        check_dim(self.dim(), x.len())?;
        let ok = match self {
            ConvexSet::Box { lower, upper } => x
                .iter()
                .enumerate()
                .all(|(i, &v)| v >= lower[i] - tol && v <= upper[i] + tol),
            ConvexSet::Ball { center, radius } => (x - center).norm() <= radius + tol,
            ConvexSet::Hyperplane { normal, offset } => (normal.dot(x) - offset).abs() <= tol * normal.norm(),
            ConvexSet::Halfspace { normal, offset } => normal.dot(x) - offset <= tol * normal.norm(),
            ConvexSet::Simplex { .. } => x.iter().all(|&v| v >= -tol) && (x.sum() - 1.0).abs() <= tol,
            ConvexSet::L1Ball { radius, .. } => x.lp_norm(1) <= radius + tol,
            ConvexSet::IsotoneCone { .. } => x.as_slice().windows(2).all(|w| w[0] <= w[1] + tol),
            ConvexSet::PairwiseOrder { i, j, .. } => x[*i] <= x[*j] + tol,
            ConvexSet::PsdCone { n } => {
                let m = DMatrix::from_column_slice(*n, *n, x.as_slice());
                let sym = checked_symmetric(&m)?;
                SymmetricEigen::new(sym).eigenvalues.min() >= -tol
            }
            ConvexSet::NonnegativeOrthant { .. } => x.iter().all(|&v| v >= -tol),
            ConvexSet::SvmHalfspace {
                cases,
                j,
                label,
                features,
            } => {
                let theta = x.rows(*cases, features.len());
                x[*j] + label * features.dot(&theta) >= 1.0 - tol
            }
            ConvexSet::ConvexRegHalfspace { cases, j, k, direction } => {
                let p = direction.len();
                let xi_k = x.rows(cases + k * p, p);
                direction.dot(&xi_k) - x[*j] + x[*k] <= tol
            }
        };
        Ok(ok)
    }
}

fn sparse_or_zero(entries: Vec<(usize, f64)>) -> Displacement {
    if entries.is_empty() {
        Displacement::Zero
    } else {
        Displacement::Sparse(entries)
    }
}

fn dense_from(x: &DVector<f64>, projected: Vec<f64>) -> Displacement {
    Displacement::Dense(DVector::from_vec(projected) - x)
}

/// Eigenvalue truncation of a symmetric matrix.
pub fn project_psd(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sym = checked_symmetric(m)?;
    if sym.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("PSD projection input"));
    }
    let eig = SymmetricEigen::new(sym);
    let clamped = eig.eigenvalues.map(|l| l.max(0.0));
    let v = &eig.eigenvectors;
    let mut out = v * DMatrix::from_diagonal(&clamped) * v.transpose();
    // restore exact symmetry lost to roundoff in the reconstruction
    let n = out.nrows();
    for j in 0..n {
        for i in 0..j {
            let avg = 0.5 * (out[(i, j)] + out[(j, i)]);
            out[(i, j)] = avg;
            out[(j, i)] = avg;
        }
    }
    Ok(out)
}

/// Projection onto the axis-aligned rectangle `[lower, upper]`: the
/// componentwise median of `(lower_i, x_i, upper_i)`. It is the nearest point
/// in both the l1 and the l2 metric.
pub fn project_l1_rectangle(lower: &DVector<f64>, upper: &DVector<f64>, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(lower.len(), upper.len())?;
    check_dim(lower.len(), x.len())?;
    if lower.iter().zip(upper.iter()).any(|(a, b)| !(a <= b)) {
        return Err(Error::invalid("rectangle requires lower <= upper componentwise"));
    }
    Ok(DVector::from_iterator(
        x.len(),
        x.iter().enumerate().map(|(i, v)| v.clamp(lower[i], upper[i])),
    ))
}

/// Outcome of [`alternating_projection`].
#[derive(Debug, Clone)]
pub struct AlternatingOutcome {
    pub point: DVector<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Iterates `x <- P1(P2(x))` until successive iterates differ by at most `tol`.
/// On hitting `max_iter` the last iterate is returned with `converged = false`.
pub fn alternating_projection(
    first: &ConvexSet,
    second: &ConvexSet,
    x0: &DVector<f64>,
    max_iter: usize,
    tol: f64,
) -> Result<AlternatingOutcome> {
    check_dim(first.dim(), x0.len())?;
    check_dim(second.dim(), x0.len())?;
    let mut x = x0.clone();
    for iteration in 1..=max_iter {
        let next = first.project(&second.project(&x)?)?;
        let moved = (&next - &x).norm();
        x = next;
        if moved <= tol {
            return Ok(AlternatingOutcome {
                point: x,
                iterations: iteration,
                converged: true,
            });
        }
    }
    Ok(AlternatingOutcome {
        point: x,
        iterations: max_iter,
        converged: false,
    })
}

/// One simultaneous projection step: the minimizer of
/// `sum_i ||u - P_i(x)||^2`, which is the mean of the projections.
pub fn simultaneous_projection_step(sets: &[ConvexSet], x: &DVector<f64>) -> Result<DVector<f64>> {
    if sets.is_empty() {
        return Err(Error::invalid("simultaneous projection needs at least one set"));
    }
    let mut shift = DVector::zeros(x.len());
    let scale = 1.0 / sets.len() as f64;
    for set in sets {
        set.displacement(x)?.add_scaled_to(scale, &mut shift);
    }
    Ok(x + shift)
}

/// Proximity function `sum_i dist(x, C_i)^2`.
pub fn proximity(sets: &[ConvexSet], x: &DVector<f64>) -> Result<f64> {
    sets.iter().map(|s| s.displacement(x).map(|d| d.norm_squared())).sum()
}

/// Largest distance from `x` to any of the sets.
pub fn max_distance(sets: &[ConvexSet], x: &DVector<f64>) -> Result<f64> {
    sets.iter()
        .map(|s| s.dist(x))
        .try_fold(0.0_f64, |acc, d| d.map(|d| acc.max(d)))
}

#[cfg(test)]
mod tests;
