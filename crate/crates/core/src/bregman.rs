//! Bregman divergences, projections and the feasibility step.
//!
//! `D(y | x) = phi(y) - phi(x) - <grad phi(x), y - x>` for four generators:
//! the squared norm `||y||^2`, the negative log `-sum ln y_i`, the entropy
//! `sum y_i ln y_i` and the Mahalanobis form `y' M y`.
//!
//! Projections are provided where they have closed forms: any set for the
//! squared norm, boxes for the separable generators, and hyperplanes or
//! halfspaces for the Mahalanobis form. Other pairs are rejected.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};
use crate::linalg::max_asymmetry;
use crate::projections::ConvexSet;

#[derive(Debug, Clone, PartialEq)]
pub enum BregmanGenerator {
    SquaredNorm,
    NegLog,
    Entropy,
    /// Symmetric positive definite `M`.
    Mahalanobis(DMatrix<f64>),
}

/// Hessian of a generator at a point.
#[derive(Debug, Clone, PartialEq)]
pub enum Hessian {
    Diagonal(DVector<f64>),
    Dense(DMatrix<f64>),
}

impl Hessian {
    fn to_dense(&self) -> DMatrix<f64> {
        match self {
            Hessian::Diagonal(d) => DMatrix::from_diagonal(d),
            Hessian::Dense(m) => m.clone(),
        }
    }
}

impl BregmanGenerator {
    pub fn mahalanobis(m: DMatrix<f64>) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::invalid("Mahalanobis matrix must be square"));
        }
        let asym = max_asymmetry(&m);
        if asym > 1e-12 * m.amax().max(1.0) {
            return Err(Error::NotSymmetric { asymmetry: asym });
        }
        if m.clone().cholesky().is_none() {
            return Err(Error::invalid("Mahalanobis matrix must be positive definite"));
        }
        Ok(BregmanGenerator::Mahalanobis(m))
    }

    pub fn check_domain(&self, x: &DVector<f64>) -> Result<()> {
        match self {
            BregmanGenerator::NegLog | BregmanGenerator::Entropy => {
                if let Some(v) = x.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
                    return Err(Error::Domain(format!(
                        "{} needs positive entries, found {v}",
                        self.name()
                    )));
                }
                Ok(())
            }
            BregmanGenerator::Mahalanobis(m) => check_dim(m.nrows(), x.len()),
            BregmanGenerator::SquaredNorm => Ok(()),
        }
    }

    fn name(&self) -> &'static str {
        match self {
            BregmanGenerator::SquaredNorm => "squared norm",
            BregmanGenerator::NegLog => "negative log",
            BregmanGenerator::Entropy => "entropy",
            BregmanGenerator::Mahalanobis(_) => "Mahalanobis",
        }
    }

    pub fn value(&self, y: &DVector<f64>) -> Result<f64> {
        self.check_domain(y)?;
        Ok(match self {
            BregmanGenerator::SquaredNorm => y.norm_squared(),
            BregmanGenerator::NegLog => -y.iter().map(|v| v.ln()).sum::<f64>(),
            BregmanGenerator::Entropy => y.iter().map(|v| v * v.ln()).sum(),
            BregmanGenerator::Mahalanobis(m) => y.dot(&(m * y)),
        })
    }

    pub fn gradient(&self, y: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_domain(y)?;
        Ok(match self {
            BregmanGenerator::SquaredNorm => y * 2.0,
            BregmanGenerator::NegLog => y.map(|v| -1.0 / v),
            BregmanGenerator::Entropy => y.map(|v| v.ln() + 1.0),
            BregmanGenerator::Mahalanobis(m) => m * y * 2.0,
        })
    }

    pub fn hessian(&self, y: &DVector<f64>) -> Result<Hessian> {
        self.check_domain(y)?;
        Ok(match self {
            BregmanGenerator::SquaredNorm => Hessian::Diagonal(DVector::from_element(y.len(), 2.0)),
            BregmanGenerator::NegLog => Hessian::Diagonal(y.map(|v| 1.0 / (v * v))),
            BregmanGenerator::Entropy => Hessian::Diagonal(y.map(|v| 1.0 / v)),
            BregmanGenerator::Mahalanobis(m) if is_diagonal(m) => Hessian::Diagonal(m.diagonal() * 2.0),
            BregmanGenerator::Mahalanobis(m) => Hessian::Dense(m * 2.0),
        })
    }

    fn constant_hessian(&self) -> bool {
        matches!(self, BregmanGenerator::SquaredNorm | BregmanGenerator::Mahalanobis(_))
    }

    /// Diagonal Hessian entry `d^2 phi / dy_j^2` as a function of `y_j`.
    fn diagonal_entry(&self, j: usize, v: f64) -> f64 {
        match self {
            BregmanGenerator::SquaredNorm => 2.0,
            BregmanGenerator::NegLog => 1.0 / (v * v),
            BregmanGenerator::Entropy => 1.0 / v,
            BregmanGenerator::Mahalanobis(m) => 2.0 * m[(j, j)],
        }
    }

    fn separable(&self) -> bool {
        match self {
            BregmanGenerator::Mahalanobis(m) => is_diagonal(m),
            _ => true,
        }
    }
}

fn is_diagonal(m: &DMatrix<f64>) -> bool {
    m.iter()
        .enumerate()
        .all(|(k, v)| k % m.nrows() == k / m.nrows() || *v == 0.0)
}

/// `D(y | x)`.
pub fn divergence(gen: &BregmanGenerator, y: &DVector<f64>, x: &DVector<f64>) -> Result<f64> {
    check_dim(x.len(), y.len())?;
    gen.check_domain(y)?;
    gen.check_domain(x)?;
    let d = match gen {
        BregmanGenerator::SquaredNorm => (y - x).norm_squared(),
        BregmanGenerator::NegLog => y.iter().zip(x.iter()).map(|(a, b)| a / b - (a / b).ln() - 1.0).sum(),
        BregmanGenerator::Entropy => y.iter().zip(x.iter()).map(|(a, b)| a * (a / b).ln() - a + b).sum(),
        BregmanGenerator::Mahalanobis(m) => {
            let diff = y - x;
            diff.dot(&(m * &diff))
        }
    };
    Ok(d.max(0.0))
}

fn unsupported(gen: &BregmanGenerator, set: &ConvexSet) -> Error {
    let kind = format!("{set:?}");
    let kind = kind.split([' ', '{', '(']).next().unwrap_or("set");
    Error::Unsupported(format!(
        "Bregman projection of the {} generator onto {kind}",
        gen.name()
    ))
}

fn clamp(x: &DVector<f64>, lower: &DVector<f64>, upper: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| x[i].max(lower[i]).min(upper[i]))
}

/// `argmin_{y in C} D(y | x)`.
pub fn bregman_project(gen: &BregmanGenerator, set: &ConvexSet, x: &DVector<f64>) -> Result<DVector<f64>> {
    check_dim(set.dim(), x.len())?;
    gen.check_domain(x)?;
    match (gen, set) {
        (BregmanGenerator::SquaredNorm, _) => set.project(x),
        (BregmanGenerator::Mahalanobis(m), ConvexSet::Hyperplane { normal, offset })
        | (BregmanGenerator::Mahalanobis(m), ConvexSet::Halfspace { normal, offset }) => {
            let gap = offset - normal.dot(x);
            if matches!(set, ConvexSet::Halfspace { .. }) && gap >= 0.0 {
                return Ok(x.clone());
            }
            let chol = m
                .clone()
                .cholesky()
                .ok_or_else(|| Error::invalid("Mahalanobis matrix lost definiteness"))?;
            let direction = chol.solve(normal);
            Ok(x + &direction * (gap / normal.dot(&direction)))
        }
        (_, ConvexSet::Box { lower, upper }) if gen.separable() => {
            let p = clamp(x, lower, upper);
            gen.check_domain(&p)
                .map_err(|_| Error::Domain("box does not meet the generator domain".into()))?;
            Ok(p)
        }
        (_, ConvexSet::NonnegativeOrthant { .. }) if gen.separable() => Ok(x.map(|v| v.max(0.0))),
        _ => Err(unsupported(gen, set)),
    }
}

/// Bregman proximity `sum_i D_i(P_i(x) | x)`.
pub fn bregman_proximity(pairs: &[(BregmanGenerator, ConvexSet)], x: &DVector<f64>) -> Result<f64> {
    pairs
        .iter()
        .map(|(g, s)| divergence(g, &bregman_project(g, s, x)?, x))
        .sum()
}

const NEWTON_TOL: f64 = 1e-10;
const NEWTON_CAP: usize = 100;

/// One MM step for the Bregman proximity: with `y_i = P_i(x)` held fixed,
/// solves `sum_i Hess phi_i(u) (u - y_i) = 0` for `u`.
pub fn bregman_feasibility_step(pairs: &[(BregmanGenerator, ConvexSet)], x: &DVector<f64>) -> Result<DVector<f64>> {
    if pairs.is_empty() {
        return Err(Error::invalid("feasibility step needs at least one set"));
    }
    let anchors: Vec<DVector<f64>> = pairs
        .iter()
        .map(|(g, s)| bregman_project(g, s, x))
        .collect::<Result<_>>()?;
    let p = x.len();

    if pairs.iter().all(|(g, _)| g.constant_hessian()) {
        let mut lhs = DMatrix::zeros(p, p);
        let mut rhs = DVector::zeros(p);
        for ((g, _), y) in pairs.iter().zip(&anchors) {
            let h = g.hessian(y)?.to_dense();
            rhs += &h * y;
            lhs += h;
        }
        return lhs
            .cholesky()
            .map(|c| c.solve(&rhs))
            .ok_or_else(|| Error::invalid("summed Hessian is singular"));
    }
    if !pairs.iter().all(|(g, _)| g.separable()) {
        return Err(Error::Unsupported(
            "feasibility step mixing a dense Mahalanobis Hessian with a non-constant one".into(),
        ));
    }
    let gens: Vec<&BregmanGenerator> = pairs.iter().map(|(g, _)| g).collect();
    let mut u = DVector::zeros(p);
    for j in 0..p {
        let targets: Vec<f64> = anchors.iter().map(|y| y[j]).collect();
        u[j] = coordinate_root(&gens, j, &targets)?;
    }
    for (g, _) in pairs {
        g.check_domain(&u)?;
    }
    Ok(u)
}

/// Root of `g(u) = sum_i h_i(u) (u - t_i)` in `[min t, max t]` by Newton
/// steps, falling back to bisection whenever Newton leaves the bracket.
fn coordinate_root(gens: &[&BregmanGenerator], j: usize, targets: &[f64]) -> Result<f64> {
    let mut lo = targets.iter().copied().fold(f64::INFINITY, f64::min);
    let mut hi = targets.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= f64::EPSILON * hi.abs().max(lo.abs()) {
        return Ok(lo);
    }
    let eval = |u: f64| {
        let mut value = 0.0;
        let mut slope = 0.0;
        let mut scale = 0.0;
        for (g, &t) in gens.iter().zip(targets) {
            let h = g.diagonal_entry(j, u);
            let dh = match g {
                BregmanGenerator::NegLog => -2.0 / (u * u * u),
                BregmanGenerator::Entropy => -1.0 / (u * u),
                _ => 0.0,
            };
            value += h * (u - t);
            slope += dh * (u - t) + h;
            scale += h * (u - t).abs();
        }
        (value, slope, scale)
    };
    let mut u = 0.5 * (lo + hi);
    for _ in 0..NEWTON_CAP {
        let (value, slope, scale) = eval(u);
        if value.abs() <= NEWTON_TOL * scale.max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * u.abs() {
            return Ok(u);
        }
        if value < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        let newton = u - value / slope;
        u = if slope > 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
    }
    // bisection on whatever bracket remains
    for _ in 0..200 {
        let (value, _, scale) = eval(u);
        if value.abs() <= NEWTON_TOL * scale.max(1e-300) || hi - lo <= 4.0 * f64::EPSILON * u.abs() {
            return Ok(u);
        }
        if value < 0.0 {
            lo = u;
        } else {
            hi = u;
        }
        u = 0.5 * (lo + hi);
    }
    Err(Error::RootFinding(format!("coordinate {j} did not converge")))
}
