//! Ready-made solvers for the worked problems.

mod convex_regression;
mod cosine;
mod dnn;
mod fire_station;
mod isotone;
mod svm;

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

pub use convex_regression::{convex_reg_fit, predict_convex, ConvexRegFit, ConvexRegModel};
pub use cosine::{cosine_mm_iterate, psi, summa_gap, summa_gap_with};
pub use dnn::{dnn_project, dnn_violation, DnnResult};
pub use fire_station::{fire_station, paper_rectangles, total_distance, FireStationResult, Norm, Rectangle};
pub use isotone::{isotone_fit, IsotoneFit};
pub use svm::{kernel_svm_fit, kernel_svm_prepare, svm_fit, SvmModel, SvmProblem};

/// Which algorithm a problem is solved with.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Mm,
    MmQn,
    Dual,
    DualFista,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Mm, Method::MmQn, Method::Dual, Method::DualFista];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Mm => "MM",
            Method::MmQn => "MM-QN",
            Method::Dual => "Dual",
            Method::DualFista => "Dual-FISTA",
        }
    }

    pub fn is_dual(&self) -> bool {
        matches!(self, Method::Dual | Method::DualFista)
    }
}

/// Settings shared by the applications that can run any [`Method`].
#[derive(Debug, Clone, PartialEq)]
pub struct MethodConfig {
    pub method: Method,
    pub solver: crate::penalty::SolverConfig,
    pub dual: crate::dual::DualConfig,
    /// Secants used by [`Method::MmQn`].
    pub secants: usize,
}

impl MethodConfig {
    pub fn new(method: Method, solver: crate::penalty::SolverConfig, dual: crate::dual::DualConfig) -> Self {
        Self {
            method,
            solver,
            dual,
            secants: 5,
        }
    }

    /// Outer-loop settings for `sets` constraint sets. The schedule is read
    /// per constraint, as a penalty on the plain sum of squared distances,
    /// so it is scaled by `sets` to account for the normalized weights.
    pub(crate) fn penalty_config(&self, sets: usize) -> crate::penalty::SolverConfig {
        let mut config = self.solver.clone();
        let scale = sets.max(1) as f64;
        config.schedule =
            crate::penalty::MuSchedule::Explicit(config.schedule.values().into_iter().map(|m| m * scale).collect());
        config.acceleration = match self.method {
            Method::MmQn => Some(self.secants),
            _ => None,
        };
        config
    }

    pub(crate) fn dual_config(&self) -> crate::dual::DualConfig {
        let mut config = self.dual.clone();
        config.fista = self.method == Method::DualFista;
        config
    }
}

/// Cases with predictors (rows of `x`), responses and positive weights.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    pub x: DMatrix<f64>,
    pub y: DVector<f64>,
    pub w: DVector<f64>,
}

impl RegressionData {
    pub fn new(x: DMatrix<f64>, y: DVector<f64>, w: DVector<f64>) -> Result<Self> {
        check_dim(x.nrows(), y.len())?;
        check_dim(y.len(), w.len())?;
        if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::invalid("case weights must be positive"));
        }
        if x.iter().chain(y.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("regression data"));
        }
        Ok(Self { x, y, w })
    }

    /// Unit weights.
    pub fn unweighted(x: DMatrix<f64>, y: DVector<f64>) -> Result<Self> {
        let n = y.len();
        Self::new(x, y, DVector::from_element(n, 1.0))
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn p(&self) -> usize {
        self.x.ncols()
    }

    pub fn case(&self, i: usize) -> DVector<f64> {
        self.x.row(i).transpose()
    }
}
