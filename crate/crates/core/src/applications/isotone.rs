//! Isotone regression through pairwise order constraints.

use std::sync::Arc;

use nalgebra::DVector;

use super::{MethodConfig, RegressionData};
use crate::dual::{dual_solve, DualProblem};
use crate::error::{Error, Result};
use crate::penalty::{solve, PenaltyProblem, Solution, Violation, WeightedSquaredDistance};
use crate::projections::ConvexSet;

#[derive(Debug, Clone)]
pub struct IsotoneFit {
    /// Fitted values in the original case order.
    pub fitted: DVector<f64>,
    pub solution: Solution,
}

/// Signed worst order gap `min_i (x_{i+1} - x_i)` and its violation.
fn order_violation(x: &DVector<f64>) -> Violation {
    let signed = x
        .as_slice()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    Violation {
        max_abs: (-signed).max(0.0),
        signed,
    }
}

/// Weighted least squares fit that is nondecreasing in the first predictor
/// (in case order when there are no predictors). Each constraint
/// `x_i <= x_{i+1}` is a separate set.
pub fn isotone_fit(data: &RegressionData, config: &MethodConfig) -> Result<IsotoneFit> {
    let n = data.n();
    if n < 2 {
        return Err(Error::invalid("isotone regression needs at least two cases"));
    }
    let mut order: Vec<usize> = (0..n).collect();
    if data.p() > 0 {
        order.sort_by(|&a, &b| data.x[(a, 0)].total_cmp(&data.x[(b, 0)]));
    }
    let y = DVector::from_fn(n, |i, _| data.y[order[i]]);
    let w = DVector::from_fn(n, |i, _| data.w[order[i]]);
    let loss = WeightedSquaredDistance::new(y.clone(), w)?;
    let sets: Vec<ConvexSet> = (0..n - 1)
        .map(|i| ConvexSet::pairwise_order(n, i, i + 1))
        .collect::<Result<_>>()?;
    let violation = Arc::new(order_violation);

    let solution = if config.method.is_dual() {
        let problem = DualProblem::new(loss, sets)?.with_violation(violation);
        dual_solve(&problem, &config.dual_config())?
    } else {
        let problem = PenaltyProblem::new(loss, sets)?.with_violation(violation);
        solve(&problem, &config.penalty_config(problem.sets().len()), &y)?
    };
    let mut fitted = DVector::zeros(n);
    for (sorted, &original) in order.iter().enumerate() {
        fitted[original] = solution.x[sorted];
    }
    Ok(IsotoneFit { fitted, solution })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::applications::Method;
    use crate::dual::DualConfig;
    use crate::penalty::SolverConfig;
    use nalgebra::{dvector, DMatrix};

    fn config(method: Method) -> MethodConfig {
        MethodConfig::new(method, SolverConfig::isotone(), DualConfig::default().with_rho(1e-8))
    }

    #[test]
    fn three_point_example_all_methods() {
        let data = RegressionData::unweighted(DMatrix::zeros(3, 0), dvector![1.0, 3.0, 2.0]).unwrap();
        for method in Method::ALL {
            let fit = isotone_fit(&data, &config(method)).unwrap();
            assert!(
                (&fit.fitted - dvector![1.0, 2.5, 2.5]).amax() < 1e-3,
                "{method:?}: {}",
                fit.fitted
            );
        }
    }

    #[test]
    fn sorted_data_is_unchanged() {
        let data = RegressionData::unweighted(DMatrix::zeros(4, 0), dvector![0.0, 1.0, 1.5, 4.0]).unwrap();
        let fit = isotone_fit(&data, &config(Method::Mm)).unwrap();
        assert_eq!(fit.fitted, data.y);
        assert_eq!(fit.solution.violation.max_abs, 0.0);
    }

    #[test]
    fn predictor_order_is_respected() {
        // cases listed in reverse predictor order
        let x = DMatrix::from_column_slice(3, 1, &[3.0, 2.0, 1.0]);
        let data = RegressionData::unweighted(x, dvector![2.0, 3.0, 1.0]).unwrap();
        let fit = isotone_fit(&data, &config(Method::MmQn)).unwrap();
        assert!((&fit.fitted - dvector![2.5, 2.5, 1.0]).amax() < 1e-3);
    }
}
