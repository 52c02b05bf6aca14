//! Dual proximal gradient for strongly convex losses over intersections.
//!
//! Minimizing `f(x)` over `C_1 ∩ ... ∩ C_m` has the dual
//!
//! ```text
//! D(z) = -f*(z_1 + ... + z_m) + sum_i min_{c in C_i} <z_i, c>
//! ```
//!
//! whose smooth part has a `(m/eta)`-Lipschitz gradient when `f` is
//! `eta`-strongly convex. Proximal gradient ascent on `D`, after the Moreau
//! decomposition, needs only the projections onto the `C_i`:
//!
//! ```text
//! x   = argmin_x f(x) - <z_1 + ... + z_m, x>
//! z_i <- z_i + sigma [P_i(x - z_i / sigma) - x]
//! ```
//!
//! The FISTA variant applies the same update at an extrapolated point.

use std::time::Instant;

use nalgebra::DVector;
use rayon::prelude::*;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{all_finite, step_ratio};
use crate::penalty::{
    SmoothLoss, Solution, SolveTrace, SquaredDistance, TraceRecord, Violation, ViolationFn, WeightedSquaredDistance,
};
use crate::projections::ConvexSet;

/// A loss with a strong-convexity floor `eta > 0` and a solver for its
/// linearly tilted minimization.
pub trait StronglyConvexLoss: SmoothLoss {
    fn strong_convexity(&self) -> f64;

    /// `argmin_x f(x) - <s, x>`, i.e. the gradient of the conjugate at `s`.
    fn tilt_solve(&self, s: &DVector<f64>) -> DVector<f64>;
}

impl StronglyConvexLoss for SquaredDistance {
    fn strong_convexity(&self) -> f64 {
        1.0
    }

    fn tilt_solve(&self, s: &DVector<f64>) -> DVector<f64> {
        &self.target + s
    }
}

impl StronglyConvexLoss for WeightedSquaredDistance {
    fn strong_convexity(&self) -> f64 {
        self.weights.min()
    }

    fn tilt_solve(&self, s: &DVector<f64>) -> DVector<f64> {
        DVector::from_fn(s.len(), |i, _| self.target[i] + s[i] / self.weights[i])
    }
}

/// Loss and constraint sets for the dual solvers.
#[derive(Clone)]
pub struct DualProblem<L> {
    loss: L,
    sets: Vec<ConvexSet>,
    violation_fn: Option<ViolationFn>,
}

impl<L: StronglyConvexLoss> DualProblem<L> {
    pub fn new(loss: L, sets: Vec<ConvexSet>) -> Result<Self> {
        let eta = loss.strong_convexity();
        if !(eta > 0.0 && eta.is_finite()) {
            return Err(Error::invalid(format!(
                "dual solver needs a strongly convex loss (eta = {eta})"
            )));
        }
        for set in &sets {
            check_dim(loss.dim(), set.dim())?;
        }
        Ok(Self {
            loss,
            sets,
            violation_fn: None,
        })
    }

    pub fn with_violation(mut self, f: ViolationFn) -> Self {
        self.violation_fn = Some(f);
        self
    }

    pub fn loss(&self) -> &L {
        &self.loss
    }

    pub fn sets(&self) -> &[ConvexSet] {
        &self.sets
    }

    /// Largest number of sets whose projections move a common coordinate.
    pub fn overlap(&self) -> usize {
        let mut counts = vec![0usize; self.loss.dim()];
        let mut everywhere = 0;
        for set in &self.sets {
            match set.support() {
                Some(coords) => coords.into_iter().for_each(|c| counts[c] += 1),
                None => everywhere += 1,
            }
        }
        everywhere + counts.into_iter().max().unwrap_or(0)
    }

    pub fn violation(&self, x: &DVector<f64>) -> Result<Violation> {
        if let Some(f) = &self.violation_fn {
            return Ok(f(x));
        }
        let worst = self
            .sets
            .iter()
            .map(|s| s.dist(x))
            .try_fold(0.0_f64, |acc, d| d.map(|d| acc.max(d)))?;
        Ok(Violation::from_distance(worst))
    }

    fn sum_blocks(&self, blocks: &[DVector<f64>]) -> DVector<f64> {
        let mut s = DVector::zeros(self.loss.dim());
        for b in blocks {
            s += b;
        }
        s
    }

    fn heavy(&self) -> bool {
        self.sets.len() > 1
            && (self.sets.iter().any(|s| matches!(s, ConvexSet::PsdCone { .. }))
                || self.sets.len() * self.loss.dim() >= 1 << 14)
    }

    /// Proximal block update at `(base, x_base)`; returns the new blocks and
    /// their contact points `P_i(x_base - base_i / sigma)`.
    fn block_update(
        &self,
        base: &[DVector<f64>],
        x_base: &DVector<f64>,
        sigma: f64,
    ) -> Result<(Vec<DVector<f64>>, Vec<DVector<f64>>)> {
        let update = |(set, z): (&ConvexSet, &DVector<f64>)| -> Result<(DVector<f64>, DVector<f64>)> {
            let w = x_base - z / sigma;
            let d = set.displacement(&w)?;
            let mut block = DVector::zeros(w.len());
            d.add_scaled_to(sigma, &mut block);
            let contact = d.apply_to(&w);
            Ok((block, contact))
        };
        let pairs: Vec<(DVector<f64>, DVector<f64>)> = if self.heavy() {
            self.sets
                .par_iter()
                .zip(base.par_iter())
                .map(update)
                .collect::<Result<_>>()?
        } else {
            self.sets.iter().zip(base.iter()).map(update).collect::<Result<_>>()?
        };
        Ok(pairs.into_iter().unzip())
    }

    /// Dual objective at blocks whose contact points are known.
    fn dual_value(&self, blocks: &[DVector<f64>], contacts: &[DVector<f64>], x: &DVector<f64>) -> f64 {
        let s = self.sum_blocks(blocks);
        let conjugate = s.dot(x) - self.loss.value(x);
        let support: f64 = blocks.iter().zip(contacts).map(|(z, c)| z.dot(c)).sum();
        support - conjugate
    }
}

/// Iterate of the dual solvers.
#[derive(Debug, Clone)]
pub struct DualState {
    pub blocks: Vec<DVector<f64>>,
    pub previous: Vec<DVector<f64>>,
    /// Primal point for the current blocks.
    pub x: DVector<f64>,
    /// Completed steps.
    pub iteration: usize,
    /// Steps since the last momentum restart; drives the FISTA coefficient.
    pub momentum: usize,
    pub dual_value: f64,
    /// `||z_new - z_old|| / sigma` of the last step.
    pub residual: f64,
}

impl DualState {
    /// All blocks zero, so `x` is the unconstrained minimizer.
    pub fn new<L: StronglyConvexLoss>(problem: &DualProblem<L>) -> Self {
        let p = problem.loss.dim();
        let blocks = vec![DVector::zeros(p); problem.sets.len()];
        let x = problem.loss.tilt_solve(&DVector::zeros(p));
        let dual_value = problem.loss.value(&x);
        Self {
            previous: blocks.clone(),
            blocks,
            x,
            iteration: 0,
            momentum: 0,
            dual_value,
            residual: f64::INFINITY,
        }
    }
}

fn advance<L: StronglyConvexLoss>(
    problem: &DualProblem<L>,
    state: &DualState,
    base: &[DVector<f64>],
    sigma: f64,
) -> Result<DualState> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::invalid("dual step must be positive"));
    }
    let x_base = problem.loss.tilt_solve(&problem.sum_blocks(base));
    let (blocks, contacts) = problem.block_update(base, &x_base, sigma)?;
    if blocks.iter().any(|b| !all_finite(b)) {
        return Err(Error::NonFinite("dual block"));
    }
    let x = problem.loss.tilt_solve(&problem.sum_blocks(&blocks));
    let dual_value = problem.dual_value(&blocks, &contacts, &x);
    let residual = blocks
        .iter()
        .zip(&state.blocks)
        .map(|(a, b)| (a - b).norm_squared())
        .sum::<f64>()
        .sqrt()
        / sigma;
    Ok(DualState {
        previous: state.blocks.clone(),
        blocks,
        x,
        iteration: state.iteration + 1,
        momentum: state.momentum + 1,
        dual_value,
        residual,
    })
}

/// One proximal gradient ascent step on the dual.
pub fn dual_step<L: StronglyConvexLoss>(problem: &DualProblem<L>, state: &DualState, sigma: f64) -> Result<DualState> {
    advance(problem, state, &state.blocks, sigma)
}

/// One FISTA step: the dual step taken at
/// `s = z_n + ((n - 2) / (n + 1)) (z_n - z_{n-1})`, with `n = state.momentum`.
pub fn fista_step<L: StronglyConvexLoss>(problem: &DualProblem<L>, state: &DualState, sigma: f64) -> Result<DualState> {
    let n = state.momentum as f64;
    let beta = if state.momentum >= 2 {
        (n - 2.0) / (n + 1.0)
    } else {
        0.0
    };
    if beta == 0.0 {
        return dual_step(problem, state, sigma);
    }
    let extrapolated: Vec<DVector<f64>> = state
        .blocks
        .iter()
        .zip(&state.previous)
        .map(|(z, prev)| z + (z - prev) * beta)
        .collect();
    advance(problem, state, &extrapolated, sigma)
}

/// Step length rule for the dual solvers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepRule {
    /// `eta / k`, with `k` the largest number of sets sharing a coordinate.
    Overlap,
    /// `eta / m`.
    PerSet,
    /// `eta`.
    Full,
    Fixed(f64),
}

impl StepRule {
    pub fn sigma<L: StronglyConvexLoss>(&self, problem: &DualProblem<L>) -> f64 {
        let eta = problem.loss.strong_convexity();
        match *self {
            StepRule::Overlap => eta / problem.overlap().max(1) as f64,
            StepRule::PerSet => eta / problem.sets.len().max(1) as f64,
            StepRule::Full => eta,
            StepRule::Fixed(s) => s,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualConfig {
    pub step: StepRule,
    /// Stop when `||x_{n+1} - x_n|| / (||x_n|| + 1) < rho`.
    pub rho: f64,
    pub max_iter: usize,
    pub fista: bool,
    /// Restart momentum whenever the dual objective would decrease.
    pub restart: bool,
    pub violation_tol: f64,
}

impl Default for DualConfig {
    fn default() -> Self {
        Self {
            step: StepRule::Overlap,
            rho: 1e-4,
            max_iter: 100_000,
            fista: false,
            restart: true,
            violation_tol: 1e-3,
        }
    }
}

impl DualConfig {
    pub fn fista() -> Self {
        Self {
            fista: true,
            ..Self::default()
        }
    }

    pub fn with_rho(mut self, rho: f64) -> Self {
        self.rho = rho;
        self
    }

    pub fn with_step(mut self, step: StepRule) -> Self {
        self.step = step;
        self
    }
}

/// Runs dual ascent from zero blocks.
///
/// The trace objective is the negated dual value, so it is non-increasing
/// for safe steps; `mu` is recorded as zero. The returned `objective` is the
/// primal loss at the final point.
pub fn dual_solve<L: StronglyConvexLoss>(problem: &DualProblem<L>, config: &DualConfig) -> Result<Solution> {
    if !(config.rho > 0.0) {
        return Err(Error::invalid("rho must be positive"));
    }
    let sigma = config.step.sigma(problem);
    let start = Instant::now();
    let mut trace = SolveTrace::default();
    let mut state = DualState::new(problem);
    let mut violation = problem.violation(&state.x)?;
    let record = |trace: &mut SolveTrace, state: &DualState, violation: &Violation| {
        trace.push(TraceRecord {
            iter: state.iteration,
            stage: 0,
            mu: 0.0,
            objective: 0.0 - state.dual_value,
            violation: violation.max_abs,
            residual: if state.residual.is_finite() {
                state.residual
            } else {
                0.0
            },
            seconds: start.elapsed().as_secs_f64(),
            extrapolated: false,
        })
    };
    record(&mut trace, &state, &violation);

    let mut converged = false;
    if problem.sets.is_empty() {
        converged = true;
    }
    while !converged && state.iteration < config.max_iter {
        let mut next = if config.fista {
            fista_step(problem, &state, sigma)?
        } else {
            dual_step(problem, &state, sigma)?
        };
        if config.fista && config.restart && next.dual_value < state.dual_value {
            next = dual_step(problem, &state, sigma)?;
            next.momentum = 1;
        }
        let ratio = step_ratio(&state.x, &next.x);
        state = next;
        violation = problem.violation(&state.x)?;
        record(&mut trace, &state, &violation);
        converged = ratio < config.rho;
    }
    let feasible = violation.max_abs <= config.violation_tol;
    Ok(Solution {
        objective: problem.loss.value(&state.x),
        violation,
        residual: if state.residual.is_finite() {
            state.residual
        } else {
            0.0
        },
        iterations: state.iteration,
        mu_final: 0.0,
        converged: converged && feasible,
        x: state.x,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dvector;

    #[test]
    fn single_halfspace_converges_to_projection() {
        let y = dvector![2.0, 1.0];
        let set = ConvexSet::halfspace(dvector![1.0, 1.0], 1.0).unwrap();
        let problem = DualProblem::new(SquaredDistance::new(y.clone()), vec![set.clone()]).unwrap();
        let sol = dual_solve(&problem, &DualConfig::default().with_rho(1e-12)).unwrap();
        assert!((sol.x - set.project(&y).unwrap()).amax() < 1e-10);
    }

    #[test]
    fn zero_blocks_give_unconstrained_minimizer() {
        let y = dvector![2.0, -1.0];
        let problem = DualProblem::new(SquaredDistance::new(y.clone()), vec![ConvexSet::nonnegative(2)]).unwrap();
        assert_eq!(DualState::new(&problem).x, y);
    }

    #[test]
    fn whole_space_finishes_in_one_step() {
        let y = dvector![2.0, -1.0];
        let problem = DualProblem::new(SquaredDistance::new(y.clone()), vec![ConvexSet::whole_space(2)]).unwrap();
        let sol = dual_solve(&problem, &DualConfig::default()).unwrap();
        assert_eq!(sol.x, y);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn first_fista_steps_match_plain_steps() {
        let problem = DualProblem::new(
            SquaredDistance::new(dvector![3.0, -1.0, 0.5]),
            vec![
                ConvexSet::simplex(3),
                ConvexSet::ball(dvector![0.0, 0.0, 0.0], 0.5).unwrap(),
            ],
        )
        .unwrap();
        let mut plain = DualState::new(&problem);
        let mut fast = plain.clone();
        for _ in 0..3 {
            plain = dual_step(&problem, &plain, 0.5).unwrap();
            fast = fista_step(&problem, &fast, 0.5).unwrap();
        }
        // momentum 2 gives coefficient 0 on the third step
        assert_eq!(plain.blocks, fast.blocks);
        let fourth = fista_step(&problem, &fast, 0.5).unwrap();
        assert_ne!(fourth.blocks, dual_step(&problem, &plain, 0.5).unwrap().blocks);
    }

    #[test]
    fn overlap_counts_shared_coordinates() {
        let sets: Vec<ConvexSet> = (0..4)
            .map(|i| ConvexSet::pairwise_order(5, i, i + 1).unwrap())
            .collect();
        let problem = DualProblem::new(SquaredDistance::new(DVector::zeros(5)), sets).unwrap();
        assert_eq!(problem.overlap(), 2);
        assert_eq!(StepRule::Overlap.sigma(&problem), 0.5);
        assert_eq!(StepRule::PerSet.sigma(&problem), 0.25);
    }

    #[test]
    fn rejects_non_strongly_convex_loss() {
        let loss = WeightedSquaredDistance {
            target: dvector![1.0],
            weights: dvector![0.0],
        };
        assert!(DualProblem::new(loss, vec![]).is_err());
    }

    #[test]
    fn dual_value_bounds_primal() {
        let y = dvector![3.0, -1.0, 0.5];
        let problem = DualProblem::new(
            SquaredDistance::new(y),
            vec![
                ConvexSet::simplex(3),
                ConvexSet::ball(dvector![0.0, 0.0, 0.0], 0.8).unwrap(),
            ],
        )
        .unwrap();
        let sol = dual_solve(&problem, &DualConfig::default().with_rho(1e-12)).unwrap();
        let last = sol.trace.last().unwrap();
        // weak duality: D <= f at feasible points, with equality at the optimum
        assert!((-last.objective - sol.objective).abs() < 1e-8);
        assert!(sol.trace.is_stage_monotone(1e-12));
    }
}
