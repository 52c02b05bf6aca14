mod common;

use common::{isotone_max_min, project_polyhedron, Polyhedron};
use distmaj::dual::{dual_solve, dual_step, DualConfig, DualProblem, DualState, StepRule};
use distmaj::penalty::SquaredDistance;
use distmaj::projections::ConvexSet;
use nalgebra::DVector;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn vector(d: usize) -> impl Strategy<Value = DVector<f64>> {
    prop::collection::vec(-5.0..5.0f64, d).prop_map(DVector::from_vec)
}

fn shrink(w: DVector<f64>, t: f64) -> DVector<f64> {
    let norm = w.norm();
    if norm <= t {
        DVector::zeros(w.len())
    } else {
        w * (1.0 - t / norm)
    }
}

// Closed-form proximal maps of `sigma * h` for the support function `h` of
// each set, derived without reference to the projection.

fn prox_support_ball(center: &DVector<f64>, radius: f64, sigma: f64, u: &DVector<f64>) -> DVector<f64> {
    shrink(u - center * sigma, sigma * radius)
}

fn prox_support_box(lower: &DVector<f64>, upper: &DVector<f64>, sigma: f64, u: &DVector<f64>) -> DVector<f64> {
    DVector::from_fn(u.len(), |i, _| {
        if u[i] > sigma * upper[i] {
            u[i] - sigma * upper[i]
        } else if u[i] < sigma * lower[i] {
            u[i] - sigma * lower[i]
        } else {
            0.0
        }
    })
}

fn prox_support_ray(a: &DVector<f64>, b: f64, sigma: f64, u: &DVector<f64>, one_sided: bool) -> DVector<f64> {
    let t = (a.dot(u) - sigma * b) / a.norm_squared();
    a * if one_sided { t.max(0.0) } else { t }
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(200) })]

    #[test]
    fn moreau_identity(
        u in vector(3),
        c in vector(3),
        a in vector(3).prop_filter("nonzero", |a| a.norm() > 0.1),
        lo in vector(3),
        hi in vector(3),
        radius in 0.1..3.0f64,
        b in -2.0..2.0f64,
        sigma in 0.05..5.0f64,
    ) {
        let lower = lo.zip_map(&hi, f64::min);
        let upper = lo.zip_map(&hi, f64::max);
        let cases = [
            (ConvexSet::ball(c.clone(), radius).unwrap(), prox_support_ball(&c, radius, sigma, &u)),
            (ConvexSet::box_set(lower.clone(), upper.clone()).unwrap(), prox_support_box(&lower, &upper, sigma, &u)),
            (ConvexSet::halfspace(a.clone(), b).unwrap(), prox_support_ray(&a, b, sigma, &u, true)),
            (ConvexSet::hyperplane(a.clone(), b).unwrap(), prox_support_ray(&a, b, sigma, &u, false)),
            (ConvexSet::nonnegative(3), u.map(|v| v.min(0.0))),
        ];
        for (set, prox) in cases {
            let reconstructed = &prox + set.project(&(&u / sigma)).unwrap() * sigma;
            prop_assert!((reconstructed - &u).amax() <= 1e-10 * (1.0 + u.amax()), "{:?}", set);
        }
    }
}

/// Sets that all contain `anchor`, so the intersection is nonempty.
fn random_sets(rng: &mut ChaCha8Rng, d: usize, m: usize, anchor: &DVector<f64>) -> Vec<ConvexSet> {
    (0..m)
        .map(|_| {
            let dir = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
            match rng.random_range(0..3) {
                0 => {
                    let center = anchor + &dir * 2.0;
                    let radius = (&center - anchor).norm() + rng.random_range(0.0..0.5);
                    ConvexSet::ball(center, radius).unwrap()
                }
                1 => {
                    let normal = dir.map(|v| v + 0.01);
                    let offset = normal.dot(anchor) + rng.random_range(0.0..0.5);
                    ConvexSet::halfspace(normal, offset).unwrap()
                }
                _ => {
                    let lower = anchor - dir.map(|v| v.abs() + 0.1);
                    let upper = anchor + DVector::from_fn(d, |_, _| rng.random_range(0.1..1.0));
                    ConvexSet::box_set(lower, upper).unwrap()
                }
            }
        })
        .collect()
}

#[test]
fn per_set_step_gives_monotone_dual_objective() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..1000 {
        let d = rng.random_range(2..5);
        let m = rng.random_range(2..5);
        let anchor = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let sets = random_sets(&mut rng, d, m, &anchor);
        let y = DVector::from_fn(d, |_, _| rng.random_range(-4.0..4.0));
        let primal_bound = 0.5 * (&anchor - &y).norm_squared();
        let problem = DualProblem::new(SquaredDistance::new(y), sets).unwrap();
        let sigma = StepRule::PerSet.sigma(&problem);
        assert_eq!(sigma, 1.0 / m as f64);
        let mut state = DualState::new(&problem);
        for _ in 0..60 {
            let next = dual_step(&problem, &state, sigma).unwrap();
            let slack = 1e-12 * state.dual_value.abs().max(1.0);
            assert!(next.dual_value >= state.dual_value - slack, "dual decreased");
            // weak duality against a feasible point
            assert!(next.dual_value <= primal_bound + 1e-9);
            state = next;
        }
    }
}

#[test]
fn polyhedral_projection_matches_oracle_and_fista_is_faster() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut plain_iters = Vec::new();
    let mut fast_iters = Vec::new();
    for _ in 0..20 {
        let d = 3;
        let anchor = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
        let halfspaces: Vec<(DVector<f64>, f64)> = (0..3)
            .map(|_| {
                let a = DVector::from_fn(d, |_, _| rng.random_range(-1.0..1.0));
                let b = a.dot(&anchor) + rng.random_range(0.0..0.3);
                (a, b)
            })
            .collect();
        let y = DVector::from_fn(d, |_, _| rng.random_range(-4.0..4.0));
        let sets = halfspaces
            .iter()
            .map(|(a, b)| ConvexSet::halfspace(a.clone(), *b).unwrap())
            .collect();
        let problem = DualProblem::new(SquaredDistance::new(y.clone()), sets).unwrap();
        let oracle = project_polyhedron(
            &Polyhedron {
                ineq: halfspaces,
                eq: vec![],
            },
            &y,
        );
        let plain = dual_solve(&problem, &DualConfig::default().with_rho(1e-6)).unwrap();
        let fast = dual_solve(&problem, &DualConfig::fista().with_rho(1e-6)).unwrap();
        for sol in [&plain, &fast] {
            assert!((&sol.x - &oracle).norm() <= 1e-3 * (1.0 + oracle.norm()));
        }
        plain_iters.push(plain.iterations);
        fast_iters.push(fast.iterations);
    }
    plain_iters.sort_unstable();
    fast_iters.sort_unstable();
    assert!(fast_iters[10] <= plain_iters[10], "{fast_iters:?} vs {plain_iters:?}");
}

#[test]
fn pairwise_orders_reproduce_isotonic_regression() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 30;
    let y: Vec<f64> = (0..n).map(|i| i as f64 / 10.0 + rng.random_range(-1.0..1.0)).collect();
    let sets = (0..n - 1)
        .map(|i| ConvexSet::pairwise_order(n, i, i + 1).unwrap())
        .collect();
    let problem = DualProblem::new(SquaredDistance::new(DVector::from_vec(y.clone())), sets).unwrap();
    let oracle = DVector::from_vec(isotone_max_min(&y, &vec![1.0; n]));
    for config in [DualConfig::default(), DualConfig::fista()] {
        let sol = dual_solve(&problem, &config.with_rho(1e-9)).unwrap();
        assert!((&sol.x - &oracle).norm() <= 1e-3 * oracle.norm());
        assert!(sol.trace.is_stage_monotone(1e-12));
    }
}

#[test]
fn trace_objective_is_negated_dual_value() {
    let y = DVector::from_vec(vec![2.0, -1.0]);
    let sets = vec![
        ConvexSet::nonnegative(2),
        ConvexSet::ball(DVector::zeros(2), 1.0).unwrap(),
    ];
    let problem = DualProblem::new(SquaredDistance::new(y), sets).unwrap();
    let sol = dual_solve(&problem, &DualConfig::default().with_rho(1e-10)).unwrap();
    assert!(sol.converged);
    assert!(sol.trace.records.iter().all(|r| r.mu == 0.0));
    // the projection is (1, 0) with loss 1/2 + 1/2; strong duality at the end
    assert!((sol.x - DVector::from_vec(vec![1.0, 0.0])).amax() < 1e-6);
    assert!((sol.trace.last().unwrap().objective + 1.0).abs() < 1e-6);
}
