//! The cosine example: a valid MM algorithm whose majorizations fail the
//! SUMMA inequality.
//!
//! For `f(x) = cos x` the quadratic `g(y | x) = cos x - sin x (y - x) +
//! (y - x)^2 / 2` majorizes `f` (the curvature of `f` never exceeds one), and
//! its minimizer gives the MM map `psi(x) = x + sin x`.

/// `psi(x) = x + sin x`.
pub fn psi(x: f64) -> f64 {
    x + x.sin()
}

/// `[x0, psi(x0), ..., psi^n(x0)]`.
pub fn cosine_mm_iterate(x0: f64, n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(x0);
    let mut x = x0;
    for _ in 0..n {
        x = psi(x);
        out.push(x);
    }
    out
}

fn majorizer(y: f64, x: f64) -> f64 {
    x.cos() - x.sin() * (y - x) + 0.5 * (y - x) * (y - x)
}

/// `[g(x | x0) - g(x1 | x0)] - [g(x | x1) - f(x)]` with `x1 = psi(x0)`;
/// negative values are points where the SUMMA inequality fails.
pub fn summa_gap(x: f64, x0: f64) -> f64 {
    summa_gap_with(f64::cos, majorizer, psi, x, x0)
}

/// [`summa_gap`] for an arbitrary objective `f`, majorizer `g(y, anchor)`
/// and MM map.
pub fn summa_gap_with<F, G, P>(f: F, g: G, map: P, x: f64, x0: f64) -> f64
where
    F: Fn(f64) -> f64,
    G: Fn(f64, f64) -> f64,
    P: Fn(f64) -> f64,
{
    let x1 = map(x0);
    (g(x, x0) - g(x1, x0)) - (g(x, x1) - f(x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn fixed_point_and_first_step() {
        assert_eq!(cosine_mm_iterate(PI, 3), vec![PI; 4]);
        assert!((cosine_mm_iterate(1.0, 1)[1] - 1.841_470_984_807_897).abs() < 1e-15);
    }

    #[test]
    fn converges_to_pi() {
        let xs = cosine_mm_iterate(1.0, 100);
        assert!((xs[100] - PI).abs() <= 1e-8);
        assert!(xs.windows(2).all(|w| w[1].cos() <= w[0].cos()));
    }

    #[test]
    fn gap_nonnegative_at_next_iterate() {
        let x1 = psi(1.0);
        assert!(summa_gap(x1, 1.0) >= 0.0);
    }

    #[test]
    fn summa_fails_somewhere() {
        let worst = (0..=4000)
            .map(|i| -2.0 * PI + 4.0 * PI * i as f64 / 4000.0)
            .map(|x| summa_gap(x, 1.0))
            .fold(f64::INFINITY, f64::min);
        assert!(worst < 0.0);
    }
}
