//! Sort-and-threshold projections onto the scaled simplex and the l1 ball.

/// Projection onto `{x : x >= 0, sum x = total}`.
pub fn project_scaled_simplex(x: &[f64], total: f64) -> Vec<f64> {
    let mut sorted = x.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut threshold = 0.0;
    for (k, &value) in sorted.iter().enumerate() {
        cumulative += value;
        let candidate = (cumulative - total) / (k + 1) as f64;
        if value - candidate > 0.0 {
            threshold = candidate;
        } else {
            break;
        }
    }
    x.iter().map(|&v| (v - threshold).max(0.0)).collect()
}

/// Projection onto `{x : ||x||_1 <= radius}`.
pub fn project_l1_ball(x: &[f64], radius: f64) -> Vec<f64> {
    let l1: f64 = x.iter().map(|v| v.abs()).sum();
    if l1 <= radius {
        return x.to_vec();
    }
    let magnitudes: Vec<f64> = x.iter().map(|v| v.abs()).collect();
    let shrunk = project_scaled_simplex(&magnitudes, radius);
    x.iter().zip(shrunk).map(|(&v, m)| m.copysign(v)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn barycenter_by_symmetry() {
        let p = project_scaled_simplex(&[0.5, 0.5, 0.5], 1.0);
        for v in p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn l1_ball_axis_point() {
        assert_eq!(project_l1_ball(&[3.0, 0.0], 1.0), vec![1.0, 0.0]);
        assert_eq!(project_l1_ball(&[-3.0, 0.0], 1.0), vec![-1.0, 0.0]);
    }

    #[test]
    fn l1_ball_interior_identity() {
        assert_eq!(project_l1_ball(&[0.2, -0.3], 1.0), vec![0.2, -0.3]);
    }
}
