use super::*;
use nalgebra::dvector;

fn close(a: &DVector<f64>, b: &DVector<f64>, tol: f64) -> bool {
    (a - b).amax() <= tol
}

#[test]
fn box_interior_is_identity() {
    let set = ConvexSet::box_set(dvector![0.0, 0.0], dvector![1.0, 1.0]).unwrap();
    let x = dvector![0.5, 0.5];
    assert_eq!(set.project(&x).unwrap(), x);
}

#[test]
fn simplex_barycenter() {
    let p = ConvexSet::simplex(3).project(&dvector![0.5, 0.5, 0.5]).unwrap();
    assert!(close(&p, &dvector![1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0], 1e-15));
}

#[test]
fn pairwise_order_averages_violators() {
    let set = ConvexSet::pairwise_order(2, 0, 1).unwrap();
    assert_eq!(set.project(&dvector![3.0, 1.0]).unwrap(), dvector![2.0, 2.0]);
    assert_eq!(set.project(&dvector![1.0, 3.0]).unwrap(), dvector![1.0, 3.0]);
}

#[test]
fn l1_ball_example() {
    let set = ConvexSet::l1_ball(2, 1.0).unwrap();
    assert_eq!(set.project(&dvector![3.0, 0.0]).unwrap(), dvector![1.0, 0.0]);
}

#[test]
fn isotone_example() {
    let set = ConvexSet::isotone(DVector::from_element(3, 1.0)).unwrap();
    assert_eq!(set.project(&dvector![1.0, 3.0, 2.0]).unwrap(), dvector![1.0, 2.5, 2.5]);
}

#[test]
fn psd_truncates_diagonal() {
    let m = DMatrix::from_diagonal(&dvector![1.0, -2.0]);
    let p = ConvexSet::psd_cone(2).project_matrix(&m).unwrap();
    assert!((p - DMatrix::from_diagonal(&dvector![1.0, 0.0])).amax() < 1e-15);
}

#[test]
fn psd_rejects_asymmetric_input() {
    let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
    let err = ConvexSet::psd_cone(2).project_matrix(&m).unwrap_err();
    assert!(matches!(err, Error::NotSymmetric { .. }));
}

#[test]
fn dimension_mismatch_is_reported() {
    let err = ConvexSet::simplex(3).project(&dvector![1.0, 2.0]).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { expected: 3, found: 2 }));
    let err = ConvexSet::nonnegative(2).dist(&dvector![1.0]).unwrap_err();
    assert!(matches!(err, Error::DimensionMismatch { .. }));
}

#[test]
fn constructor_invariants() {
    assert!(ConvexSet::box_set(dvector![1.0], dvector![0.0]).is_err());
    assert!(ConvexSet::ball(dvector![0.0], 0.0).is_err());
    assert!(ConvexSet::hyperplane(dvector![0.0, 0.0], 1.0).is_err());
    assert!(ConvexSet::halfspace(dvector![0.0], 1.0).is_err());
    assert!(ConvexSet::l1_ball(2, -1.0).is_err());
    assert!(ConvexSet::pairwise_order(3, 1, 1).is_err());
    assert!(ConvexSet::pairwise_order(3, 0, 3).is_err());
}

#[test]
fn distance_examples() {
    let half = ConvexSet::halfspace(dvector![1.0, 0.0], 0.0).unwrap();
    assert_eq!(half.dist(&dvector![2.0, 3.0]).unwrap(), 2.0);
    assert_eq!(half.dist(&dvector![-2.0, 3.0]).unwrap(), 0.0);
    let ball = ConvexSet::ball(dvector![0.0, 0.0], 1.0).unwrap();
    assert_eq!(ball.dist(&dvector![0.0, 2.0]).unwrap(), 1.0);
}

#[test]
fn svm_halfspace_matches_closed_form() {
    // stacked (eps_0, eps_1, theta_0, theta_1); constraint on case 1
    let set = ConvexSet::svm_halfspace(2, 1, -1.0, dvector![1.0, 2.0]).unwrap();
    let z = dvector![0.0, 0.0, 0.5, 0.5];
    // shortfall = 1 - 0 - (-1)(1.5) = 2.5, step = 2.5 / (1 + 5) over (e_1, y x)
    let step = 2.5 / 6.0;
    let expected = dvector![0.0, step, 0.5 - step, 0.5 - 2.0 * step];
    let p = set.project(&z).unwrap();
    assert!(close(&p, &expected, 1e-15));
    assert!(set.contains(&p, 1e-12).unwrap());
}

#[test]
fn convex_reg_halfspace_moves_three_blocks() {
    // n = 2 cases, p = 1: (theta_0, theta_1, xi_0, xi_1)
    let x0 = dvector![0.0];
    let x1 = dvector![1.0];
    // constraint: xi_1 (x_0 - x_1) <= theta_0 - theta_1
    let set = ConvexSet::convex_reg_halfspace(2, 0, 1, &x0, &x1).unwrap();
    let z = dvector![0.0, 0.0, 0.0, -2.0];
    // excess = (-1)(-2) - 0 + 0 = 2; r = 2 / (2 + 1)
    let r = 2.0 / 3.0;
    let p = set.project(&z).unwrap();
    assert!(close(&p, &dvector![r, -r, 0.0, -2.0 + r], 1e-15));
    assert!(set.contains(&p, 1e-12).unwrap());
    assert_eq!(set.support(), Some(vec![0, 1, 3]));
}

#[test]
fn l1_rectangle_examples() {
    let p = project_l1_rectangle(&dvector![-7.5, 0.0], &dvector![-6.5, 1.0], &dvector![0.0, 0.0]).unwrap();
    assert_eq!(p, dvector![-6.5, 0.0]);
    let inside = dvector![-7.0, 0.5];
    assert_eq!(
        project_l1_rectangle(&dvector![-7.5, 0.0], &dvector![-6.5, 1.0], &inside).unwrap(),
        inside
    );
    let degenerate = project_l1_rectangle(&dvector![1.0, 1.0], &dvector![1.0, 1.0], &dvector![5.0, -3.0]).unwrap();
    assert_eq!(degenerate, dvector![1.0, 1.0]);
    assert!(project_l1_rectangle(&dvector![1.0], &dvector![1.0, 2.0], &dvector![0.0]).is_err());
}

#[test]
fn alternating_identical_halfspaces_one_step() {
    let h = ConvexSet::halfspace(dvector![1.0, 1.0], 1.0).unwrap();
    let x0 = dvector![3.0, 2.0];
    let out = alternating_projection(&h, &h, &x0, 10, 1e-12).unwrap();
    assert!(out.converged);
    assert_eq!(out.point, h.project(&x0).unwrap());
}

#[test]
fn alternating_axes_meet_at_origin() {
    let x_axis = ConvexSet::hyperplane(dvector![0.0, 1.0], 0.0).unwrap();
    let y_axis = ConvexSet::hyperplane(dvector![1.0, 0.0], 0.0).unwrap();
    let out = alternating_projection(&x_axis, &y_axis, &dvector![1.0, 1.0], 10, 1e-12).unwrap();
    assert_eq!(out.point, dvector![0.0, 0.0]);
    assert!(out.converged);
}

#[test]
fn alternating_feasible_start_is_fixed() {
    let a = ConvexSet::nonnegative(2);
    let b = ConvexSet::ball(dvector![0.0, 0.0], 2.0).unwrap();
    let x0 = dvector![0.5, 1.0];
    let out = alternating_projection(&a, &b, &x0, 10, 0.0).unwrap();
    assert_eq!(out.point, x0);
}

#[test]
fn alternating_reports_iteration_cap() {
    // slow zig-zag between two nearly parallel lines through the origin
    let a = ConvexSet::hyperplane(dvector![0.0, 1.0], 0.0).unwrap();
    let b = ConvexSet::hyperplane(dvector![-0.01, 1.0], 0.0).unwrap();
    let out = alternating_projection(&a, &b, &dvector![1.0, 0.0], 3, 1e-14).unwrap();
    assert!(!out.converged);
    assert_eq!(out.iterations, 3);
}

#[test]
fn simultaneous_step_examples() {
    let up = ConvexSet::halfspace(dvector![-1.0], 0.0).unwrap(); // x >= 0
    let down = ConvexSet::halfspace(dvector![1.0], 0.0).unwrap(); // x <= 0
    let x = dvector![4.0];
    assert_eq!(
        simultaneous_projection_step(&[up.clone(), down], &x).unwrap(),
        dvector![2.0]
    );
    assert_eq!(
        simultaneous_projection_step(&[up.clone()], &dvector![-3.0]).unwrap(),
        dvector![0.0]
    );
    assert_eq!(simultaneous_projection_step(&[up], &x).unwrap(), x);
    assert!(simultaneous_projection_step(&[], &x).is_err());
}

#[test]
fn whole_space_never_moves() {
    let set = ConvexSet::whole_space(3);
    let x = dvector![1e300, -4.0, 0.0];
    assert_eq!(set.displacement(&x).unwrap(), Displacement::Zero);
}
