mod common;

use common::*;
use gn_ik::jacobian::{analytic_jacobian, fd_jacobian, stack};
use gn_ik::kinematics::{forward_kinematics, SwingTwistPose};
use gn_ik::rotation::{Rot3, Vec3};
use gn_ik::Error;
use nalgebra::DVector;
use proptest::prelude::*;

#[test]
fn single_revolute_column_is_cross_product() {
    let tree = chain(3);
    let pose = SwingTwistPose::new(&tree, vec![0.0], vec![Vec3::z()], vec![0.0], Rot3::identity()).unwrap();
    let j = analytic_jacobian(&tree, &pose).unwrap();
    let fd = fd_jacobian(&tree, &pose, 1e-5).unwrap();
    // Joint 2 sits one unit along x from the pivot: z x x = y.
    assert!((j.matrix().fixed_view::<3, 1>(6, 0) - Vec3::y()).norm() < 1e-15);
    assert!((j.matrix() - fd.matrix()).amax() < 1e-9);
}

#[test]
fn fd_error_shrinks_quadratically() {
    let tree = skeleton();
    let pose = instance(17, 0, 0.0, 0.0).true_pose;
    let j = analytic_jacobian(&tree, &pose).unwrap();
    let e1 = (fd_jacobian(&tree, &pose, 1e-4).unwrap().matrix() - j.matrix()).amax();
    let e2 = (fd_jacobian(&tree, &pose, 5e-5).unwrap().matrix() - j.matrix()).amax();
    let ratio = e1 / e2;
    assert!((3.0..5.0).contains(&ratio), "ratio {ratio}");
}

#[test]
fn fd_matches_analytic_in_absolute_terms() {
    let tree = skeleton();
    for index in 0..5 {
        let pose = instance(19, index, 0.0, 0.0).true_pose;
        let d = (fd_jacobian(&tree, &pose, 1e-5).unwrap().matrix() - analytic_jacobian(&tree, &pose).unwrap().matrix()).amax();
        assert!(d < 1e-6, "{d}");
    }
}

#[test]
fn non_positive_step_is_rejected() {
    let tree = skeleton();
    let pose = SwingTwistPose::rest(&tree);
    for h in [0.0, -1e-5, f64::NAN] {
        assert!(matches!(fd_jacobian(&tree, &pose, h), Err(Error::InvalidStep(_))));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn zero_outside_ancestor_blocks(seed in 0u64..1000) {
        let tree = skeleton();
        let j = analytic_jacobian(&tree, &instance(seed, 0, 0.0, 0.0).true_pose).unwrap();
        prop_assert!(j.respects_sparsity(&tree));
    }

    #[test]
    fn directional_derivative_is_first_order(seed in 0u64..1000) {
        let tree = skeleton();
        let inst = instance(seed, 1, 0.0, 0.0);
        let pose = &inst.true_pose;
        let j = analytic_jacobian(&tree, pose).unwrap();
        let v = DVector::from_fn(tree.internal_count(), |i, _| ((i * 7 + seed as usize) as f64).sin());
        let f0 = stack(&forward_kinematics(&tree, pose, &inst.root_position).unwrap());
        let jv = j.matrix() * &v;
        let err = |h: f64| {
            let a: Vec<f64> = pose.swing_angle().iter().zip(v.iter()).map(|(a, d)| a + h * d).collect();
            let f = stack(&forward_kinematics(&tree, &pose.with_swing_angles(a).unwrap(), &inst.root_position).unwrap());
            ((f - &f0) / h - &jv).norm()
        };
        let (e1, e2) = (err(1e-3), err(5e-4));
        prop_assert!(e2 < 0.6 * e1, "{e1} {e2}");
    }

    #[test]
    fn jacobian_scales_with_skeleton(seed in 0u64..1000, s in 0.2f64..5.0) {
        let tree = skeleton();
        let pose = instance(seed, 2, 0.0, 0.0).true_pose;
        let j = analytic_jacobian(&tree, &pose).unwrap();
        let js = analytic_jacobian(&tree.scaled(s).unwrap(), &pose).unwrap();
        prop_assert!((js.matrix() - j.matrix() * s).amax() < 1e-12 * s.max(1.0));
    }
}
