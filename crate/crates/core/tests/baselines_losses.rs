mod common;

use common::*;
use gn_ik::baselines::{hybrik_analytical_ik, hybrik_positions};
use gn_ik::kinematics::{forward_kinematics, JointTargets, KinematicTree, ShapeParams, SwingTwistPose};
use gn_ik::losses::{loss_opt, loss_opt_grad, loss_reg, loss_total, LossWeights, RegressionOutputs};
use gn_ik::rotation::{rodrigues, Rot3, Vec3};
use gn_ik::solver::residual;
use gn_ik::Error;
use proptest::prelude::*;
use std::f64::consts::FRAC_PI_2;

#[test]
fn analytical_ik_is_exact_for_consistent_bones() {
    let tree = skeleton();
    for index in 0..20 {
        let inst = instance(31, index, 0.0, 0.0);
        let q = hybrik_positions(&tree, inst.true_pose.twist_angle(), &inst.targets).unwrap();
        assert!(max_abs_diff(&q, inst.targets.positions()) < 1e-9);
    }
}

#[test]
fn analytical_ik_leaves_residual_under_perturbed_bones() {
    let tree = skeleton();
    let inst = instance(32, 0, 0.0, 0.05);
    let pose = hybrik_analytical_ik(&tree, inst.true_pose.twist_angle(), &inst.targets).unwrap();
    assert!(residual(&tree, &pose, &inst.targets).unwrap().1 > 1e-4);
}

#[test]
fn aligned_bone_gets_identity_swing() {
    let tree = chain(4);
    let t = JointTargets::new(tree.rest_positions()).unwrap();
    let pose = hybrik_analytical_ik(&tree, &[0.0, 0.0], &t).unwrap();
    assert!(pose.swing_angle().iter().all(|a| *a == 0.0));
}

#[test]
fn coincident_targets_are_a_degenerate_bone() {
    let tree = chain(3);
    let mut p = tree.rest_positions();
    p[2] = p[1];
    let r = hybrik_analytical_ik(&tree, &[0.0], &JointTargets::new(p).unwrap());
    assert!(matches!(r, Err(Error::DegenerateBone { joint: 2 })));
}

#[test]
fn reversed_bone_swings_half_a_turn() {
    let tree = chain(3);
    let mut p = tree.rest_positions();
    p[2] = p[1] - Vec3::x();
    let pose = hybrik_analytical_ik(&tree, &[0.0], &JointTargets::new(p.clone()).unwrap()).unwrap();
    let q = forward_kinematics(&tree, &pose, &Vec3::zeros()).unwrap();
    assert!((q[2] - p[2]).norm() < 1e-12);
}

fn outputs(joints: Vec<Vec3>) -> RegressionOutputs {
    RegressionOutputs {
        beta: ShapeParams::zeros(),
        twist: vec![0.0; 3],
        joints,
    }
}

#[test]
fn regression_loss_examples() {
    let gt = outputs(vec![Vec3::zeros(); 4]);
    let w = LossWeights::default();
    assert_eq!(loss_reg(&gt, &gt, &w).unwrap(), 0.0);
    let mut pred = gt.clone();
    pred.joints[2].x = 0.2;
    let only_joints = LossWeights::new(0.0, 0.0, 1.0, 0.0).unwrap();
    assert!((loss_reg(&pred, &gt, &only_joints).unwrap() - 0.2).abs() < 1e-15);
    pred.joints.pop();
    assert!(matches!(loss_reg(&pred, &gt, &w), Err(Error::ShapeMismatch(_))));
    assert!(ShapeParams::new(&[0.0; 9]).is_err());
}

#[test]
fn swing_loss_examples() {
    let z = vec![Vec3::z()];
    assert!(loss_opt(&[0.4], &z, &[rodrigues(&Vec3::z(), 0.4).unwrap()]).unwrap() < 1e-15);
    let quarter = loss_opt(&[FRAC_PI_2], &z, &[Rot3::identity()]).unwrap();
    assert!((quarter - 4.0).abs() < 1e-12);
    assert!(matches!(loss_opt(&[0.1, 0.2], &z, &[Rot3::identity()]), Err(Error::ShapeMismatch(_))));
}

#[test]
fn total_loss_examples() {
    assert_eq!(loss_total(0.0, 0.0, 7.0), 0.0);
    assert_eq!(loss_total(1.0, 2.0, 0.5), 2.0);
}

proptest! {
    #[test]
    fn regression_loss_matches_recomputation(
        b in prop::collection::vec(-1.0f64..1.0, 20),
        t in prop::collection::vec(-3.0f64..3.0, 6),
        j in prop::collection::vec(-1.0f64..1.0, 12),
        w in prop::array::uniform3(0.0f64..2.0),
    ) {
        let joints = |o: usize| (0..2).map(|k| Vec3::new(j[o + 3 * k], j[o + 3 * k + 1], j[o + 3 * k + 2])).collect();
        let pred = RegressionOutputs { beta: ShapeParams::new(&b[..10]).unwrap(), twist: t[..3].to_vec(), joints: joints(0) };
        let gt = RegressionOutputs { beta: ShapeParams::new(&b[10..]).unwrap(), twist: t[3..].to_vec(), joints: joints(6) };
        let weights = LossWeights::new(w[0], w[1], w[2], 1.0).unwrap();
        let mut expected = 0.0;
        for k in 0..10 {
            expected += w[0] * (b[k] - b[10 + k]).powi(2);
        }
        for k in 0..3 {
            expected += w[1] * (t[k] - t[3 + k]).powi(2);
        }
        for k in 0..6 {
            expected += w[2] * (j[k] - j[6 + k]).abs();
        }
        prop_assert!((loss_reg(&pred, &gt, &weights).unwrap() - expected).abs() < 1e-12);
        prop_assert!((loss_total(1.5, 2.5, w[0]) - (1.5 + w[0] * 2.5)).abs() < 1e-15);
    }

    #[test]
    fn swing_loss_gradient_matches_fd(a in prop::collection::vec(-2.0f64..2.0, 3), v in prop::array::uniform3(-2.0f64..2.0)) {
        let axes = vec![Vec3::x(), Vec3::new(0.0, 0.6, 0.8), Vec3::z()];
        let r_gt = vec![rotation(v), rotation([v[1], v[2], v[0]]), rotation([v[2], -v[0], v[1]])];
        let g = loss_opt_grad(&a, &axes, &r_gt).unwrap();
        let h = 1e-6;
        for k in 0..3 {
            let mut p = a.clone();
            p[k] += h;
            let mut m = a.clone();
            m[k] -= h;
            let fd = (loss_opt(&p, &axes, &r_gt).unwrap() - loss_opt(&m, &axes, &r_gt).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[k]).abs() < 1e-5 * (1.0 + g[k].abs()));
        }
    }

    #[test]
    fn analytical_ik_on_random_chains_is_exact(angles in prop::collection::vec(-0.8f64..0.8, 3), psi in prop::collection::vec(0.0f64..6.28, 3)) {
        let parent = vec![None, Some(0), Some(1), Some(2), Some(3)];
        let offsets = vec![Vec3::zeros(), Vec3::y(), Vec3::new(0.3, 1.0, 0.0), Vec3::new(0.0, 0.5, 0.2), Vec3::x()];
        let names = (0..5).map(|i| i.to_string()).collect();
        let tree = KinematicTree::new(parent, offsets, names).unwrap();
        let axes: Vec<Vec3> = tree.internal_joints().iter().zip(&psi).map(|(&j, p)| {
            let b = tree.bone_direction(j).unwrap();
            let e1 = b.cross(&Vec3::z()).normalize();
            let e2 = b.cross(&e1);
            e1 * p.cos() + e2 * p.sin()
        }).collect();
        let pose = SwingTwistPose::new(&tree, angles, axes, vec![0.2, -0.4, 1.0], Rot3::identity()).unwrap();
        let t = JointTargets::new(forward_kinematics(&tree, &pose, &Vec3::zeros()).unwrap()).unwrap();
        let q = hybrik_positions(&tree, pose.twist_angle(), &t).unwrap();
        prop_assert!(max_abs_diff(&q, t.positions()) < 1e-9);
    }
}
