//! Training losses and the gradient of the swing loss pushed back to the targets.

use gn_ik::diff::unrolled_vjp;
use gn_ik::harness::{generate_instance, InstanceParams};
use gn_ik::io::bundled_skeleton;
use gn_ik::kinematics::ShapeParams;
use gn_ik::losses::{loss_opt, loss_opt_grad, loss_reg, loss_total, LossWeights, RegressionOutputs};
use gn_ik::rotation::rodrigues;
use gn_ik::solver::{solve, SolverConfig};

fn main() -> gn_ik::Result<()> {
    let tree = bundled_skeleton();
    let params = InstanceParams {
        seed: 4,
        count: 1,
        noise_sigma: 0.01,
        bone_length_perturbation: 0.0,
    };
    let inst = generate_instance(&tree, &params, 0)?;
    let config = SolverConfig::default();
    let pose0 = inst.initial_pose(&tree)?;
    let (alpha, trace) = solve(&tree, &pose0, &inst.targets, &config)?;

    let truth = RegressionOutputs {
        beta: ShapeParams::zeros(),
        twist: inst.true_pose.twist_angle().to_vec(),
        joints: inst.targets.positions().to_vec(),
    };
    let pred = RegressionOutputs {
        beta: ShapeParams::new(&[0.1; 10])?,
        twist: truth.twist.iter().map(|t| t + 0.05).collect(),
        joints: truth.joints.iter().map(|p| p * 1.01).collect(),
    };
    let reg = loss_reg(&pred, &truth, &LossWeights::default())?;

    // Reference swings: the ground-truth pose's own swing rotations.
    let axes = trace.final_pose().swing_axis().to_vec();
    let r_gt = inst
        .true_pose
        .swing_axis()
        .iter()
        .zip(inst.true_pose.swing_angle())
        .map(|(a, t)| rodrigues(a, *t))
        .collect::<gn_ik::Result<Vec<_>>>()?;
    let opt = loss_opt(&alpha, &axes, &r_gt)?;
    println!("L_reg {reg:.4}  L_opt {opt:.4}  total {:.4}", loss_total(reg, opt, 1.0));

    let g = loss_opt_grad(&alpha, &axes, &r_gt)?;
    let d_targets = unrolled_vjp(&tree, &trace, &inst.targets, &config, &g)?;
    let mut joints: Vec<usize> = (0..tree.joint_count()).collect();
    joints.sort_by(|&a, &b| {
        let n = |j: usize| d_targets.fixed_rows::<3>(3 * j).norm();
        n(b).total_cmp(&n(a))
    });
    for &j in &joints[..5] {
        let v = d_targets.fixed_rows::<3>(3 * j);
        println!("dL_opt/dP[{}] = ({:+.3}, {:+.3}, {:+.3})", tree.name(j), v[0], v[1], v[2]);
    }
    Ok(())
}
