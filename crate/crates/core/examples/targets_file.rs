//! Write synthetic targets to a document, read them back and solve each frame.

use gn_ik::harness::{generate_instances, InstanceParams};
use gn_ik::io::{bundled_skeleton, parse_targets, targets_to_json};
use gn_ik::kinematics::{solve_root_rotation_all, SwingTwistPose};
use gn_ik::solver::{solve, SolverConfig};

fn main() -> gn_ik::Result<()> {
    let tree = bundled_skeleton();
    let params = InstanceParams {
        seed: 8,
        count: 3,
        noise_sigma: 0.002,
        bone_length_perturbation: 0.0,
    };
    let frames: Vec<_> = generate_instances(&tree, &params)?.into_iter().map(|i| i.targets).collect();
    let text = targets_to_json(&frames);
    println!("{} bytes of targets", text.len());

    // Twist angles are not part of a targets document; these solves use zero
    // twist, so joints with several children generally cannot be matched exactly.
    let config = SolverConfig {
        max_iters: 20,
        ..SolverConfig::default()
    };
    for (k, targets) in parse_targets(&text, "memory")?.iter().enumerate() {
        let pose0 = SwingTwistPose::rest(&tree).with_root_rotation(solve_root_rotation_all(&tree, targets)?)?;
        let (_, trace) = solve(&tree, &pose0, targets, &config)?;
        println!("frame {k}: residual {:.3e} m", trace.final_residual_norm);
    }
    Ok(())
}
