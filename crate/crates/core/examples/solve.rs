//! Recover a random pose from its joint positions.

use gn_ik::harness::{generate_instance, InstanceParams};
use gn_ik::io::bundled_skeleton;
use gn_ik::solver::{solve, SolverConfig};

fn main() -> gn_ik::Result<()> {
    let tree = bundled_skeleton();
    let params = InstanceParams {
        seed: 1,
        count: 1,
        noise_sigma: 0.0,
        bone_length_perturbation: 0.0,
    };
    let inst = generate_instance(&tree, &params, 0)?;
    let pose0 = inst.initial_pose(&tree)?;

    for config in [
        SolverConfig::default(),
        SolverConfig {
            max_iters: 10,
            line_search: true,
            ..SolverConfig::default()
        },
    ] {
        let (alpha, trace) = solve(&tree, &pose0, &inst.targets, &config)?;
        println!(
            "max_iters {} line_search {}: stop {:?} after {} iterations",
            config.max_iters, config.line_search, trace.stop_reason, trace.iterations_used
        );
        for (k, r) in trace.residual_curve().iter().enumerate() {
            println!("  {k:>2}  {r:.3e} m");
        }
        let err = alpha
            .iter()
            .zip(inst.true_pose.swing_angle())
            .map(|(a, t)| (a - t.abs()).abs())
            .fold(0.0, f64::max);
        println!("  largest swing-angle magnitude error {err:.2e} rad");
    }
    Ok(())
}
