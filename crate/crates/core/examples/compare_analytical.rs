//! Gauss-Newton against the top-down analytical solution when the targets
//! come from a skeleton with different bone lengths.

use gn_ik::baselines::hybrik_analytical_ik;
use gn_ik::harness::{generate_instances, InstanceParams};
use gn_ik::io::bundled_skeleton;
use gn_ik::solver::{residual, solve, SolverConfig};

fn main() -> gn_ik::Result<()> {
    let tree = bundled_skeleton();
    let config = SolverConfig {
        max_iters: 10,
        ..SolverConfig::default()
    };
    for perturb in [0.0, 0.05] {
        let params = InstanceParams {
            seed: 9,
            count: 10,
            noise_sigma: 0.0,
            bone_length_perturbation: perturb,
        };
        println!("bone length perturbation {perturb}");
        for inst in generate_instances(&tree, &params)? {
            let pose0 = inst.initial_pose(&tree)?;
            let analytic = hybrik_analytical_ik(&tree, pose0.twist_angle(), &inst.targets)?;
            let (_, a) = residual(&tree, &analytic, &inst.targets)?;
            let (_, trace) = solve(&tree, &pose0, &inst.targets, &config)?;
            println!("  #{:<2} analytical {a:.3e} m   gauss-newton {:.3e} m", inst.index, trace.final_residual_norm);
        }
    }
    Ok(())
}
