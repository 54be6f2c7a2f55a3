//! Implicit-function gradients agree with unrolled ones only at a fixed point.

use gn_ik::diff::{
    comparison_floor, fd_gradients_with, implicit_gradients, implicit_gradients_unchecked, max_relative_error,
    unrolled_gradients, Stencil,
};
use gn_ik::harness::{generate_instance, InstanceParams};
use gn_ik::io::bundled_skeleton;
use gn_ik::solver::{solve, SolverConfig};
use gn_ik::Error;

fn main() -> gn_ik::Result<()> {
    let tree = bundled_skeleton();
    let params = InstanceParams {
        seed: 2,
        count: 1,
        noise_sigma: 0.0,
        bone_length_perturbation: 0.0,
    };
    let inst = generate_instance(&tree, &params, 0)?;
    let pose0 = inst.initial_pose(&tree)?;

    for iters in [1, 10] {
        let config = SolverConfig {
            max_iters: iters,
            ..SolverConfig::default()
        };
        let (_, trace) = solve(&tree, &pose0, &inst.targets, &config)?;
        let unrolled = unrolled_gradients(&tree, &trace, &inst.targets, &config)?.combined();
        let fd = fd_gradients_with(&tree, &trace, &inst.targets, &config, 1e-5, Stencil::Central4)?.combined();
        let floor = comparison_floor(&unrolled);
        let (implicit, stationarity) =
            implicit_gradients_unchecked(&tree, &trace.final_pose(), &inst.targets, &config)?;
        println!("{iters:>2} iterations: residual {:.2e} m, |J^T r| {stationarity:.2e}", trace.final_residual_norm);
        println!("    unrolled vs fd  {:.2e}", max_relative_error(&unrolled, &fd, floor));
        println!("    implicit vs fd  {:.2e}", max_relative_error(&implicit.combined(), &fd, floor));
        match implicit_gradients(&tree, &trace.final_pose(), &inst.targets, &config) {
            Err(Error::NotConverged { .. }) => println!("    checked implicit gradients refuse: not stationary"),
            Err(e) => return Err(e),
            Ok(_) => println!("    checked implicit gradients accepted"),
        }
    }
    Ok(())
}
