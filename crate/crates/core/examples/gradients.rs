//! Sensitivities of the solved swing angles: forward mode, reverse mode and
//! finite differences of the whole solve.

use gn_ik::diff::{
    comparison_floor, fd_gradients_with, max_relative_error, unrolled_gradients, unrolled_vjp, Stencil,
};
use gn_ik::harness::{generate_instance, InstanceParams};
use gn_ik::io::bundled_skeleton;
use gn_ik::solver::{solve, SolverConfig};

fn main() -> gn_ik::Result<()> {
    let tree = bundled_skeleton();
    let params = InstanceParams {
        seed: 5,
        count: 1,
        noise_sigma: 0.005,
        bone_length_perturbation: 0.0,
    };
    let inst = generate_instance(&tree, &params, 0)?;
    let config = SolverConfig::default();
    let (_, trace) = solve(&tree, &inst.initial_pose(&tree)?, &inst.targets, &config)?;

    let g = unrolled_gradients(&tree, &trace, &inst.targets, &config)?;
    println!(
        "d alpha/dP {:?}, d alpha/d phi {:?}, d alpha/dT {:?}",
        g.d_alpha_d_p.shape(),
        g.d_alpha_d_phi.shape(),
        g.d_alpha_d_t.shape()
    );

    let fd = fd_gradients_with(&tree, &trace, &inst.targets, &config, 1e-5, Stencil::Central4)?;
    let all = g.combined();
    println!(
        "unrolled vs finite differences: max rel {:.2e}",
        max_relative_error(&all, &fd.combined(), comparison_floor(&all))
    );

    // One reverse sweep gives a whole row combination.
    let weights: Vec<f64> = (0..tree.internal_count()).map(|c| (c as f64 * 0.7).sin()).collect();
    let vjp = unrolled_vjp(&tree, &trace, &inst.targets, &config, &weights)?;
    let w = nalgebra::DVector::from_vec(weights);
    let dense = all.tr_mul(&w);
    println!("reverse vs forward mode: max |diff| {:.2e}", (vjp - dense).amax());
    Ok(())
}
