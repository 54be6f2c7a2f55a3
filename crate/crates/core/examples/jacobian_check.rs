//! Analytic Jacobian of joint positions w.r.t. swing angles against central differences.

use gn_ik::harness::{generate_instance, InstanceParams};
use gn_ik::io::bundled_skeleton;
use gn_ik::jacobian::{analytic_jacobian, fd_jacobian};

fn main() -> gn_ik::Result<()> {
    let tree = bundled_skeleton();
    let params = InstanceParams {
        seed: 3,
        count: 1,
        noise_sigma: 0.0,
        bone_length_perturbation: 0.0,
    };
    let pose = generate_instance(&tree, &params, 0)?.true_pose;
    let j = analytic_jacobian(&tree, &pose)?;
    let fd = fd_jacobian(&tree, &pose, 1e-5)?;
    let dev = (j.matrix() - fd.matrix()).amax();
    println!("Jacobian {}x{}", j.matrix().nrows(), j.matrix().ncols());
    println!("max |analytic - fd| = {dev:.2e} m/rad");
    println!("zero outside ancestor blocks: {}", j.respects_sparsity(&tree));
    if let Some(path) = std::env::args().nth(1) {
        std::fs::write(&path, j.to_csv(&tree)).expect("write csv");
        println!("wrote {path}");
    }
    Ok(())
}
