#![allow(dead_code)]

use gn_ik::harness::{generate_instance, Instance, InstanceParams};
use gn_ik::io::bundled_skeleton;
use gn_ik::kinematics::KinematicTree;
use gn_ik::rotation::{Rot3, Vec3};
use nalgebra::{UnitQuaternion, Vector3};

pub fn skeleton() -> KinematicTree {
    bundled_skeleton()
}

/// Straight chain of `n` joints along +x with unit bones.
pub fn chain(n: usize) -> KinematicTree {
    let parent = (0..n).map(|i| i.checked_sub(1)).collect();
    let offsets = vec![Vec3::x(); n];
    let names = (0..n).map(|i| format!("j{i}")).collect();
    KinematicTree::new(parent, offsets, names).unwrap()
}

pub fn instance(seed: u64, index: usize, noise: f64, perturb: f64) -> Instance {
    let params = InstanceParams {
        seed,
        count: index + 1,
        noise_sigma: noise,
        bone_length_perturbation: perturb,
    };
    generate_instance(&skeleton(), &params, index).unwrap()
}

pub fn rotation(v: [f64; 3]) -> Rot3 {
    UnitQuaternion::from_scaled_axis(Vector3::from(v)).to_rotation_matrix()
}

pub fn max_abs_diff(a: &[Vec3], b: &[Vec3]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).amax()).fold(0.0, f64::max)
}
