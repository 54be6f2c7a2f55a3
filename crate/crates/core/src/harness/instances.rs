use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, StandardNormal};

use crate::error::{Error, Result};
use crate::kinematics::{forward_kinematics, solve_root_rotation_all, JointTargets, KinematicTree, SwingTwistPose};
use crate::rotation::{perpendicular, Rot3, Vec3};

/// Largest absolute ground-truth swing angle.
pub const ALPHA_RANGE: f64 = 0.8;

/// How synthetic instances are drawn.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InstanceParams {
    pub seed: u64,
    pub count: usize,
    /// Standard deviation of Gaussian noise added to every target coordinate (meters).
    pub noise_sigma: f64,
    /// Each bone length is scaled by a factor drawn from `[1 - p, 1 + p]`.
    pub bone_length_perturbation: f64,
}

/// A ground-truth pose and the targets it produces.
#[derive(Debug, Clone)]
pub struct Instance {
    pub index: usize,
    pub true_pose: SwingTwistPose,
    pub root_position: Vec3,
    /// Rest offsets used to produce the targets (perturbed bone lengths).
    pub target_offsets: Vec<Vec3>,
    pub targets: JointTargets,
}

impl Instance {
    /// Starting pose for a solve: true twists, root rotation aligned to the
    /// targets, zero swing.
    pub fn initial_pose(&self, tree: &KinematicTree) -> Result<SwingTwistPose> {
        let root = solve_root_rotation_all(tree, &self.targets)?;
        SwingTwistPose::rest(tree)
            .with_twist_angles(self.true_pose.twist_angle().to_vec())?
            .with_root_rotation(root)
    }
}

fn uniform_rotation(rng: &mut ChaCha8Rng) -> Rot3 {
    let q: [f64; 4] = std::array::from_fn(|_| StandardNormal.sample(rng));
    let q = nalgebra::Quaternion::new(q[0], q[1], q[2], q[3]);
    nalgebra::UnitQuaternion::from_quaternion(q).to_rotation_matrix()
}

/// Instance `index` of the stream selected by `params.seed`. Each instance
/// has its own random stream, so generation order does not matter.
pub fn generate_instance(tree: &KinematicTree, params: &InstanceParams, index: usize) -> Result<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(index as u64);
    let m = tree.internal_count();
    let alpha: Vec<f64> = (0..m).map(|_| rng.gen_range(-ALPHA_RANGE..=ALPHA_RANGE)).collect();
    let twist: Vec<f64> = (0..m)
        .map(|_| rng.gen_range(-std::f64::consts::PI..=std::f64::consts::PI))
        .collect();
    let axes: Vec<Vec3> = tree
        .internal_joints()
        .iter()
        .map(|&j| {
            let b = tree.bone_direction(j).unwrap();
            let e1 = perpendicular(&b);
            let e2 = b.cross(&e1);
            let psi: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
            e1 * psi.cos() + e2 * psi.sin()
        })
        .collect();
    let root = uniform_rotation(&mut rng);
    let root_position = Vec3::from_fn(|_, _| rng.gen_range(-1.0..1.0));
    let pose = SwingTwistPose::new(tree, alpha, axes, twist, root)?;

    let p = params.bone_length_perturbation;
    let offsets: Vec<Vec3> = tree
        .rest_offsets()
        .iter()
        .map(|t| if p > 0.0 { t * (1.0 + rng.gen_range(-p..=p)) } else { *t })
        .collect();
    let gen_tree = tree.with_rest_offsets(offsets.clone())?;
    let mut q = forward_kinematics(&gen_tree, &pose, &root_position)?;
    if params.noise_sigma > 0.0 {
        let noise = Normal::new(0.0, params.noise_sigma)
            .map_err(|e| Error::InvalidConfig(format!("noise: {e}")))?;
        for v in q.iter_mut() {
            for k in 0..3 {
                v[k] += noise.sample(&mut rng);
            }
        }
    }
    Ok(Instance {
        index,
        true_pose: pose,
        root_position,
        target_offsets: offsets,
        targets: JointTargets::new(q)?,
    })
}

pub fn generate_instances(tree: &KinematicTree, params: &InstanceParams) -> Result<Vec<Instance>> {
    if params.count == 0 {
        return Err(Error::InvalidConfig("instance count must be at least 1".into()));
    }
    if !(params.noise_sigma >= 0.0 && params.noise_sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("noise must be >= 0, got {}", params.noise_sigma)));
    }
    if !(0.0..1.0).contains(&params.bone_length_perturbation) {
        return Err(Error::InvalidConfig(format!(
            "bone length perturbation must lie in [0, 1), got {}",
            params.bone_length_perturbation
        )));
    }
    (0..params.count).map(|i| generate_instance(tree, params, i)).collect()
}
