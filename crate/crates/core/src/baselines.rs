//! Top-down analytical IK used as a comparison baseline.

use crate::error::{Error, Result};
use crate::kinematics::{solve_root_rotation_all, JointTargets, KinematicTree, SwingTwistPose};
use crate::rotation::{minimal_rotation, perpendicular, rodrigues_unchecked, Rot3, Vec3};

/// Walk the tree root to leaf, swinging each internal joint's bone onto the
/// direction from its *reconstructed* position to its child's target.
///
/// The root rotation comes from [`solve_root_rotation_all`] when the root has
/// at least two children, identity otherwise. Exact whenever target bone
/// lengths equal rest bone lengths.
pub fn hybrik_analytical_ik(tree: &KinematicTree, twist_angles: &[f64], targets: &JointTargets) -> Result<SwingTwistPose> {
    targets.check_tree(tree)?;
    let m = tree.internal_count();
    if twist_angles.len() != m {
        return Err(Error::ShapeMismatch(format!(
            "{} twist angles for {} internal joints",
            twist_angles.len(),
            m
        )));
    }
    let p = targets.positions();
    for i in 1..tree.joint_count() {
        if (p[i] - p[tree.parent(i).unwrap()]).norm() == 0.0 {
            return Err(Error::DegenerateBone { joint: i });
        }
    }
    let root = if tree.children(0).len() >= 2 {
        solve_root_rotation_all(tree, targets)?
    } else {
        Rot3::identity()
    };

    let n = tree.joint_count();
    let mut global = vec![root; n];
    let mut q = vec![p[0]; n];
    let mut axes = Vec::with_capacity(m);
    let mut angles = Vec::with_capacity(m);
    for i in 1..n {
        let par = tree.parent(i).unwrap();
        q[i] = q[par] + global[par] * tree.rest_offset(i);
        let Some(c) = tree.internal_index(i) else {
            global[i] = global[par];
            continue;
        };
        let ch = tree.designated_child(i).unwrap();
        let b = tree.bone_direction(i).unwrap();
        let to_child = global[par].inverse() * (p[ch] - q[i]);
        if to_child.norm() == 0.0 {
            return Err(Error::DegenerateBone { joint: ch });
        }
        let d = to_child.normalize();
        let (axis, angle) = match minimal_rotation(&b, &d) {
            Some(r) => r,
            None if b.dot(&d) > 0.0 => (perpendicular(&b), 0.0),
            None => (perpendicular(&b), std::f64::consts::PI),
        };
        let swing = rodrigues_unchecked(&axis, angle);
        global[i] = global[par] * swing * rodrigues_unchecked(&b, twist_angles[c]);
        axes.push(axis);
        angles.push(angle);
    }
    Ok(SwingTwistPose::from_parts(
        angles,
        axes,
        vec![Rot3::identity(); m],
        twist_angles.to_vec(),
        root,
    ))
}

/// Forward kinematics of the analytical solution with the root at its target.
pub fn hybrik_positions(tree: &KinematicTree, twist_angles: &[f64], targets: &JointTargets) -> Result<Vec<Vec3>> {
    let pose = hybrik_analytical_ik(tree, twist_angles, targets)?;
    crate::kinematics::forward_kinematics(tree, &pose, &targets.positions()[0])
}
