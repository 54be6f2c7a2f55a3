use super::{KinematicTree, SwingTwistPose};
use crate::error::{Error, Result};
use crate::rotation::{rodrigues_unchecked, Rot3, Vec3};

/// Rotation by `phi` about the rest bone direction of `joint`.
pub fn twist_rotation(tree: &KinematicTree, joint: usize, phi: f64) -> Result<Rot3> {
    if joint >= tree.joint_count() {
        return Err(Error::ShapeMismatch(format!("joint {joint} out of range")));
    }
    let b = tree.bone_direction(joint).ok_or(Error::NoTwistAxis { joint })?;
    Ok(rodrigues_unchecked(&b, phi))
}

/// Swing rotation of tree joint `joint`, including its frame.
pub fn swing_rotation(tree: &KinematicTree, pose: &SwingTwistPose, joint: usize) -> Result<Rot3> {
    pose.check_tree(tree)?;
    let c = internal(tree, joint)?;
    Ok(rodrigues_unchecked(&pose.swing_axis()[c], pose.swing_angle()[c]) * pose.swing_frame()[c])
}

/// Local rotation `swing * twist` of `joint`; identity for the root-relative
/// rotation of leaves. The root's local rotation is the pose root rotation.
pub fn local_rotation(tree: &KinematicTree, pose: &SwingTwistPose, joint: usize) -> Result<Rot3> {
    pose.check_tree(tree)?;
    if joint == 0 {
        return Ok(*pose.root_rotation());
    }
    match tree.internal_index(joint) {
        Some(c) => Ok(swing_rotation(tree, pose, joint)? * twist_rotation(tree, joint, pose.twist_angle()[c])?),
        None if joint < tree.joint_count() => Ok(Rot3::identity()),
        None => Err(Error::ShapeMismatch(format!("joint {joint} out of range"))),
    }
}

fn internal(tree: &KinematicTree, joint: usize) -> Result<usize> {
    if joint >= tree.joint_count() {
        return Err(Error::ShapeMismatch(format!("joint {joint} out of range")));
    }
    tree.internal_index(joint)
        .ok_or_else(|| Error::ShapeMismatch(format!("joint {joint} carries no swing parameter")))
}

/// Everything one forward pass produces, kept for Jacobians and tangents.
#[derive(Debug, Clone)]
pub struct FkState {
    /// Global rotation per joint.
    pub global: Vec<Rot3>,
    /// World position per joint.
    pub position: Vec<Vec3>,
    /// Swing (with frame) per internal joint.
    pub swing: Vec<Rot3>,
    /// Twist per internal joint.
    pub twist: Vec<Rot3>,
}

impl FkState {
    /// World-frame swing axis of internal column `c` (tree joint `joint`).
    pub fn world_axis(&self, tree: &KinematicTree, pose: &SwingTwistPose, c: usize, joint: usize) -> Vec3 {
        self.global[tree.parent(joint).unwrap()] * pose.swing_axis()[c]
    }
}

pub fn fk_state(tree: &KinematicTree, pose: &SwingTwistPose, root_position: &Vec3) -> Result<FkState> {
    pose.check_tree(tree)?;
    Ok(fk_state_unchecked(tree, pose, root_position))
}

pub(crate) fn fk_state_unchecked(tree: &KinematicTree, pose: &SwingTwistPose, root_position: &Vec3) -> FkState {
    let n = tree.joint_count();
    let m = tree.internal_count();
    let mut global = Vec::with_capacity(n);
    let mut position = Vec::with_capacity(n);
    let mut swing = Vec::with_capacity(m);
    let mut twist = Vec::with_capacity(m);
    global.push(*pose.root_rotation());
    position.push(*root_position);
    for i in 1..n {
        let p = tree.parent(i).unwrap();
        position.push(position[p] + global[p] * tree.rest_offset(i));
        match tree.internal_index(i) {
            Some(c) => {
                let s = rodrigues_unchecked(&pose.swing_axis()[c], pose.swing_angle()[c]) * pose.swing_frame()[c];
                let b = tree.bone_direction(i).unwrap();
                let t = rodrigues_unchecked(&b, pose.twist_angle()[c]);
                global.push(global[p] * s * t);
                swing.push(s);
                twist.push(t);
            }
            None => global.push(global[p]),
        }
    }
    FkState {
        global,
        position,
        swing,
        twist,
    }
}

/// Global rotation of every joint: `R_i = R_parent * local_i`.
pub fn global_rotations(tree: &KinematicTree, pose: &SwingTwistPose) -> Result<Vec<Rot3>> {
    Ok(fk_state(tree, pose, &Vec3::zeros())?.global)
}

/// Joint positions `q_i = q_parent + R_parent * rest_offset_i`, root at `root_position`.
pub fn forward_kinematics(tree: &KinematicTree, pose: &SwingTwistPose, root_position: &Vec3) -> Result<Vec<Vec3>> {
    Ok(fk_state(tree, pose, root_position)?.position)
}
