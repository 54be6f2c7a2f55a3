use super::{fk::fk_state, JointTargets, KinematicTree, SwingTwistPose};
use crate::error::Result;
use crate::rotation::{rodrigues_unchecked, Vec3};

/// Below this cross-product norm a joint keeps its previous axis.
pub const REFRESH_DEGENERATE_TOL: f64 = 1e-8;

/// Re-aim every swing axis at the current target and restart its angle at 0.
///
/// The current swing is folded into the joint's frame first, so the returned
/// pose has the same forward kinematics as `pose`. For internal joint `i` with
/// designated child `ch`, `d_rest` is the world direction of the bone as
/// currently posed and `d_tgt` points from the current position of `i` to the
/// target of `ch`; the new parent-frame axis is `normalize(d_rest x d_tgt)`.
pub fn refresh_swing_axes(tree: &KinematicTree, pose: &SwingTwistPose, targets: &JointTargets) -> Result<SwingTwistPose> {
    targets.check_tree(tree)?;
    let st = fk_state(tree, pose, &targets.positions()[0])?;
    let m = tree.internal_count();
    let mut axes = Vec::with_capacity(m);
    let mut frames = Vec::with_capacity(m);
    for (c, &i) in tree.internal_joints().iter().enumerate() {
        let p = tree.parent(i).unwrap();
        let ch = tree.designated_child(i).unwrap();
        frames.push(rodrigues_unchecked(&pose.swing_axis()[c], pose.swing_angle()[c]) * pose.swing_frame()[c]);
        let d_rest = (st.position[ch] - st.position[i]).normalize();
        let to_target = targets.positions()[ch] - st.position[i];
        let cross = if to_target.norm() > 0.0 {
            d_rest.cross(&to_target.normalize())
        } else {
            Vec3::zeros()
        };
        axes.push(if cross.norm() < REFRESH_DEGENERATE_TOL {
            pose.swing_axis()[c]
        } else {
            st.global[p].inverse() * cross.normalize()
        });
    }
    Ok(SwingTwistPose::from_parts(
        vec![0.0; m],
        axes,
        frames,
        pose.twist_angle().to_vec(),
        *pose.root_rotation(),
    ))
}
