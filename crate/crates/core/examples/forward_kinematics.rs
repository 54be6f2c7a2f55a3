//! Pose the bundled skeleton and print joint positions.

use gn_ik::io::bundled_skeleton;
use gn_ik::kinematics::{forward_kinematics, SwingTwistPose};
use gn_ik::rotation::Vec3;

fn main() -> gn_ik::Result<()> {
    let tree = bundled_skeleton();
    let m = tree.internal_count();
    println!("{} joints, {} with a swing-twist parameterization", tree.joint_count(), m);

    // Bend every internal joint by 0.3 rad about an axis perpendicular to its bone.
    let rest = SwingTwistPose::rest(&tree);
    let angles = vec![0.3; m];
    let pose = rest.with_swing_angles(angles)?;
    let twisted = pose.with_twist_angles(vec![1.0; m])?;

    let root = Vec3::new(0.0, 0.9, 0.0);
    let q = forward_kinematics(&tree, &pose, &root)?;
    let qt = forward_kinematics(&tree, &twisted, &root)?;
    for j in 0..tree.joint_count() {
        println!(
            "{:>15}  {:>7.3} {:>7.3} {:>7.3}   twisted {:>7.3} {:>7.3} {:>7.3}",
            tree.name(j),
            q[j].x,
            q[j].y,
            q[j].z,
            qt[j].x,
            qt[j].y,
            qt[j].z
        );
    }

    // A twist spins the subtree about the bone, so the designated child stays put.
    let knee = tree.names().iter().position(|n| n == "left_knee").unwrap();
    let ankle = tree.designated_child(knee).unwrap();
    let only_knee = pose.with_twist_angles(
        (0..m).map(|c| if tree.internal_joints()[c] == knee { 1.2 } else { 0.0 }).collect(),
    )?;
    let moved = forward_kinematics(&tree, &only_knee, &root)?;
    println!("ankle shift under a knee twist: {:.2e} m", (moved[ankle] - q[ankle]).norm());
    Ok(())
}
