use nalgebra::{Matrix3, SVD};

use super::{JointTargets, KinematicTree};
use crate::error::{Error, Result};
use crate::rotation::Rot3;

/// Root rotation that best aligns the rest directions of `child_joints`
/// (direct children of the root) with their target directions, in the
/// least-squares sense over SO(3).
pub fn solve_root_rotation(tree: &KinematicTree, targets: &JointTargets, child_joints: &[usize]) -> Result<Rot3> {
    targets.check_tree(tree)?;
    if child_joints.len() < 2 {
        return Err(Error::ShapeMismatch(format!(
            "root alignment needs at least two children, got {}",
            child_joints.len()
        )));
    }
    let p = targets.positions();
    let mut h = Matrix3::zeros();
    for &c in child_joints {
        if c >= tree.joint_count() || tree.parent(c) != Some(0) {
            return Err(Error::ShapeMismatch(format!("joint {c} is not a child of the root")));
        }
        let d = p[c] - p[0];
        if d.norm() < 1e-12 {
            return Err(Error::DegenerateProcrustes);
        }
        h += d.normalize() * tree.rest_offset(c).normalize().transpose();
    }
    let svd = SVD::new(h, true, true);
    let s = svd.singular_values;
    if s[0] <= 0.0 || s[1] < 1e-9 * s[0] {
        return Err(Error::DegenerateProcrustes);
    }
    let u = svd.u.unwrap();
    let v_t = svd.v_t.unwrap();
    let d = (u * v_t).determinant().signum();
    let r = u * Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, 1.0, d)) * v_t;
    Ok(Rot3::from_matrix_unchecked(r))
}

/// [`solve_root_rotation`] over every child of the root.
pub fn solve_root_rotation_all(tree: &KinematicTree, targets: &JointTargets) -> Result<Rot3> {
    solve_root_rotation(tree, targets, tree.children(0))
}
