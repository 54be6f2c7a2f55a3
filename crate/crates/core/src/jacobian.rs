//! Derivative of joint positions with respect to swing angles.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::kinematics::{fk_state, forward_kinematics, FkState, KinematicTree, SwingTwistPose};
use crate::rotation::Vec3;

/// `(3 * joints) x internal_joints` matrix; row block `r` is joint `r`,
/// column `c` is internal joint `c`. Units: meters per radian.
#[derive(Debug, Clone, PartialEq)]
pub struct FKJacobian {
    matrix: DMatrix<f64>,
}

impl FKJacobian {
    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite Jacobian entry".into()));
        }
        Ok(Self { matrix })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// True when every entry outside the ancestor pattern is exactly zero.
    pub fn respects_sparsity(&self, tree: &KinematicTree) -> bool {
        for r in 0..tree.joint_count() {
            for (c, &j) in tree.internal_joints().iter().enumerate() {
                if tree.is_ancestor_or_self(j, r) {
                    continue;
                }
                if (0..3).any(|k| self.matrix[(3 * r + k, c)] != 0.0) {
                    return false;
                }
            }
        }
        true
    }

    /// CSV with one labeled row per joint coordinate and one column per internal joint.
    pub fn to_csv(&self, tree: &KinematicTree) -> String {
        let mut out = String::from("row");
        for &j in tree.internal_joints() {
            out.push_str(&format!(",swing_{}", tree.name(j)));
        }
        out.push('\n');
        for r in 0..self.matrix.nrows() {
            out.push_str(&format!("{}.{}", tree.name(r / 3), ["x", "y", "z"][r % 3]));
            for c in 0..self.matrix.ncols() {
                out.push_str(&format!(",{:e}", self.matrix[(r, c)]));
            }
            out.push('\n');
        }
        out
    }
}

/// Column `c` holds `omega_c x (q_d - q_c)` for every strict descendant `d`
/// of internal joint `c`, where `omega_c` is the swing axis in world frame.
pub fn analytic_jacobian(tree: &KinematicTree, pose: &SwingTwistPose) -> Result<FKJacobian> {
    let st = fk_state(tree, pose, &Vec3::zeros())?;
    FKJacobian::from_matrix(jacobian_from_state(tree, pose, &st))
}

pub(crate) fn jacobian_from_state(tree: &KinematicTree, pose: &SwingTwistPose, st: &FkState) -> DMatrix<f64> {
    let mut j = DMatrix::zeros(3 * tree.joint_count(), tree.internal_count());
    let mut last = usize::MAX;
    let mut omega = Vec3::zeros();
    for &(c, i, d) in tree.influence_pairs() {
        if c != last {
            omega = st.world_axis(tree, pose, c, i);
            last = c;
        }
        let col = omega.cross(&(st.position[d] - st.position[i]));
        j.fixed_view_mut::<3, 1>(3 * d, c).copy_from(&col);
    }
    j
}

/// Central differences of forward kinematics in each swing angle, axes frozen.
pub fn fd_jacobian(tree: &KinematicTree, pose: &SwingTwistPose, step: f64) -> Result<FKJacobian> {
    if !(step > 0.0 && step.is_finite()) {
        return Err(Error::InvalidStep(step));
    }
    pose.check_tree(tree)?;
    let n = tree.joint_count();
    let m = tree.internal_count();
    let mut j = DMatrix::zeros(3 * n, m);
    for c in 0..m {
        let mut plus = pose.swing_angle().to_vec();
        let mut minus = plus.clone();
        plus[c] += step;
        minus[c] -= step;
        let qp = forward_kinematics(tree, &pose.with_swing_angles(plus)?, &Vec3::zeros())?;
        let qm = forward_kinematics(tree, &pose.with_swing_angles(minus)?, &Vec3::zeros())?;
        for r in 0..n {
            let d = (qp[r] - qm[r]) / (2.0 * step);
            j.fixed_view_mut::<3, 1>(3 * r, c).copy_from(&d);
        }
    }
    FKJacobian::from_matrix(j)
}

/// Stack per-joint vectors into a `3n` column.
pub fn stack(v: &[Vec3]) -> nalgebra::DVector<f64> {
    nalgebra::DVector::from_iterator(3 * v.len(), v.iter().flat_map(|p| [p.x, p.y, p.z]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rotation::Rot3;

    #[test]
    fn single_joint_about_z_gives_y_column() {
        let tree = KinematicTree::new(
            vec![None, Some(0), Some(1)],
            vec![Vec3::zeros(), Vec3::y(), Vec3::x()],
            vec!["r".into(), "j".into(), "tip".into()],
        )
        .unwrap();
        let pose = SwingTwistPose::new(&tree, vec![0.0], vec![Vec3::z()], vec![0.0], Rot3::identity()).unwrap();
        let j = analytic_jacobian(&tree, &pose).unwrap();
        assert_eq!(j.matrix().fixed_view::<3, 1>(6, 0).into_owned(), Vec3::y());
        assert!(j.matrix().rows(0, 6).iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_bad_step() {
        let tree = crate::io::bundled_skeleton();
        let pose = SwingTwistPose::rest(&tree);
        assert!(matches!(fd_jacobian(&tree, &pose, 0.0), Err(Error::InvalidStep(_))));
        assert!(matches!(fd_jacobian(&tree, &pose, -1e-5), Err(Error::InvalidStep(_))));
    }
}
