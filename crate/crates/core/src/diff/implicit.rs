use nalgebra::{Cholesky, DMatrix, DVector};

use super::{direction_rhs, Layout, SolutionGradients};
use crate::error::{Error, Result};
use crate::kinematics::{JointTargets, KinematicTree, SwingTwistPose};
use crate::solver::{linearize, SolverConfig};

/// Largest `|J~^T r~|_inf` accepted as a fixed point.
pub const STATIONARITY_TOL: f64 = 1e-6;

/// Gradients from differentiating the stationarity condition `J~^T r~ = 0`
/// at `pose_star`, with `J~^T J~` standing in for the Hessian.
///
/// Fails with [`Error::NotConverged`] unless `pose_star` is stationary.
pub fn implicit_gradients(
    tree: &KinematicTree,
    pose_star: &SwingTwistPose,
    targets: &JointTargets,
    config: &SolverConfig,
) -> Result<SolutionGradients> {
    let (g, stationarity) = implicit_gradients_unchecked(tree, pose_star, targets, config)?;
    if !(stationarity < STATIONARITY_TOL) {
        return Err(Error::NotConverged { stationarity });
    }
    Ok(g)
}

/// Same formula evaluated anywhere; also returns `|J~^T r~|_inf` there.
pub fn implicit_gradients_unchecked(
    tree: &KinematicTree,
    pose_star: &SwingTwistPose,
    targets: &JointTargets,
    config: &SolverConfig,
) -> Result<(SolutionGradients, f64)> {
    config.validate()?;
    pose_star.check_tree(tree)?;
    targets.check_tree(tree)?;
    let layout = Layout::of(tree);
    let lin = linearize(tree, pose_star, targets, config.damping_sigma)?;
    let stationarity = lin.jw.tr_mul(&lin.rw).amax();
    let a = lin.jw.tr_mul(&lin.jw);
    let chol = Cholesky::new(a).ok_or_else(|| Error::Numerical("J^T J is singular at the solution".into()))?;
    let zeros = DMatrix::zeros(layout.m, layout.len());
    let rhs = direction_rhs(tree, pose_star, &lin, targets, &zeros, &DVector::zeros(layout.m), &lin.rw);
    Ok((SolutionGradients::from_combined(&chol.solve(&rhs), layout)?, stationarity))
}
