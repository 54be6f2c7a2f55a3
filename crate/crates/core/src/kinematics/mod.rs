//! Kinematic tree, swing-twist pose and forward kinematics.

mod fk;
mod pose;
mod refresh;
mod root;
mod tree;

pub use fk::{fk_state, forward_kinematics, global_rotations, local_rotation, swing_rotation, twist_rotation, FkState};
pub use pose::{JointTargets, ShapeParams, SwingTwistPose, PARALLEL_TOL};
pub use refresh::{refresh_swing_axes, REFRESH_DEGENERATE_TOL};
pub use root::{solve_root_rotation, solve_root_rotation_all};
pub use tree::KinematicTree;

pub(crate) use fk::fk_state_unchecked;
