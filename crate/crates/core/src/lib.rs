//! Damped Gauss-Newton inverse kinematics on a swing-twist kinematic tree,
//! differentiable with respect to targets, twist angles and rest pose.

pub mod baselines;
pub mod diff;
pub mod error;
pub mod io;
pub mod jacobian;
pub mod kinematics;
pub mod losses;
pub mod rotation;
pub mod solver;

pub use error::{Error, Result};
pub mod harness;
