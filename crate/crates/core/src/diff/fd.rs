use nalgebra::DMatrix;

use super::{check_trace, Layout, Seed, SolutionGradients};
use crate::error::{Error, Result};
use crate::kinematics::{JointTargets, KinematicTree, SwingTwistPose};
use crate::solver::{linearize, solve, SolveTrace, SolverConfig};

/// Re-run the iteration recorded in `trace` on (possibly different) inputs:
/// same count, same axes and frames, same step sizes.
pub fn replay(tree: &KinematicTree, trace: &SolveTrace, targets: &JointTargets) -> Result<Vec<f64>> {
    replay_with(tree, trace, targets, &trace.twist_angle)
}

fn replay_with(tree: &KinematicTree, trace: &SolveTrace, targets: &JointTargets, twist: &[f64]) -> Result<Vec<f64>> {
    targets.check_tree(tree)?;
    let mut alpha = trace.initial_alpha.clone();
    for rec in &trace.records {
        let pose = rec.pose_at(&alpha, twist, &trace.root_rotation);
        let lin = linearize(tree, &pose, targets, trace.sigma)?;
        for (a, d) in alpha.iter_mut().zip(lin.direction.iter()) {
            *a += rec.eta_used * d;
        }
    }
    Ok(alpha)
}

/// Central differences of the complete solve with respect to every input
/// coordinate. The iteration schedule of an unperturbed solve is held fixed.
pub fn fd_gradients(
    tree: &KinematicTree,
    pose0: &SwingTwistPose,
    targets: &JointTargets,
    config: &SolverConfig,
    h: f64,
) -> Result<SolutionGradients> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(h));
    }
    let (_, trace) = solve(tree, pose0, targets, config)?;
    fd_gradients_from_trace(tree, &trace, targets, config, h)
}

pub fn fd_gradients_from_trace(
    tree: &KinematicTree,
    trace: &SolveTrace,
    targets: &JointTargets,
    config: &SolverConfig,
    h: f64,
) -> Result<SolutionGradients> {
    fd_gradients_with(tree, trace, targets, config, h, Stencil::Central)
}

/// Finite-difference formula.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stencil {
    /// `(f(h) - f(-h)) / 2h`, error `O(h^2)`.
    Central,
    /// `(8 (f(h) - f(-h)) - (f(2h) - f(-2h))) / 12h`, error `O(h^4)`.
    Central4,
}

pub fn fd_gradients_with(
    tree: &KinematicTree,
    trace: &SolveTrace,
    targets: &JointTargets,
    config: &SolverConfig,
    h: f64,
    stencil: Stencil,
) -> Result<SolutionGradients> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidStep(h));
    }
    check_trace(tree, trace, config)?;
    let layout = Layout::of(tree);
    let mut out = DMatrix::zeros(layout.m, layout.len());
    for e in 0..layout.len() {
        let eval = |s: f64| -> Result<Vec<f64>> {
            match layout.seed(e) {
                Seed::P(j, k) => {
                    let mut p = targets.positions().to_vec();
                    p[j][k] += s;
                    let t = JointTargets::with_confidence(p, targets.confidence().to_vec())?;
                    replay(tree, trace, &t)
                }
                Seed::Phi(c) => {
                    let mut phi = trace.twist_angle.clone();
                    phi[c] += s;
                    replay_with(tree, trace, targets, &phi)
                }
                Seed::T(j, k) => {
                    let mut t = tree.rest_offsets().to_vec();
                    t[j][k] += s;
                    replay(&tree.with_rest_offsets(t)?, trace, targets)
                }
            }
        };
        let plus = eval(h)?;
        let minus = eval(-h)?;
        match stencil {
            Stencil::Central => {
                for c in 0..layout.m {
                    out[(c, e)] = (plus[c] - minus[c]) / (2.0 * h);
                }
            }
            Stencil::Central4 => {
                let plus2 = eval(2.0 * h)?;
                let minus2 = eval(-2.0 * h)?;
                for c in 0..layout.m {
                    out[(c, e)] = (8.0 * (plus[c] - minus[c]) - (plus2[c] - minus2[c])) / (12.0 * h);
                }
            }
        }
    }
    SolutionGradients::from_combined(&out, layout)
}
