//! Damped Gauss-Newton over swing angles.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use serde::{Deserialize, Serialize};

use crate::baselines::hybrik_analytical_ik;
use crate::error::{Error, Result};
use crate::jacobian::{jacobian_from_state, FKJacobian};
use crate::kinematics::{fk_state_unchecked, refresh_swing_axes, FkState, JointTargets, KinematicTree, SwingTwistPose};
use crate::rotation::{serde_rows, Rot3, Vec3};

/// Maximum number of step halvings tried by the line search.
pub const MAX_HALVINGS: usize = 8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub max_iters: usize,
    pub damping_sigma: f64,
    pub step_eta: f64,
    /// Backtracking on the residual norm, halving up to [`MAX_HALVINGS`] times.
    pub line_search: bool,
    /// Stop once the residual norm before a step is at or below this (meters).
    pub residual_tol: f64,
    /// Stop once the step norm is at or below this (radians).
    pub direction_tol: f64,
    /// Starting swing angles; zeros when absent.
    pub init_alpha: Option<Vec<f64>>,
    /// Aim the swing axes at the targets once, before the first iteration.
    pub seed_axes: bool,
    /// Re-aim the axes (and fold the accumulated swing into the frame) before every linearization.
    pub refresh_axes_each_iter: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_iters: 5,
            damping_sigma: 1e-4,
            step_eta: 1.0,
            line_search: false,
            residual_tol: 1e-10,
            direction_tol: 1e-12,
            init_alpha: None,
            seed_axes: true,
            refresh_axes_each_iter: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.max_iters < 1 {
            return bad("max_iters must be at least 1".into());
        }
        if !(self.damping_sigma > 0.0 && self.damping_sigma.is_finite()) {
            return bad(format!("damping_sigma must be positive, got {}", self.damping_sigma));
        }
        if !(self.step_eta > 0.0 && self.step_eta <= 1.0) {
            return bad(format!("step_eta must lie in (0, 1], got {}", self.step_eta));
        }
        if !(self.residual_tol >= 0.0 && self.direction_tol >= 0.0) {
            return bad("tolerances must be non-negative".into());
        }
        if let Some(a) = &self.init_alpha {
            if !a.iter().all(|v| v.is_finite()) {
                return bad("init_alpha has non-finite entries".into());
            }
        }
        Ok(())
    }

    fn check_tree(&self, tree: &KinematicTree) -> Result<()> {
        self.validate()?;
        match &self.init_alpha {
            Some(a) if a.len() != tree.internal_count() => Err(Error::ShapeMismatch(format!(
                "init_alpha has {} entries, tree has {} internal joints",
                a.len(),
                tree.internal_count()
            ))),
            _ => Ok(()),
        }
    }
}

/// State of one iteration, taken at its linearization point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Accumulated swing angles where the iteration linearized.
    pub alpha: Vec<f64>,
    /// Part of `alpha` already folded into `swing_frames`.
    pub angle_offset: Vec<f64>,
    pub residual_norm: f64,
    pub direction: Vec<f64>,
    pub direction_norm: f64,
    pub eta_used: f64,
    pub swing_axes: Vec<Vec3>,
    #[serde(with = "serde_rows::vec")]
    pub swing_frames: Vec<Rot3>,
}

impl IterationRecord {
    /// The pose this iteration linearized at, with the given twist and root.
    pub(crate) fn pose_at(&self, alpha: &[f64], twist: &[f64], root: &Rot3) -> SwingTwistPose {
        SwingTwistPose::from_parts(
            alpha.iter().zip(&self.angle_offset).map(|(a, o)| a - o).collect(),
            self.swing_axes.clone(),
            self.swing_frames.clone(),
            twist.to_vec(),
            *root,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    ResidualTolerance,
    DirectionTolerance,
    MaxIterations,
    /// The line search found no decrease after every halving.
    Stalled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveTrace {
    pub records: Vec<IterationRecord>,
    pub initial_alpha: Vec<f64>,
    pub alpha_star: Vec<f64>,
    pub converged: bool,
    pub stop_reason: StopReason,
    pub iterations_used: usize,
    pub final_residual_norm: f64,
    pub sigma: f64,
    pub twist_angle: Vec<f64>,
    #[serde(with = "serde_rows")]
    pub root_rotation: Rot3,
}

impl SolveTrace {
    /// Pose at `alpha_star`, in the structure of the last iteration.
    pub fn final_pose(&self) -> SwingTwistPose {
        self.records
            .last()
            .expect("a solve runs at least one iteration")
            .pose_at(&self.alpha_star, &self.twist_angle, &self.root_rotation)
    }

    /// Residual norm before each iteration followed by the final one.
    pub fn residual_curve(&self) -> Vec<f64> {
        let mut c: Vec<f64> = self.records.iter().map(|r| r.residual_norm).collect();
        c.push(self.final_residual_norm);
        c
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("iteration,residual_norm,direction_norm,eta_used\n");
        for (k, r) in self.records.iter().enumerate() {
            s.push_str(&format!("{},{:e},{:e},{}\n", k + 1, r.residual_norm, r.direction_norm, r.eta_used));
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Confidence-weighted residuals `c_j (P_j - q_j)` and the norm of their stack.
/// The root is placed at its target.
pub fn residual(tree: &KinematicTree, pose: &SwingTwistPose, targets: &JointTargets) -> Result<(Vec<Vec3>, f64)> {
    pose.check_tree(tree)?;
    targets.check_tree(tree)?;
    let st = fk_state_unchecked(tree, pose, &targets.positions()[0]);
    let r = weighted_residual(&st, targets);
    let norm = r.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
    Ok((r, norm))
}

fn weighted_residual(st: &FkState, targets: &JointTargets) -> Vec<Vec3> {
    targets
        .positions()
        .iter()
        .zip(&st.position)
        .zip(targets.confidence())
        .map(|((p, q), c)| (p - q) * *c)
        .collect()
}

/// `(J^T J + sigma I)^{-1} J^T deltaP`, the minimizer of
/// `|J d - deltaP|^2 + sigma |d|^2`.
pub fn gn_direction(j: &FKJacobian, delta_p: &DVector<f64>, sigma: f64) -> Result<DVector<f64>> {
    direction(j.matrix(), delta_p, sigma).map(|(d, _)| d)
}

pub(crate) fn direction(
    j: &DMatrix<f64>,
    delta_p: &DVector<f64>,
    sigma: f64,
) -> Result<(DVector<f64>, Cholesky<f64, Dyn>)> {
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::InvalidConfig(format!("damping must be positive, got {sigma}")));
    }
    if j.nrows() != delta_p.len() {
        return Err(Error::ShapeMismatch(format!(
            "Jacobian has {} rows, residual has {}",
            j.nrows(),
            delta_p.len()
        )));
    }
    if !j.iter().chain(delta_p.iter()).all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite Jacobian or residual".into()));
    }
    let mut m = j.transpose() * j;
    for i in 0..m.nrows() {
        m[(i, i)] += sigma;
    }
    let chol = Cholesky::new(m).ok_or_else(|| Error::Numerical("normal equations not positive definite".into()))?;
    let d = chol.solve(&(j.transpose() * delta_p));
    if !d.iter().all(|v| v.is_finite()) {
        return Err(Error::Numerical("non-finite direction".into()));
    }
    Ok((d, chol))
}

/// Everything computed at one linearization point.
pub(crate) struct Linearization {
    pub state: FkState,
    /// Confidence-weighted Jacobian.
    pub jw: DMatrix<f64>,
    /// Confidence-weighted stacked residual.
    pub rw: DVector<f64>,
    pub chol: Cholesky<f64, Dyn>,
    pub direction: DVector<f64>,
}

pub(crate) fn linearize(
    tree: &KinematicTree,
    pose: &SwingTwistPose,
    targets: &JointTargets,
    sigma: f64,
) -> Result<Linearization> {
    let state = fk_state_unchecked(tree, pose, &targets.positions()[0]);
    let mut jw = jacobian_from_state(tree, pose, &state);
    for (r, c) in targets.confidence().iter().enumerate() {
        if *c != 1.0 {
            jw.rows_mut(3 * r, 3).scale_mut(*c);
        }
    }
    let rw = crate::jacobian::stack(&weighted_residual(&state, targets));
    let (direction, chol) = direction(&jw, &rw, sigma)?;
    Ok(Linearization {
        state,
        jw,
        rw,
        chol,
        direction,
    })
}

fn residual_norm_at(tree: &KinematicTree, pose: &SwingTwistPose, targets: &JointTargets) -> f64 {
    let st = fk_state_unchecked(tree, pose, &targets.positions()[0]);
    weighted_residual(&st, targets).iter().map(|v| v.norm_squared()).sum::<f64>().sqrt()
}

struct Step {
    pose: SwingTwistPose,
    record: IterationRecord,
    /// Angles folded into the frames by an axis refresh.
    baked: Option<Vec<f64>>,
    stalled: bool,
}

fn step(tree: &KinematicTree, pose: &SwingTwistPose, targets: &JointTargets, config: &SolverConfig) -> Result<Step> {
    let (lin_pose, baked) = if config.refresh_axes_each_iter {
        (refresh_swing_axes(tree, pose, targets)?, Some(pose.swing_angle().to_vec()))
    } else {
        (pose.clone(), None)
    };
    let lin = linearize(tree, &lin_pose, targets, config.damping_sigma)?;
    let r0 = lin.rw.norm();
    let alpha = lin_pose.swing_angle();
    let moved = |eta: f64| {
        let a: Vec<f64> = alpha.iter().zip(lin.direction.iter()).map(|(a, d)| a + eta * d).collect();
        lin_pose.with_swing_angles(a)
    };
    let mut eta = config.step_eta;
    let mut stalled = false;
    let mut next = moved(eta)?;
    if config.line_search {
        let mut halvings = 0;
        while residual_norm_at(tree, &next, targets) > r0 {
            if halvings == MAX_HALVINGS {
                eta = 0.0;
                stalled = true;
                next = lin_pose.clone();
                break;
            }
            eta *= 0.5;
            halvings += 1;
            next = moved(eta)?;
        }
    }
    let record = IterationRecord {
        alpha: alpha.to_vec(),
        angle_offset: vec![0.0; alpha.len()],
        residual_norm: r0,
        direction: lin.direction.iter().copied().collect(),
        direction_norm: lin.direction.norm(),
        eta_used: eta,
        swing_axes: lin_pose.swing_axis().to_vec(),
        swing_frames: lin_pose.swing_frame().to_vec(),
    };
    Ok(Step {
        pose: next,
        record,
        baked,
        stalled,
    })
}

/// One linearize, solve, (line search), update cycle. The record's `alpha`
/// is relative to the returned frames; `angle_offset` holds whatever an axis
/// refresh folded into them.
pub fn gn_step(
    tree: &KinematicTree,
    pose: &SwingTwistPose,
    targets: &JointTargets,
    config: &SolverConfig,
) -> Result<(SwingTwistPose, IterationRecord)> {
    config.validate()?;
    pose.check_tree(tree)?;
    targets.check_tree(tree)?;
    let mut s = step(tree, pose, targets, config)?;
    if let Some(b) = s.baked {
        s.record.angle_offset = b;
    }
    Ok((s.pose, s.record))
}

/// Replace each swing axis by the direction a top-down analytical pass
/// would swing about, keeping the angles and dropping any frames. An axis is
/// negated where the starting angle is negative so that the analytical
/// solution lies on the same side as the start.
pub fn seed_swing_axes(tree: &KinematicTree, pose: &SwingTwistPose, targets: &JointTargets) -> Result<SwingTwistPose> {
    pose.check_tree(tree)?;
    let analytic = hybrik_analytical_ik(tree, pose.twist_angle(), targets)?;
    let axes = analytic
        .swing_axis()
        .iter()
        .zip(pose.swing_angle())
        .map(|(a, &alpha)| if alpha < 0.0 { -a } else { *a })
        .collect();
    Ok(SwingTwistPose::from_parts(
        pose.swing_angle().to_vec(),
        axes,
        vec![Rot3::identity(); pose.len()],
        pose.twist_angle().to_vec(),
        *pose.root_rotation(),
    ))
}

/// Iterate [`gn_step`] until a tolerance fires or `max_iters` is reached.
///
/// `pose0` supplies the twist angles, root rotation and (unless seeding is
/// on) the swing axes; its swing angles are replaced by `init_alpha`.
pub fn solve(
    tree: &KinematicTree,
    pose0: &SwingTwistPose,
    targets: &JointTargets,
    config: &SolverConfig,
) -> Result<(Vec<f64>, SolveTrace)> {
    config.check_tree(tree)?;
    pose0.check_tree(tree)?;
    targets.check_tree(tree)?;
    let m = tree.internal_count();
    let alpha0 = config.init_alpha.clone().unwrap_or_else(|| vec![0.0; m]);
    let mut pose = pose0.with_swing_angles(alpha0.clone())?;
    if config.seed_axes && residual_norm_at(tree, &pose, targets) > config.residual_tol {
        pose = seed_swing_axes(tree, &pose, targets)?;
    }

    let mut offset = vec![0.0; m];
    let mut records = Vec::with_capacity(config.max_iters);
    let mut stop_reason = StopReason::MaxIterations;
    for _ in 0..config.max_iters {
        let s = step(tree, &pose, targets, config)?;
        let mut record = s.record;
        if let Some(b) = &s.baked {
            offset.iter_mut().zip(b).for_each(|(o, b)| *o += b);
        }
        record.alpha.iter_mut().zip(&offset).for_each(|(a, o)| *a += o);
        record.angle_offset = offset.clone();
        let reason = if s.stalled {
            Some(StopReason::Stalled)
        } else if record.residual_norm <= config.residual_tol {
            Some(StopReason::ResidualTolerance)
        } else if record.direction_norm <= config.direction_tol {
            Some(StopReason::DirectionTolerance)
        } else {
            None
        };
        records.push(record);
        pose = s.pose;
        if let Some(r) = reason {
            stop_reason = r;
            break;
        }
    }

    let alpha_star: Vec<f64> = pose.swing_angle().iter().zip(&offset).map(|(a, o)| a + o).collect();
    let final_residual_norm = residual_norm_at(tree, &pose, targets);
    let converged = matches!(stop_reason, StopReason::ResidualTolerance | StopReason::DirectionTolerance)
        || final_residual_norm <= config.residual_tol;
    let trace = SolveTrace {
        iterations_used: records.len(),
        records,
        initial_alpha: alpha0,
        alpha_star: alpha_star.clone(),
        converged,
        stop_reason,
        final_residual_norm,
        sigma: config.damping_sigma,
        twist_angle: pose.twist_angle().to_vec(),
        root_rotation: *pose.root_rotation(),
    };
    Ok((alpha_star, trace))
}
