use nalgebra::Matrix3;

use super::KinematicTree;
use crate::error::{Error, Result};
use crate::rotation::{perpendicular, Rot3, Vec3, UNIT_TOL};

/// Minimum angle between a swing axis and the bone it swings.
pub const PARALLEL_TOL: f64 = 1e-6;

/// Swing-twist parameters of every internal joint plus the root rotation.
///
/// The local rotation of internal joint `c` is
/// `rodrigues(swing_axis[c], swing_angle[c]) * swing_frame[c] * twist(c)`.
/// `swing_frame` is the identity unless a solver has baked earlier swings
/// into it; the axis is then measured against the frame-rotated bone.
#[derive(Debug, Clone, PartialEq)]
pub struct SwingTwistPose {
    swing_angle: Vec<f64>,
    swing_axis: Vec<Vec3>,
    swing_frame: Vec<Rot3>,
    twist_angle: Vec<f64>,
    root_rotation: Rot3,
}

pub(crate) fn check_rotation(r: &Rot3) -> Result<()> {
    let m = r.matrix();
    let orth = (m.transpose() * m - Matrix3::identity()).norm();
    let det = m.determinant();
    if !m.iter().all(|v| v.is_finite()) || orth > 1e-9 || (det - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidRotation(format!(
            "|R^T R - I| = {orth:e}, det = {det}"
        )));
    }
    Ok(())
}

impl SwingTwistPose {
    /// Pose with identity swing frames.
    pub fn new(
        tree: &KinematicTree,
        swing_angle: Vec<f64>,
        swing_axis: Vec<Vec3>,
        twist_angle: Vec<f64>,
        root_rotation: Rot3,
    ) -> Result<Self> {
        let frames = vec![Rot3::identity(); swing_axis.len()];
        Self::with_frames(tree, swing_angle, swing_axis, frames, twist_angle, root_rotation)
    }

    pub fn with_frames(
        tree: &KinematicTree,
        swing_angle: Vec<f64>,
        swing_axis: Vec<Vec3>,
        swing_frame: Vec<Rot3>,
        twist_angle: Vec<f64>,
        root_rotation: Rot3,
    ) -> Result<Self> {
        let m = tree.internal_count();
        for (what, len) in [
            ("swing_angle", swing_angle.len()),
            ("swing_axis", swing_axis.len()),
            ("swing_frame", swing_frame.len()),
            ("twist_angle", twist_angle.len()),
        ] {
            if len != m {
                return Err(Error::ShapeMismatch(format!(
                    "{what} has {len} entries, tree has {m} internal joints"
                )));
            }
        }
        if !swing_angle.iter().chain(&twist_angle).all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite pose angle".into()));
        }
        check_rotation(&root_rotation)?;
        for (c, &joint) in tree.internal_joints().iter().enumerate() {
            check_rotation(&swing_frame[c])?;
            let a = swing_axis[c];
            let norm = a.norm();
            if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
                return Err(Error::InvalidAxis { norm });
            }
            let bone = swing_frame[c] * tree.bone_direction(joint).expect("internal joint");
            if a.cross(&bone).norm() < PARALLEL_TOL.sin() {
                return Err(Error::ParallelSwingAxis { joint });
            }
        }
        Ok(Self::from_parts(swing_angle, swing_axis, swing_frame, twist_angle, root_rotation))
    }

    pub(crate) fn from_parts(
        swing_angle: Vec<f64>,
        swing_axis: Vec<Vec3>,
        swing_frame: Vec<Rot3>,
        twist_angle: Vec<f64>,
        root_rotation: Rot3,
    ) -> Self {
        Self {
            swing_angle,
            swing_axis,
            swing_frame,
            twist_angle,
            root_rotation,
        }
    }

    /// Zero swing and twist, identity root, each axis some unit vector
    /// perpendicular to its bone.
    pub fn rest(tree: &KinematicTree) -> Self {
        let m = tree.internal_count();
        let axes = tree
            .internal_joints()
            .iter()
            .map(|&j| perpendicular(&tree.bone_direction(j).unwrap()))
            .collect();
        Self::from_parts(
            vec![0.0; m],
            axes,
            vec![Rot3::identity(); m],
            vec![0.0; m],
            Rot3::identity(),
        )
    }

    pub fn len(&self) -> usize {
        self.swing_angle.len()
    }

    pub fn is_empty(&self) -> bool {
        self.swing_angle.is_empty()
    }

    pub fn swing_angle(&self) -> &[f64] {
        &self.swing_angle
    }

    pub fn swing_axis(&self) -> &[Vec3] {
        &self.swing_axis
    }

    pub fn swing_frame(&self) -> &[Rot3] {
        &self.swing_frame
    }

    pub fn twist_angle(&self) -> &[f64] {
        &self.twist_angle
    }

    pub fn root_rotation(&self) -> &Rot3 {
        &self.root_rotation
    }

    pub fn with_swing_angles(&self, swing_angle: Vec<f64>) -> Result<Self> {
        if swing_angle.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} swing angles for {} internal joints",
                swing_angle.len(),
                self.len()
            )));
        }
        if !swing_angle.iter().all(|v| v.is_finite()) {
            return Err(Error::Numerical("non-finite swing angle".into()));
        }
        Ok(Self {
            swing_angle,
            ..self.clone()
        })
    }

    pub fn with_twist_angles(&self, twist_angle: Vec<f64>) -> Result<Self> {
        if twist_angle.len() != self.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} twist angles for {} internal joints",
                twist_angle.len(),
                self.len()
            )));
        }
        Ok(Self {
            twist_angle,
            ..self.clone()
        })
    }

    pub fn with_root_rotation(&self, root_rotation: Rot3) -> Result<Self> {
        check_rotation(&root_rotation)?;
        Ok(Self {
            root_rotation,
            ..self.clone()
        })
    }

    pub(crate) fn check_tree(&self, tree: &KinematicTree) -> Result<()> {
        if self.len() != tree.internal_count() {
            return Err(Error::ShapeMismatch(format!(
                "pose has {} internal joints, tree has {}",
                self.len(),
                tree.internal_count()
            )));
        }
        Ok(())
    }
}

/// Target joint positions with per-joint confidence weights.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTargets {
    position: Vec<Vec3>,
    confidence: Vec<f64>,
}

impl JointTargets {
    /// Unit confidence everywhere.
    pub fn new(position: Vec<Vec3>) -> Result<Self> {
        let confidence = vec![1.0; position.len()];
        Self::with_confidence(position, confidence)
    }

    pub fn with_confidence(position: Vec<Vec3>, confidence: Vec<f64>) -> Result<Self> {
        if position.len() != confidence.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} positions, {} confidences",
                position.len(),
                confidence.len()
            )));
        }
        if !position.iter().all(|p| p.iter().all(|v| v.is_finite())) {
            return Err(Error::Numerical("non-finite target position".into()));
        }
        if let Some(c) = confidence.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return Err(Error::InvalidConfig(format!("confidence {c} outside [0, 1]")));
        }
        Ok(Self { position, confidence })
    }

    pub fn positions(&self) -> &[Vec3] {
        &self.position
    }

    pub fn confidence(&self) -> &[f64] {
        &self.confidence
    }

    pub fn len(&self) -> usize {
        self.position.len()
    }

    pub fn is_empty(&self) -> bool {
        self.position.is_empty()
    }

    pub(crate) fn check_tree(&self, tree: &KinematicTree) -> Result<()> {
        if self.len() != tree.joint_count() {
            return Err(Error::ShapeMismatch(format!(
                "{} targets for {} joints",
                self.len(),
                tree.joint_count()
            )));
        }
        Ok(())
    }
}

/// The ten shape coefficients consumed by the regression loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeParams {
    beta: [f64; 10],
}

impl ShapeParams {
    pub fn new(beta: &[f64]) -> Result<Self> {
        let beta: [f64; 10] = beta.try_into().map_err(|_| {
            Error::ShapeMismatch(format!("shape needs 10 coefficients, got {}", beta.len()))
        })?;
        Ok(Self { beta })
    }

    pub fn zeros() -> Self {
        Self { beta: [0.0; 10] }
    }

    pub fn beta(&self) -> &[f64; 10] {
        &self.beta
    }
}
