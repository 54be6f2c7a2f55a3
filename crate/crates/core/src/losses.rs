//! Training-loss evaluators.
//!
//! "l2" terms are squared Euclidean norms. The swing loss sums over joints.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::ShapeParams;
use crate::rotation::{rodrigues, skew, Rot3, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LossWeights {
    pub w1: f64,
    pub w2: f64,
    pub w3: f64,
    pub w4: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            w1: 1.0,
            w2: 1.0,
            w3: 1.0,
            w4: 1.0,
        }
    }
}

impl LossWeights {
    pub fn new(w1: f64, w2: f64, w3: f64, w4: f64) -> Result<Self> {
        let w = Self { w1, w2, w3, w4 };
        if [w1, w2, w3, w4].iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::InvalidConfig(format!("loss weights must be finite and >= 0: {w:?}")));
        }
        Ok(w)
    }
}

/// Network-side quantities entering the regression loss.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionOutputs {
    pub beta: ShapeParams,
    pub twist: Vec<f64>,
    pub joints: Vec<Vec3>,
}

/// `w1 |beta - beta_gt|^2 + w2 |phi - phi_gt|^2 + w3 |P - P_gt|_1`.
pub fn loss_reg(pred: &RegressionOutputs, gt: &RegressionOutputs, weights: &LossWeights) -> Result<f64> {
    if pred.twist.len() != gt.twist.len() || pred.joints.len() != gt.joints.len() {
        return Err(Error::ShapeMismatch(format!(
            "prediction has {} twists / {} joints, ground truth {} / {}",
            pred.twist.len(),
            pred.joints.len(),
            gt.twist.len(),
            gt.joints.len()
        )));
    }
    let shape: f64 = pred.beta.beta().iter().zip(gt.beta.beta()).map(|(a, b)| (a - b).powi(2)).sum();
    let twist: f64 = pred.twist.iter().zip(&gt.twist).map(|(a, b)| (a - b).powi(2)).sum();
    let joints: f64 = pred.joints.iter().zip(&gt.joints).map(|(a, b)| (a - b).abs().sum()).sum();
    Ok(weights.w1 * shape + weights.w2 * twist + weights.w3 * joints)
}

fn check_opt(alpha: &[f64], axes: &[Vec3], r_gt: &[Rot3]) -> Result<()> {
    if alpha.len() != axes.len() || alpha.len() != r_gt.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} angles, {} axes, {} reference rotations",
            alpha.len(),
            axes.len(),
            r_gt.len()
        )));
    }
    Ok(())
}

/// Sum over joints of the entrywise l1 distance between the swing
/// `rodrigues(axis, alpha)` and the reference rotation.
pub fn loss_opt(alpha_star: &[f64], swing_axes: &[Vec3], r_gt: &[Rot3]) -> Result<f64> {
    check_opt(alpha_star, swing_axes, r_gt)?;
    let mut total = 0.0;
    for ((a, axis), r) in alpha_star.iter().zip(swing_axes).zip(r_gt) {
        total += (rodrigues(axis, *a)?.matrix() - r.matrix()).abs().sum();
    }
    Ok(total)
}

/// Gradient of [`loss_opt`] with respect to the angles (a subgradient at
/// entries where the swing equals the reference exactly).
pub fn loss_opt_grad(alpha_star: &[f64], swing_axes: &[Vec3], r_gt: &[Rot3]) -> Result<Vec<f64>> {
    check_opt(alpha_star, swing_axes, r_gt)?;
    alpha_star
        .iter()
        .zip(swing_axes)
        .zip(r_gt)
        .map(|((a, axis), r)| {
            let s = rodrigues(axis, *a)?;
            let ds = skew(axis) * s.matrix();
            let diff = s.matrix() - r.matrix();
            Ok(diff.zip_map(&ds, |e, d| e.signum() * d * (e != 0.0) as u8 as f64).sum())
        })
        .collect()
}

/// `reg + w4 * opt`.
pub fn loss_total(reg: f64, opt: f64, w4: f64) -> f64 {
    reg + w4 * opt
}
