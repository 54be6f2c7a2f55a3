//! Small rotation helpers on top of nalgebra.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

pub type Vec3 = Vector3<f64>;
pub type Rot3 = Rotation3<f64>;

/// Tolerance on `|axis| - 1` accepted by [`rodrigues`].
pub const UNIT_TOL: f64 = 1e-9;

pub fn skew(v: &Vec3) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}

/// Rotation by `angle` radians about the unit vector `axis`.
pub fn rodrigues(axis: &Vec3, angle: f64) -> Result<Rot3> {
    let norm = axis.norm();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
        return Err(Error::InvalidAxis { norm });
    }
    Ok(rodrigues_unchecked(axis, angle))
}

pub(crate) fn rodrigues_unchecked(axis: &Vec3, angle: f64) -> Rot3 {
    let k = skew(axis);
    let (s, c) = angle.sin_cos();
    Rot3::from_matrix_unchecked(Matrix3::identity() + k * s + k * k * (1.0 - c))
}

/// Left Jacobian of SO(3) at `v`: `d exp(v) exp(v)^T = [J_l(v) dv]x`.
pub fn left_jacobian(v: &Vec3) -> Matrix3<f64> {
    let theta = v.norm();
    let k = skew(v);
    let t2 = theta * theta;
    if theta < LEFT_JACOBIAN_SERIES_BELOW {
        return Matrix3::identity() + k * (0.5 - t2 / 24.0) + k * k * (1.0 / 6.0 - t2 / 120.0);
    }
    left_jacobian_closed(&k, theta)
}

const LEFT_JACOBIAN_SERIES_BELOW: f64 = 1e-4;

fn left_jacobian_closed(k: &Matrix3<f64>, theta: f64) -> Matrix3<f64> {
    let t2 = theta * theta;
    let half = (0.5 * theta).sin();
    Matrix3::identity() + k * (2.0 * half * half / t2) + k * k * ((theta - theta.sin()) / (t2 * theta))
}

/// Minimal rotation carrying unit vector `from` onto unit vector `to`,
/// as an (axis, angle) pair. `None` when the vectors are (anti)parallel.
pub fn minimal_rotation(from: &Vec3, to: &Vec3) -> Option<(Vec3, f64)> {
    let cross = from.cross(to);
    let s = cross.norm();
    if s < 1e-12 {
        return None;
    }
    Some((cross / s, s.atan2(from.dot(to))))
}

/// Twist angle of `r` about the unit `axis` (swing-twist decomposition).
pub fn twist_angle_about(r: &Rot3, axis: &Vec3) -> f64 {
    let q = nalgebra::UnitQuaternion::from_rotation_matrix(r);
    let proj = q.imag().dot(axis);
    2.0 * proj.atan2(q.w)
}

/// A unit vector perpendicular to `b`.
pub fn perpendicular(b: &Vec3) -> Vec3 {
    let e = if b.x.abs() <= b.y.abs() && b.x.abs() <= b.z.abs() {
        Vec3::x()
    } else if b.y.abs() <= b.z.abs() {
        Vec3::y()
    } else {
        Vec3::z()
    };
    b.cross(&e).normalize()
}

/// Row-major serde representation of rotations: `[[r00, r01, r02], ...]`.
pub(crate) mod serde_rows {
    use super::Rot3;
    use nalgebra::Matrix3;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn rows(r: &Rot3) -> [[f64; 3]; 3] {
        let m = r.matrix();
        [0, 1, 2].map(|i| [m[(i, 0)], m[(i, 1)], m[(i, 2)]])
    }

    pub fn from_rows(r: [[f64; 3]; 3]) -> Rot3 {
        Rot3::from_matrix_unchecked(Matrix3::from_fn(|i, j| r[i][j]))
    }

    pub fn serialize<S: Serializer>(r: &Rot3, s: S) -> Result<S::Ok, S::Error> {
        rows(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rot3, D::Error> {
        Ok(from_rows(<[[f64; 3]; 3]>::deserialize(d)?))
    }

    pub mod vec {
        use super::*;

        pub fn serialize<S: Serializer>(r: &[Rot3], s: S) -> Result<S::Ok, S::Error> {
            r.iter().map(rows).collect::<Vec<_>>().serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rot3>, D::Error> {
            Ok(Vec::<[[f64; 3]; 3]>::deserialize(d)?.into_iter().map(from_rows).collect())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quarter_turn_about_z() {
        let r = rodrigues(&Vec3::z(), std::f64::consts::FRAC_PI_2).unwrap();
        assert!((r * Vec3::x() - Vec3::y()).norm() < 1e-15);
    }

    #[test]
    fn rejects_non_unit_axis() {
        assert!(matches!(
            rodrigues(&Vec3::new(1.0, 1.0, 0.0), 0.3),
            Err(Error::InvalidAxis { .. })
        ));
    }

    #[test]
    fn left_jacobian_matches_finite_difference() {
        let v = Vec3::new(0.3, -0.7, 0.4);
        let dv = Vec3::new(0.2, 0.1, -0.5);
        let exp = |w: Vec3| Rot3::new(w).into_inner();
        let h = 1e-6;
        let d = (exp(v + dv * h) - exp(v - dv * h)) / (2.0 * h);
        let omega = d * exp(v).transpose();
        let expect = left_jacobian(&v) * dv;
        let got = Vec3::new(omega[(2, 1)], omega[(0, 2)], omega[(1, 0)]);
        assert!((got - expect).norm() < 1e-8);
    }

    #[test]
    fn left_jacobian_small_angle_branch_is_continuous() {
        let v = Vec3::new(1.0, -2.0, 0.5).normalize() * LEFT_JACOBIAN_SERIES_BELOW;
        let series = left_jacobian(&(v * (1.0 - 1e-12)));
        let closed = left_jacobian_closed(&skew(&v), v.norm());
        assert!((series - closed).norm() < 1e-12);
    }

    #[test]
    fn twist_extraction_recovers_pure_twist() {
        let axis = Vec3::new(1.0, 2.0, -1.0).normalize();
        let r = rodrigues(&axis, 0.9).unwrap();
        assert!((twist_angle_about(&r, &axis) - 0.9).abs() < 1e-12);
    }
}
