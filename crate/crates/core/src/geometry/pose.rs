use std::ops::Mul;

use nalgebra::{
    Isometry3, Matrix3, Matrix4, Point3, Quaternion, Rotation3, Translation3, UnitQuaternion, Vector3, Vector6,
};
use serde::{Deserialize, Serialize};

use super::skew;

/// Rigid transform. A pose named `a_to_b` maps coordinates in frame `a` into frame `b`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose(Isometry3<f64>);

impl Pose {
    pub fn identity() -> Self {
        Self(Isometry3::identity())
    }

    pub fn new(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self(Isometry3::from_parts(Translation3::from(translation), rotation))
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self::new(UnitQuaternion::identity(), translation)
    }

    /// Builds a pose from a rotation matrix that is orthonormal up to rounding.
    pub fn from_rotation_matrix(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let rot = Rotation3::from_matrix(rotation);
        Self::new(UnitQuaternion::from_rotation_matrix(&rot), translation)
    }

    /// Rotation about `axis` (need not be normalized) by `angle` radians.
    pub fn from_axis_angle(axis: &Vector3<f64>, angle: f64, translation: Vector3<f64>) -> Self {
        let rot = UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(*axis), angle);
        Self::new(rot, translation)
    }

    /// `[qx, qy, qz, qw]` plus translation, the trajectory-file order.
    pub fn from_quaternion_xyzw(q: [f64; 4], translation: Vector3<f64>) -> Self {
        let quat = UnitQuaternion::from_quaternion(Quaternion::new(q[3], q[0], q[1], q[2]));
        Self::new(quat, translation)
    }

    /// Row-major 3x4 `[R | t]`, as stored in KITTI pose and calibration files.
    pub fn from_row_major_3x4(m: &[f64; 12]) -> Self {
        let r = Matrix3::new(m[0], m[1], m[2], m[4], m[5], m[6], m[8], m[9], m[10]);
        Self::from_rotation_matrix(&r, Vector3::new(m[3], m[7], m[11]))
    }

    pub fn to_row_major_3x4(&self) -> [f64; 12] {
        let r = self.rotation_matrix();
        let t = self.translation();
        [
            r[(0, 0)],
            r[(0, 1)],
            r[(0, 2)],
            t.x,
            r[(1, 0)],
            r[(1, 1)],
            r[(1, 2)],
            t.y,
            r[(2, 0)],
            r[(2, 1)],
            r[(2, 2)],
            t.z,
        ]
    }

    /// SE(3) exponential of a twist `[omega, v]`.
    pub fn exp(twist: &Vector6<f64>) -> Self {
        let omega = Vector3::new(twist[0], twist[1], twist[2]);
        let v = Vector3::new(twist[3], twist[4], twist[5]);
        let theta = omega.norm();
        let w = skew(&omega);
        let w2 = w * w;
        let (a, b) = if theta < 1e-8 {
            (0.5 - theta * theta / 24.0, 1.0 / 6.0 - theta * theta / 120.0)
        } else {
            (
                (1.0 - theta.cos()) / (theta * theta),
                (theta - theta.sin()) / (theta * theta * theta),
            )
        };
        let left_jacobian = Matrix3::identity() + w * a + w2 * b;
        let rot = UnitQuaternion::from_scaled_axis(omega);
        Self::new(rot, left_jacobian * v)
    }

    pub fn isometry(&self) -> &Isometry3<f64> {
        &self.0
    }

    pub fn rotation(&self) -> UnitQuaternion<f64> {
        self.0.rotation
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        *self.0.rotation.to_rotation_matrix().matrix()
    }

    pub fn translation(&self) -> Vector3<f64> {
        self.0.translation.vector
    }

    pub fn with_translation(&self, translation: Vector3<f64>) -> Self {
        Self::new(self.rotation(), translation)
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        self.0.to_homogeneous()
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.inverse())
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Pose) -> Self {
        Self(self.0 * other.0)
    }

    pub fn transform_point(&self, p: &Point3<f64>) -> Point3<f64> {
        self.0.transform_point(p)
    }

    pub fn transform_vector(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transform_vector(v)
    }

    /// Geodesic angle of the rotation part, radians.
    pub fn rotation_angle(&self) -> f64 {
        quaternion_angle(&self.0.rotation)
    }

    /// Geodesic distance between two orientations, radians.
    pub fn rotation_angle_to(&self, other: &Pose) -> f64 {
        quaternion_angle(&self.0.rotation.rotation_to(&other.0.rotation))
    }

    /// Checks that the rotation is orthonormal with determinant +1.
    pub fn is_valid(&self, tol: f64) -> bool {
        let r = self.rotation_matrix();
        let ortho = (r.transpose() * r - Matrix3::identity()).abs().max();
        ortho <= tol && (r.determinant() - 1.0).abs() <= tol && self.translation().iter().all(|c| c.is_finite())
    }

    pub fn quaternion_xyzw(&self) -> [f64; 4] {
        let q = self.0.rotation.quaternion();
        [q.i, q.j, q.k, q.w]
    }
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for Pose {
    type Output = Pose;

    fn mul(self, rhs: Pose) -> Pose {
        self.compose(&rhs)
    }
}

impl Mul<&Pose> for &Pose {
    type Output = Pose;

    fn mul(self, rhs: &Pose) -> Pose {
        self.compose(rhs)
    }
}

impl From<Isometry3<f64>> for Pose {
    fn from(iso: Isometry3<f64>) -> Self {
        Self(iso)
    }
}

#[derive(Serialize, Deserialize)]
struct PoseRepr {
    translation: [f64; 3],
    quaternion_xyzw: [f64; 4],
}

impl Serialize for Pose {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let t = self.translation();
        PoseRepr {
            translation: [t.x, t.y, t.z],
            quaternion_xyzw: self.quaternion_xyzw(),
        }
        .serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Pose {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let repr = PoseRepr::deserialize(deserializer)?;
        Ok(Pose::from_quaternion_xyzw(
            repr.quaternion_xyzw,
            Vector3::from(repr.translation),
        ))
    }
}

/// Rotation angle in [0, pi]; atan2 keeps precision near zero where acos does not.
fn quaternion_angle(q: &UnitQuaternion<f64>) -> f64 {
    2.0 * q.imag().norm().atan2(q.scalar().abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_pose() -> impl Strategy<Value = Pose> {
        (
            prop::array::uniform3(-1.0f64..1.0),
            -3.0f64..3.0,
            prop::array::uniform3(-50.0f64..50.0),
        )
            .prop_filter("axis", |(a, _, _)| Vector3::from(*a).norm() > 1e-3)
            .prop_map(|(a, ang, t)| Pose::from_axis_angle(&Vector3::from(a), ang, Vector3::from(t)))
    }

    proptest! {
        #[test]
        fn compose_with_inverse_is_identity(p in arb_pose()) {
            let id = p.compose(&p.inverse());
            prop_assert!(id.rotation_angle() < 1e-9);
            prop_assert!(id.translation().norm() < 1e-9);
            prop_assert!(p.is_valid(1e-9));
        }

        #[test]
        fn exp_of_pure_rotation_matches_axis_angle(a in prop::array::uniform3(-1.0f64..1.0)) {
            let omega = Vector3::from(a);
            let e = Pose::exp(&Vector6::new(omega.x, omega.y, omega.z, 0.0, 0.0, 0.0));
            let r = UnitQuaternion::from_scaled_axis(omega);
            prop_assert!(e.rotation().angle_to(&r) < 1e-12);
            prop_assert!(e.translation().norm() < 1e-15);
        }
    }

    #[test]
    fn exp_with_rotation_matches_screw_motion() {
        // quarter turn about z with unit velocity along x sweeps a quarter circle
        let theta = std::f64::consts::FRAC_PI_2;
        let e = Pose::exp(&Vector6::new(0.0, 0.0, theta, 1.0, 0.0, 0.0));
        let expected = Vector3::new(theta.sin() / theta, (1.0 - theta.cos()) / theta, 0.0);
        assert!((e.translation() - expected).norm() < 1e-12);
    }

    #[test]
    fn row_major_round_trip() {
        let p = Pose::from_axis_angle(&Vector3::new(0.2, -0.4, 1.0), 0.7, Vector3::new(1.0, 2.0, 3.0));
        let q = Pose::from_row_major_3x4(&p.to_row_major_3x4());
        assert!(p.rotation_angle_to(&q) < 1e-12);
        assert!((p.translation() - q.translation()).norm() < 1e-12);
    }
}
