use nalgebra::{Matrix3, Point3, UnitQuaternion, Vector3};
use serde::{Deserialize, Serialize};

use super::{GeometryError, Pose};

/// `x ↦ scale · R · x + t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Similarity {
    pub scale: f64,
    pub rotation: UnitQuaternion<f64>,
    pub translation: Vector3<f64>,
}

impl Similarity {
    pub fn identity() -> Self {
        Self {
            scale: 1.0,
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from(self.rotation * p.coords * self.scale + self.translation)
    }

    /// Maps a pose: orientation is rotated, position goes through the similarity.
    pub fn apply_pose(&self, pose: &Pose) -> Pose {
        let t = self.apply(&Point3::from(pose.translation()));
        Pose::new(self.rotation * pose.rotation(), t.coords)
    }
}

/// Closed-form least-squares alignment mapping `estimate` onto `reference`.
///
/// With `with_scale` off the scale is pinned to 1 (rigid alignment).
pub fn umeyama_align(
    reference: &[Point3<f64>],
    estimate: &[Point3<f64>],
    with_scale: bool,
) -> Result<Similarity, GeometryError> {
    if reference.len() != estimate.len() {
        return Err(GeometryError::AlignmentDegenerate("point sets differ in length"));
    }
    let n = reference.len();
    if n < 3 {
        return Err(GeometryError::AlignmentDegenerate("need at least 3 point pairs"));
    }
    let inv_n = 1.0 / n as f64;
    let mu_ref = reference.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) * inv_n;
    let mu_est = estimate.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) * inv_n;

    let mut cov = Matrix3::zeros();
    let mut var_est = 0.0;
    for (r, e) in reference.iter().zip(estimate) {
        let dr = r.coords - mu_ref;
        let de = e.coords - mu_est;
        cov += dr * de.transpose();
        var_est += de.norm_squared();
    }
    cov *= inv_n;
    var_est *= inv_n;

    let svd = cov.svd(true, true);
    let (u, v_t) = (svd.u.expect("U"), svd.v_t.expect("V^T"));
    let sv = svd.singular_values;
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));
    let (s_max, s_mid) = (sv[order[0]], sv[order[1]]);
    if var_est <= 0.0 || s_max <= 0.0 || s_mid <= 1e-12 * s_max {
        return Err(GeometryError::AlignmentDegenerate("points are collinear or coincident"));
    }

    let mut sign = Matrix3::identity();
    if (u.determinant() * v_t.determinant()) < 0.0 {
        // flip the axis of the smallest singular value
        sign[(order[2], order[2])] = -1.0;
    }
    let r = u * sign * v_t;
    let trace_ds: f64 = (0..3).map(|i| sv[i] * sign[(i, i)]).sum();
    let scale = if with_scale { trace_ds / var_est } else { 1.0 };
    let t = mu_ref - r * mu_est * scale;

    let rotation = UnitQuaternion::from_rotation_matrix(&nalgebra::Rotation3::from_matrix_unchecked(r));
    Ok(Similarity {
        scale,
        rotation,
        translation: t,
    })
}
