use nalgebra::{Matrix4, Point2, Point3, RowVector4};

use super::{CameraIntrinsics, GeometryError, Pose, MIN_BASELINE};

/// Rays meeting at a smaller angle than this give depth too uncertain to use.
pub const MIN_PARALLAX_DEG: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangulation {
    /// Landmark in the previous camera frame.
    pub point: Point3<f64>,
    /// Visual depth (z) in the previous camera.
    pub depth_prev: f64,
    pub depth_cur: f64,
    pub parallax_deg: f64,
}

/// Linear (DLT) two-view triangulation in normalized coordinates.
///
/// `prev_to_cur` maps previous-camera coordinates into the current camera, so the
/// projection matrices are `[I | 0]` and `[R | t]`.
pub fn triangulate_pair(
    k: &CameraIntrinsics,
    prev_to_cur: &Pose,
    x_prev: &Point2<f64>,
    x_cur: &Point2<f64>,
) -> Result<Triangulation, GeometryError> {
    let t = prev_to_cur.translation();
    if t.norm() <= MIN_BASELINE {
        return Err(GeometryError::DegenerateEpipolar { norm: t.norm() });
    }
    let r = prev_to_cur.rotation_matrix();
    let n1 = k.normalize(x_prev);
    let n2 = k.normalize(x_cur);

    let p1_rows = [
        RowVector4::new(1.0, 0.0, 0.0, 0.0),
        RowVector4::new(0.0, 1.0, 0.0, 0.0),
        RowVector4::new(0.0, 0.0, 1.0, 0.0),
    ];
    let p2_rows = [
        RowVector4::new(r[(0, 0)], r[(0, 1)], r[(0, 2)], t.x),
        RowVector4::new(r[(1, 0)], r[(1, 1)], r[(1, 2)], t.y),
        RowVector4::new(r[(2, 0)], r[(2, 1)], r[(2, 2)], t.z),
    ];
    let a = Matrix4::from_rows(&[
        p1_rows[2] * n1.x - p1_rows[0],
        p1_rows[2] * n1.y - p1_rows[1],
        p2_rows[2] * n2.x - p2_rows[0],
        p2_rows[2] * n2.y - p2_rows[1],
    ]);

    let svd = a.svd(false, true);
    let v_t = svd.v_t.expect("requested V^T");
    let (min_idx, _) =
        svd.singular_values.iter().enumerate().fold(
            (0, f64::INFINITY),
            |best, (i, &s)| if s < best.1 { (i, s) } else { best },
        );
    let h = v_t.row(min_idx);
    if h[3].abs() < 1e-15 {
        return Err(GeometryError::LowParallax { angle_deg: 0.0 });
    }
    let point = Point3::new(h[0] / h[3], h[1] / h[3], h[2] / h[3]);
    let in_cur = prev_to_cur.transform_point(&point);
    if point.z <= 0.0 || in_cur.z <= 0.0 {
        return Err(GeometryError::BehindCamera {
            depth: point.z.min(in_cur.z),
        });
    }

    let centre_cur = -(r.transpose() * t);
    let ray_prev = point.coords;
    let ray_cur = point.coords - centre_cur;
    let cos = (ray_prev.dot(&ray_cur) / (ray_prev.norm() * ray_cur.norm())).clamp(-1.0, 1.0);
    let parallax_deg = cos.acos().to_degrees();
    if parallax_deg < MIN_PARALLAX_DEG {
        return Err(GeometryError::LowParallax {
            angle_deg: parallax_deg,
        });
    }

    Ok(Triangulation {
        point,
        depth_prev: point.z,
        depth_cur: in_cur.z,
        parallax_deg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;

    fn unit_k() -> CameraIntrinsics {
        CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 10, 10).unwrap()
    }

    #[test]
    fn one_metre_lateral_baseline() {
        // camera moves +1 m in x, so previous-frame points shift by -1 m in the current frame
        let rel = Pose::from_translation(Vector3::new(-1.0, 0.0, 0.0));
        let tri = triangulate_pair(&unit_k(), &rel, &Point2::new(0.0, 0.0), &Point2::new(-0.2, 0.0)).unwrap();
        assert!((tri.depth_prev - 5.0).abs() < 1e-9);
        assert!(tri.point.x.abs() < 1e-9 && tri.point.y.abs() < 1e-9);
    }

    #[test]
    fn zero_baseline_is_degenerate() {
        let err = triangulate_pair(
            &unit_k(),
            &Pose::identity(),
            &Point2::new(0.0, 0.0),
            &Point2::new(0.1, 0.0),
        );
        assert!(matches!(err, Err(GeometryError::DegenerateEpipolar { .. })));
    }

    #[test]
    fn diverging_rays_fail_cheirality() {
        // rays converge behind the cameras
        let rel = Pose::from_translation(Vector3::new(-1.0, 0.0, 0.0));
        let err = triangulate_pair(&unit_k(), &rel, &Point2::new(0.0, 0.0), &Point2::new(0.2, 0.0));
        assert!(matches!(err, Err(GeometryError::BehindCamera { .. })));
    }

    #[test]
    fn distant_point_has_low_parallax() {
        let rel = Pose::from_translation(Vector3::new(-0.01, 0.0, 0.0));
        let err = triangulate_pair(&unit_k(), &rel, &Point2::new(0.0, 0.0), &Point2::new(-0.01 / 50.0, 0.0));
        assert!(matches!(err, Err(GeometryError::LowParallax { .. })));
    }
}
