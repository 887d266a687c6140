use nalgebra::{Point2, Vector2, Vector3};

use super::{skew, CameraIntrinsics, GeometryError, Pose, MIN_BASELINE};

/// Line `a·u + b·v + c = 0` in pixel coordinates, normalized so `a² + b² = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpipolarLine {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl EpipolarLine {
    /// Normalizes raw coefficients; `None` when `a` and `b` are both zero.
    pub fn from_coefficients(a: f64, b: f64, c: f64) -> Option<Self> {
        let n = a.hypot(b);
        (n > 0.0 && n.is_finite()).then(|| Self {
            a: a / n,
            b: b / n,
            c: c / n,
        })
    }

    /// Perpendicular pixel distance of a point to the line.
    pub fn distance(&self, pixel: &Point2<f64>) -> f64 {
        (self.a * pixel.x + self.b * pixel.y + self.c).abs()
    }

    /// Unit direction along the line, `(-b, a)`.
    pub fn direction(&self) -> Vector2<f64> {
        Vector2::new(-self.b, self.a)
    }
}

/// Epipolar line in the current image for a pixel of the previous image.
///
/// `prev_to_cur` maps previous-camera coordinates into the current camera.
pub fn epipolar_line(
    k: &CameraIntrinsics,
    prev_to_cur: &Pose,
    x_prev: &Point2<f64>,
) -> Result<EpipolarLine, GeometryError> {
    let t = prev_to_cur.translation();
    let norm = t.norm();
    if norm <= MIN_BASELINE {
        return Err(GeometryError::DegenerateEpipolar { norm });
    }
    let k_inv = k.inverse_matrix();
    let essential = skew(&t) * prev_to_cur.rotation_matrix();
    let l: Vector3<f64> = k_inv.transpose() * essential * k_inv * Vector3::new(x_prev.x, x_prev.y, 1.0);
    EpipolarLine::from_coefficients(l.x, l.y, l.z).ok_or(GeometryError::DegenerateEpipolar { norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lateral_translation_gives_horizontal_line() {
        let k = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 10, 10).unwrap();
        let rel = Pose::from_translation(Vector3::new(1.0, 0.0, 0.0));
        let l = epipolar_line(&k, &rel, &Point2::new(0.0, 0.0)).unwrap();
        assert!(l.a.abs() < 1e-15);
        assert!((l.b.abs() - 1.0).abs() < 1e-15);
        assert!(l.c.abs() < 1e-15);
    }

    #[test]
    fn zero_translation_is_degenerate() {
        let k = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 10, 10).unwrap();
        let err = epipolar_line(&k, &Pose::identity(), &Point2::new(0.0, 0.0));
        assert!(matches!(err, Err(GeometryError::DegenerateEpipolar { .. })));
    }

    #[test]
    fn exact_correspondence_lies_on_line() {
        let k = CameraIntrinsics::new(300.0, 300.0, 160.0, 120.0, 320, 240).unwrap();
        let rel = Pose::from_axis_angle(&Vector3::new(0.1, 1.0, 0.0), 0.05, Vector3::new(0.3, -0.1, -1.5));
        for p in [
            nalgebra::Point3::new(2.0, -1.0, 12.0),
            nalgebra::Point3::new(-4.0, 0.5, 7.0),
        ] {
            let xp = Point2::new(k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy);
            let q = rel.transform_point(&p);
            let xc = Point2::new(k.fx * q.x / q.z + k.cx, k.fy * q.y / q.z + k.cy);
            let l = epipolar_line(&k, &rel, &xp).unwrap();
            assert!(l.distance(&xc) < 1e-9, "residual {}", l.distance(&xc));
            assert!((l.a * l.a + l.b * l.b - 1.0).abs() < 1e-12);
        }
    }
}
