//! Camera and LiDAR projective geometry.
//!
//! Frame conventions used throughout the crate:
//!
//! * camera frame: x right, y down, z forward (optical axis);
//! * a [`Pose`] named `a_to_b` maps coordinates expressed in frame `a` into frame `b`;
//! * pixel coordinates put integer values on pixel centres, so pixel `(0, 0)` is the
//!   centre of the top-left pixel.

mod epipolar;
mod pose;
mod projection;
pub mod trajectory_io;
mod triangulate;
mod umeyama;

pub use epipolar::{epipolar_line, EpipolarLine};
pub use pose::Pose;
pub use projection::{back_project, project_cloud, project_point, ProjectedKeypoint};
pub use triangulate::{triangulate_pair, Triangulation, MIN_PARALLAX_DEG};
pub use umeyama::{umeyama_align, Similarity};

use nalgebra::{Matrix3, Point2, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative translations shorter than this are treated as a zero baseline.
pub const MIN_BASELINE: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("point is behind the camera (depth {depth:.3e} m)")]
    BehindCamera { depth: f64 },
    #[error("relative translation {norm:.3e} m is too short for epipolar geometry")]
    DegenerateEpipolar { norm: f64 },
    #[error("triangulation ray angle {angle_deg:.4} deg is below the parallax floor")]
    LowParallax { angle_deg: f64 },
    #[error("degenerate alignment: {0}")]
    AlignmentDegenerate(&'static str),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(&'static str),
    #[error("invalid point cloud: {0}")]
    InvalidCloud(String),
}

/// Pinhole intrinsics without distortion.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self, GeometryError> {
        if !(fx > 0.0 && fy > 0.0) {
            return Err(GeometryError::InvalidIntrinsics("focal lengths must be positive"));
        }
        if !(0.0..f64::from(width)).contains(&cx) || !(0.0..f64::from(height)).contains(&cy) {
            return Err(GeometryError::InvalidIntrinsics(
                "principal point must lie inside the image",
            ));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        })
    }

    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(self.fx, 0.0, self.cx, 0.0, self.fy, self.cy, 0.0, 0.0, 1.0)
    }

    pub fn inverse_matrix(&self) -> Matrix3<f64> {
        Matrix3::new(
            1.0 / self.fx,
            0.0,
            -self.cx / self.fx,
            0.0,
            1.0 / self.fy,
            -self.cy / self.fy,
            0.0,
            0.0,
            1.0,
        )
    }

    /// Pixel to normalized image coordinates (z = 1 plane).
    pub fn normalize(&self, pixel: &Point2<f64>) -> Vector3<f64> {
        Vector3::new((pixel.x - self.cx) / self.fx, (pixel.y - self.cy) / self.fy, 1.0)
    }

    pub fn contains(&self, pixel: &Point2<f64>) -> bool {
        pixel.x >= 0.0 && pixel.y >= 0.0 && pixel.x < f64::from(self.width) && pixel.y < f64::from(self.height)
    }
}

/// A LiDAR sweep in the sensor frame.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PointCloud {
    pub points: Vec<Point3<f64>>,
    /// Ring id per point, when the sensor provides one.
    pub beams: Option<Vec<u16>>,
    pub timestamp: f64,
}

impl PointCloud {
    pub fn new(points: Vec<Point3<f64>>, timestamp: f64) -> Self {
        Self {
            points,
            beams: None,
            timestamp,
        }
    }

    pub fn with_beams(points: Vec<Point3<f64>>, beams: Vec<u16>, timestamp: f64) -> Self {
        debug_assert_eq!(points.len(), beams.len());
        Self {
            points,
            beams: Some(beams),
            timestamp,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn beam(&self, i: usize) -> Option<u16> {
        self.beams.as_ref().map(|b| b[i])
    }

    /// Checks finiteness and, when `beam_count` is given, the ring id range.
    pub fn validate(&self, beam_count: Option<u16>) -> Result<(), GeometryError> {
        if let Some(i) = self.points.iter().position(|p| !p.coords.iter().all(|c| c.is_finite())) {
            return Err(GeometryError::InvalidCloud(format!(
                "point {i} has a non-finite coordinate"
            )));
        }
        if let Some(beams) = &self.beams {
            if beams.len() != self.points.len() {
                return Err(GeometryError::InvalidCloud(
                    "beam index count does not match point count".into(),
                ));
            }
            if let Some(limit) = beam_count {
                if let Some(b) = beams.iter().find(|&&b| b >= limit) {
                    return Err(GeometryError::InvalidCloud(format!(
                        "beam index {b} outside [0, {limit})"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Rigidly transforms every point, keeping beam provenance.
    pub fn transformed(&self, pose: &Pose) -> PointCloud {
        PointCloud {
            points: self.points.iter().map(|p| pose.transform_point(p)).collect(),
            beams: self.beams.clone(),
            timestamp: self.timestamp,
        }
    }
}

/// Skew-symmetric cross-product matrix `[v]x`.
pub fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(0.0, -v.z, v.y, v.z, 0.0, -v.x, -v.y, v.x, 0.0)
}
