//! Monocular scale correction anchored on LiDAR depth.
//!
//! Projected LiDAR points tracked between two keyframes are culled against the
//! epipolar geometry of the visual relative pose, triangulated, and turned into
//! per-point ratios of LiDAR depth to visual depth. A one-point RANSAC over those
//! ratios yields the scale factor; when it strays far enough from 1 the local
//! map is rescaled about its reference keyframe.

mod correction;
mod cull;
mod ransac;
mod samples;

pub use correction::{apply_scale_correction, should_correct, should_correct_with, LocalMap, DEFAULT_TRIGGER};
pub use cull::{cull_matches, CullThresholds, TrackCandidate};
pub use ransac::{ransac_scale, RansacConfig};
pub use samples::{compute_scale_samples, SampleDrops};

use nalgebra::{Point2, Point3, Vector2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::GeometryError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScaleError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("only {available} scale samples, need at least {required}")]
    InsufficientSamples { available: usize, required: usize },
    #[error("best consensus has {inliers} inliers, need at least {required}")]
    NoConsensus { inliers: usize, required: usize },
    #[error("scale must be positive and finite, got {0}")]
    Domain(f64),
}

/// A tracked keypoint pair that survived culling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedPair {
    pub x_prev: Point2<f64>,
    pub x_cur: Point2<f64>,
    /// LiDAR-measured camera-frame depth in the previous keyframe, meters.
    pub lidar_depth: f64,
    /// Image gradient at `x_cur` in the current image.
    pub grad_cur: Vector2<f64>,
}

/// Ratio of LiDAR depth to triangulated visual depth for one keypoint.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSample {
    /// `d / v`.
    pub s: f64,
    pub d: f64,
    pub v: f64,
    /// Triangulated landmark in the previous camera frame, visual units.
    pub point: Point3<f64>,
}

impl ScaleSample {
    pub fn new(d: f64, v: f64, point: Point3<f64>) -> Self {
        Self { s: d / v, d, v, point }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScaleEstimate {
    pub scale: f64,
    pub inlier_count: usize,
    pub sample_count: usize,
    /// Standard deviation of the inlier ratios divided by their mean.
    pub inlier_spread: f64,
}
