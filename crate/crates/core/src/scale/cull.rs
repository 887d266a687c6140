use nalgebra::Vector2;
use serde::{Deserialize, Serialize};

use super::{MatchedPair, ScaleError};
use crate::geometry::{epipolar_line, CameraIntrinsics, Pose};
use crate::image::TrackedPoint;

/// A raw optical-flow match with its LiDAR depth and current-image gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackCandidate {
    pub track: TrackedPoint,
    pub lidar_depth: f64,
    pub grad_cur: Vector2<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CullThresholds {
    /// Upper bound on the point-to-epipolar-line distance, pixels.
    pub max_normal_error: f64,
    /// Lower bound on |cos| of the angle between line direction and gradient.
    pub min_abs_cos: f64,
}

impl Default for CullThresholds {
    fn default() -> Self {
        Self {
            max_normal_error: 0.5,
            min_abs_cos: 0.5,
        }
    }
}

/// Keeps matches that sit close to their epipolar line and whose gradient is not
/// perpendicular to it. Lost tracks and zero-gradient matches are dropped.
pub fn cull_matches(
    candidates: &[TrackCandidate],
    k: &CameraIntrinsics,
    prev_to_cur: &Pose,
    thresholds: &CullThresholds,
) -> Result<Vec<MatchedPair>, ScaleError> {
    let mut kept = Vec::with_capacity(candidates.len());
    for c in candidates {
        if !c.track.is_tracked() {
            continue;
        }
        let line = epipolar_line(k, prev_to_cur, &c.track.prev_pixel)?;
        let normal_error = line.distance(&c.track.cur_pixel);
        if !(normal_error < thresholds.max_normal_error) {
            continue;
        }
        let grad_norm = c.grad_cur.norm();
        if grad_norm == 0.0 {
            continue;
        }
        let abs_cos = (line.direction().dot(&c.grad_cur) / grad_norm).abs();
        if !(abs_cos > thresholds.min_abs_cos) {
            continue;
        }
        kept.push(MatchedPair {
            x_prev: c.track.prev_pixel,
            x_cur: c.track.cur_pixel,
            lidar_depth: c.lidar_depth,
            grad_cur: c.grad_cur,
        });
    }
    Ok(kept)
}
