use super::{MatchedPair, ScaleError, ScaleSample};
use crate::geometry::{triangulate_pair, CameraIntrinsics, GeometryError, Pose, MIN_BASELINE};

/// Pairs that produced no sample, by reason.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleDrops {
    pub behind_camera: usize,
    pub low_parallax: usize,
    pub invalid_depth: usize,
}

impl SampleDrops {
    pub fn total(&self) -> usize {
        self.behind_camera + self.low_parallax + self.invalid_depth
    }
}

/// Triangulates every pair and forms the LiDAR-to-visual depth ratio `d / v`.
pub fn compute_scale_samples(
    pairs: &[MatchedPair],
    k: &CameraIntrinsics,
    prev_to_cur: &Pose,
) -> Result<(Vec<ScaleSample>, SampleDrops), ScaleError> {
    let norm = prev_to_cur.translation().norm();
    if norm <= MIN_BASELINE {
        return Err(GeometryError::DegenerateEpipolar { norm }.into());
    }
    let mut drops = SampleDrops::default();
    let mut samples = Vec::with_capacity(pairs.len());
    for pair in pairs {
        if !(pair.lidar_depth > 0.0 && pair.lidar_depth.is_finite()) {
            drops.invalid_depth += 1;
            continue;
        }
        match triangulate_pair(k, prev_to_cur, &pair.x_prev, &pair.x_cur) {
            Ok(tri) => samples.push(ScaleSample::new(pair.lidar_depth, tri.depth_prev, tri.point)),
            Err(GeometryError::BehindCamera { .. }) => drops.behind_camera += 1,
            Err(GeometryError::LowParallax { .. }) => drops.low_parallax += 1,
            Err(e) => return Err(e.into()),
        }
    }
    Ok((samples, drops))
}
