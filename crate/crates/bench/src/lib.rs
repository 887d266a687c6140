//! Shared fixtures for the benchmarks: two consecutive frames of the default
//! synthetic scene.

use std::sync::Arc;

use vlo_core::pipeline::{FrameSource, RunConfig, SyntheticSequence};
use vlo_core::{CameraIntrinsics, ImageGray, PointCloud, Pose};

pub struct FramePair {
    pub intrinsics: CameraIntrinsics,
    pub lidar_to_camera: Pose,
    pub images: [Arc<ImageGray>; 2],
    pub clouds: [Arc<PointCloud>; 2],
    /// Ground-truth camera-to-world poses.
    pub poses: [Pose; 2],
}

/// Frames `first` and `first + 1` of the default scene with the given LiDAR
/// preset (`hdl64` or `vlp16`).
pub fn frame_pair(lidar: &str, first: usize) -> FramePair {
    let mut cfg = RunConfig::default();
    cfg.set("synth.lidar", lidar).expect("known preset");
    cfg.synthetic.length = (first as f64 + 2.0) * cfg.synthetic.speed / cfg.synthetic.rate;
    let seq = SyntheticSequence::generate(&cfg.synthetic, 0).expect("default scene generates");
    let frame = |i: usize| {
        (
            seq.image(i).expect("rendered"),
            seq.cloud(i).expect("scanned"),
            seq.gt_pose(i).expect("synthetic ground truth"),
        )
    };
    let (a, b) = (frame(first), frame(first + 1));
    FramePair {
        intrinsics: seq.intrinsics(),
        lidar_to_camera: seq.lidar_to_camera(),
        images: [a.0, b.0],
        clouds: [a.1, b.1],
        poses: [a.2, b.2],
    }
}
