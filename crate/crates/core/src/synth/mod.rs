//! Synthetic world with ground truth: planar textured scenes, a pinhole
//! renderer, a spinning multi-beam LiDAR, trajectories and visual-odometry drift.
//!
//! Every output is a pure function of its configuration and seed.

mod drift;
mod lidar;
mod oracle;
mod render;
mod scene;
mod texture;
mod trajectory;

pub use drift::{inject_vo_drift, inject_vo_drift_with_factors, DriftModel, ScaleFn};
pub use lidar::{simulate_scan, LidarModel};
pub use oracle::{correspondence_from_pixel, exact_correspondence, Correspondence};
pub use render::{render_image, RENDER_RANGE};
pub use scene::{Hit, Plane, Scene, SceneConfig};
pub use texture::Texture;
pub use trajectory::{camera_pose, generate_trajectory, PathKind, SpeedProfile, TrajectorySpec};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{CameraIntrinsics, Pose};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SynthError {
    #[error("invalid synthetic-world parameter: {0}")]
    Domain(String),
}

/// Camera intrinsics plus the LiDAR mounting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SensorRig {
    pub intrinsics: CameraIntrinsics,
    pub lidar_to_camera: Pose,
}

impl Default for SensorRig {
    /// 640x360 camera with an 80 degree horizontal field of view; LiDAR mounted
    /// 0.1 m to the camera's right with the same axes.
    fn default() -> Self {
        Self {
            intrinsics: CameraIntrinsics::new(380.0, 380.0, 319.5, 179.5, 640, 360).expect("valid default intrinsics"),
            lidar_to_camera: Pose::from_translation(Vector3::new(0.1, 0.0, 0.0)),
        }
    }
}

impl SensorRig {
    pub fn lidar_to_world(&self, camera_to_world: &Pose) -> Pose {
        camera_to_world.compose(&self.lidar_to_camera)
    }
}
