//! Scan-to-scan LiDAR odometry: exact k-NN, normal estimation, point-to-plane
//! ICP, and a per-frame driver whose initial guess comes either from a
//! constant-velocity model or from visual odometry.

mod icp;
mod knn;
mod normals;
mod step;

use thiserror::Error;

pub use icp::{point_to_plane_icp, IcpConfig, IcpResult};
pub use knn::{voxel_downsample, NeighborGrid};
pub use normals::{estimate_normals, estimate_normals_with, NormalCloud, NormalConfig};
pub use step::{lidar_odometry_step, step_initial_guess, InitSource, OdomConfig, OdomMode, OdomState, StepInfo};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OdomError {
    #[error("registration failed: {0} correspondences (need {1})")]
    RegistrationFailure(usize, usize),
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("invalid configuration: {0}")]
    Config(&'static str),
}
