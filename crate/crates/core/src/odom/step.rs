use serde::{Deserialize, Serialize};

use super::icp::{point_to_plane_icp, IcpConfig, IcpResult};
use super::knn::voxel_downsample;
use super::normals::{estimate_normals_with, NormalCloud, NormalConfig};
use super::OdomError;
use crate::geometry::{PointCloud, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OdomMode {
    /// Initial guess from the visual odometry's relative motion.
    Bootstrap,
    /// Initial guess repeats the previous frame's motion.
    #[serde(rename = "constvel")]
    ConstantVelocity,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitSource {
    First,
    VisualOdometry,
    ConstantVelocity,
    /// Bootstrap mode without a visual estimate; constant velocity was used.
    Fallback,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OdomConfig {
    /// Voxel size for downsampling both scans, meters; 0 disables it.
    pub voxel: f64,
    pub normals: NormalConfig,
    pub icp: IcpConfig,
}

impl Default for OdomConfig {
    fn default() -> Self {
        Self {
            voxel: 0.4,
            normals: NormalConfig::default(),
            icp: IcpConfig::default(),
        }
    }
}

/// Odometry state between frames. Poses are LiDAR-to-world with the first scan
/// defining the world frame; relative motions map the current scan into the
/// previous one.
#[derive(Debug, Clone, Default)]
pub struct OdomState {
    pub last_pose: Pose,
    pub last_relative: Pose,
    /// Frames consumed so far.
    pub frame_index: usize,
    target: Option<NormalCloud>,
}

impl OdomState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_primed(&self) -> bool {
        self.target.is_some()
    }

    /// Accepts `relative` for `scan` without registration, e.g. after a failed
    /// step.
    pub fn advance(&self, scan: &PointCloud, relative: &Pose, cfg: &OdomConfig) -> (Pose, OdomState) {
        let pose = self.last_pose.compose(relative);
        let next = OdomState {
            last_pose: pose,
            last_relative: *relative,
            frame_index: self.frame_index + 1,
            target: Some(prepare_target(scan, cfg)),
        };
        (pose, next)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepInfo {
    pub init_source: InitSource,
    pub init: Pose,
    /// Registration details; absent for the first frame.
    pub icp: Option<IcpResult>,
}

/// Initial guess the step would use.
fn initial_guess(state: &OdomState, vo_relative: Option<&Pose>, mode: OdomMode) -> (Pose, InitSource) {
    if !state.is_primed() {
        return (Pose::identity(), InitSource::First);
    }
    match (mode, vo_relative) {
        (OdomMode::Bootstrap, Some(rel)) => (*rel, InitSource::VisualOdometry),
        (OdomMode::Bootstrap, None) => (state.last_relative, InitSource::Fallback),
        (OdomMode::ConstantVelocity, _) => (state.last_relative, InitSource::ConstantVelocity),
    }
}

/// Registers `scan` against the previous scan and advances the state.
///
/// `vo_relative` is the visual estimate of the current-to-previous LiDAR
/// motion. The first call returns the identity pose and only primes the state.
pub fn lidar_odometry_step(
    state: &OdomState,
    scan: &PointCloud,
    vo_relative: Option<&Pose>,
    mode: OdomMode,
    cfg: &OdomConfig,
) -> Result<(Pose, OdomState, StepInfo), OdomError> {
    if scan.is_empty() {
        return Err(OdomError::EmptyCloud);
    }
    let (init, init_source) = initial_guess(state, vo_relative, mode);
    let Some(target) = &state.target else {
        let (pose, next) = state.advance(scan, &Pose::identity(), cfg);
        return Ok((
            pose,
            next,
            StepInfo {
                init_source,
                init,
                icp: None,
            },
        ));
    };
    let source = voxel_downsample(scan, cfg.voxel);
    let icp = point_to_plane_icp(&source, target, &init, &cfg.icp)?;
    let (pose, next) = state.advance(scan, &icp.pose, cfg);
    Ok((
        pose,
        next,
        StepInfo {
            init_source,
            init,
            icp: Some(icp),
        },
    ))
}

/// The init the step would start from, for callers that must skip a frame.
pub fn step_initial_guess(state: &OdomState, vo_relative: Option<&Pose>, mode: OdomMode) -> (Pose, InitSource) {
    initial_guess(state, vo_relative, mode)
}

fn prepare_target(scan: &PointCloud, cfg: &OdomConfig) -> NormalCloud {
    estimate_normals_with(&voxel_downsample(scan, cfg.voxel), &cfg.normals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Point3, Vector3};

    fn room() -> PointCloud {
        let mut pts = Vec::new();
        for i in 0..60 {
            for j in 0..20 {
                let (a, b) = (i as f64 * 0.3 - 9.0, j as f64 * 0.3);
                pts.push(Point3::new(a, b - 3.0, -1.5));
                pts.push(Point3::new(a, -4.0, b - 1.5));
                pts.push(Point3::new(6.0, a * 0.5, b - 1.5));
                pts.push(Point3::new(a * 0.5 + 2.0, 5.0, b - 1.5));
            }
        }
        PointCloud::new(pts, 0.0)
    }

    #[test]
    fn first_frame_is_identity() {
        let (pose, state, info) = lidar_odometry_step(
            &OdomState::new(),
            &room(),
            None,
            OdomMode::Bootstrap,
            &OdomConfig::default(),
        )
        .unwrap();
        assert_eq!(pose, Pose::identity());
        assert!(state.is_primed());
        assert_eq!(state.frame_index, 1);
        assert_eq!(info.init_source, InitSource::First);
    }

    #[test]
    fn tracks_a_moving_sensor() {
        let cfg = OdomConfig::default();
        let world = room();
        // sensor moves +0.3 m in x per frame; the scan is the world seen from it
        let motion = Pose::from_translation(Vector3::new(0.3, 0.0, 0.0));
        let mut state = OdomState::new();
        let mut sensor = Pose::identity();
        for k in 0..4 {
            let scan = world.transformed(&sensor.inverse());
            let (pose, next, info) =
                lidar_odometry_step(&state, &scan, Some(&motion), OdomMode::ConstantVelocity, &cfg).unwrap();
            let err = (pose.translation() - sensor.translation()).norm();
            assert!(err < 1e-4, "frame {k}: {err}");
            if k > 0 {
                assert_eq!(info.init_source, InitSource::ConstantVelocity);
            }
            state = next;
            sensor = sensor.compose(&motion);
        }
    }

    #[test]
    fn bootstrap_without_visual_estimate_falls_back() {
        let cfg = OdomConfig::default();
        let (_, state, _) = lidar_odometry_step(&OdomState::new(), &room(), None, OdomMode::Bootstrap, &cfg).unwrap();
        let (_, _, info) = lidar_odometry_step(&state, &room(), None, OdomMode::Bootstrap, &cfg).unwrap();
        assert_eq!(info.init_source, InitSource::Fallback);
    }
}
