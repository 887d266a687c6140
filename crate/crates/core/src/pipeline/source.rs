use std::collections::HashMap;
use std::sync::{Arc, Mutex};

use super::config::SyntheticConfig;
use super::{derive_seed, PipelineError};
use crate::geometry::{CameraIntrinsics, PointCloud, Pose};
use crate::image::ImageGray;
use crate::synth::{generate_trajectory, inject_vo_drift_with_factors, render_image, simulate_scan, LidarModel, Scene};

/// One synchronized camera/LiDAR frame.
#[derive(Debug, Clone)]
pub struct FrameBundle {
    pub index: usize,
    pub timestamp: f64,
    pub image: Arc<ImageGray>,
    pub cloud: Arc<PointCloud>,
    /// Camera-to-world pose reported by the visual odometry.
    pub vo_pose: Pose,
    pub gt_pose: Option<Pose>,
}

/// Random access to a sequence of frames. Images and clouds may be produced
/// lazily; the pose streams are cheap.
pub trait FrameSource {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn intrinsics(&self) -> CameraIntrinsics;

    /// LiDAR-to-camera extrinsics.
    fn lidar_to_camera(&self) -> Pose;

    fn timestamp(&self, index: usize) -> f64;

    fn vo_pose(&self, index: usize) -> Pose;

    /// Ground-truth camera-to-world pose, when known.
    fn gt_pose(&self, index: usize) -> Option<Pose>;

    fn image(&self, index: usize) -> Result<Arc<ImageGray>, PipelineError>;

    fn cloud(&self, index: usize) -> Result<Arc<PointCloud>, PipelineError>;

    /// The generating scene, for sources that have one.
    fn scene(&self) -> Option<&Scene> {
        None
    }

    fn frame(&self, index: usize) -> Result<FrameBundle, PipelineError> {
        Ok(FrameBundle {
            index,
            timestamp: self.timestamp(index),
            image: self.image(index)?,
            cloud: self.cloud(index)?,
            vo_pose: self.vo_pose(index),
            gt_pose: self.gt_pose(index),
        })
    }
}

/// A rendered world with ground-truth and drifted visual-odometry poses.
///
/// Rendered images are kept in a cache so several runs over the same sequence
/// (e.g. comparing odometry modes) render each frame once.
#[derive(Debug)]
pub struct SyntheticSequence {
    scene: Scene,
    lidar: LidarModel,
    intrinsics: CameraIntrinsics,
    lidar_to_camera: Pose,
    gt: Vec<(f64, Pose)>,
    vo: Vec<(f64, Pose)>,
    drift_factors: Vec<f64>,
    seed: u64,
    images: Mutex<HashMap<usize, Arc<ImageGray>>>,
}

impl SyntheticSequence {
    pub fn generate(cfg: &SyntheticConfig, seed: u64) -> Result<Self, PipelineError> {
        let spec = cfg.trajectory_spec();
        let gt = generate_trajectory(&spec)?;
        let scene = Scene::along_path(&spec.path, spec.length, &cfg.scene_config(), seed)?;
        let (vo, drift_factors) = inject_vo_drift_with_factors(&gt, &cfg.drift_model(derive_seed(seed, 1, 0)))?;
        let lidar = cfg.lidar_model();
        lidar.validate()?;
        Ok(Self {
            scene,
            lidar,
            intrinsics: cfg.rig.intrinsics,
            lidar_to_camera: cfg.rig.lidar_to_camera,
            gt,
            vo,
            drift_factors,
            seed,
            images: Mutex::new(HashMap::new()),
        })
    }

    pub fn ground_truth(&self) -> &[(f64, Pose)] {
        &self.gt
    }

    pub fn visual_odometry(&self) -> &[(f64, Pose)] {
        &self.vo
    }

    /// Factor applied to the visual odometry's motion from frame `k` to `k + 1`.
    pub fn drift_factors(&self) -> &[f64] {
        &self.drift_factors
    }

    pub fn lidar_model(&self) -> &LidarModel {
        &self.lidar
    }

    pub fn lidar_to_world(&self, index: usize) -> Pose {
        self.gt[index].1.compose(&self.lidar_to_camera)
    }

    /// Drops cached images.
    pub fn clear_cache(&self) {
        self.images.lock().expect("image cache poisoned").clear();
    }
}

impl FrameSource for SyntheticSequence {
    fn len(&self) -> usize {
        self.gt.len()
    }

    fn intrinsics(&self) -> CameraIntrinsics {
        self.intrinsics
    }

    fn lidar_to_camera(&self) -> Pose {
        self.lidar_to_camera
    }

    fn timestamp(&self, index: usize) -> f64 {
        self.gt[index].0
    }

    fn vo_pose(&self, index: usize) -> Pose {
        self.vo[index].1
    }

    fn gt_pose(&self, index: usize) -> Option<Pose> {
        Some(self.gt[index].1)
    }

    fn image(&self, index: usize) -> Result<Arc<ImageGray>, PipelineError> {
        if let Some(img) = self.images.lock().expect("image cache poisoned").get(&index) {
            return Ok(Arc::clone(img));
        }
        let img = Arc::new(render_image(&self.scene, &self.intrinsics, &self.gt[index].1));
        self.images
            .lock()
            .expect("image cache poisoned")
            .insert(index, Arc::clone(&img));
        Ok(img)
    }

    fn cloud(&self, index: usize) -> Result<Arc<PointCloud>, PipelineError> {
        let mut cloud = simulate_scan(
            &self.scene,
            &self.lidar,
            &self.lidar_to_world(index),
            derive_seed(self.seed, 2, index as u64),
        )?;
        cloud.timestamp = self.gt[index].0;
        Ok(Arc::new(cloud))
    }

    fn scene(&self) -> Option<&Scene> {
        Some(&self.scene)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn short() -> SyntheticConfig {
        SyntheticConfig {
            length: 4.0,
            lidar: super::super::LidarPreset::Vlp16,
            drift_factor: 1.1,
            ..Default::default()
        }
    }

    #[test]
    fn poses_and_drift_line_up() {
        let seq = SyntheticSequence::generate(&short(), 3).unwrap();
        assert_eq!(seq.len(), 9);
        assert_eq!(seq.vo_pose(0), seq.gt_pose(0).unwrap());
        let gt_step = (seq.gt_pose(1).unwrap().translation() - seq.gt_pose(0).unwrap().translation()).norm();
        let vo_step = (seq.vo_pose(1).translation() - seq.vo_pose(0).translation()).norm();
        assert!((vo_step - 1.1 * gt_step).abs() < 1e-12);
        assert!(seq.drift_factors().iter().all(|&f| f == 1.1));
    }

    #[test]
    fn frames_are_deterministic_and_cached() {
        let a = SyntheticSequence::generate(&short(), 3).unwrap();
        let b = SyntheticSequence::generate(&short(), 3).unwrap();
        let fa = a.frame(4).unwrap();
        let fb = b.frame(4).unwrap();
        assert_eq!(fa.image, fb.image);
        assert_eq!(fa.cloud.points, fb.cloud.points);
        assert_eq!(fa.cloud.timestamp, fa.timestamp);
        assert!(Arc::ptr_eq(&fa.image, &a.image(4).unwrap()));
        assert!(!fa.cloud.is_empty());
    }
}
