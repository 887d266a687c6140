use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::PipelineError;
use crate::eval::Alignment;
use crate::image::{SelectionConfig, SelectionMode, TrackerConfig};
use crate::odom::{OdomConfig, OdomMode};
use crate::scale::{CullThresholds, RansacConfig, DEFAULT_TRIGGER};
use crate::synth::{DriftModel, LidarModel, PathKind, ScaleFn, SceneConfig, SensorRig, SpeedProfile, TrajectorySpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataMode {
    Synthetic,
    Kitti,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackerKind {
    /// Pyramidal Lucas-Kanade on the images.
    Lk,
    /// Exact correspondences from the synthetic scene plus injected noise.
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LidarPreset {
    Vlp16,
    Hdl64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    Constant,
    Linear,
    RandomWalk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PathShape {
    Straight,
    Arc,
    CorridorDetour,
}

/// Scenario for synthetic runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub path: PathShape,
    /// Path length, meters.
    pub length: f64,
    /// m/s
    pub speed: f64,
    /// Hz
    pub rate: f64,
    pub arc_radius: f64,
    pub corridor_length: f64,
    pub turn_radius: f64,
    pub corridor_entry: f64,
    /// Speed multiplier applied once the path reaches `speed_step_at` meters; 1
    /// keeps the speed constant.
    pub speed_step_factor: f64,
    pub speed_step_at: f64,
    pub lidar: LidarPreset,
    pub lidar_range_noise: f64,
    pub lidar_max_range: Option<f64>,
    pub drift: DriftKind,
    /// Factor on the visual odometry's relative translations (constant drift,
    /// and the starting value of the other kinds).
    pub drift_factor: f64,
    pub drift_per_meter: f64,
    pub drift_sigma: f64,
    /// degrees
    pub drift_rot_noise: f64,
    /// meters
    pub drift_trans_noise: f64,
    /// Standard deviation of the oracle tracker's pixel noise.
    pub tracking_noise: f64,
    #[serde(skip)]
    pub rig: SensorRig,
    #[serde(skip)]
    pub scene: SceneConfig,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        Self {
            path: PathShape::Straight,
            length: 100.0,
            speed: 5.0,
            rate: 10.0,
            arc_radius: 100.0,
            corridor_length: 100.0,
            turn_radius: 15.0,
            corridor_entry: 0.0,
            speed_step_factor: 1.0,
            speed_step_at: 0.0,
            lidar: LidarPreset::Hdl64,
            lidar_range_noise: 0.0,
            lidar_max_range: None,
            drift: DriftKind::Constant,
            drift_factor: 1.0,
            drift_per_meter: 0.0,
            drift_sigma: 0.0,
            drift_rot_noise: 0.0,
            drift_trans_noise: 0.0,
            tracking_noise: 0.0,
            rig: SensorRig::default(),
            scene: SceneConfig::default(),
        }
    }
}

impl SyntheticConfig {
    pub fn path_kind(&self) -> PathKind {
        match self.path {
            PathShape::Straight => PathKind::Straight,
            PathShape::Arc => PathKind::Arc {
                radius: self.arc_radius,
            },
            PathShape::CorridorDetour => PathKind::CorridorDetour {
                corridor_length: self.corridor_length,
                turn_radius: self.turn_radius,
            },
        }
    }

    pub fn trajectory_spec(&self) -> TrajectorySpec {
        let mut spec = TrajectorySpec::new(self.path_kind(), self.length, self.speed, self.rate);
        if self.speed_step_factor != 1.0 {
            spec.speed_profile = SpeedProfile::Step {
                factor: self.speed_step_factor,
                at_distance: self.speed_step_at,
            };
        }
        spec
    }

    pub fn scene_config(&self) -> SceneConfig {
        SceneConfig {
            corridor_entry: self.corridor_entry,
            ..self.scene
        }
    }

    pub fn lidar_model(&self) -> LidarModel {
        let mut model = match self.lidar {
            LidarPreset::Vlp16 => LidarModel::vlp16(),
            LidarPreset::Hdl64 => LidarModel::hdl64(),
        };
        model.range_noise_sigma = self.lidar_range_noise;
        if let Some(r) = self.lidar_max_range {
            model.max_range = r;
        }
        model
    }

    pub fn drift_model(&self, seed: u64) -> DriftModel {
        let scale_fn = match self.drift {
            DriftKind::Constant => ScaleFn::Constant {
                factor: self.drift_factor,
            },
            DriftKind::Linear => ScaleFn::LinearInDistance {
                start: self.drift_factor,
                per_meter: self.drift_per_meter,
            },
            DriftKind::RandomWalk => ScaleFn::RandomWalk {
                start: self.drift_factor,
                sigma: self.drift_sigma,
            },
        };
        DriftModel {
            scale_fn,
            rot_noise_sigma: self.drift_rot_noise,
            trans_noise_sigma: self.drift_trans_noise,
            seed,
        }
    }
}

/// Where a KITTI-mode run reads its data.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct KittiInput {
    pub sequence_dir: Option<PathBuf>,
    /// Visual odometry poses in the trajectory file format.
    pub vo_trajectory: Option<PathBuf>,
    /// Optional ground truth in the trajectory file format; defaults to
    /// `poses.txt` (KITTI layout) inside the sequence when present.
    pub ground_truth: Option<PathBuf>,
    pub first_frame: usize,
    pub frame_count: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub data: DataMode,
    pub seed: u64,
    pub keyframe_stride: usize,
    pub tracker: TrackerKind,
    pub selection: SelectionConfig,
    pub lk: TrackerConfig,
    pub cull: CullThresholds,
    pub ransac: RansacConfig,
    pub trigger: f64,
    /// Run the LiDAR odometry next to the visual one.
    pub odometry: bool,
    pub odom_mode: OdomMode,
    pub odom: OdomConfig,
    pub alignment: Alignment,
    pub synthetic: SyntheticConfig,
    pub kitti: KittiInput,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: DataMode::Synthetic,
            seed: 0,
            keyframe_stride: 2,
            tracker: TrackerKind::Lk,
            selection: SelectionConfig::default(),
            lk: TrackerConfig::default(),
            cull: CullThresholds::default(),
            ransac: RansacConfig::default(),
            trigger: DEFAULT_TRIGGER,
            odometry: true,
            odom_mode: OdomMode::Bootstrap,
            odom: OdomConfig::default(),
            alignment: Alignment::Rigid,
            synthetic: SyntheticConfig::default(),
            kitti: KittiInput::default(),
        }
    }
}

/// Every key accepted in a config file.
pub const CONFIG_KEYS: &[&str] = &[
    "mode",
    "seed",
    "keyframe_stride",
    "tracker",
    "trigger",
    "selection.mode",
    "selection.fast_threshold",
    "selection.grad_min",
    "selection.nms_radius",
    "lk.window",
    "lk.levels",
    "lk.max_iters",
    "lk.eps",
    "lk.min_eig",
    "cull.max_normal_error",
    "cull.min_abs_cos",
    "ransac.iterations",
    "ransac.inlier_tol",
    "ransac.min_samples",
    "ransac.min_inliers",
    "odom.enabled",
    "odom.mode",
    "odom.voxel",
    "odom.normal_k",
    "odom.normal_radius",
    "odom.max_corr_dist",
    "odom.max_iters",
    "odom.min_correspondences",
    "eval.alignment",
    "synth.path",
    "synth.length",
    "synth.speed",
    "synth.rate",
    "synth.arc_radius",
    "synth.corridor_length",
    "synth.turn_radius",
    "synth.corridor_entry",
    "synth.speed_step_factor",
    "synth.speed_step_at",
    "synth.lidar",
    "synth.lidar_range_noise",
    "synth.lidar_max_range",
    "synth.drift",
    "synth.drift_factor",
    "synth.drift_per_meter",
    "synth.drift_sigma",
    "synth.drift_rot_noise",
    "synth.drift_trans_noise",
    "synth.tracking_noise",
    "kitti.sequence_dir",
    "kitti.vo_trajectory",
    "kitti.ground_truth",
    "kitti.first_frame",
    "kitti.frame_count",
];

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T, String>
where
    T::Err: std::fmt::Display,
{
    value
        .parse()
        .map_err(|e| format!("bad value `{value}` for `{key}`: {e}"))
}

fn choice<T: Copy>(key: &str, value: &str, options: &[(&str, T)]) -> Result<T, String> {
    options
        .iter()
        .find(|(name, _)| *name == value)
        .map(|(_, v)| *v)
        .ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(n, _)| *n).collect();
            format!("bad value `{value}` for `{key}`, expected one of {}", names.join(", "))
        })
}

impl RunConfig {
    /// Reads a `key = value` config file on top of the defaults.
    pub fn load(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
        let mut cfg = Self::default();
        cfg.apply_text(&text, path)?;
        Ok(cfg)
    }

    /// Applies `key = value` lines; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str, origin: &Path) -> Result<(), PipelineError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| PipelineError::Parse {
                path: origin.to_path_buf(),
                line: i + 1,
                message,
            };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected `key = value`".into()))?;
            let key = key.trim();
            if !CONFIG_KEYS.contains(&key) {
                return Err(PipelineError::Config(format!(
                    "{}:{}: unknown key `{key}`",
                    origin.display(),
                    i + 1
                )));
            }
            self.set(key, value.trim()).map_err(err)?;
        }
        Ok(())
    }

    /// Sets one key; the key must be in [`CONFIG_KEYS`].
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        let s = &mut self.synthetic;
        match key {
            "mode" => {
                self.data = choice(
                    key,
                    value,
                    &[("synthetic", DataMode::Synthetic), ("kitti", DataMode::Kitti)],
                )?
            }
            "seed" => self.seed = parse(key, value)?,
            "keyframe_stride" => self.keyframe_stride = parse(key, value)?,
            "tracker" => {
                self.tracker = choice(key, value, &[("lk", TrackerKind::Lk), ("oracle", TrackerKind::Oracle)])?
            }
            "trigger" => self.trigger = parse(key, value)?,
            "selection.mode" => {
                self.selection.mode = choice(
                    key,
                    value,
                    &[("dense", SelectionMode::Dense), ("sparse", SelectionMode::Sparse)],
                )?
            }
            "selection.fast_threshold" => self.selection.fast_threshold = parse(key, value)?,
            "selection.grad_min" => self.selection.grad_min = parse(key, value)?,
            "selection.nms_radius" => self.selection.nms_radius = parse(key, value)?,
            "lk.window" => self.lk.window = parse(key, value)?,
            "lk.levels" => self.lk.levels = parse(key, value)?,
            "lk.max_iters" => self.lk.max_iters = parse(key, value)?,
            "lk.eps" => self.lk.eps = parse(key, value)?,
            "lk.min_eig" => self.lk.min_eig = parse(key, value)?,
            "cull.max_normal_error" => self.cull.max_normal_error = parse(key, value)?,
            "cull.min_abs_cos" => self.cull.min_abs_cos = parse(key, value)?,
            "ransac.iterations" => self.ransac.iterations = parse(key, value)?,
            "ransac.inlier_tol" => self.ransac.inlier_tol = parse(key, value)?,
            "ransac.min_samples" => self.ransac.min_samples = parse(key, value)?,
            "ransac.min_inliers" => self.ransac.min_inliers = parse(key, value)?,
            "odom.enabled" => self.odometry = parse(key, value)?,
            "odom.mode" => {
                self.odom_mode = choice(
                    key,
                    value,
                    &[
                        ("bootstrap", OdomMode::Bootstrap),
                        ("constvel", OdomMode::ConstantVelocity),
                    ],
                )?
            }
            "odom.voxel" => self.odom.voxel = parse(key, value)?,
            "odom.normal_k" => self.odom.normals.k = parse(key, value)?,
            "odom.normal_radius" => self.odom.normals.max_radius = parse(key, value)?,
            "odom.max_corr_dist" => self.odom.icp.max_corr_dist = parse(key, value)?,
            "odom.max_iters" => self.odom.icp.max_iters = parse(key, value)?,
            "odom.min_correspondences" => self.odom.icp.min_correspondences = parse(key, value)?,
            "eval.alignment" => {
                self.alignment = choice(
                    key,
                    value,
                    &[
                        ("none", Alignment::None),
                        ("rigid", Alignment::Rigid),
                        ("similarity", Alignment::Similarity),
                    ],
                )?
            }
            "synth.path" => {
                s.path = choice(
                    key,
                    value,
                    &[
                        ("straight", PathShape::Straight),
                        ("arc", PathShape::Arc),
                        ("corridor-detour", PathShape::CorridorDetour),
                    ],
                )?
            }
            "synth.length" => s.length = parse(key, value)?,
            "synth.speed" => s.speed = parse(key, value)?,
            "synth.rate" => s.rate = parse(key, value)?,
            "synth.arc_radius" => s.arc_radius = parse(key, value)?,
            "synth.corridor_length" => s.corridor_length = parse(key, value)?,
            "synth.turn_radius" => s.turn_radius = parse(key, value)?,
            "synth.corridor_entry" => s.corridor_entry = parse(key, value)?,
            "synth.speed_step_factor" => s.speed_step_factor = parse(key, value)?,
            "synth.speed_step_at" => s.speed_step_at = parse(key, value)?,
            "synth.lidar" => {
                s.lidar = choice(
                    key,
                    value,
                    &[("vlp16", LidarPreset::Vlp16), ("hdl64", LidarPreset::Hdl64)],
                )?
            }
            "synth.lidar_range_noise" => s.lidar_range_noise = parse(key, value)?,
            "synth.lidar_max_range" => s.lidar_max_range = Some(parse(key, value)?),
            "synth.drift" => {
                s.drift = choice(
                    key,
                    value,
                    &[
                        ("constant", DriftKind::Constant),
                        ("linear", DriftKind::Linear),
                        ("random-walk", DriftKind::RandomWalk),
                    ],
                )?
            }
            "synth.drift_factor" => s.drift_factor = parse(key, value)?,
            "synth.drift_per_meter" => s.drift_per_meter = parse(key, value)?,
            "synth.drift_sigma" => s.drift_sigma = parse(key, value)?,
            "synth.drift_rot_noise" => s.drift_rot_noise = parse(key, value)?,
            "synth.drift_trans_noise" => s.drift_trans_noise = parse(key, value)?,
            "synth.tracking_noise" => s.tracking_noise = parse(key, value)?,
            "kitti.sequence_dir" => self.kitti.sequence_dir = Some(PathBuf::from(value)),
            "kitti.vo_trajectory" => self.kitti.vo_trajectory = Some(PathBuf::from(value)),
            "kitti.ground_truth" => self.kitti.ground_truth = Some(PathBuf::from(value)),
            "kitti.first_frame" => self.kitti.first_frame = parse(key, value)?,
            "kitti.frame_count" => self.kitti.frame_count = Some(parse(key, value)?),
            _ => return Err(format!("unknown key `{key}`")),
        }
        Ok(())
    }

    /// Checks value ranges.
    pub fn validate(&self) -> Result<(), PipelineError> {
        let fail = |msg: &str| Err(PipelineError::Config(msg.into()));
        if self.keyframe_stride == 0 {
            return fail("keyframe_stride must be at least 1");
        }
        if !(self.trigger > 0.0 && self.trigger < 1.0) {
            return fail("trigger must be in (0, 1)");
        }
        if !(self.cull.max_normal_error > 0.0) || !(0.0..=1.0).contains(&self.cull.min_abs_cos) {
            return fail("cull.max_normal_error must be positive and cull.min_abs_cos in [0, 1]");
        }
        if !(self.ransac.inlier_tol > 0.0 && self.ransac.inlier_tol < 1.0) || self.ransac.iterations == 0 {
            return fail("ransac.inlier_tol must be in (0, 1) and ransac.iterations positive");
        }
        if self.lk.window < 3 || self.lk.window.is_multiple_of(2) || self.lk.levels == 0 || !(self.lk.eps > 0.0) {
            return fail("lk.window must be odd and >= 3, lk.levels and lk.eps positive");
        }
        if !(self.selection.nms_radius >= 0.0 && self.selection.grad_min >= 0.0) {
            return fail("selection.nms_radius and selection.grad_min must be non-negative");
        }
        if !(self.odom.voxel >= 0.0) || self.odom.normals.k < 3 || !(self.odom.icp.max_corr_dist > 0.0) {
            return fail("odom.voxel must be non-negative, odom.normal_k >= 3, odom.max_corr_dist positive");
        }
        let s = &self.synthetic;
        if !(s.length > 0.0 && s.speed > 0.0 && s.rate > 0.0) {
            return fail("synth.length, synth.speed and synth.rate must be positive");
        }
        if !(s.tracking_noise >= 0.0 && s.lidar_range_noise >= 0.0 && s.drift_factor > 0.0 && s.speed_step_factor > 0.0)
        {
            return fail("synthetic noise levels must be non-negative and factors positive");
        }
        if self.data == DataMode::Synthetic {
            s.lidar_model().validate()?;
        }
        if self.data == DataMode::Kitti {
            if self.kitti.sequence_dir.is_none() || self.kitti.vo_trajectory.is_none() {
                return fail("kitti mode needs kitti.sequence_dir and kitti.vo_trajectory");
            }
            if self.tracker == TrackerKind::Oracle {
                return fail("the oracle tracker needs the synthetic scene");
            }
        }
        Ok(())
    }
}
