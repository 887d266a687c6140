use std::sync::Arc;

use super::config::{DataMode, RunConfig, TrackerKind};
use super::kitti::KittiSequence;
use super::report::{CorrectionEvent, KeyframeFailure, OdomSummary, RunEval, RunReport};
use super::source::{FrameSource, SyntheticSequence};
use super::tracker::{LkTracker, OracleTracker, PointTracker};
use super::{derive_seed, PipelineError};
use crate::eval::{evaluate, Alignment, EvalError, EvalReport, Trajectory};
use crate::geometry::{project_cloud, CameraIntrinsics, GeometryError, PointCloud, Pose, ProjectedKeypoint};
use crate::image::{gradient_unchecked, select_keypoints, ImageGray, Pyramid};
use crate::odom::{lidar_odometry_step, step_initial_guess, InitSource, OdomState};
use crate::scale::{
    apply_scale_correction, compute_scale_samples, cull_matches, ransac_scale, should_correct_with, LocalMap,
    MatchedPair, RansacConfig, SampleDrops, ScaleError, ScaleEstimate, ScaleSample, TrackCandidate,
};

/// What the scale estimator needs from a pair of keyframes.
#[derive(Debug, Clone, Copy)]
pub struct KeyframeInput<'a> {
    pub intrinsics: CameraIntrinsics,
    pub lidar_to_camera: Pose,
    pub prev_image: &'a ImageGray,
    pub cur_image: &'a ImageGray,
    /// LiDAR scan taken with the previous keyframe.
    pub prev_cloud: &'a PointCloud,
    /// Visual-odometry motion taking previous-camera coordinates into the
    /// current camera.
    pub prev_to_cur: Pose,
}

/// Every intermediate product of one scale estimate.
#[derive(Debug, Clone)]
pub struct KeyframeScale {
    pub projected: usize,
    pub keypoints: Vec<ProjectedKeypoint>,
    /// One per keypoint, lost tracks included.
    pub candidates: Vec<TrackCandidate>,
    /// Matches that survived the epipolar tests.
    pub pairs: Vec<MatchedPair>,
    pub samples: Vec<ScaleSample>,
    pub drops: SampleDrops,
    pub estimate: Result<ScaleEstimate, ScaleError>,
}

impl KeyframeScale {
    pub fn tracked(&self) -> usize {
        self.candidates.iter().filter(|c| c.track.is_tracked()).count()
    }
}

/// Projection, keypoint selection, tracking, culling, triangulation and RANSAC
/// for one keyframe pair.
pub fn estimate_keyframe_scale(
    input: &KeyframeInput<'_>,
    tracker: &dyn PointTracker,
    cfg: &RunConfig,
    ransac: &RansacConfig,
) -> Result<KeyframeScale, PipelineError> {
    let projected = project_cloud(&input.intrinsics, &input.lidar_to_camera, input.prev_cloud);
    let keypoints = select_keypoints(&projected, input.prev_image, &cfg.selection);
    let pixels: Vec<_> = keypoints.iter().map(|kp| kp.pixel).collect();
    let tracks = tracker.track(&pixels)?;
    let candidates: Vec<TrackCandidate> = keypoints
        .iter()
        .zip(&tracks)
        .map(|(kp, t)| TrackCandidate {
            track: *t,
            lidar_depth: kp.depth,
            grad_cur: gradient_unchecked(input.cur_image, t.cur_pixel.x, t.cur_pixel.y),
        })
        .collect();

    let mut out = KeyframeScale {
        projected: projected.len(),
        keypoints,
        candidates,
        pairs: Vec::new(),
        samples: Vec::new(),
        drops: SampleDrops::default(),
        estimate: Err(ScaleError::InsufficientSamples {
            available: 0,
            required: ransac.min_samples,
        }),
    };
    let culled = cull_matches(&out.candidates, &input.intrinsics, &input.prev_to_cur, &cfg.cull).and_then(|pairs| {
        let (samples, drops) = compute_scale_samples(&pairs, &input.intrinsics, &input.prev_to_cur)?;
        Ok((pairs, samples, drops))
    });
    match culled {
        Ok((pairs, samples, drops)) => {
            out.estimate = ransac_scale(&samples, ransac);
            out.pairs = pairs;
            out.samples = samples;
            out.drops = drops;
        }
        Err(e) => out.estimate = Err(e),
    }
    Ok(out)
}

/// Loads the sequence the config points at and runs it.
pub fn run_pipeline(cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    match cfg.data {
        DataMode::Synthetic => run_sequence(&SyntheticSequence::generate(&cfg.synthetic, cfg.seed)?, cfg),
        DataMode::Kitti => {
            let (Some(dir), Some(vo)) = (&cfg.kitti.sequence_dir, &cfg.kitti.vo_trajectory) else {
                return Err(PipelineError::Config(
                    "kitti mode needs kitti.sequence_dir and kitti.vo_trajectory".into(),
                ));
            };
            let mut seq = KittiSequence::open(dir)?.with_range(cfg.kitti.first_frame, cfg.kitti.frame_count)?;
            if let Some(gt) = &cfg.kitti.ground_truth {
                seq = seq.with_ground_truth(gt)?;
            }
            run_sequence(&seq.with_visual_odometry(vo)?, cfg)
        }
    }
}

struct Keyframe {
    index: usize,
    image: Arc<ImageGray>,
    cloud: Arc<PointCloud>,
    pyramid: Option<Pyramid>,
}

/// Transform between LiDAR frames equivalent to the camera motion `cam_rel`.
fn lidar_relative(lidar_to_camera: &Pose, cam_rel: &Pose) -> Pose {
    lidar_to_camera.inverse().compose(cam_rel).compose(lidar_to_camera)
}

/// Runs the frame loop over `source`.
///
/// Visual-odometry relative translations are multiplied by the running scale
/// correction. Every `keyframe_stride` frames the scale between the previous and
/// the current keyframe is estimated; when it triggers, the frames of that
/// interval are rescaled about the previous keyframe and the running correction
/// absorbs the estimate. The LiDAR odometry registers every frame, seeded by
/// the corrected visual motion in bootstrap mode.
pub fn run_sequence(source: &dyn FrameSource, cfg: &RunConfig) -> Result<RunReport, PipelineError> {
    cfg.validate()?;
    let n = source.len();
    if n < 2 {
        return Err(PipelineError::Domain(format!("need at least 2 frames, got {n}")));
    }
    let oracle_scene = match cfg.tracker {
        TrackerKind::Lk => None,
        TrackerKind::Oracle => match (source.scene(), source.gt_pose(0)) {
            (Some(scene), Some(_)) => Some(scene),
            _ => {
                return Err(PipelineError::Config(
                    "the oracle tracker needs a synthetic source".into(),
                ))
            }
        },
    };
    let k = source.intrinsics();
    let t_lc = source.lidar_to_camera();
    let stride = cfg.keyframe_stride;

    let timestamps: Vec<f64> = (0..n).map(|i| source.timestamp(i)).collect();
    let vo_input: Vec<Pose> = (0..n).map(|i| source.vo_pose(i)).collect();
    let gt: Option<Vec<Pose>> = (0..n).map(|i| source.gt_pose(i)).collect();
    let mut corrected = Vec::with_capacity(n);
    corrected.push(vo_input[0]);
    let mut correction = 1.0;

    let load_keyframe = |i: usize| -> Result<Keyframe, PipelineError> {
        let image = source.image(i)?;
        let pyramid = (cfg.tracker == TrackerKind::Lk).then(|| Pyramid::build(&image, cfg.lk.levels));
        Ok(Keyframe {
            index: i,
            cloud: source.cloud(i)?,
            image,
            pyramid,
        })
    };
    let mut keyframe = load_keyframe(0).map_err(|e| e.at_frame(0))?;

    let mut events = Vec::new();
    let mut failures = Vec::new();
    let mut keyframe_count = 1;

    let mut odom_state = OdomState::new();
    let mut lidar_poses = Vec::with_capacity(n);
    let mut odom_summary = OdomSummary::new(cfg.odom_mode);
    if cfg.odometry {
        let (pose, state, _) = lidar_odometry_step(&odom_state, &keyframe.cloud, None, cfg.odom_mode, &cfg.odom)
            .map_err(|e| PipelineError::Domain(format!("frame 0: {e}")))?;
        odom_state = state;
        lidar_poses.push(pose);
    }

    for i in 1..n {
        let rel = vo_input[i - 1].inverse().compose(&vo_input[i]);
        let step = rel.with_translation(rel.translation() * correction);
        corrected.push(corrected[i - 1].compose(&step));

        let is_keyframe = i % stride == 0;
        let mut cloud = None;
        if is_keyframe {
            keyframe_count += 1;
            let cur = load_keyframe(i).map_err(|e| e.at_frame(i))?;
            let prev = keyframe.index;
            let cur_to_prev = corrected[prev].inverse().compose(&corrected[i]);
            let input = KeyframeInput {
                intrinsics: k,
                lidar_to_camera: t_lc,
                prev_image: &keyframe.image,
                cur_image: &cur.image,
                prev_cloud: &keyframe.cloud,
                prev_to_cur: cur_to_prev.inverse(),
            };
            let ransac = RansacConfig {
                seed: derive_seed(cfg.seed ^ cfg.ransac.seed, 3, i as u64),
                ..cfg.ransac
            };
            let result = match (&keyframe.pyramid, &cur.pyramid, oracle_scene) {
                (Some(p0), Some(p1), _) => {
                    let t = LkTracker {
                        prev: p0,
                        cur: p1,
                        cfg: cfg.lk,
                    };
                    estimate_keyframe_scale(&input, &t, cfg, &ransac)
                }
                (_, _, Some(scene)) => {
                    let t = OracleTracker {
                        scene,
                        intrinsics: k,
                        prev_to_world: source.gt_pose(prev).expect("checked above"),
                        cur_to_world: source.gt_pose(i).expect("checked above"),
                        cur_image: &cur.image,
                        noise: cfg.synthetic.tracking_noise,
                        seed: derive_seed(cfg.seed, 4, i as u64),
                    };
                    estimate_keyframe_scale(&input, &t, cfg, &ransac)
                }
                _ => unreachable!("tracker inputs match the configured tracker"),
            };
            let reference_scale = gt.as_ref().map(|g| {
                let gt_rel = g[prev].inverse().compose(&g[i]);
                gt_rel.translation().norm() / cur_to_prev.translation().norm()
            });
            match result {
                Ok(ks) => match ks.estimate {
                    Ok(est) => {
                        let triggered = should_correct_with(&est, cfg.trigger);
                        if triggered {
                            let anchor = corrected[prev];
                            let points = ks.samples.iter().map(|s| anchor.transform_point(&s.point)).collect();
                            let map =
                                LocalMap::new(corrected[prev..=i].to_vec(), points, 0).expect("reference in range");
                            let map = apply_scale_correction(&map, est.scale)
                                .map_err(|e| PipelineError::Domain(e.to_string()))?;
                            corrected.truncate(prev);
                            corrected.extend(map.keyframe_poses);
                            correction *= est.scale;
                        }
                        events.push(CorrectionEvent {
                            frame: i,
                            timestamp: timestamps[i],
                            scale: est.scale,
                            sample_count: est.sample_count,
                            inlier_count: est.inlier_count,
                            inlier_spread: est.inlier_spread,
                            keypoints: ks.keypoints.len(),
                            tracked: ks.tracked(),
                            culled: ks.pairs.len(),
                            triggered,
                            correction,
                            reference_scale,
                        });
                    }
                    Err(e) => failures.push(KeyframeFailure::new(i, timestamps[i], &e)),
                },
                Err(e) => failures.push(KeyframeFailure::new(i, timestamps[i], &e)),
            }
            cloud = Some(Arc::clone(&cur.cloud));
            keyframe = cur;
        }

        if cfg.odometry {
            let scan = match cloud {
                Some(c) => c,
                None => source.cloud(i).map_err(|e| e.at_frame(i))?,
            };
            let cam_rel = corrected[i - 1].inverse().compose(&corrected[i]);
            let vo_rel = lidar_relative(&t_lc, &cam_rel);
            let (pose, state) = match lidar_odometry_step(&odom_state, &scan, Some(&vo_rel), cfg.odom_mode, &cfg.odom) {
                Ok((pose, state, info)) => {
                    odom_summary.record(&info);
                    (pose, state)
                }
                Err(_) => {
                    let (init, source) = step_initial_guess(&odom_state, Some(&vo_rel), cfg.odom_mode);
                    odom_summary.record_failure(source);
                    odom_state.advance(&scan, &init, &cfg.odom)
                }
            };
            odom_state = state;
            lidar_poses.push(pose);
        }
    }

    let lidar = cfg.odometry.then(|| {
        let anchor = corrected[0].compose(&t_lc);
        let camera_from_lidar = t_lc.inverse();
        lidar_poses
            .iter()
            .map(|p| anchor.compose(p).compose(&camera_from_lidar))
            .collect::<Vec<_>>()
    });
    let eval = match &gt {
        Some(g) => evaluate_run(&timestamps, g, &vo_input, &corrected, lidar.as_deref(), cfg)?,
        None => None,
    };
    Ok(RunReport {
        frame_count: n,
        keyframe_count,
        events,
        failures,
        odom: cfg.odometry.then_some(odom_summary),
        eval,
        timestamps,
        vo_input,
        vo_corrected: corrected,
        lidar,
        ground_truth: gt,
    })
}

fn evaluate_run(
    timestamps: &[f64],
    gt: &[Pose],
    vo_input: &[Pose],
    corrected: &[Pose],
    lidar: Option<&[Pose]>,
    cfg: &RunConfig,
) -> Result<Option<RunEval>, PipelineError> {
    let traj = |poses: &[Pose]| Trajectory::new(timestamps.iter().copied().zip(poses.iter().copied()).collect());
    let gt_traj = traj(gt)?;
    // A straight path cannot fix a rotation; such runs are reported unaligned
    // and the report names the alignment actually used.
    let eval = |poses: &[Pose]| -> Result<Option<EvalReport>, PipelineError> {
        let est = traj(poses)?;
        let result = match evaluate(&gt_traj, &est, cfg.alignment) {
            Err(EvalError::Geometry(GeometryError::AlignmentDegenerate(_))) => {
                evaluate(&gt_traj, &est, Alignment::None)
            }
            r => r,
        };
        match result {
            Ok(r) => Ok(Some(r)),
            Err(EvalError::InsufficientData(_)) => Ok(None),
            Err(e) => Err(e.into()),
        }
    };
    let (Some(input), Some(corr)) = (eval(vo_input)?, eval(corrected)?) else {
        return Ok(None);
    };
    let last = gt.len() - 1;
    let final_error = |poses: &[Pose]| (poses[last].translation() - gt[last].translation()).norm();
    Ok(Some(RunEval {
        vo_input: input,
        vo_corrected: corr,
        lidar: lidar.map(eval).transpose()?.flatten(),
        final_error_input: final_error(vo_input),
        final_error_corrected: final_error(corrected),
        final_error_lidar: lidar.map(final_error),
    }))
}

impl KeyframeFailure {
    fn new(frame: usize, timestamp: f64, reason: &dyn std::fmt::Display) -> Self {
        Self {
            frame,
            timestamp,
            reason: reason.to_string(),
        }
    }
}

impl OdomSummary {
    fn record(&mut self, info: &crate::odom::StepInfo) {
        self.frames += 1;
        if info.init_source == InitSource::Fallback {
            self.fallback_inits += 1;
        }
        if let Some(icp) = &info.icp {
            self.icp_iterations += icp.iterations;
            if icp.degenerate_directions > 0 {
                self.degenerate_frames += 1;
            }
        }
    }

    fn record_failure(&mut self, source: InitSource) {
        self.frames += 1;
        self.registration_failures += 1;
        if source == InitSource::Fallback {
            self.fallback_inits += 1;
        }
    }
}
