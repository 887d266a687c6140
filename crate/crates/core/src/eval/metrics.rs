use nalgebra::Point3;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{associate, EvalError, Trajectory};
use crate::geometry::{umeyama_align, Pose, Similarity};

/// Segment lengths along the ground-truth path, meters.
pub const SEGMENT_LENGTHS: [f64; 8] = [100.0, 200.0, 300.0, 400.0, 500.0, 600.0, 700.0, 800.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Alignment {
    None,
    Rigid,
    Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentInfo {
    pub kind: Alignment,
    /// Transform applied to the estimate before computing errors.
    pub similarity: Similarity,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub ate_rmse: f64,
    pub are_deg: Option<f64>,
    pub kitti_trans_pct: Option<f64>,
    pub kitti_rot_deg_per_m: Option<f64>,
    pub alignment: AlignmentInfo,
    pub pose_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SegmentError {
    pub start_index: usize,
    pub length: f64,
    pub trans_pct: f64,
    pub rot_deg_per_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentErrors {
    pub trans_pct: f64,
    pub rot_deg_per_m: f64,
    pub segments: Vec<SegmentError>,
}

/// Absolute translation RMSE and geodesic rotation RMSE (degrees) after the
/// requested alignment of `est` onto `gt`. The estimate is resampled at the
/// ground-truth timestamps it covers.
pub fn evaluate_ate_are(gt: &Trajectory, est: &Trajectory, align: Alignment) -> Result<EvalReport, EvalError> {
    let (gt_s, est_p) = associate(gt, est);
    if gt_s.len() < 3 {
        return Err(EvalError::InsufficientData(gt_s.len()));
    }
    let gt_pts: Vec<Point3<f64>> = gt_s.iter().map(|(_, p)| Point3::from(p.translation())).collect();
    let est_pts: Vec<Point3<f64>> = est_p.iter().map(|p| Point3::from(p.translation())).collect();
    let similarity = match align {
        Alignment::None => Similarity::identity(),
        Alignment::Rigid => umeyama_align(&gt_pts, &est_pts, false)?,
        Alignment::Similarity => umeyama_align(&gt_pts, &est_pts, true)?,
    };

    let n = gt_s.len() as f64;
    let mut trans_sq = 0.0;
    let mut rot_sq = 0.0;
    for ((_, g), e) in gt_s.iter().zip(&est_p) {
        let aligned = similarity.apply_pose(e);
        trans_sq += (aligned.translation() - g.translation()).norm_squared();
        rot_sq += aligned.rotation_angle_to(g).powi(2);
    }
    Ok(EvalReport {
        ate_rmse: (trans_sq / n).sqrt(),
        are_deg: Some((rot_sq / n).sqrt().to_degrees()),
        kitti_trans_pct: None,
        kitti_rot_deg_per_m: None,
        alignment: AlignmentInfo {
            kind: align,
            similarity,
        },
        pose_count: gt_s.len(),
    })
}

/// Average relative error over every sub-path of 100, 200, ..., 800 m (by
/// ground-truth distance) starting at every ground-truth sample.
pub fn kitti_segment_errors(gt: &Trajectory, est: &Trajectory) -> Result<SegmentErrors, EvalError> {
    let (gt_s, est_p) = associate(gt, est);
    let gt_p: Vec<Pose> = gt_s.iter().map(|s| s.1).collect();
    let mut dist = Vec::with_capacity(gt_p.len());
    let mut acc = 0.0;
    for (i, p) in gt_p.iter().enumerate() {
        if i > 0 {
            acc += (p.translation() - gt_p[i - 1].translation()).norm();
        }
        dist.push(acc);
    }

    let segments: Vec<SegmentError> = (0..gt_p.len())
        .into_par_iter()
        .flat_map_iter(|i| {
            let (gt_p, est_p, dist) = (&gt_p, &est_p, &dist);
            SEGMENT_LENGTHS.iter().filter_map(move |&len| {
                let j = i + dist[i..].partition_point(|&d| d - dist[i] < len);
                if j >= gt_p.len() {
                    return None;
                }
                let rel_gt = gt_p[i].inverse().compose(&gt_p[j]);
                let rel_est = est_p[i].inverse().compose(&est_p[j]);
                let err = rel_est.inverse().compose(&rel_gt);
                Some(SegmentError {
                    start_index: i,
                    length: len,
                    trans_pct: err.translation().norm() / len * 100.0,
                    rot_deg_per_m: err.rotation_angle().to_degrees() / len,
                })
            })
        })
        .collect();
    if segments.is_empty() {
        return Err(EvalError::NoValidSegments);
    }
    let n = segments.len() as f64;
    Ok(SegmentErrors {
        trans_pct: segments.iter().map(|s| s.trans_pct).sum::<f64>() / n,
        rot_deg_per_m: segments.iter().map(|s| s.rot_deg_per_m).sum::<f64>() / n,
        segments,
    })
}

/// ATE/ARE plus the segment metrics when the path is long enough for them.
pub fn evaluate(gt: &Trajectory, est: &Trajectory, align: Alignment) -> Result<EvalReport, EvalError> {
    let mut report = evaluate_ate_are(gt, est, align)?;
    match kitti_segment_errors(gt, est) {
        Ok(seg) => {
            report.kitti_trans_pct = Some(seg.trans_pct);
            report.kitti_rot_deg_per_m = Some(seg.rot_deg_per_m);
        }
        Err(EvalError::NoValidSegments) => {}
        Err(e) => return Err(e),
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{UnitQuaternion, Vector3};
    use proptest::prelude::*;

    fn wavy(n: usize, step: f64) -> Trajectory {
        Trajectory::new(
            (0..n)
                .map(|i| {
                    let s = i as f64 * step;
                    let yaw = 0.3 * (s / 40.0).sin();
                    let pose =
                        Pose::from_axis_angle(&Vector3::z(), yaw, Vector3::new(s, 10.0 * (s / 60.0).sin(), 0.02 * s));
                    (i as f64 * 0.1, pose)
                })
                .collect(),
        )
        .unwrap()
    }

    fn map(traj: &Trajectory, f: impl Fn(&Pose) -> Pose) -> Trajectory {
        Trajectory::new(traj.samples().iter().map(|(t, p)| (*t, f(p))).collect()).unwrap()
    }

    #[test]
    fn identical_trajectories_have_zero_error() {
        let gt = wavy(50, 1.0);
        let r = evaluate_ate_are(&gt, &gt, Alignment::None).unwrap();
        assert_eq!(r.ate_rmse, 0.0);
        assert_eq!(r.are_deg, Some(0.0));
    }

    #[test]
    fn shifted_estimate() {
        let gt = wavy(50, 1.0);
        let shift = Vector3::new(0.0, 1.0, 0.0);
        let est = map(&gt, |p| p.with_translation(p.translation() + shift));
        assert_eq!(evaluate_ate_are(&gt, &est, Alignment::None).unwrap().ate_rmse, 1.0);
        assert!(evaluate_ate_are(&gt, &est, Alignment::Rigid).unwrap().ate_rmse < 1e-9);
    }

    #[test]
    fn rotated_orientations() {
        let gt = wavy(50, 1.0);
        let q = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), 5f64.to_radians());
        let est = map(&gt, |p| Pose::new(q * p.rotation(), p.translation()));
        let are = evaluate_ate_are(&gt, &est, Alignment::None).unwrap().are_deg.unwrap();
        assert!((are - 5.0).abs() < 1e-9, "{are}");
    }

    #[test]
    fn too_few_poses() {
        let gt = wavy(2, 1.0);
        assert_eq!(
            evaluate_ate_are(&gt, &gt, Alignment::None),
            Err(EvalError::InsufficientData(2))
        );
    }

    #[test]
    fn shrunk_straight_path_has_two_percent_drift() {
        let gt = Trajectory::new(
            (0..=1000)
                .map(|i| (i as f64 * 0.1, Pose::from_translation(Vector3::new(i as f64, 0.0, 0.0))))
                .collect(),
        )
        .unwrap();
        let est = map(&gt, |p| p.with_translation(p.translation() * 0.98));
        let seg = kitti_segment_errors(&gt, &est).unwrap();
        assert!((seg.trans_pct - 2.0).abs() < 0.05, "{}", seg.trans_pct);
        assert!(seg.rot_deg_per_m.abs() < 1e-12);
    }

    #[test]
    fn short_path_has_no_segments() {
        let gt = wavy(51, 1.0);
        assert_eq!(kitti_segment_errors(&gt, &gt), Err(EvalError::NoValidSegments));
    }

    #[test]
    fn identical_segments_are_error_free() {
        let gt = wavy(300, 1.0);
        let seg = kitti_segment_errors(&gt, &gt).unwrap();
        assert!(seg.trans_pct < 1e-12 && seg.rot_deg_per_m < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn similarity_alignment_is_invariant(
            axis in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
            angle in -3.0f64..3.0,
            shift in (-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0),
            scale in 0.2f64..5.0,
        ) {
            // a loop with height variation keeps the alignment well conditioned
            let gt = Trajectory::new(
                (0..60)
                    .map(|i| {
                        let a = i as f64 * 0.1;
                        let pose = Pose::from_axis_angle(&Vector3::z(), a, Vector3::new(20.0 * a.cos(), 20.0 * a.sin(), 5.0 * (2.0 * a).sin()));
                        (i as f64 * 0.1, pose)
                    })
                    .collect(),
            )
            .unwrap();
            let est = map(&gt, |p| {
                let noise = Vector3::new((p.translation().x * 1.7).sin(), (p.translation().x * 0.9).cos(), 0.3) * 0.2;
                p.with_translation(p.translation() + noise)
            });
            let base = evaluate_ate_are(&gt, &est, Alignment::Similarity).unwrap();
            let g = Similarity {
                scale,
                rotation: UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(Vector3::new(axis.0, axis.1, axis.2)), angle),
                translation: Vector3::new(shift.0, shift.1, shift.2),
            };
            let moved = evaluate_ate_are(&gt, &map(&est, |p| g.apply_pose(p)), Alignment::Similarity).unwrap();
            prop_assert!((moved.ate_rmse - base.ate_rmse).abs() < 1e-9);
            // compared in radians
            prop_assert!((moved.are_deg.unwrap() - base.are_deg.unwrap()).abs().to_radians() < 1e-9, "{} {}", moved.are_deg.unwrap(), base.are_deg.unwrap());
        }

        #[test]
        fn segment_errors_ignore_a_global_rigid_motion(
            axis in (-1.0f64..1.0, -1.0f64..1.0, 0.1f64..1.0),
            angle in -3.0f64..3.0,
            shift in (-50.0f64..50.0, -50.0f64..50.0, -50.0f64..50.0),
        ) {
            let gt = wavy(260, 1.0);
            let est = map(&gt, |p| p.with_translation(p.translation() * 1.01 + Vector3::new(0.0, 0.5, 0.0)));
            let base = kitti_segment_errors(&gt, &est).unwrap();
            let g = Pose::from_axis_angle(&Vector3::new(axis.0, axis.1, axis.2), angle, Vector3::new(shift.0, shift.1, shift.2));
            let moved = kitti_segment_errors(&map(&gt, |p| g.compose(p)), &map(&est, |p| g.compose(p))).unwrap();
            prop_assert_eq!(moved.segments.len(), base.segments.len());
            prop_assert!((moved.trans_pct - base.trans_pct).abs() < 1e-9);
            prop_assert!((moved.rot_deg_per_m - base.rot_deg_per_m).abs() < 1e-9);
        }
    }
}
