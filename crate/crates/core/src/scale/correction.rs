use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use super::{ScaleError, ScaleEstimate};
use crate::geometry::Pose;

/// Correction fires when the estimated scale differs from 1 by at least this much.
pub const DEFAULT_TRIGGER: f64 = 0.02;

/// Recent keyframes and landmarks of the visual map, in the world frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMap {
    /// Camera-to-world poses of the keyframes.
    pub keyframe_poses: Vec<Pose>,
    pub map_points: Vec<Point3<f64>>,
    /// Index of the reference keyframe the map is rescaled about.
    pub reference_index: usize,
}

impl LocalMap {
    pub fn new(keyframe_poses: Vec<Pose>, map_points: Vec<Point3<f64>>, reference_index: usize) -> Option<Self> {
        (reference_index < keyframe_poses.len()).then_some(Self {
            keyframe_poses,
            map_points,
            reference_index,
        })
    }

    pub fn reference(&self) -> &Pose {
        &self.keyframe_poses[self.reference_index]
    }
}

pub fn should_correct(est: &ScaleEstimate) -> bool {
    should_correct_with(est, DEFAULT_TRIGGER)
}

pub fn should_correct_with(est: &ScaleEstimate, trigger: f64) -> bool {
    (est.scale - 1.0).abs() >= trigger
}

/// Rescales the map about its reference keyframe.
///
/// Poses and points are expressed in the reference camera frame, their
/// translations and coordinates multiplied by `scale`, and mapped back with the
/// unchanged reference pose. Rotations are untouched.
pub fn apply_scale_correction(map: &LocalMap, scale: f64) -> Result<LocalMap, ScaleError> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(ScaleError::Domain(scale));
    }
    let reference = *map.reference();
    let world_to_ref = reference.inverse();

    let keyframe_poses = map
        .keyframe_poses
        .iter()
        .enumerate()
        .map(|(i, pose)| {
            if i == map.reference_index {
                return *pose;
            }
            let local = world_to_ref.compose(pose);
            reference.compose(&local.with_translation(local.translation() * scale))
        })
        .collect();
    let map_points = map
        .map_points
        .iter()
        .map(|p| {
            let local = world_to_ref.transform_point(p);
            reference.transform_point(&Point3::from(local.coords * scale))
        })
        .collect();

    Ok(LocalMap {
        keyframe_poses,
        map_points,
        reference_index: map.reference_index,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::Vector3;
    use proptest::prelude::*;

    fn est(scale: f64) -> ScaleEstimate {
        ScaleEstimate {
            scale,
            inlier_count: 10,
            sample_count: 10,
            inlier_spread: 0.0,
        }
    }

    #[test]
    fn trigger_threshold() {
        assert!(!should_correct(&est(1.019)));
        assert!(should_correct(&est(1.02)));
        assert!(should_correct(&est(0.97)));
    }

    fn sample_map() -> LocalMap {
        let c0 = Pose::from_axis_angle(&Vector3::new(0.0, 0.0, 1.0), 0.4, Vector3::new(5.0, -2.0, 1.0));
        let c1 = c0.compose(&Pose::from_translation(Vector3::new(0.0, 0.0, 1.0)));
        let c2 = c1.compose(&Pose::from_axis_angle(
            &Vector3::new(0.0, 1.0, 0.0),
            0.1,
            Vector3::new(0.2, 0.0, 1.3),
        ));
        let pts = vec![
            c0.transform_point(&Point3::new(1.0, 2.0, 8.0)),
            Point3::new(-3.0, 4.0, 0.5),
        ];
        LocalMap::new(vec![c0, c1, c2], pts, 0).unwrap()
    }

    #[test]
    fn unit_scale_is_identity() {
        let map = sample_map();
        let out = apply_scale_correction(&map, 1.0).unwrap();
        for (a, b) in map.keyframe_poses.iter().zip(&out.keyframe_poses) {
            assert!((a.translation() - b.translation()).norm() < 1e-12);
            assert!(a.rotation_angle_to(b) < 1e-12);
        }
        for (a, b) in map.map_points.iter().zip(&out.map_points) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn doubles_keyframe_spacing_and_point_coordinates() {
        let map = sample_map();
        let out = apply_scale_correction(&map, 2.0).unwrap();
        assert_eq!(out.keyframe_poses[0], map.keyframe_poses[0]);
        let d_before = (map.keyframe_poses[1].translation() - map.keyframe_poses[0].translation()).norm();
        let d_after = (out.keyframe_poses[1].translation() - out.keyframe_poses[0].translation()).norm();
        assert!((d_after - 2.0 * d_before).abs() < 1e-12);
        let q = map.reference().inverse().transform_point(&map.map_points[0]);
        let q2 = out.reference().inverse().transform_point(&out.map_points[0]);
        assert!((q2.coords - q.coords * 2.0).norm() < 1e-12);
    }

    #[test]
    fn rejects_non_positive_scale() {
        assert_eq!(apply_scale_correction(&sample_map(), 0.0), Err(ScaleError::Domain(0.0)));
        assert!(apply_scale_correction(&sample_map(), -1.0).is_err());
    }

    proptest! {
        #[test]
        fn rescaling_invariants(s in 0.2f64..5.0) {
            let map = sample_map();
            let out = apply_scale_correction(&map, s).unwrap();
            let n = map.keyframe_poses.len();
            for i in 0..n {
                for j in 0..n {
                    let (a, b) = (&map.keyframe_poses, &out.keyframe_poses);
                    let rel_before = a[i].inverse().compose(&a[j]);
                    let rel_after = b[i].inverse().compose(&b[j]);
                    prop_assert!(rel_before.rotation_angle_to(&rel_after) < 1e-12);
                    let d0 = (a[i].translation() - a[j].translation()).norm();
                    let d1 = (b[i].translation() - b[j].translation()).norm();
                    prop_assert!((d1 - s * d0).abs() < 1e-9);
                }
            }
            let back = apply_scale_correction(&out, 1.0 / s).unwrap();
            for (a, b) in map.keyframe_poses.iter().zip(&back.keyframe_poses) {
                prop_assert!((a.translation() - b.translation()).norm() < 1e-9);
            }
            for (a, b) in map.map_points.iter().zip(&back.map_points) {
                prop_assert!((a - b).norm() < 1e-9);
            }
        }
    }
}
