use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix3, Point2, Vector3};
use serde::{Deserialize, Serialize};

use super::SynthError;
use crate::geometry::Pose;

/// Shape of the ground path, parameterised by arclength from the origin with
/// initial heading along +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PathKind {
    Straight,
    /// Constant left-turning curvature.
    Arc {
        radius: f64,
    },
    /// A straight corridor, a 90 degree left turn, then straight again.
    CorridorDetour {
        corridor_length: f64,
        turn_radius: f64,
    },
}

impl PathKind {
    /// Position and heading at arclength `s`. Negative `s` extends the initial
    /// heading backwards; the detour keeps its final heading after the turn.
    pub fn centerline(&self, s: f64) -> (Point2<f64>, f64) {
        if s < 0.0 {
            return (Point2::new(s, 0.0), 0.0);
        }
        match *self {
            PathKind::Straight => (Point2::new(s, 0.0), 0.0),
            PathKind::Arc { radius } => {
                let h = s / radius;
                (Point2::new(radius * h.sin(), radius * (1.0 - h.cos())), h)
            }
            PathKind::CorridorDetour {
                corridor_length,
                turn_radius,
            } => {
                if s <= corridor_length {
                    return (Point2::new(s, 0.0), 0.0);
                }
                let turn = FRAC_PI_2 * turn_radius;
                let a = s - corridor_length;
                if a <= turn {
                    let h = a / turn_radius;
                    let p = Point2::new(corridor_length + turn_radius * h.sin(), turn_radius * (1.0 - h.cos()));
                    return (p, h);
                }
                (
                    Point2::new(corridor_length + turn_radius, turn_radius + (a - turn)),
                    FRAC_PI_2,
                )
            }
        }
    }

    fn validate(&self) -> Result<(), SynthError> {
        let ok = match *self {
            PathKind::Straight => true,
            PathKind::Arc { radius } => radius > 0.0,
            PathKind::CorridorDetour {
                corridor_length,
                turn_radius,
            } => corridor_length > 0.0 && turn_radius > 0.0,
        };
        if ok {
            Ok(())
        } else {
            Err(SynthError::Domain("path dimensions must be positive".into()))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SpeedProfile {
    Constant,
    /// Speed multiplies by `factor` once the path reaches `at_distance` meters.
    Step {
        factor: f64,
        at_distance: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySpec {
    pub path: PathKind,
    /// Path length, meters.
    pub length: f64,
    /// Initial speed, m/s.
    pub speed: f64,
    /// Frame rate, Hz.
    pub rate: f64,
    pub speed_profile: SpeedProfile,
    /// Camera height above the ground, meters.
    pub camera_height: f64,
}

impl TrajectorySpec {
    pub fn new(path: PathKind, length: f64, speed: f64, rate: f64) -> Self {
        Self {
            path,
            length,
            speed,
            rate,
            speed_profile: SpeedProfile::Constant,
            camera_height: 1.6,
        }
    }

    /// Distance travelled after `t` seconds.
    pub fn distance_at(&self, t: f64) -> f64 {
        match self.speed_profile {
            SpeedProfile::Constant => self.speed * t,
            SpeedProfile::Step { factor, at_distance } => {
                let t_step = at_distance / self.speed;
                if t <= t_step {
                    self.speed * t
                } else {
                    at_distance + factor * self.speed * (t - t_step)
                }
            }
        }
    }
}

/// Camera-to-world pose of a forward-looking camera with heading `h` about the
/// world z axis (z up): optical axis along the heading, image x to the right,
/// image y down.
pub fn camera_pose(position: Vector3<f64>, heading: f64) -> Pose {
    let (s, c) = heading.sin_cos();
    let right = Vector3::new(s, -c, 0.0);
    let down = Vector3::new(0.0, 0.0, -1.0);
    let forward = Vector3::new(c, s, 0.0);
    Pose::from_rotation_matrix(&Matrix3::from_columns(&[right, down, forward]), position)
}

/// Timestamped camera-to-world poses sampled at `1 / rate` while the travelled
/// distance stays within the path length.
pub fn generate_trajectory(spec: &TrajectorySpec) -> Result<Vec<(f64, Pose)>, SynthError> {
    if !(spec.length > 0.0 && spec.speed > 0.0 && spec.rate > 0.0) {
        return Err(SynthError::Domain("length, speed and rate must be positive".into()));
    }
    if !spec.camera_height.is_finite() {
        return Err(SynthError::Domain("camera height must be finite".into()));
    }
    if let SpeedProfile::Step { factor, at_distance } = spec.speed_profile {
        if !(factor > 0.0 && at_distance >= 0.0) {
            return Err(SynthError::Domain("speed step needs a positive factor".into()));
        }
    }
    spec.path.validate()?;

    let mut out = Vec::new();
    for k in 0.. {
        let t = k as f64 / spec.rate;
        let s = spec.distance_at(t);
        if s > spec.length * (1.0 + 1e-12) {
            break;
        }
        let (p, h) = spec.path.centerline(s);
        out.push((t, camera_pose(Vector3::new(p.x, p.y, spec.camera_height), h)));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn straight_spacing() {
        let traj = generate_trajectory(&TrajectorySpec::new(PathKind::Straight, 100.0, 10.0, 10.0)).unwrap();
        assert_eq!(traj.len(), 101);
        for w in traj.windows(2) {
            assert!(((w[1].1.translation() - w[0].1.translation()).norm() - 1.0).abs() < 1e-12);
            assert!((w[1].0 - w[0].0 - 0.1).abs() < 1e-12);
        }
    }

    #[test]
    fn arc_heading_rate() {
        let traj = generate_trajectory(&TrajectorySpec::new(PathKind::Arc { radius: 50.0 }, 40.0, 5.0, 10.0)).unwrap();
        for w in traj.windows(2) {
            let rel = w[0].1.rotation_angle_to(&w[1].1);
            assert!((rel - 0.5 / 50.0).abs() < 1e-12);
        }
    }

    #[test]
    fn camera_axes() {
        let pose = camera_pose(Vector3::zeros(), 0.0);
        assert!((pose.transform_vector(&Vector3::z()) - Vector3::x()).norm() < 1e-12);
        assert!((pose.transform_vector(&Vector3::y()) + Vector3::z()).norm() < 1e-12);
        assert!(pose.is_valid(1e-12));
    }

    #[test]
    fn rejects_bad_parameters() {
        for (l, v, r) in [(0.0, 1.0, 1.0), (1.0, 0.0, 1.0), (1.0, 1.0, 0.0)] {
            assert!(generate_trajectory(&TrajectorySpec::new(PathKind::Straight, l, v, r)).is_err());
        }
        assert!(generate_trajectory(&TrajectorySpec::new(PathKind::Arc { radius: -1.0 }, 1.0, 1.0, 1.0)).is_err());
    }

    #[test]
    fn speed_step_doubles_spacing() {
        let mut spec = TrajectorySpec::new(PathKind::Straight, 30.0, 5.0, 10.0);
        spec.speed_profile = SpeedProfile::Step {
            factor: 2.0,
            at_distance: 10.0,
        };
        let traj = generate_trajectory(&spec).unwrap();
        let step = |i: usize| (traj[i + 1].1.translation() - traj[i].1.translation()).norm();
        assert!((step(0) - 0.5).abs() < 1e-12);
        assert!((step(traj.len() - 2) - 1.0).abs() < 1e-12);
        assert_eq!(traj.len(), 20 + 20 + 1);
    }

    #[test]
    fn detour_is_continuous() {
        let path = PathKind::CorridorDetour {
            corridor_length: 50.0,
            turn_radius: 10.0,
        };
        let mut prev = path.centerline(0.0).0;
        for k in 1..2000 {
            let p = path.centerline(k as f64 * 0.05).0;
            assert!(((p - prev).norm() - 0.05).abs() < 1e-6);
            prev = p;
        }
        assert!((path.centerline(200.0).1 - FRAC_PI_2).abs() < 1e-12);
    }
}
