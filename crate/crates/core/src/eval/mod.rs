//! Trajectory evaluation: timestamp association, alignment, absolute
//! trajectory and rotation errors, and segment-based drift errors.

mod metrics;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{GeometryError, Pose};

pub use metrics::{
    evaluate, evaluate_ate_are, kitti_segment_errors, Alignment, AlignmentInfo, EvalReport, SegmentError,
    SegmentErrors, SEGMENT_LENGTHS,
};

/// Samples closer than this to a query time are used as-is instead of being
/// interpolated, seconds.
pub const ASSOCIATION_TOL: f64 = 0.005;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("timestamp {t} outside trajectory range [{first}, {last}]")]
    OutOfRange { t: f64, first: f64, last: f64 },
    #[error("timestamps must be strictly increasing (sample {0})")]
    NotIncreasing(usize),
    #[error("need at least 3 associated poses, got {0}")]
    InsufficientData(usize),
    #[error("ground-truth path is shorter than the shortest segment")]
    NoValidSegments,
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

/// Time-ordered poses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    samples: Vec<(f64, Pose)>,
}

impl Trajectory {
    pub fn new(samples: Vec<(f64, Pose)>) -> Result<Self, EvalError> {
        if let Some(i) = (1..samples.len()).find(|&i| !(samples[i].0 > samples[i - 1].0)) {
            return Err(EvalError::NotIncreasing(i));
        }
        Ok(Self { samples })
    }

    pub fn samples(&self) -> &[(f64, Pose)] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn timestamps(&self) -> Vec<f64> {
        self.samples.iter().map(|s| s.0).collect()
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.samples.iter().map(|s| s.1).collect()
    }

    /// Pose at `t`: the nearest sample when within [`ASSOCIATION_TOL`],
    /// otherwise linear interpolation of position and slerp of orientation.
    pub fn pose_at(&self, t: f64) -> Result<Pose, EvalError> {
        let (first, last) = match (self.samples.first(), self.samples.last()) {
            (Some(f), Some(l)) => (f.0, l.0),
            _ => return Err(EvalError::InsufficientData(0)),
        };
        if !(t >= first - ASSOCIATION_TOL && t <= last + ASSOCIATION_TOL) {
            return Err(EvalError::OutOfRange { t, first, last });
        }
        // first sample at or after t
        let hi = self.samples.partition_point(|s| s.0 < t);
        let nearest = [hi.checked_sub(1), (hi < self.samples.len()).then_some(hi)]
            .into_iter()
            .flatten()
            .min_by(|&a, &b| (self.samples[a].0 - t).abs().total_cmp(&(self.samples[b].0 - t).abs()))
            .expect("non-empty");
        if (self.samples[nearest].0 - t).abs() <= ASSOCIATION_TOL {
            return Ok(self.samples[nearest].1);
        }
        let (t0, p0) = self.samples[hi - 1];
        let (t1, p1) = self.samples[hi];
        let a = (t - t0) / (t1 - t0);
        let translation = p0.translation() * (1.0 - a) + p1.translation() * a;
        let rotation = p0.rotation().slerp(&p1.rotation(), a);
        Ok(Pose::new(rotation, translation))
    }
}

/// Resamples `traj` at `timestamps` (strictly increasing).
pub fn interpolate_trajectory(traj: &Trajectory, timestamps: &[f64]) -> Result<Trajectory, EvalError> {
    let samples = timestamps
        .iter()
        .map(|&t| traj.pose_at(t).map(|p| (t, p)))
        .collect::<Result<Vec<_>, _>>()?;
    Trajectory::new(samples)
}

/// Pairs every ground-truth sample that falls inside the estimate's time span
/// with the estimate resampled at that time.
pub fn associate(gt: &Trajectory, est: &Trajectory) -> (Vec<(f64, Pose)>, Vec<Pose>) {
    let mut gt_out = Vec::new();
    let mut est_out = Vec::new();
    for &(t, p) in gt.samples() {
        if let Ok(e) = est.pose_at(t) {
            gt_out.push((t, p));
            est_out.push(e);
        }
    }
    (gt_out, est_out)
}
