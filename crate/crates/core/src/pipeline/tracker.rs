use nalgebra::{Point2, Vector2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::PipelineError;
use crate::geometry::{CameraIntrinsics, Pose};
use crate::image::{gradient_unchecked, lk_track, ImageGray, Pyramid, TrackStatus, TrackedPoint, TrackerConfig};
use crate::synth::{correspondence_from_pixel, Scene};

/// Follows pixels of the previous keyframe into the current one.
pub trait PointTracker {
    fn track(&self, points: &[Point2<f64>]) -> Result<Vec<TrackedPoint>, PipelineError>;
}

pub struct LkTracker<'a> {
    pub prev: &'a Pyramid,
    pub cur: &'a Pyramid,
    pub cfg: TrackerConfig,
}

impl PointTracker for LkTracker<'_> {
    fn track(&self, points: &[Point2<f64>]) -> Result<Vec<TrackedPoint>, PipelineError> {
        Ok(lk_track(self.prev, self.cur, points, &self.cfg)?)
    }
}

/// Ground-truth tracker over a synthetic scene.
pub struct OracleTracker<'a> {
    pub scene: &'a Scene,
    pub intrinsics: CameraIntrinsics,
    pub prev_to_world: Pose,
    pub cur_to_world: Pose,
    pub cur_image: &'a ImageGray,
    /// Standard deviation of the pixel noise, pixels.
    pub noise: f64,
    pub seed: u64,
}

impl PointTracker for OracleTracker<'_> {
    fn track(&self, points: &[Point2<f64>]) -> Result<Vec<TrackedPoint>, PipelineError> {
        Ok(oracle_track(self, points))
    }
}

/// Exact correspondences by ray casting, with Gaussian noise of `noise` pixels
/// along the isophote of the current image (the direction in which
/// intensity-based tracking is unconstrained). The noisy point slides along the
/// level curve through the exact one, so it keeps the tracked intensity. Points
/// that leave the view or are hidden in the current frame are lost.
pub fn oracle_track(o: &OracleTracker<'_>, points: &[Point2<f64>]) -> Vec<TrackedPoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(o.seed);
    points
        .iter()
        .map(|p| {
            let lost = TrackedPoint {
                prev_pixel: *p,
                cur_pixel: *p,
                status: TrackStatus::Lost,
            };
            let Some(c) = correspondence_from_pixel(o.scene, &o.intrinsics, &o.prev_to_world, &o.cur_to_world, p)
            else {
                return lost;
            };
            let mut cur = c.x_cur;
            if o.noise > 0.0 {
                let g = gradient_unchecked(o.cur_image, cur.x, cur.y);
                let start = if g.norm() > MIN_GRADIENT {
                    Vector2::new(-g.y, g.x) / g.norm()
                } else {
                    let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                    Vector2::new(a.cos(), a.sin())
                };
                let n: f64 = StandardNormal.sample(&mut rng);
                cur = slide_along_isophote(o.cur_image, cur, start * n.signum(), (o.noise * n).abs());
            }
            if !o.intrinsics.contains(&cur) {
                return lost;
            }
            TrackedPoint {
                prev_pixel: *p,
                cur_pixel: cur,
                status: TrackStatus::Tracked,
            }
        })
        .collect()
}

const MIN_GRADIENT: f64 = 1e-9;
const ISOPHOTE_STEP: f64 = 0.1;

/// Walks `distance` pixels along the level curve of `img` through `start`,
/// heading initially along `dir`. Flat stretches are crossed in a straight line.
fn slide_along_isophote(img: &ImageGray, start: Point2<f64>, dir: Vector2<f64>, distance: f64) -> Point2<f64> {
    let tangent = |p: Point2<f64>, prev: Vector2<f64>| {
        let g = gradient_unchecked(img, p.x, p.y);
        if g.norm() <= MIN_GRADIENT {
            return prev;
        }
        let t = Vector2::new(-g.y, g.x) / g.norm();
        if t.dot(&prev) < 0.0 {
            -t
        } else {
            t
        }
    };
    let steps = (distance / ISOPHOTE_STEP).ceil().max(1.0) as usize;
    let h = distance / steps as f64;
    let (mut p, mut t) = (start, dir);
    for _ in 0..steps {
        let mid = tangent(p + t * (0.5 * h), t);
        p += mid * h;
        t = mid;
    }
    p
}
