use nalgebra::{Matrix2, Point2, Vector2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{gradient_unchecked, ImageError, Pyramid};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrackerConfig {
    /// Side of the square integration window, pixels (odd).
    pub window: usize,
    /// Pyramid levels to use (clamped to what the pyramids hold).
    pub levels: usize,
    pub max_iters: usize,
    /// Convergence threshold on the per-iteration update, pixels.
    pub eps: f64,
    /// Minimum eigenvalue of the window structure tensor divided by the window
    /// area, intensity² / px².
    pub min_eig: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            window: 21,
            levels: 4,
            max_iters: 30,
            eps: 0.01,
            min_eig: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrackStatus {
    Tracked,
    Lost,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrackedPoint {
    pub prev_pixel: Point2<f64>,
    pub cur_pixel: Point2<f64>,
    pub status: TrackStatus,
}

impl TrackedPoint {
    pub fn is_tracked(&self) -> bool {
        self.status == TrackStatus::Tracked
    }
}

/// Coarse-to-fine Lucas-Kanade tracking of `points` from `prev` into `cur`.
pub fn lk_track(
    prev: &Pyramid,
    cur: &Pyramid,
    points: &[Point2<f64>],
    cfg: &TrackerConfig,
) -> Result<Vec<TrackedPoint>, ImageError> {
    if prev.base().dimensions() != cur.base().dimensions() {
        return Err(ImageError::PyramidMismatch(
            prev.base().dimensions(),
            cur.base().dimensions(),
        ));
    }
    if cfg.window < 3 || cfg.window.is_multiple_of(2) {
        return Err(ImageError::Config("window must be odd and at least 3"));
    }
    if cfg.max_iters == 0 || !(cfg.eps > 0.0) {
        return Err(ImageError::Config("max_iters and eps must be positive"));
    }
    let levels = cfg.levels.max(1).min(prev.len()).min(cur.len());
    Ok(points
        .par_iter()
        .map(|p| track_one(prev, cur, *p, levels, cfg))
        .collect())
}

/// Level-0 pixel to level-`k` pixel; box averaging puts level-k pixel centres at
/// `2^k (x + 0.5) - 0.5` in level-0 coordinates.
fn to_level(p: f64, level: usize) -> f64 {
    (p + 0.5) / f64::from(1u32 << level) - 0.5
}

fn track_one(prev: &Pyramid, cur: &Pyramid, p0: Point2<f64>, levels: usize, cfg: &TrackerConfig) -> TrackedPoint {
    let lost = TrackedPoint {
        prev_pixel: p0,
        cur_pixel: p0,
        status: TrackStatus::Lost,
    };
    let half = (cfg.window / 2) as i32;
    let area = (cfg.window * cfg.window) as f64;
    let mut template = Vec::with_capacity(cfg.window * cfg.window);
    let mut guess = Vector2::zeros();

    for level in (0..levels).rev() {
        let prev_img = prev.level(level);
        let cur_img = cur.level(level);
        let (w, h) = (f64::from(prev_img.width()), f64::from(prev_img.height()));
        let px = to_level(p0.x, level);
        let py = to_level(p0.y, level);
        if px < 0.0 || py < 0.0 || px > w - 1.0 || py > h - 1.0 {
            return lost;
        }

        template.clear();
        let mut g = Matrix2::zeros();
        for dy in -half..=half {
            for dx in -half..=half {
                let (x, y) = (px + f64::from(dx), py + f64::from(dy));
                let grad = gradient_unchecked(prev_img, x, y);
                g[(0, 0)] += grad.x * grad.x;
                g[(0, 1)] += grad.x * grad.y;
                g[(1, 1)] += grad.y * grad.y;
                template.push((prev_img.sample(x, y), grad));
            }
        }
        g[(1, 0)] = g[(0, 1)];
        // A flat window at a coarse level only skips that level's refinement;
        // the point is lost only if the finest level is ill-conditioned.
        let min_eig = min_eigenvalue(&g) / area;
        let g_inv = match g.try_inverse() {
            Some(m) if min_eig >= cfg.min_eig => m,
            _ if level == 0 => return lost,
            _ => {
                guess *= 2.0;
                continue;
            }
        };

        let mut nu = Vector2::zeros();
        for _ in 0..cfg.max_iters {
            let (ox, oy) = (px + guess.x + nu.x, py + guess.y + nu.y);
            if ox < -1.0 || oy < -1.0 || ox > w || oy > h {
                return lost;
            }
            let mut b = Vector2::zeros();
            let mut k = 0;
            for dy in -half..=half {
                for dx in -half..=half {
                    let (tv, grad) = template[k];
                    k += 1;
                    let diff = tv - cur_img.sample(ox + f64::from(dx), oy + f64::from(dy));
                    b += grad * diff;
                }
            }
            let eta = g_inv * b;
            if !eta.iter().all(|v| v.is_finite()) {
                return lost;
            }
            nu += eta;
            if eta.norm() < cfg.eps {
                break;
            }
        }
        if level > 0 {
            guess = (guess + nu) * 2.0;
        } else {
            guess += nu;
        }
    }

    let cur_pixel = p0 + guess;
    let base = cur.base();
    if !cur_pixel.x.is_finite()
        || !cur_pixel.y.is_finite()
        || cur_pixel.x < 0.0
        || cur_pixel.y < 0.0
        || cur_pixel.x > f64::from(base.width() - 1)
        || cur_pixel.y > f64::from(base.height() - 1)
    {
        return lost;
    }
    TrackedPoint {
        prev_pixel: p0,
        cur_pixel,
        status: TrackStatus::Tracked,
    }
}

fn min_eigenvalue(g: &Matrix2<f64>) -> f64 {
    let (a, b, c) = (g[(0, 0)], g[(0, 1)], g[(1, 1)]);
    0.5 * (a + c - ((a - c).powi(2) + 4.0 * b * b).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::ImageGray;

    /// Smooth aperiodic texture on the continuous plane: a sum of sinusoids with
    /// random directions, frequencies and phases.
    fn texture(x: f64, y: f64) -> f64 {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let mut v = 128.0;
        for _ in 0..24 {
            let f = rng.random_range(0.04..0.3);
            let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
            let phase = rng.random_range(0.0..std::f64::consts::TAU);
            v += 15.0 * (f * (theta.cos() * x + theta.sin() * y) + phase).sin();
        }
        v
    }

    fn render(dx: f64, dy: f64) -> ImageGray {
        ImageGray::from_fn(240, 200, |x, y| {
            texture(f64::from(x) - dx, f64::from(y) - dy).round().clamp(0.0, 255.0) as u8
        })
    }

    fn grid_points() -> Vec<Point2<f64>> {
        let mut pts = Vec::new();
        for y in (60..=140).step_by(20) {
            for x in (60..=180).step_by(20) {
                pts.push(Point2::new(f64::from(x), f64::from(y)));
            }
        }
        pts
    }

    #[test]
    fn integer_shift_is_recovered() {
        let cfg = TrackerConfig::default();
        let prev = Pyramid::build(&render(0.0, 0.0), cfg.levels);
        let cur = Pyramid::build(&render(3.0, -2.0), cfg.levels);
        let tracks = lk_track(&prev, &cur, &grid_points(), &cfg).unwrap();
        for t in &tracks {
            assert!(t.is_tracked());
            let err = (t.cur_pixel - t.prev_pixel - Vector2::new(3.0, -2.0)).norm();
            assert!(err < 1e-3, "error {err}");
        }
    }

    #[test]
    fn subpixel_shift() {
        let cfg = TrackerConfig::default();
        let prev = Pyramid::build(&render(0.0, 0.0), cfg.levels);
        let cur = Pyramid::build(&render(0.5, 0.25), cfg.levels);
        let tracks = lk_track(&prev, &cur, &grid_points(), &cfg).unwrap();
        // intensity quantisation limits single-point accuracy
        let mut total = 0.0;
        for t in &tracks {
            assert!(t.is_tracked());
            let err = (t.cur_pixel - t.prev_pixel - Vector2::new(0.5, 0.25)).norm();
            assert!(err < 0.08, "error {err}");
            total += err;
        }
        assert!(total / (tracks.len() as f64) < 0.03);
    }

    #[test]
    fn textureless_point_is_lost() {
        let flat = Pyramid::build(&ImageGray::filled(100, 100, 90), 4);
        let tracks = lk_track(&flat, &flat, &[Point2::new(50.0, 50.0)], &TrackerConfig::default()).unwrap();
        assert_eq!(tracks[0].status, TrackStatus::Lost);
    }

    #[test]
    fn mismatched_pyramids_are_rejected() {
        let a = Pyramid::build(&ImageGray::filled(100, 100, 90), 2);
        let b = Pyramid::build(&ImageGray::filled(90, 100, 90), 2);
        assert!(matches!(
            lk_track(&a, &b, &[], &TrackerConfig::default()),
            Err(ImageError::PyramidMismatch(..))
        ));
    }

    #[test]
    fn translation_equivariance_over_large_shifts() {
        let cfg = TrackerConfig::default();
        let prev = Pyramid::build(&render(0.0, 0.0), cfg.levels);
        let pts = vec![Point2::new(120.0, 100.0), Point2::new(100.0, 90.0)];
        for (dx, dy) in [(8.0, 0.0), (-12.0, 7.0), (14.0, -11.0), (-18.0, 14.0)] {
            let cur = Pyramid::build(&render(dx, dy), cfg.levels);
            for t in lk_track(&prev, &cur, &pts, &cfg).unwrap() {
                assert!(t.is_tracked());
                let err = (t.cur_pixel - t.prev_pixel - Vector2::new(dx, dy)).norm();
                assert!(err < 1e-3, "shift ({dx}, {dy}) error {err}");
            }
        }
    }
}
