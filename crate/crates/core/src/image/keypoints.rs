use std::collections::HashMap;

use nalgebra::Point2;
use serde::{Deserialize, Serialize};

use super::{fast12_pretest, fast9_score, gradient_unchecked, ImageGray};
use crate::geometry::ProjectedKeypoint;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectionMode {
    /// FAST-9 corner test, suppression on FAST score.
    Dense,
    /// Four-point pre-test for sparse LiDAR, suppression on gradient magnitude.
    Sparse,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub mode: SelectionMode,
    pub fast_threshold: u8,
    /// Minimum gradient magnitude, intensity units per pixel.
    pub grad_min: f64,
    pub nms_radius: f64,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        Self {
            mode: SelectionMode::Dense,
            fast_threshold: 20,
            grad_min: 8.0,
            nms_radius: 5.0,
        }
    }
}

/// Picks distinctive projected LiDAR points.
///
/// Every projected point at least 3 px inside the border gets a threshold-free
/// score (FAST score in dense mode, gradient magnitude in sparse mode). A point
/// is returned when it passes the corner test and the gradient floor and no
/// other scored point within `nms_radius` ranks above it. Suppression ignores the
/// thresholds, so tightening them can only remove points.
pub fn select_keypoints(
    projected: &[ProjectedKeypoint],
    img: &ImageGray,
    cfg: &SelectionConfig,
) -> Vec<ProjectedKeypoint> {
    let mut pixels = Vec::new();
    let mut scores = Vec::new();
    let mut qualifies = Vec::new();
    let mut members = Vec::new();

    for (i, kp) in projected.iter().enumerate() {
        let (xi, yi) = (kp.pixel.x.round() as i64, kp.pixel.y.round() as i64);
        if !img.is_inside(xi, yi, 3) {
            continue;
        }
        let grad = gradient_unchecked(img, kp.pixel.x, kp.pixel.y).norm();
        let (score, passes) = match cfg.mode {
            SelectionMode::Dense => {
                let s = fast9_score(img, xi, yi).expect("border checked");
                (f64::from(s), s > i32::from(cfg.fast_threshold))
            }
            SelectionMode::Sparse => (
                grad,
                fast12_pretest(img, xi, yi, cfg.fast_threshold).expect("border checked"),
            ),
        };
        pixels.push(kp.pixel);
        scores.push(score);
        qualifies.push(passes && grad >= cfg.grad_min);
        members.push(i);
    }

    let maxima = local_maxima(&pixels, &scores, cfg.nms_radius);
    members
        .iter()
        .zip(qualifies.iter().zip(maxima))
        .filter(|(_, (&q, m))| q && *m)
        .map(|(&i, _)| projected[i])
        .collect()
}

/// Flags points that outrank every other point within `radius`.
///
/// Ranking is by score, ties going to the lower index, so no two flagged points
/// are ever within `radius` of each other.
pub(crate) fn local_maxima(pixels: &[Point2<f64>], scores: &[f64], radius: f64) -> Vec<bool> {
    if radius <= 0.0 {
        return vec![true; pixels.len()];
    }
    let cell = |p: &Point2<f64>| ((p.x / radius).floor() as i64, (p.y / radius).floor() as i64);
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    for (i, p) in pixels.iter().enumerate() {
        grid.entry(cell(p)).or_default().push(i);
    }
    let r2 = radius * radius;
    let outranks = |a: usize, b: usize| scores[a] > scores[b] || (scores[a] == scores[b] && a < b);

    pixels
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let (cx, cy) = cell(p);
            for gx in cx - 1..=cx + 1 {
                for gy in cy - 1..=cy + 1 {
                    let Some(bucket) = grid.get(&(gx, gy)) else {
                        continue;
                    };
                    for &j in bucket {
                        if j != i && (pixels[j] - p).norm_squared() <= r2 && outranks(j, i) {
                            return false;
                        }
                    }
                }
            }
            true
        })
        .collect()
}
