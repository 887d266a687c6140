use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{ScaleError, ScaleEstimate, ScaleSample};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RansacConfig {
    pub iterations: usize,
    /// Relative tolerance `|s - s0| / s0` for a sample to count as an inlier.
    pub inlier_tol: f64,
    pub min_samples: usize,
    pub min_inliers: usize,
    pub seed: u64,
}

impl Default for RansacConfig {
    fn default() -> Self {
        Self {
            iterations: 100,
            inlier_tol: 0.05,
            min_samples: 10,
            min_inliers: 8,
            seed: 0,
        }
    }
}

/// One-point RANSAC on the scalar scale model; returns the mean of the largest
/// consensus set.
///
/// Hypotheses are drawn without replacement, so when there are no more samples
/// than iterations every sample is tried exactly once. Equal-sized consensus
/// sets are ranked by their relative spread.
pub fn ransac_scale(samples: &[ScaleSample], cfg: &RansacConfig) -> Result<ScaleEstimate, ScaleError> {
    let n = samples.len();
    if n < cfg.min_samples.max(1) {
        return Err(ScaleError::InsufficientSamples {
            available: n,
            required: cfg.min_samples.max(1),
        });
    }

    let hypotheses: Vec<usize> = if n <= cfg.iterations {
        (0..n).collect()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rand::seq::index::sample(&mut rng, n, cfg.iterations).into_vec()
    };

    let mut best: Option<(usize, f64, f64)> = None;
    for h in hypotheses {
        let s0 = samples[h].s;
        if !(s0 > 0.0 && s0.is_finite()) {
            continue;
        }
        let (count, mean, spread) = consensus(samples, s0, cfg.inlier_tol);
        let better = match best {
            None => true,
            Some((bc, _, bs)) => count > bc || (count == bc && spread < bs),
        };
        if better {
            best = Some((count, mean, spread));
        }
    }

    let (inlier_count, scale, inlier_spread) = best.unwrap_or((0, 0.0, 0.0));
    if inlier_count < cfg.min_inliers.max(1) {
        return Err(ScaleError::NoConsensus {
            inliers: inlier_count,
            required: cfg.min_inliers.max(1),
        });
    }
    Ok(ScaleEstimate {
        scale,
        inlier_count,
        sample_count: n,
        inlier_spread,
    })
}

fn consensus(samples: &[ScaleSample], s0: f64, tol: f64) -> (usize, f64, f64) {
    let inliers = || samples.iter().map(|s| s.s).filter(|s| ((s - s0) / s0).abs() <= tol);
    let count = inliers().count();
    let mean = inliers().sum::<f64>() / count as f64;
    let var = inliers().map(|s| (s - mean).powi(2)).sum::<f64>() / count as f64;
    (count, mean, var.sqrt() / mean)
}
