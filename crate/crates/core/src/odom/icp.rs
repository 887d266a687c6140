use nalgebra::{Matrix6, Point3, SymmetricEigen, Vector3, Vector6};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::NeighborGrid;
use super::normals::NormalCloud;
use super::OdomError;
use crate::geometry::{PointCloud, Pose};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpConfig {
    /// Correspondences farther apart than this are ignored, meters.
    pub max_corr_dist: f64,
    pub max_iters: usize,
    pub min_correspondences: usize,
    /// Stop once the twist update norm drops below this.
    pub update_eps: f64,
    /// Eigen-directions of the normal equations weaker than this fraction of
    /// the strongest are left unchanged (degenerate geometry).
    pub degeneracy_ratio: f64,
}

impl Default for IcpConfig {
    fn default() -> Self {
        Self {
            max_corr_dist: 1.0,
            max_iters: 20,
            min_correspondences: 10,
            update_eps: 1e-6,
            degeneracy_ratio: 1e-4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IcpResult {
    /// Source-to-target transform.
    pub pose: Pose,
    /// RMS point-to-plane distance at the final pose, meters.
    pub residual: f64,
    pub iterations: usize,
    pub correspondences: usize,
    /// Directions left unconstrained in the last solve.
    pub degenerate_directions: usize,
}

struct Pair {
    p: Point3<f64>,
    q: Point3<f64>,
    n: Vector3<f64>,
}

/// Registers `source` onto `target`, minimising squared point-to-plane
/// distances starting from `init` (source-to-target).
///
/// Each iteration associates every transformed source point with its nearest
/// target point and drops the pair when that point has no valid normal, so
/// source points near creases are not pulled onto a distant plane. It then solves the linearised 6x6 system for a
/// left-multiplied twist and applies it through the exponential map.
pub fn point_to_plane_icp(
    source: &PointCloud,
    target: &NormalCloud,
    init: &Pose,
    cfg: &IcpConfig,
) -> Result<IcpResult, OdomError> {
    if source.is_empty() || target.is_empty() {
        return Err(OdomError::EmptyCloud);
    }
    if !(cfg.max_corr_dist > 0.0) || cfg.max_iters == 0 {
        return Err(OdomError::Config("max_corr_dist and max_iters must be positive"));
    }
    let grid = NeighborGrid::new(&target.points, cfg.max_corr_dist);

    let mut pose = *init;
    let mut iterations = 0;
    let mut degenerate_directions = 0;
    for _ in 0..cfg.max_iters {
        let pairs = associate(source, target, &grid, &pose, cfg)?;
        let (a, b) = normal_equations(&pairs);
        let (delta, degenerate) = truncated_solve(&a, &b, lever_arm(&pairs), cfg.degeneracy_ratio);
        degenerate_directions = degenerate;
        pose = Pose::exp(&delta).compose(&pose);
        iterations += 1;
        if delta.norm() < cfg.update_eps {
            break;
        }
    }

    let pairs = associate(source, target, &grid, &pose, cfg)?;
    let residual = (pairs.iter().map(|c| c.n.dot(&(c.p - c.q)).powi(2)).sum::<f64>() / pairs.len() as f64).sqrt();
    Ok(IcpResult {
        pose,
        residual,
        iterations,
        correspondences: pairs.len(),
        degenerate_directions,
    })
}

fn associate(
    source: &PointCloud,
    target: &NormalCloud,
    grid: &NeighborGrid<'_>,
    pose: &Pose,
    cfg: &IcpConfig,
) -> Result<Vec<Pair>, OdomError> {
    let pairs: Vec<Pair> = source
        .points
        .par_iter()
        .filter_map(|p| {
            let p = pose.transform_point(p);
            let (_, j) = grid.nearest(&p, cfg.max_corr_dist)?;
            target.valid[j].then_some(())?;
            Some(Pair {
                p,
                q: target.points[j],
                n: target.normals[j],
            })
        })
        .collect();
    if pairs.len() < cfg.min_correspondences.max(1) {
        return Err(OdomError::RegistrationFailure(pairs.len(), cfg.min_correspondences));
    }
    Ok(pairs)
}

/// `A = sum J J^T`, `b = sum J r` with `J = [p x n; n]`, `r = n . (p - q)`.
fn normal_equations(pairs: &[Pair]) -> (Matrix6<f64>, Vector6<f64>) {
    let mut a = Matrix6::zeros();
    let mut b = Vector6::zeros();
    for c in pairs {
        let pn = c.p.coords.cross(&c.n);
        let j = Vector6::new(pn.x, pn.y, pn.z, c.n.x, c.n.y, c.n.z);
        let r = c.n.dot(&(c.p - c.q));
        a += j * j.transpose();
        b += j * r;
    }
    (a, b)
}

/// RMS distance of the matched points from the origin, meters.
fn lever_arm(pairs: &[Pair]) -> f64 {
    (pairs.iter().map(|c| c.p.coords.norm_squared()).sum::<f64>() / pairs.len() as f64)
        .sqrt()
        .max(1e-9)
}

/// Minimum-norm solution of `A x = -b` restricted to the well-conditioned
/// eigen-directions of `A`; returns the solution and the number of dropped
/// directions.
///
/// Rotations are expressed as arc lengths at `lever` meters before the
/// eigen-analysis so that all six directions are compared in meters.
fn truncated_solve(a: &Matrix6<f64>, b: &Vector6<f64>, lever: f64, ratio: f64) -> (Vector6<f64>, usize) {
    let s = Vector6::new(1.0 / lever, 1.0 / lever, 1.0 / lever, 1.0, 1.0, 1.0);
    let a = Matrix6::from_fn(|i, j| a[(i, j)] * s[i] * s[j]);
    let b = b.component_mul(&s);
    let eig = SymmetricEigen::new(a);
    let max = eig.eigenvalues.max();
    let mut x = Vector6::zeros();
    let mut dropped = 0;
    for i in 0..6 {
        let lambda = eig.eigenvalues[i];
        if !(max > 0.0) || lambda <= ratio * max {
            dropped += 1;
            continue;
        }
        let v = eig.eigenvectors.column(i);
        x -= v * (v.dot(&b) / lambda);
    }
    (x.component_mul(&s), dropped)
}
