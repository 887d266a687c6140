use nalgebra::{Matrix3, Point3, SymmetricEigen, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::knn::NeighborGrid;
use crate::geometry::PointCloud;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalConfig {
    /// Neighbours per fit, the point itself included.
    pub k: usize,
    /// Neighbours farther than this do not count, meters.
    pub max_radius: f64,
    /// A neighbourhood whose middle covariance eigenvalue is below this
    /// fraction of the largest is treated as rank-deficient (a line or a point).
    pub rank_tol: f64,
    /// Scan lines that must each contribute at least [`MIN_POINTS_PER_BEAM`]
    /// neighbours when the cloud carries beam ids. A single line only traces a
    /// curve across the surface, and a plane through it can point anywhere.
    pub min_beams: usize,
    /// Every neighbour must lie within this distance of the fitted plane,
    /// meters; rejects creases and scan lines crossing a corner.
    pub max_plane_dist: f64,
}

impl Default for NormalConfig {
    fn default() -> Self {
        Self {
            k: 10,
            max_radius: 2.0,
            rank_tol: 1e-3,
            min_beams: 2,
            max_plane_dist: 0.05,
        }
    }
}

pub const MIN_POINTS_PER_BEAM: usize = 3;

/// Points with unit normals; `normals[i]` is meaningful only when `valid[i]`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NormalCloud {
    pub points: Vec<Point3<f64>>,
    pub normals: Vec<Vector3<f64>>,
    pub valid: Vec<bool>,
}

impl NormalCloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Rigidly transforms points and normals.
    pub fn transformed(&self, pose: &crate::geometry::Pose) -> NormalCloud {
        NormalCloud {
            points: self.points.iter().map(|p| pose.transform_point(p)).collect(),
            normals: self.normals.iter().map(|n| pose.transform_vector(n)).collect(),
            valid: self.valid.clone(),
        }
    }
}

/// Normals from `k` nearest neighbours with the default radius cap and rank
/// tolerance.
pub fn estimate_normals(cloud: &PointCloud, k: usize) -> NormalCloud {
    estimate_normals_with(
        cloud,
        &NormalConfig {
            k,
            ..NormalConfig::default()
        },
    )
}

pub fn estimate_normals_with(cloud: &PointCloud, cfg: &NormalConfig) -> NormalCloud {
    let grid = NeighborGrid::new(&cloud.points, (cfg.max_radius * 0.5).max(1e-3));
    let fits: Vec<Option<Vector3<f64>>> = cloud
        .points
        .par_iter()
        .map(|p| {
            if cfg.k < 3 {
                return None;
            }
            let nbrs = grid.knn(p, cfg.k, cfg.max_radius);
            if nbrs.len() < cfg.k {
                return None;
            }
            if let Some(beams) = &cloud.beams {
                let mut ids: Vec<u16> = nbrs.iter().map(|&(_, i)| beams[i]).collect();
                ids.sort_unstable();
                let supporting = ids
                    .chunk_by(|a, b| a == b)
                    .filter(|run| run.len() >= MIN_POINTS_PER_BEAM)
                    .count();
                if supporting < cfg.min_beams {
                    return None;
                }
            }
            plane_normal(nbrs.iter().map(|&(_, i)| &cloud.points[i]), cfg)
        })
        .collect();
    NormalCloud {
        points: cloud.points.clone(),
        valid: fits.iter().map(Option::is_some).collect(),
        normals: fits.into_iter().map(|n| n.unwrap_or_else(Vector3::zeros)).collect(),
    }
}

/// Smallest-eigenvalue direction of the neighbourhood covariance.
fn plane_normal<'a>(
    mut pts: impl Iterator<Item = &'a Point3<f64>> + Clone,
    cfg: &NormalConfig,
) -> Option<Vector3<f64>> {
    let n = pts.clone().count() as f64;
    let mean = pts.clone().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let cov = pts.clone().fold(Matrix3::zeros(), |acc, p| {
        let d = p.coords - mean;
        acc + d * d.transpose()
    }) / n;
    let eig = SymmetricEigen::new(cov);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let (mid, max) = (eig.eigenvalues[order[1]], eig.eigenvalues[order[2]]);
    if !(max > 0.0) || mid <= cfg.rank_tol * max {
        return None;
    }
    let normal = eig.eigenvectors.column(order[0]).normalize();
    pts.all(|p| normal.dot(&(p.coords - mean)).abs() <= cfg.max_plane_dist)
        .then_some(normal)
}
