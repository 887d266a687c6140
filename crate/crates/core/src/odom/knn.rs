use nalgebra::{Point3, Vector3};
use rustc_hash::FxHashMap;

use crate::geometry::PointCloud;

type Cell = (i64, i64, i64);

/// Uniform hash grid answering exact nearest-neighbour queries.
///
/// Results are identical to a brute-force scan ordered by `(squared distance,
/// index)`, so ties always go to the lower point index.
#[derive(Debug, Clone)]
pub struct NeighborGrid<'a> {
    points: &'a [Point3<f64>],
    cell: f64,
    cells: FxHashMap<Cell, Vec<usize>>,
    lo: Cell,
    hi: Cell,
}

impl<'a> NeighborGrid<'a> {
    /// Indexes `points`; `cell` is the grid spacing in meters.
    pub fn new(points: &'a [Point3<f64>], cell: f64) -> Self {
        Self::with_indices(points, cell, 0..points.len())
    }

    /// Indexes only the points in `indices`; results still refer to positions
    /// in `points`.
    pub fn with_indices(points: &'a [Point3<f64>], cell: f64, indices: impl IntoIterator<Item = usize>) -> Self {
        assert!(cell > 0.0, "grid cell must be positive");
        let mut cells: FxHashMap<Cell, Vec<usize>> = FxHashMap::default();
        let mut lo = (i64::MAX, i64::MAX, i64::MAX);
        let mut hi = (i64::MIN, i64::MIN, i64::MIN);
        for i in indices {
            let c = cell_of(&points[i], cell);
            lo = (lo.0.min(c.0), lo.1.min(c.1), lo.2.min(c.2));
            hi = (hi.0.max(c.0), hi.1.max(c.1), hi.2.max(c.2));
            cells.entry(c).or_default().push(i);
        }
        Self {
            points,
            cell,
            cells,
            lo,
            hi,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    /// Up to `k` nearest indexed points within `max_dist` of `q`, sorted by
    /// `(squared distance, index)`. Returned as `(squared distance, index)`.
    pub fn knn(&self, q: &Point3<f64>, k: usize, max_dist: f64) -> Vec<(f64, usize)> {
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(k + 1);
        if k == 0 || self.is_empty() {
            return best;
        }
        let max2 = max_dist * max_dist;
        let c = cell_of(q, self.cell);
        let reach = [
            (c.0 - self.lo.0).max(self.hi.0 - c.0),
            (c.1 - self.lo.1).max(self.hi.1 - c.1),
            (c.2 - self.lo.2).max(self.hi.2 - c.2),
        ]
        .into_iter()
        .max()
        .unwrap_or(0)
        .max(0);

        for r in 0..=reach {
            // points not yet visited lie outside the cube of cells within
            // r - 1 of q's cell, hence at least (r - 1) * cell away
            if r > 0 {
                let bound = (r - 1) as f64 * self.cell;
                if bound > max_dist || (best.len() == k && best[k - 1].0 < bound * bound) {
                    break;
                }
            }
            self.visit_shell(c, r, |i| {
                let d2 = (self.points[i] - q).norm_squared();
                if d2 > max2 {
                    return;
                }
                let entry = (d2, i);
                if best.len() == k && !less(&entry, &best[k - 1]) {
                    return;
                }
                let pos = best.partition_point(|e| less(e, &entry));
                best.insert(pos, entry);
                best.truncate(k);
            });
        }
        best
    }

    /// Nearest indexed point within `max_dist`.
    pub fn nearest(&self, q: &Point3<f64>, max_dist: f64) -> Option<(f64, usize)> {
        self.knn(q, 1, max_dist).first().copied()
    }

    fn visit_shell(&self, c: Cell, r: i64, mut f: impl FnMut(usize)) {
        for dx in -r..=r {
            for dy in -r..=r {
                let on_face = dx.abs() == r || dy.abs() == r;
                let step = if on_face { 1 } else { 2 * r as usize };
                for dz in (-r..=r).step_by(step) {
                    if let Some(bucket) = self.cells.get(&(c.0 + dx, c.1 + dy, c.2 + dz)) {
                        bucket.iter().for_each(|&i| f(i));
                    }
                }
            }
        }
    }
}

fn less(a: &(f64, usize), b: &(f64, usize)) -> bool {
    a.0 < b.0 || (a.0 == b.0 && a.1 < b.1)
}

fn cell_of(p: &Point3<f64>, cell: f64) -> Cell {
    (
        (p.x / cell).floor() as i64,
        (p.y / cell).floor() as i64,
        (p.z / cell).floor() as i64,
    )
}

/// Replaces the points of each occupied voxel by their centroid. Output order
/// follows the first point of each voxel. When the cloud carries beam ids,
/// points of different beams never share a voxel and the ids are kept.
pub fn voxel_downsample(cloud: &PointCloud, voxel: f64) -> PointCloud {
    if !(voxel > 0.0) {
        return cloud.clone();
    }
    let mut slots: FxHashMap<(Cell, u16), usize> = FxHashMap::default();
    let mut sums: Vec<(Vector3<f64>, usize, u16)> = Vec::new();
    for (i, p) in cloud.points.iter().enumerate() {
        let beam = cloud.beam(i).unwrap_or(0);
        let slot = *slots.entry((cell_of(p, voxel), beam)).or_insert_with(|| {
            sums.push((Vector3::zeros(), 0, beam));
            sums.len() - 1
        });
        sums[slot].0 += p.coords;
        sums[slot].1 += 1;
    }
    let points = sums.iter().map(|(s, n, _)| Point3::from(s / *n as f64)).collect();
    match cloud.beams {
        Some(_) => PointCloud::with_beams(points, sums.iter().map(|s| s.2).collect(), cloud.timestamp),
        None => PointCloud::new(points, cloud.timestamp),
    }
}
