use std::f64::consts::FRAC_PI_4;

use nalgebra::{Point3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::texture::Texture;
use super::trajectory::PathKind;
use super::SynthError;

/// A bounded, textured rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    /// Centre of the rectangle, world frame.
    pub anchor: Point3<f64>,
    pub normal: Vector3<f64>,
    /// In-plane axis carrying the first extent and the texture `u` coordinate.
    pub u_axis: Vector3<f64>,
    /// `normal x u_axis`.
    pub v_axis: Vector3<f64>,
    /// Full side lengths along `u_axis` and `v_axis`, meters.
    pub extents: [f64; 2],
    pub texture: Texture,
}

impl Plane {
    pub fn new(
        anchor: Point3<f64>,
        normal: Vector3<f64>,
        u_axis: Vector3<f64>,
        extents: [f64; 2],
        texture: Texture,
    ) -> Result<Self, SynthError> {
        let n = normal
            .try_normalize(1e-12)
            .ok_or_else(|| SynthError::Domain("plane normal must be non-zero".into()))?;
        let u = (u_axis - n * n.dot(&u_axis))
            .try_normalize(1e-12)
            .ok_or_else(|| SynthError::Domain("plane u axis must not be parallel to the normal".into()))?;
        if !(extents[0] > 0.0 && extents[1] > 0.0) {
            return Err(SynthError::Domain("plane extents must be positive".into()));
        }
        Ok(Self {
            anchor,
            normal: n,
            u_axis: u,
            v_axis: n.cross(&u),
            extents,
            texture,
        })
    }

    /// Rectangle corners in order around the boundary.
    pub fn corners(&self) -> [Point3<f64>; 4] {
        let hu = self.u_axis * (0.5 * self.extents[0]);
        let hv = self.v_axis * (0.5 * self.extents[1]);
        [
            self.anchor - hu - hv,
            self.anchor + hu - hv,
            self.anchor + hu + hv,
            self.anchor - hu + hv,
        ]
    }

    pub fn bounding_radius(&self) -> f64 {
        0.5 * self.extents[0].hypot(self.extents[1])
    }

    /// Ray parameter and plane coordinates of the hit, if inside the rectangle.
    pub fn intersect(&self, origin: &Point3<f64>, dir: &Vector3<f64>) -> Option<(f64, f64, f64)> {
        let denom = self.normal.dot(dir);
        if denom.abs() < 1e-12 {
            return None;
        }
        let t = self.normal.dot(&(self.anchor - origin)) / denom;
        if !(t > 1e-9) {
            return None;
        }
        let local = origin + dir * t - self.anchor;
        let (u, v) = (local.dot(&self.u_axis), local.dot(&self.v_axis));
        (u.abs() <= 0.5 * self.extents[0] && v.abs() <= 0.5 * self.extents[1]).then_some((t, u, v))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub plane: usize,
    pub u: f64,
    pub v: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub planes: Vec<Plane>,
    pub background_intensity: u8,
}

impl Scene {
    pub fn new(planes: Vec<Plane>, background_intensity: u8) -> Self {
        Self {
            planes,
            background_intensity,
        }
    }

    /// Indices of planes that can intersect a sphere of `range` around `origin`.
    pub fn planes_near(&self, origin: &Point3<f64>, range: f64) -> Vec<usize> {
        self.planes
            .iter()
            .enumerate()
            .filter(|(_, p)| (p.anchor - origin).norm() - p.bounding_radius() <= range)
            .map(|(i, _)| i)
            .collect()
    }

    /// [`Scene::planes_near`] restricted to planes whose front side faces `origin`.
    /// Surfaces are one-sided: walls face the path and box faces point outwards.
    pub fn facing_planes_near(&self, origin: &Point3<f64>, range: f64) -> Vec<usize> {
        self.planes_near(origin, range)
            .into_iter()
            .filter(|&i| self.planes[i].normal.dot(&(origin - self.planes[i].anchor)) > 0.0)
            .collect()
    }

    /// Nearest hit among `candidates` with `t < t_max`; `dir` need not be unit length.
    pub fn cast(&self, origin: &Point3<f64>, dir: &Vector3<f64>, t_max: f64, candidates: &[usize]) -> Option<Hit> {
        let mut best: Option<Hit> = None;
        for &i in candidates {
            if let Some((t, u, v)) = self.planes[i].intersect(origin, dir) {
                if t < t_max && best.is_none_or(|b| t < b.t) {
                    best = Some(Hit { t, plane: i, u, v });
                }
            }
        }
        best
    }

    /// [`Scene::cast`] over every plane.
    pub fn cast_all(&self, origin: &Point3<f64>, dir: &Vector3<f64>, t_max: f64) -> Option<Hit> {
        let all: Vec<usize> = (0..self.planes.len()).collect();
        self.cast(origin, dir, t_max, &all)
    }

    /// Ground, side walls and boxes laid out along a path, the default world for
    /// synthetic runs. A corridor-detour path gets two long low-texture walls
    /// from `corridor_entry` to the end of its straight section and no boxes there.
    pub fn along_path(path: &PathKind, length: f64, cfg: &SceneConfig, seed: u64) -> Result<Scene, SynthError> {
        if !(length > 0.0) {
            return Err(SynthError::Domain("path length must be positive".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut planes = Vec::new();
        let (s_begin, s_end) = (-cfg.margin, length + cfg.margin);

        // ground covering the path's bounding box
        let (mut lo, mut hi) = (Vector3::repeat(f64::INFINITY), Vector3::repeat(f64::NEG_INFINITY));
        let steps = ((s_end - s_begin) / 1.0).ceil() as usize;
        for k in 0..=steps {
            let (p, _) = path.centerline(s_begin + (s_end - s_begin) * k as f64 / steps as f64);
            let p = Vector3::new(p.x, p.y, 0.0);
            lo = lo.inf(&p);
            hi = hi.sup(&p);
        }
        let pad = cfg.margin + cfg.wall_offset;
        planes.push(Plane::new(
            Point3::from((lo + hi) * 0.5),
            Vector3::z(),
            Vector3::x(),
            [hi.x - lo.x + 2.0 * pad, hi.y - lo.y + 2.0 * pad],
            cfg.ground.with_seed(rng.random()),
        )?);

        let corridor_end = match path {
            PathKind::CorridorDetour { corridor_length, .. } => Some(*corridor_length),
            _ => None,
        };
        if let Some(end) = corridor_end {
            let entry = cfg.corridor_entry.max(s_begin);
            let (start, _) = path.centerline(entry);
            let (stop, _) = path.centerline(end);
            let mid = Vector3::new(
                0.5 * (start.x + stop.x),
                0.5 * (start.y + stop.y),
                0.5 * cfg.wall_height,
            );
            let span = end - entry;
            for side in [1.0, -1.0] {
                planes.push(Plane::new(
                    Point3::from(mid + Vector3::y() * side * cfg.corridor_half_width),
                    -Vector3::y() * side,
                    Vector3::x(),
                    [span, cfg.wall_height],
                    cfg.corridor_wall.with_seed(rng.random()),
                )?);
            }
        }
        // whether the path interval [a, b] overlaps the corridor walls
        let in_corridor = |a: f64, b: f64| corridor_end.is_some_and(|end| a < end && b > cfg.corridor_entry);

        let mut s = s_begin;
        while s < s_end {
            let centre = s + 0.5 * cfg.wall_segment;
            if !in_corridor(s, s + cfg.wall_segment) {
                let (p, h) = path.centerline(centre);
                let forward = Vector3::new(h.cos(), h.sin(), 0.0);
                let left = Vector3::new(-h.sin(), h.cos(), 0.0);
                for side in [1.0, -1.0] {
                    let anchor = Point3::new(p.x, p.y, 0.5 * cfg.wall_height) + left * side * cfg.wall_offset;
                    planes.push(Plane::new(
                        anchor,
                        -left * side,
                        forward,
                        [cfg.wall_segment + 0.2, cfg.wall_height],
                        cfg.wall.with_seed(rng.random()),
                    )?);
                }
            }
            s += cfg.wall_segment;
        }

        let mut s = s_begin + 0.5 * cfg.box_spacing;
        let mut side = 1.0;
        while s < s_end {
            let reach = 0.5 * cfg.box_size[0].max(cfg.box_size[1]) * 1.2;
            if !in_corridor(s - reach, s + reach) {
                let (p, h) = path.centerline(s);
                let left = Vector3::new(-h.sin(), h.cos(), 0.0);
                let yaw = h + rng.random_range(-0.6..0.6);
                let size = [
                    cfg.box_size[0] * rng.random_range(0.8..1.2),
                    cfg.box_size[1] * rng.random_range(0.8..1.2),
                    cfg.box_size[2] * rng.random_range(0.8..1.2),
                ];
                let centre = Point3::new(p.x, p.y, 0.5 * size[2]) + left * side * cfg.box_offset;
                push_box(&mut planes, centre, yaw, size, &cfg.boxes, &mut rng)?;
                side = -side;
            }
            s += cfg.box_spacing;
        }

        Ok(Scene::new(planes, cfg.background_intensity))
    }
}

fn push_box(
    planes: &mut Vec<Plane>,
    centre: Point3<f64>,
    yaw: f64,
    size: [f64; 3],
    texture: &Texture,
    rng: &mut ChaCha8Rng,
) -> Result<(), SynthError> {
    let ax = Vector3::new(yaw.cos(), yaw.sin(), 0.0);
    let ay = Vector3::new(-yaw.sin(), yaw.cos(), 0.0);
    for (normal, along, half, width) in [
        (ax, ay, size[0], size[1]),
        (-ax, -ay, size[0], size[1]),
        (ay, -ax, size[1], size[0]),
        (-ay, ax, size[1], size[0]),
    ] {
        planes.push(Plane::new(
            centre + normal * (0.5 * half),
            normal,
            along,
            [width, size[2]],
            texture.with_seed(rng.random()),
        )?);
    }
    Ok(())
}

/// Layout and appearance parameters for [`Scene::along_path`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SceneConfig {
    pub ground: Texture,
    pub wall: Texture,
    pub boxes: Texture,
    pub corridor_wall: Texture,
    /// Lateral distance of the side walls from the path, meters.
    pub wall_offset: f64,
    pub wall_height: f64,
    pub wall_segment: f64,
    pub box_spacing: f64,
    pub box_offset: f64,
    pub box_size: [f64; 3],
    pub corridor_half_width: f64,
    /// Path distance at which the corridor walls begin; the path before it gets
    /// the ordinary walls and boxes.
    pub corridor_entry: f64,
    /// Scene extension before the start and after the end of the path, meters.
    pub margin: f64,
    pub background_intensity: u8,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            ground: Texture::new(0, 110.0, 60.0, 0.2, 1).with_grain(16.0, FRAC_PI_4),
            wall: Texture::new(0, 150.0, 60.0, 0.2, 1).with_grain(16.0, FRAC_PI_4),
            boxes: Texture::new(0, 90.0, 60.0, 0.1, 1).with_grain(16.0, FRAC_PI_4),
            corridor_wall: Texture::new(0, 140.0, 3.0, 2.0, 2),
            wall_offset: 8.0,
            wall_height: 5.0,
            wall_segment: 12.0,
            box_spacing: 12.0,
            box_offset: 4.5,
            box_size: [1.5, 1.5, 2.0],
            corridor_half_width: 4.0,
            corridor_entry: 0.0,
            margin: 30.0,
            background_intensity: 190,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_plane() -> Plane {
        Plane::new(
            Point3::new(0.0, 0.0, 5.0),
            Vector3::new(0.0, 0.0, -2.0),
            Vector3::x(),
            [4.0, 2.0],
            Texture::flat(100.0),
        )
        .unwrap()
    }

    #[test]
    fn axes_are_orthonormal() {
        let p = unit_plane();
        assert!((p.normal.norm() - 1.0).abs() < 1e-15);
        assert!(p.normal.dot(&p.u_axis).abs() < 1e-15);
        assert!((p.v_axis.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn ray_hits_inside_and_misses_outside() {
        let p = unit_plane();
        let (t, u, v) = p.intersect(&Point3::origin(), &Vector3::new(0.1, 0.0, 1.0)).unwrap();
        assert!((t - 5.0).abs() < 1e-12);
        assert!((u - 0.5).abs() < 1e-12);
        assert!(v.abs() < 1e-12);
        assert!(p.intersect(&Point3::origin(), &Vector3::new(0.5, 0.0, 1.0)).is_none());
        assert!(p.intersect(&Point3::origin(), &Vector3::new(0.0, 0.0, -1.0)).is_none());
    }

    #[test]
    fn invalid_planes_are_rejected() {
        let t = Texture::flat(0.0);
        assert!(Plane::new(Point3::origin(), Vector3::zeros(), Vector3::x(), [1.0, 1.0], t).is_err());
        assert!(Plane::new(Point3::origin(), Vector3::x(), Vector3::x(), [1.0, 1.0], t).is_err());
        assert!(Plane::new(Point3::origin(), Vector3::z(), Vector3::x(), [0.0, 1.0], t).is_err());
    }

    #[test]
    fn nearest_plane_wins() {
        let near = unit_plane();
        let mut far = near;
        far.anchor.z = 8.0;
        let scene = Scene::new(vec![far, near], 0);
        let hit = scene.cast_all(&Point3::origin(), &Vector3::z(), f64::INFINITY).unwrap();
        assert_eq!(hit.plane, 1);
        assert!(scene.cast_all(&Point3::origin(), &Vector3::z(), 4.0).is_none());
    }

    #[test]
    fn along_path_is_deterministic_and_valid() {
        let cfg = SceneConfig::default();
        let a = Scene::along_path(&PathKind::Arc { radius: 60.0 }, 100.0, &cfg, 5).unwrap();
        let b = Scene::along_path(&PathKind::Arc { radius: 60.0 }, 100.0, &cfg, 5).unwrap();
        assert_eq!(a, b);
        for p in &a.planes {
            assert!((p.normal.norm() - 1.0).abs() < 1e-12);
            assert!(p.extents[0] > 0.0 && p.extents[1] > 0.0);
        }
    }

    #[test]
    fn corridor_has_no_boxes_along_its_straight() {
        let cfg = SceneConfig {
            corridor_entry: 30.0,
            ..SceneConfig::default()
        };
        let path = PathKind::CorridorDetour {
            corridor_length: 80.0,
            turn_radius: 20.0,
        };
        let scene = Scene::along_path(&path, 140.0, &cfg, 1).unwrap();
        let mut before = 0;
        for p in &scene.planes[3..] {
            let near = p.anchor.y.abs() < cfg.corridor_half_width + 0.5;
            assert!(
                !(near && p.anchor.x > 30.0 && p.anchor.x < 80.0),
                "structure inside the corridor at {:?}",
                p.anchor
            );
            before += usize::from(near && p.anchor.x < 30.0);
        }
        assert!(before > 0, "no structure before the corridor entry");
        let walls = &scene.planes[1..3];
        assert!(walls
            .iter()
            .all(|w| (w.anchor.x - 55.0).abs() < 1e-9 && (w.extents[0] - 50.0).abs() < 1e-9));
    }
}
