use nalgebra::{Point3, Vector3};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::scene::Scene;
use super::SynthError;
use crate::geometry::{PointCloud, Pose};

/// A spinning multi-beam LiDAR. The sensor frame follows the camera convention
/// (x right, y down, z forward); azimuth 0 looks along +z and elevation is
/// positive upwards.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LidarModel {
    pub beam_count: u16,
    /// Lowest and highest beam elevation, degrees.
    pub vertical_fov: (f64, f64),
    /// Horizontal resolution, degrees.
    pub azimuth_step: f64,
    pub range_noise_sigma: f64,
    pub max_range: f64,
}

impl LidarModel {
    /// 16 beams over +-15 degrees at 0.2 degree steps.
    pub fn vlp16() -> Self {
        Self {
            beam_count: 16,
            vertical_fov: (-15.0, 15.0),
            azimuth_step: 0.2,
            range_noise_sigma: 0.0,
            max_range: 100.0,
        }
    }

    /// 64 beams from -24.8 to +2 degrees at 0.1 degree steps.
    pub fn hdl64() -> Self {
        Self {
            beam_count: 64,
            vertical_fov: (-24.8, 2.0),
            azimuth_step: 0.1,
            range_noise_sigma: 0.0,
            max_range: 120.0,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        if self.beam_count == 0 {
            return Err(SynthError::Domain("beam_count must be at least 1".into()));
        }
        if !(self.azimuth_step > 0.0 && self.max_range > 0.0 && self.range_noise_sigma >= 0.0) {
            return Err(SynthError::Domain(
                "azimuth_step and max_range must be positive, noise non-negative".into(),
            ));
        }
        if !(self.vertical_fov.0 <= self.vertical_fov.1) {
            return Err(SynthError::Domain("vertical_fov must be ordered (min, max)".into()));
        }
        Ok(())
    }

    /// Beam elevations in radians, evenly spaced over the vertical field of view.
    pub fn elevations(&self) -> Vec<f64> {
        let (lo, hi) = self.vertical_fov;
        let n = self.beam_count as usize;
        (0..n)
            .map(|b| {
                let deg = if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * b as f64 / (n - 1) as f64
                };
                deg.to_radians()
            })
            .collect()
    }

    pub fn azimuth_count(&self) -> usize {
        (360.0 / self.azimuth_step).round().max(1.0) as usize
    }

    /// Unit ray direction in the sensor frame.
    pub fn ray(elevation: f64, azimuth: f64) -> Vector3<f64> {
        let (se, ce) = elevation.sin_cos();
        let (sa, ca) = azimuth.sin_cos();
        Vector3::new(ce * sa, -se, ce * ca)
    }
}

/// Casts one ray per (azimuth, beam) pair and returns the hits in the sensor
/// frame, ordered azimuth-major, with Gaussian range noise drawn from `seed`.
pub fn simulate_scan(
    scene: &Scene,
    model: &LidarModel,
    lidar_to_world: &Pose,
    seed: u64,
) -> Result<PointCloud, SynthError> {
    model.validate()?;
    let origin = Point3::from(lidar_to_world.translation());
    let r = lidar_to_world.rotation_matrix();
    let candidates = scene.facing_planes_near(&origin, model.max_range);
    let elevations = model.elevations();
    let n_az = model.azimuth_count();
    let step = std::f64::consts::TAU / n_az as f64;
    let per_azimuth = azimuth_candidates(scene, &candidates, &lidar_to_world.inverse(), n_az);

    let hits: Vec<(f64, Vector3<f64>, u16)> = (0..n_az)
        .into_par_iter()
        .flat_map_iter(|a| {
            let az = a as f64 * step;
            let candidates = &per_azimuth[a];
            let r = &r;
            elevations.iter().enumerate().filter_map(move |(b, &el)| {
                let dir = LidarModel::ray(el, az);
                let hit = scene.cast(&origin, &(r * dir), model.max_range, candidates)?;
                Some((hit.t, dir, b as u16))
            })
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, model.range_noise_sigma).expect("validated sigma");
    let mut points = Vec::with_capacity(hits.len());
    let mut beams = Vec::with_capacity(hits.len());
    for (t, dir, b) in hits {
        let range = if model.range_noise_sigma > 0.0 {
            t + noise.sample(&mut rng)
        } else {
            t
        };
        if range > 0.0 {
            points.push(Point3::from(dir * range));
            beams.push(b);
        }
    }
    Ok(PointCloud::with_beams(points, beams, 0.0))
}

/// Candidate planes per azimuth bin, from each plane's azimuth interval as seen
/// from the sensor origin. Planes spanning half a turn or more go everywhere.
fn azimuth_candidates(scene: &Scene, candidates: &[usize], world_to_lidar: &Pose, n_az: usize) -> Vec<Vec<usize>> {
    use std::f64::consts::{PI, TAU};
    let step = TAU / n_az as f64;
    let mut bins = vec![Vec::new(); n_az];
    for &i in candidates {
        let angles = scene.planes[i].corners().map(|c| {
            let p = world_to_lidar.transform_point(&c);
            (p.x.atan2(p.z), p.x.hypot(p.z))
        });
        let base = angles[0].0;
        let (mut lo, mut hi) = (0.0f64, 0.0f64);
        for (a, _) in &angles[1..] {
            let d = (a - base + PI).rem_euclid(TAU) - PI;
            lo = lo.min(d);
            hi = hi.max(d);
        }
        let near_axis = angles.iter().any(|(_, r)| *r < 1e-9);
        if near_axis || hi - lo >= PI - 1e-6 {
            bins.iter_mut().for_each(|b| b.push(i));
            continue;
        }
        let first = ((base + lo) / step).floor() as i64 - 1;
        let last = ((base + hi) / step).ceil() as i64 + 1;
        for a in first..=last {
            bins[a.rem_euclid(n_az as i64) as usize].push(i);
        }
    }
    bins
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{Plane, Texture};
    use std::collections::BTreeSet;

    fn ground_scene() -> Scene {
        let ground = Plane::new(
            Point3::origin(),
            Vector3::z(),
            Vector3::x(),
            [1000.0, 1000.0],
            Texture::flat(100.0),
        )
        .unwrap();
        Scene::new(vec![ground], 0)
    }

    /// Sensor 2 m above ground, looking along +x, image-y pointing down.
    fn sensor_pose() -> Pose {
        crate::synth::camera_pose(Vector3::new(0.0, 0.0, 2.0), 0.0)
    }

    #[test]
    fn ground_returns_match_analytic_intersection() {
        let model = LidarModel {
            beam_count: 8,
            vertical_fov: (-30.0, -5.0),
            azimuth_step: 5.0,
            range_noise_sigma: 0.0,
            max_range: 100.0,
        };
        let cloud = simulate_scan(&ground_scene(), &model, &sensor_pose(), 0).unwrap();
        let elevations = model.elevations();
        assert_eq!(cloud.len(), 8 * 72);
        for (i, p) in cloud.points.iter().enumerate() {
            let el = elevations[cloud.beam(i).unwrap() as usize];
            // a ray at elevation el from height 2 meets z = 0 at range 2 / sin(-el)
            let expected_range = 2.0 / (-el).sin();
            assert!((p.coords.norm() - expected_range).abs() < 1e-6);
            let world = sensor_pose().transform_point(p);
            assert!(world.z.abs() < 1e-6);
        }
    }

    #[test]
    fn beam_ids_cover_the_model() {
        let mut model = LidarModel::vlp16();
        model.vertical_fov = (-15.0, -1.0);
        model.azimuth_step = 2.0;
        model.max_range = 1000.0;
        let cloud = simulate_scan(&ground_scene(), &model, &sensor_pose(), 0).unwrap();
        let ids: BTreeSet<u16> = cloud.beams.unwrap().into_iter().collect();
        assert_eq!(ids.len(), 16);
    }

    #[test]
    fn nothing_in_range_gives_empty_cloud() {
        let far = Plane::new(
            Point3::new(0.0, 0.0, 500.0),
            -Vector3::z(),
            Vector3::x(),
            [10.0, 10.0],
            Texture::flat(0.0),
        )
        .unwrap();
        let cloud = simulate_scan(&Scene::new(vec![far], 0), &LidarModel::vlp16(), &Pose::identity(), 0).unwrap();
        assert!(cloud.is_empty());
    }

    #[test]
    fn noise_is_seeded() {
        let mut model = LidarModel::vlp16();
        model.range_noise_sigma = 0.05;
        model.azimuth_step = 3.0;
        let a = simulate_scan(&ground_scene(), &model, &sensor_pose(), 4).unwrap();
        let b = simulate_scan(&ground_scene(), &model, &sensor_pose(), 4).unwrap();
        let c = simulate_scan(&ground_scene(), &model, &sensor_pose(), 5).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn invalid_model_is_rejected() {
        let mut model = LidarModel::vlp16();
        model.beam_count = 0;
        assert!(simulate_scan(&ground_scene(), &model, &Pose::identity(), 0).is_err());
    }

    #[test]
    fn azimuth_culling_matches_brute_force() {
        use crate::synth::{camera_pose, PathKind, SceneConfig};
        let scene = Scene::along_path(&PathKind::Arc { radius: 40.0 }, 60.0, &SceneConfig::default(), 4).unwrap();
        let mut model = LidarModel::vlp16();
        model.azimuth_step = 1.0;
        for (x, y, h) in [(0.0, 0.0, 0.0), (10.0, 1.0, 0.4), (25.0, 6.0, -2.0)] {
            let pose = camera_pose(Vector3::new(x, y, 1.6), h);
            let cloud = simulate_scan(&scene, &model, &pose, 0).unwrap();
            let origin = Point3::from(pose.translation());
            let all = scene.facing_planes_near(&origin, model.max_range);
            let mut expected = Vec::new();
            let step = std::f64::consts::TAU / model.azimuth_count() as f64;
            for a in 0..model.azimuth_count() {
                for &el in &model.elevations() {
                    let dir = LidarModel::ray(el, a as f64 * step);
                    if let Some(hit) = scene.cast(&origin, &(pose.rotation_matrix() * dir), model.max_range, &all) {
                        expected.push(Point3::from(dir * hit.t));
                    }
                }
            }
            assert_eq!(cloud.points, expected);
        }
    }
}
