use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use vlo_bench::frame_pair;
use vlo_core::geometry::project_cloud;
use vlo_core::image::{lk_track, select_keypoints, SelectionConfig, SelectionMode, TrackerConfig};
use vlo_core::scale::{ransac_scale, RansacConfig};
use vlo_core::{Point3, Pyramid, ScaleSample};

fn keypoints(c: &mut Criterion) {
    for lidar in ["hdl64", "vlp16"] {
        let pair = frame_pair(lidar, 10);
        let projected = project_cloud(&pair.intrinsics, &pair.lidar_to_camera, &pair.clouds[0]);
        c.bench_function(&format!("project_cloud/{lidar}"), |b| {
            b.iter(|| project_cloud(&pair.intrinsics, &pair.lidar_to_camera, black_box(&pair.clouds[0])))
        });
        for mode in [SelectionMode::Dense, SelectionMode::Sparse] {
            let cfg = SelectionConfig {
                mode,
                ..SelectionConfig::default()
            };
            c.bench_function(&format!("select_keypoints/{lidar}/{mode:?}"), |b| {
                b.iter(|| select_keypoints(black_box(&projected), &pair.images[0], &cfg))
            });
        }
    }
}

fn tracking(c: &mut Criterion) {
    let pair = frame_pair("hdl64", 10);
    let cfg = TrackerConfig::default();
    let projected = project_cloud(&pair.intrinsics, &pair.lidar_to_camera, &pair.clouds[0]);
    let points: Vec<_> = select_keypoints(&projected, &pair.images[0], &SelectionConfig::default())
        .iter()
        .map(|k| k.pixel)
        .collect();
    c.bench_function("pyramid_build", |b| {
        b.iter(|| Pyramid::build(black_box(&pair.images[0]), cfg.levels))
    });
    let prev = Pyramid::build(&pair.images[0], cfg.levels);
    let cur = Pyramid::build(&pair.images[1], cfg.levels);
    c.bench_function(&format!("lk_track/{}_points", points.len()), |b| {
        b.iter(|| lk_track(&prev, &cur, black_box(&points), &cfg).unwrap())
    });
}

fn ransac(c: &mut Criterion) {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let samples: Vec<ScaleSample> = (0..200)
        .map(|_| {
            let s = if rng.random_bool(0.7) {
                1.1 * (1.0 + rng.random_range(-0.02..0.02))
            } else {
                rng.random_range(0.2..5.0)
            };
            ScaleSample::new(s, 1.0, Point3::origin())
        })
        .collect();
    let cfg = RansacConfig::default();
    c.bench_function("ransac_scale/200", |b| {
        b.iter(|| ransac_scale(black_box(&samples), &cfg).unwrap())
    });
}

criterion_group!(benches, keypoints, tracking, ransac);
criterion_main!(benches);
