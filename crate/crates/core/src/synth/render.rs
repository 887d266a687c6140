use nalgebra::{Point3, Vector3};
use rayon::prelude::*;

use super::scene::Scene;
use crate::geometry::{CameraIntrinsics, Pose};
use crate::image::ImageGray;

/// Planes farther than this from the camera are not rendered.
pub const RENDER_RANGE: f64 = 250.0;
/// Grazing-angle cap on the footprint stretch, 1 / cos(incidence).
const MAX_STRETCH: f64 = 20.0;

/// Ray-casts one pinhole image of the scene from `camera_to_world`.
///
/// Each pixel centre casts a ray to the nearest plane and samples the plane's
/// texture band-limited to the pixel footprint; rays that hit nothing get the
/// scene background.
pub fn render_image(scene: &Scene, k: &CameraIntrinsics, camera_to_world: &Pose) -> ImageGray {
    let origin = Point3::from(camera_to_world.translation());
    let r = camera_to_world.rotation_matrix();
    let world_to_camera = camera_to_world.inverse();
    let candidates = scene.facing_planes_near(&origin, RENDER_RANGE);
    let pixel_angle = 2.0 / (k.fx + k.fy);
    let (width, height) = (k.width as usize, k.height as usize);

    // Pixel bounding boxes of the visible planes, used to cull per tile.
    let boxes: Vec<(usize, [f64; 4])> = candidates
        .iter()
        .filter_map(|&i| {
            let corners = scene.planes[i].corners().map(|c| world_to_camera.transform_point(&c));
            image_bounds(k, &corners).map(|b| (i, b))
        })
        .collect();
    let tiles_x = width.div_ceil(TILE);
    let tiles_y = height.div_ceil(TILE);
    let tile_candidates: Vec<Vec<usize>> = (0..tiles_x * tiles_y)
        .map(|t| {
            let (x0, y0) = (((t % tiles_x) * TILE) as f64, ((t / tiles_x) * TILE) as f64);
            let (x1, y1) = (x0 + TILE as f64 - 1.0, y0 + TILE as f64 - 1.0);
            boxes
                .iter()
                .filter(|(_, b)| b[0] <= x1 && b[2] >= x0 && b[1] <= y1 && b[3] >= y0)
                .map(|(i, _)| *i)
                .collect()
        })
        .collect();

    let mut data = vec![scene.background_intensity; width * height];
    data.par_chunks_mut(width).enumerate().for_each(|(y, row)| {
        let ny = (y as f64 - k.cy) / k.fy;
        for (x, px) in row.iter_mut().enumerate() {
            let candidates = &tile_candidates[(y / TILE) * tiles_x + x / TILE];
            if candidates.is_empty() {
                continue;
            }
            let dir = r * Vector3::new((x as f64 - k.cx) / k.fx, ny, 1.0);
            if let Some(hit) = scene.cast(&origin, &dir, f64::INFINITY, candidates) {
                let plane = &scene.planes[hit.plane];
                let cos = (plane.normal.dot(&dir) / dir.norm()).abs();
                let footprint = hit.t * pixel_angle * (1.0 / cos).min(MAX_STRETCH);
                let value = plane.texture.sample_filtered(hit.u, hit.v, footprint);
                *px = value.round().clamp(0.0, 255.0) as u8;
            }
        }
    });
    ImageGray::new(k.width, k.height, data).expect("buffer sized from intrinsics")
}

const TILE: usize = 16;
const NEAR: f64 = 1e-3;

/// Pixel bounding box `[x0, y0, x1, y1]` of a camera-frame polygon clipped to
/// the front of the camera, padded by a pixel; `None` if nothing is in front.
fn image_bounds(k: &CameraIntrinsics, polygon: &[Point3<f64>]) -> Option<[f64; 4]> {
    let mut clipped = Vec::with_capacity(polygon.len() + 1);
    for (i, a) in polygon.iter().enumerate() {
        let b = polygon[(i + 1) % polygon.len()];
        if a.z >= NEAR {
            clipped.push(*a);
        }
        if (a.z >= NEAR) != (b.z >= NEAR) {
            let s = (NEAR - a.z) / (b.z - a.z);
            clipped.push(a + (b - a) * s);
        }
    }
    if clipped.is_empty() {
        return None;
    }
    let mut bounds = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
    for p in &clipped {
        let (u, v) = (k.fx * p.x / p.z + k.cx, k.fy * p.y / p.z + k.cy);
        bounds[0] = bounds[0].min(u - 1.0);
        bounds[1] = bounds[1].min(v - 1.0);
        bounds[2] = bounds[2].max(u + 1.0);
        bounds[3] = bounds[3].max(v + 1.0);
    }
    Some(bounds)
}
