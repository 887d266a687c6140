use nalgebra::{Point2, Point3};

use super::scene::Scene;
use crate::geometry::{CameraIntrinsics, Pose};

/// An exact pixel correspondence of a scene point between two views.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Correspondence {
    pub x_prev: Point2<f64>,
    pub x_cur: Point2<f64>,
    /// Camera-frame depth in the previous view, meters.
    pub depth_prev: f64,
    pub world: Point3<f64>,
}

fn project(k: &CameraIntrinsics, camera_to_world: &Pose, world: &Point3<f64>) -> Option<(Point2<f64>, f64)> {
    let pc = camera_to_world.inverse().transform_point(world);
    if pc.z <= 1e-6 {
        return None;
    }
    let px = Point2::new(k.fx * pc.x / pc.z + k.cx, k.fy * pc.y / pc.z + k.cy);
    k.contains(&px).then_some((px, pc.z))
}

/// Projects a world point into two views; `None` if it is behind either camera
/// or outside either image. Occlusion is not checked.
pub fn exact_correspondence(
    k: &CameraIntrinsics,
    prev_to_world: &Pose,
    cur_to_world: &Pose,
    world: &Point3<f64>,
) -> Option<Correspondence> {
    let (x_prev, depth_prev) = project(k, prev_to_world, world)?;
    let (x_cur, _) = project(k, cur_to_world, world)?;
    Some(Correspondence {
        x_prev,
        x_cur,
        depth_prev,
        world: *world,
    })
}

/// Ray-casts `pixel` of the previous view into the scene and follows the surface
/// point into the current view, rejecting it if another surface hides it there.
pub fn correspondence_from_pixel(
    scene: &Scene,
    k: &CameraIntrinsics,
    prev_to_world: &Pose,
    cur_to_world: &Pose,
    pixel: &Point2<f64>,
) -> Option<Correspondence> {
    let origin = Point3::from(prev_to_world.translation());
    let dir = prev_to_world.transform_vector(&k.normalize(pixel));
    let hit = scene.cast_all(&origin, &dir, f64::INFINITY)?;
    let world = origin + dir * hit.t;
    let c = exact_correspondence(k, prev_to_world, cur_to_world, &world)?;

    let cur_origin = Point3::from(cur_to_world.translation());
    let to_point = world - cur_origin;
    let seen = scene.cast_all(&cur_origin, &to_point, f64::INFINITY)?;
    ((seen.t - 1.0).abs() < 1e-9).then_some(c)
}
