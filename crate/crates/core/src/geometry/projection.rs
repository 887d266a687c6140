use nalgebra::{Point2, Point3};

use super::{CameraIntrinsics, GeometryError, PointCloud, Pose};

/// Camera-frame depths at or below this are treated as behind the camera.
const MIN_DEPTH: f64 = 1e-6;

/// A LiDAR return that lands inside the image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectedKeypoint {
    pub pixel: Point2<f64>,
    /// Camera-frame z, meters.
    pub depth: f64,
    /// The originating point, LiDAR frame.
    pub source_point: Point3<f64>,
    pub source_index: usize,
    pub beam: Option<u16>,
}

/// Projects a LiDAR-frame point through the extrinsics and the pinhole model.
pub fn project_point(
    k: &CameraIntrinsics,
    lidar_to_camera: &Pose,
    p: &Point3<f64>,
) -> Result<(Point2<f64>, f64), GeometryError> {
    let pc = lidar_to_camera.transform_point(p);
    if pc.z <= MIN_DEPTH {
        return Err(GeometryError::BehindCamera { depth: pc.z });
    }
    let pixel = Point2::new(k.fx * pc.x / pc.z + k.cx, k.fy * pc.y / pc.z + k.cy);
    Ok((pixel, pc.z))
}

/// Inverse of [`project_point`]: pixel plus camera-frame depth back to the LiDAR frame.
pub fn back_project(k: &CameraIntrinsics, lidar_to_camera: &Pose, pixel: &Point2<f64>, depth: f64) -> Point3<f64> {
    let pc = Point3::from(k.normalize(pixel) * depth);
    lidar_to_camera.inverse().transform_point(&pc)
}

/// Projects a whole sweep, keeping only in-image returns in front of the camera.
///
/// When several returns fall in the same integer pixel cell only the nearest one
/// survives. Output is ordered by source index.
pub fn project_cloud(k: &CameraIntrinsics, lidar_to_camera: &Pose, cloud: &PointCloud) -> Vec<ProjectedKeypoint> {
    let (w, h) = (k.width as usize, k.height as usize);
    let mut owner = vec![usize::MAX; w * h];
    let mut candidates: Vec<ProjectedKeypoint> = Vec::new();

    for (i, p) in cloud.points.iter().enumerate() {
        let Ok((pixel, depth)) = project_point(k, lidar_to_camera, p) else {
            continue;
        };
        if !k.contains(&pixel) {
            continue;
        }
        let cell = pixel.y.floor() as usize * w + pixel.x.floor() as usize;
        let kp = ProjectedKeypoint {
            pixel,
            depth,
            source_point: *p,
            source_index: i,
            beam: cloud.beam(i),
        };
        match owner[cell] {
            usize::MAX => {
                owner[cell] = candidates.len();
                candidates.push(kp);
            }
            slot => {
                if depth < candidates[slot].depth {
                    candidates[slot] = kp;
                }
            }
        }
    }
    candidates.sort_by_key(|kp| kp.source_index);
    candidates
}
