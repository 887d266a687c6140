//! Visual-LiDAR odometry building blocks: a LiDAR-anchored scale corrector for
//! monocular visual odometry, a point-to-plane LiDAR odometry that can be
//! bootstrapped from visual motion, trajectory evaluation, and a synthetic world
//! with ground truth for exercising all of it.

// `!(x > 0.0)` is used on purpose so NaN fails range checks.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod eval;
pub mod geometry;
pub mod image;
pub mod odom;
pub mod pipeline;
pub mod scale;
pub mod synth;

pub use geometry::{CameraIntrinsics, EpipolarLine, GeometryError, PointCloud, Pose, ProjectedKeypoint, Similarity};
pub use image::{ImageGray, Pyramid, TrackedPoint};
pub use scale::{LocalMap, MatchedPair, ScaleEstimate, ScaleSample};

pub use nalgebra::{Point2, Point3, Vector2, Vector3};
