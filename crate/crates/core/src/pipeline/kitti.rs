//! KITTI odometry layout: `velodyne/NNNNNN.bin`, `image_0/NNNNNN.{pgm,png}`,
//! `calib.txt`, `times.txt` and optionally `poses.txt`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use nalgebra::Point3;

use super::source::{FrameBundle, FrameSource};
use super::PipelineError;
use crate::eval::Trajectory;
use crate::geometry::trajectory_io::{read_trajectory, write_trajectory};
use crate::geometry::{CameraIntrinsics, PointCloud, Pose};
use crate::image::pgm::{read_pgm, write_pgm};
use crate::image::ImageGray;

/// Raw calibration rows, row-major 3x4.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KittiCalib {
    /// Projection matrix of the grayscale camera.
    pub p0: [f64; 12],
    /// LiDAR-to-camera transform.
    pub tr: [f64; 12],
}

impl KittiCalib {
    pub fn intrinsics(&self, width: u32, height: u32) -> Result<CameraIntrinsics, PipelineError> {
        Ok(CameraIntrinsics::new(
            self.p0[0], self.p0[5], self.p0[2], self.p0[6], width, height,
        )?)
    }

    pub fn lidar_to_camera(&self) -> Pose {
        Pose::from_row_major_3x4(&self.tr)
    }
}

fn row_of_12(path: &Path, line: usize, rest: &str) -> Result<[f64; 12], PipelineError> {
    let err = |message: String| PipelineError::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let values = rest
        .split_whitespace()
        .map(str::parse::<f64>)
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| err(e.to_string()))?;
    values
        .try_into()
        .map_err(|v: Vec<f64>| err(format!("expected 12 values, found {}", v.len())))
}

/// Parses the `P0:` and `Tr:` rows of a calibration file; other rows are ignored.
pub fn parse_calib(text: &str, path: &Path) -> Result<KittiCalib, PipelineError> {
    let (mut p0, mut tr) = (None, None);
    for (i, line) in text.lines().enumerate() {
        let Some((label, rest)) = line.split_once(':') else {
            continue;
        };
        match label.trim() {
            "P0" => p0 = Some(row_of_12(path, i + 1, rest)?),
            "Tr" | "Tr_velo_to_cam" => tr = Some(row_of_12(path, i + 1, rest)?),
            _ => {}
        }
    }
    let missing = |what: &str| PipelineError::Parse {
        path: path.to_path_buf(),
        line: 0,
        message: format!("missing {what} row"),
    };
    Ok(KittiCalib {
        p0: p0.ok_or_else(|| missing("P0"))?,
        tr: tr.ok_or_else(|| missing("Tr"))?,
    })
}

pub fn read_times(path: &Path) -> Result<Vec<f64>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim().parse::<f64>().map_err(|e| PipelineError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

/// Little-endian `f32` quadruples `(x, y, z, reflectance)`; reflectance is dropped.
pub fn read_velodyne(path: &Path) -> Result<PointCloud, PipelineError> {
    let bytes = fs::read(path).map_err(|e| PipelineError::io(path, e))?;
    if bytes.len() % 16 != 0 {
        return Err(PipelineError::MalformedCloud {
            path: path.to_path_buf(),
            len: bytes.len(),
        });
    }
    let f = |b: &[u8]| f64::from(f32::from_le_bytes([b[0], b[1], b[2], b[3]]));
    let points = bytes
        .chunks_exact(16)
        .map(|r| Point3::new(f(&r[0..4]), f(&r[4..8]), f(&r[8..12])))
        .collect();
    Ok(PointCloud::new(points, 0.0))
}

/// Writes the cloud as `f32` records with zero reflectance.
pub fn write_velodyne(path: &Path, cloud: &PointCloud) -> Result<(), PipelineError> {
    let mut bytes = Vec::with_capacity(cloud.len() * 16);
    for p in &cloud.points {
        for v in [p.x as f32, p.y as f32, p.z as f32, 0.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
    }
    fs::write(path, bytes).map_err(|e| PipelineError::io(path, e))
}

fn read_image(dir: &Path, index: usize) -> Result<ImageGray, PipelineError> {
    let pgm = dir.join(format!("image_0/{index:06}.pgm"));
    if pgm.exists() {
        return read_pgm(&pgm).map_err(|source| PipelineError::Image { path: pgm, source });
    }
    let png = dir.join(format!("image_0/{index:06}.png"));
    read_png(&png)
}

#[cfg(feature = "png")]
fn read_png(path: &Path) -> Result<ImageGray, PipelineError> {
    let fail = |message: String| PipelineError::Decode {
        path: path.to_path_buf(),
        message,
    };
    let img = image::open(path).map_err(|e| fail(e.to_string()))?.to_luma8();
    let (w, h) = img.dimensions();
    ImageGray::new(w, h, img.into_raw()).map_err(|e| fail(e.to_string()))
}

#[cfg(not(feature = "png"))]
fn read_png(path: &Path) -> Result<ImageGray, PipelineError> {
    if !path.exists() {
        return Err(PipelineError::io(
            path.with_extension("pgm"),
            std::io::Error::from(std::io::ErrorKind::NotFound),
        ));
    }
    Err(PipelineError::Decode {
        path: path.to_path_buf(),
        message: "PNG input needs the `png` feature".into(),
    })
}

/// KITTI `poses.txt`: one row-major 3x4 camera-to-world matrix per line.
fn read_kitti_poses(path: &Path) -> Result<Vec<Pose>, PipelineError> {
    let text = fs::read_to_string(path).map_err(|e| PipelineError::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| row_of_12(path, i + 1, l).map(|m| Pose::from_row_major_3x4(&m)))
        .collect()
}

/// A sequence directory in KITTI layout, optionally restricted to a frame range.
#[derive(Debug, Clone)]
pub struct KittiSequence {
    dir: PathBuf,
    calib: KittiCalib,
    intrinsics: CameraIntrinsics,
    times: Vec<f64>,
    first: usize,
    gt: Option<Vec<Pose>>,
    vo: Option<Vec<Pose>>,
}

impl KittiSequence {
    /// Reads calibration, timestamps and `poses.txt` if present. Image size is
    /// taken from the first frame.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let dir = dir.as_ref().to_path_buf();
        let calib_path = dir.join("calib.txt");
        let text = fs::read_to_string(&calib_path).map_err(|e| PipelineError::io(&calib_path, e))?;
        let calib = parse_calib(&text, &calib_path)?;
        let times = read_times(&dir.join("times.txt"))?;
        if times.is_empty() {
            return Err(PipelineError::Domain(format!(
                "{}: no frames in times.txt",
                dir.display()
            )));
        }
        let (w, h) = read_image(&dir, 0)?.dimensions();
        let intrinsics = calib.intrinsics(w, h)?;
        let poses = dir.join("poses.txt");
        let gt = if poses.exists() {
            let gt = read_kitti_poses(&poses)?;
            if gt.len() < times.len() {
                return Err(PipelineError::Domain(format!(
                    "{}: {} poses for {} frames",
                    poses.display(),
                    gt.len(),
                    times.len()
                )));
            }
            Some(gt)
        } else {
            None
        };
        Ok(Self {
            dir,
            calib,
            intrinsics,
            times,
            first: 0,
            gt,
            vo: None,
        })
    }

    pub fn calib(&self) -> &KittiCalib {
        &self.calib
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.times[self.first..]
    }

    /// Restricts the sequence to `count` frames starting at `first`.
    pub fn with_range(mut self, first: usize, count: Option<usize>) -> Result<Self, PipelineError> {
        let total = self.times.len();
        let end = count.map_or(total, |c| first.saturating_add(c));
        if first >= total || end > total {
            return Err(PipelineError::Domain(format!(
                "frame range {first}..{end} outside the {total} frames of {}",
                self.dir.display()
            )));
        }
        self.times.truncate(end);
        if let Some(gt) = &mut self.gt {
            gt.truncate(end);
        }
        self.first = first;
        Ok(self)
    }

    fn resample(&self, path: &Path) -> Result<Vec<Pose>, PipelineError> {
        let traj = Trajectory::new(read_trajectory(path)?)?;
        self.times
            .iter()
            .map(|&t| traj.pose_at(t).map_err(PipelineError::from))
            .collect()
    }

    /// Visual odometry poses, resampled at the frame timestamps.
    pub fn with_visual_odometry(mut self, path: &Path) -> Result<Self, PipelineError> {
        self.vo = Some(self.resample(path)?);
        Ok(self)
    }

    /// Ground truth from a trajectory file instead of `poses.txt`.
    pub fn with_ground_truth(mut self, path: &Path) -> Result<Self, PipelineError> {
        self.gt = Some(self.resample(path)?);
        Ok(self)
    }

    fn absolute(&self, index: usize) -> usize {
        self.first + index
    }
}

impl FrameSource for KittiSequence {
    fn len(&self) -> usize {
        self.times.len() - self.first
    }

    fn intrinsics(&self) -> CameraIntrinsics {
        self.intrinsics
    }

    fn lidar_to_camera(&self) -> Pose {
        self.calib.lidar_to_camera()
    }

    fn timestamp(&self, index: usize) -> f64 {
        self.times[self.absolute(index)]
    }

    /// Without a visual odometry file this falls back to the ground truth, then
    /// to the identity.
    fn vo_pose(&self, index: usize) -> Pose {
        let i = self.absolute(index);
        self.vo
            .as_ref()
            .or(self.gt.as_ref())
            .map_or_else(Pose::identity, |v| v[i])
    }

    fn gt_pose(&self, index: usize) -> Option<Pose> {
        self.gt.as_ref().map(|g| g[self.absolute(index)])
    }

    fn image(&self, index: usize) -> Result<Arc<ImageGray>, PipelineError> {
        let img = read_image(&self.dir, self.absolute(index))?;
        if img.dimensions() != (self.intrinsics.width, self.intrinsics.height) {
            return Err(PipelineError::Domain(format!(
                "image {} is {:?}, expected {}x{}",
                self.absolute(index),
                img.dimensions(),
                self.intrinsics.width,
                self.intrinsics.height
            )));
        }
        Ok(Arc::new(img))
    }

    fn cloud(&self, index: usize) -> Result<Arc<PointCloud>, PipelineError> {
        let i = self.absolute(index);
        let mut cloud = read_velodyne(&self.dir.join(format!("velodyne/{i:06}.bin")))?;
        cloud.timestamp = self.times[i];
        Ok(Arc::new(cloud))
    }
}

/// Reads frame `index` of a KITTI-layout sequence.
pub fn load_kitti_frame(sequence_dir: impl AsRef<Path>, index: usize) -> Result<FrameBundle, PipelineError> {
    let seq = KittiSequence::open(sequence_dir)?;
    if index >= seq.len() {
        return Err(PipelineError::Domain(format!(
            "frame {index} beyond the {} frames",
            seq.len()
        )));
    }
    seq.frame(index).map_err(|e| e.at_frame(index))
}

fn calib_row(label: &str, m: &[f64; 12]) -> String {
    let values: Vec<String> = m.iter().map(|v| v.to_string()).collect();
    format!("{label}: {}\n", values.join(" "))
}

/// Writes every frame of `source` in KITTI layout, plus `vo.txt` (trajectory
/// format) and `poses.txt` when ground truth is known. Floats are written in
/// shortest round-trip form.
pub fn export_kitti_sequence(source: &dyn FrameSource, dir: impl AsRef<Path>) -> Result<(), PipelineError> {
    let dir = dir.as_ref();
    for sub in ["velodyne", "image_0"] {
        let p = dir.join(sub);
        fs::create_dir_all(&p).map_err(|e| PipelineError::io(&p, e))?;
    }
    let k = source.intrinsics();
    let p0 = [k.fx, 0.0, k.cx, 0.0, 0.0, k.fy, k.cy, 0.0, 0.0, 0.0, 1.0, 0.0];
    let mut calib = String::new();
    for label in ["P0", "P1", "P2", "P3"] {
        calib.push_str(&calib_row(label, &p0));
    }
    calib.push_str(&calib_row("Tr", &source.lidar_to_camera().to_row_major_3x4()));
    let path = dir.join("calib.txt");
    fs::write(&path, calib).map_err(|e| PipelineError::io(&path, e))?;

    let mut times = String::new();
    let mut poses = String::new();
    let mut vo = Vec::with_capacity(source.len());
    for i in 0..source.len() {
        let frame = source.frame(i).map_err(|e| e.at_frame(i))?;
        let img_path = dir.join(format!("image_0/{i:06}.pgm"));
        write_pgm(&img_path, &frame.image).map_err(|source| PipelineError::Image { path: img_path, source })?;
        write_velodyne(&dir.join(format!("velodyne/{i:06}.bin")), &frame.cloud)?;
        writeln!(times, "{}", frame.timestamp).expect("write to string");
        if let Some(gt) = frame.gt_pose {
            let row: Vec<String> = gt.to_row_major_3x4().iter().map(|v| v.to_string()).collect();
            writeln!(poses, "{}", row.join(" ")).expect("write to string");
        }
        vo.push((frame.timestamp, frame.vo_pose));
    }
    let path = dir.join("times.txt");
    fs::write(&path, times).map_err(|e| PipelineError::io(&path, e))?;
    if !poses.is_empty() {
        let path = dir.join("poses.txt");
        fs::write(&path, poses).map_err(|e| PipelineError::io(&path, e))?;
    }
    write_trajectory(dir.join("vo.txt"), &vo)?;
    Ok(())
}
