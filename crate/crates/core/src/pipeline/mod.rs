//! The frame loop: scale-corrected visual odometry feeding a bootstrapped LiDAR
//! odometry, over synthetic or KITTI-layout data.

mod config;
mod kitti;
mod report;
mod run;
mod source;
mod tracker;

pub use config::{
    DataMode, DriftKind, KittiInput, LidarPreset, PathShape, RunConfig, SyntheticConfig, TrackerKind, CONFIG_KEYS,
};
pub use kitti::{
    export_kitti_sequence, load_kitti_frame, parse_calib, read_times, read_velodyne, write_velodyne, KittiCalib,
    KittiSequence,
};
pub use report::{emit_report, CorrectionEvent, KeyframeFailure, OdomSummary, RunEval, RunReport, EVENTS_HEADER};
pub use run::{estimate_keyframe_scale, run_pipeline, run_sequence, KeyframeInput, KeyframeScale};
pub use source::{FrameBundle, FrameSource, SyntheticSequence};
pub use tracker::{oracle_track, LkTracker, OracleTracker, PointTracker};

use std::path::PathBuf;

use thiserror::Error;

use crate::eval::EvalError;
use crate::geometry::trajectory_io::TrajectoryIoError;
use crate::geometry::GeometryError;
use crate::image::pgm::PgmError;
use crate::image::ImageError;
use crate::synth::SynthError;

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {len} bytes is not a whole number of 16-byte point records")]
    MalformedCloud { path: PathBuf, len: usize },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {source}")]
    Image {
        path: PathBuf,
        #[source]
        source: PgmError,
    },
    #[error("{path}: {message}")]
    Decode { path: PathBuf, message: String },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Domain(String),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Trajectory(#[from] TrajectoryIoError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Tracking(#[from] ImageError),
    #[error("frame {index}: {source}")]
    Frame {
        index: usize,
        #[source]
        source: Box<PipelineError>,
    },
}

impl PipelineError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        PipelineError::Io {
            path: path.into(),
            source,
        }
    }

    /// Tags the error with the frame it came from, unless it already carries one.
    pub fn at_frame(self, index: usize) -> Self {
        match self {
            e @ PipelineError::Frame { .. } => e,
            e => PipelineError::Frame {
                index,
                source: Box::new(e),
            },
        }
    }

    /// Whether the error comes from reading or parsing input data, as opposed to
    /// configuration or estimation.
    pub fn is_data_error(&self) -> bool {
        match self {
            PipelineError::Io { .. }
            | PipelineError::MalformedCloud { .. }
            | PipelineError::Parse { .. }
            | PipelineError::Image { .. }
            | PipelineError::Decode { .. }
            | PipelineError::Trajectory(_) => true,
            PipelineError::Frame { source, .. } => source.is_data_error(),
            _ => false,
        }
    }
}

/// SplitMix64 finalizer, used to derive independent per-frame seeds.
pub(crate) fn derive_seed(seed: u64, stream: u64, index: u64) -> u64 {
    let mut z = seed
        .wrapping_add(stream.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(index.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
