use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::Serialize;

use super::PipelineError;
use crate::eval::EvalReport;
use crate::geometry::trajectory_io::write_trajectory;
use crate::geometry::Pose;
use crate::odom::OdomMode;

/// One successful keyframe scale estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CorrectionEvent {
    pub frame: usize,
    pub timestamp: f64,
    pub scale: f64,
    pub sample_count: usize,
    pub inlier_count: usize,
    pub inlier_spread: f64,
    pub keypoints: usize,
    pub tracked: usize,
    /// Matches kept by the epipolar tests.
    pub culled: usize,
    pub triggered: bool,
    /// Running factor on visual-odometry translations after this event.
    pub correction: f64,
    /// Ground-truth over corrected visual baseline for the keyframe interval.
    pub reference_scale: Option<f64>,
}

/// A keyframe whose scale could not be estimated; the running scale persists.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KeyframeFailure {
    pub frame: usize,
    pub timestamp: f64,
    pub reason: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdomSummary {
    pub mode: OdomMode,
    /// Registered frames after the first.
    pub frames: usize,
    /// Frames whose registration failed; their initial guess was kept.
    pub registration_failures: usize,
    /// Bootstrap frames without a visual estimate.
    pub fallback_inits: usize,
    /// Frames whose final solve had an unconstrained direction.
    pub degenerate_frames: usize,
    pub icp_iterations: usize,
}

impl OdomSummary {
    pub(crate) fn new(mode: OdomMode) -> Self {
        Self {
            mode,
            frames: 0,
            registration_failures: 0,
            fallback_inits: 0,
            degenerate_frames: 0,
            icp_iterations: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunEval {
    pub vo_input: EvalReport,
    pub vo_corrected: EvalReport,
    pub lidar: Option<EvalReport>,
    /// Distance between the last estimated and true positions, meters.
    pub final_error_input: f64,
    pub final_error_corrected: f64,
    pub final_error_lidar: Option<f64>,
}

/// Result of a run. Pose streams are camera-to-world and are written to the
/// trajectory files rather than the JSON summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub frame_count: usize,
    pub keyframe_count: usize,
    pub events: Vec<CorrectionEvent>,
    pub failures: Vec<KeyframeFailure>,
    pub odom: Option<OdomSummary>,
    pub eval: Option<RunEval>,
    #[serde(skip)]
    pub timestamps: Vec<f64>,
    #[serde(skip)]
    pub vo_input: Vec<Pose>,
    #[serde(skip)]
    pub vo_corrected: Vec<Pose>,
    #[serde(skip)]
    pub lidar: Option<Vec<Pose>>,
    #[serde(skip)]
    pub ground_truth: Option<Vec<Pose>>,
}

impl RunReport {
    pub fn triggered_events(&self) -> impl Iterator<Item = &CorrectionEvent> {
        self.events.iter().filter(|e| e.triggered)
    }

    fn stamped(&self, poses: &[Pose]) -> Vec<(f64, Pose)> {
        self.timestamps.iter().copied().zip(poses.iter().copied()).collect()
    }

    pub fn corrected_trajectory(&self) -> Vec<(f64, Pose)> {
        self.stamped(&self.vo_corrected)
    }

    pub fn lidar_trajectory(&self) -> Option<Vec<(f64, Pose)>> {
        self.lidar.as_ref().map(|l| self.stamped(l))
    }
}

pub const EVENTS_HEADER: &str =
    "frame,timestamp,scale,sample_count,inlier_count,inlier_spread,keypoints,tracked,culled,triggered,correction,reference_scale";

fn events_csv(events: &[CorrectionEvent]) -> String {
    let mut s = String::from(EVENTS_HEADER);
    s.push('\n');
    for e in events {
        let reference = e.reference_scale.map(|r| r.to_string()).unwrap_or_default();
        writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            e.frame,
            e.timestamp,
            e.scale,
            e.sample_count,
            e.inlier_count,
            e.inlier_spread,
            e.keypoints,
            e.tracked,
            e.culled,
            e.triggered,
            e.correction,
            reference
        )
        .expect("write to string");
    }
    s
}

/// Writes `trajectory_vo.txt` (corrected visual odometry), `trajectory_lidar.txt`
/// (when the LiDAR odometry ran), `events.csv` and `report.json` into `out_dir`,
/// creating it if needed.
pub fn emit_report(report: &RunReport, out_dir: impl AsRef<Path>) -> Result<(), PipelineError> {
    let dir = out_dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| PipelineError::io(dir, e))?;
    write_trajectory(dir.join("trajectory_vo.txt"), &report.corrected_trajectory())?;
    if let Some(lidar) = report.lidar_trajectory() {
        write_trajectory(dir.join("trajectory_lidar.txt"), &lidar)?;
    }
    let path = dir.join("events.csv");
    fs::write(&path, events_csv(&report.events)).map_err(|e| PipelineError::io(&path, e))?;
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    let path = dir.join("report.json");
    fs::write(&path, json + "\n").map_err(|e| PipelineError::io(&path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::trajectory_io::read_trajectory;
    use nalgebra::Vector3;

    fn event(frame: usize) -> CorrectionEvent {
        CorrectionEvent {
            frame,
            timestamp: frame as f64 * 0.1,
            scale: 1.1,
            sample_count: 40,
            inlier_count: 35,
            inlier_spread: 0.01,
            keypoints: 50,
            tracked: 45,
            culled: 40,
            triggered: true,
            correction: 1.1,
            reference_scale: None,
        }
    }

    fn report(events: Vec<CorrectionEvent>) -> RunReport {
        let poses: Vec<Pose> = (0..5)
            .map(|i| {
                Pose::from_axis_angle(
                    &Vector3::z(),
                    0.1 * i as f64,
                    Vector3::new(i as f64 / 3.0, 0.7, -1.0 / 7.0),
                )
            })
            .collect();
        RunReport {
            frame_count: 5,
            keyframe_count: 3,
            events,
            failures: vec![],
            odom: None,
            eval: None,
            timestamps: (0..5).map(|i| i as f64 * 0.1).collect(),
            vo_input: poses.clone(),
            vo_corrected: poses,
            lidar: None,
            ground_truth: None,
        }
    }

    #[test]
    fn events_csv_has_one_row_per_event() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report(vec![event(2), event(4), event(6)]), dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("events.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
        assert_eq!(csv.lines().next(), Some(EVENTS_HEADER));
    }

    #[test]
    fn empty_event_list_gives_header_only() {
        let dir = tempfile::tempdir().unwrap();
        emit_report(&report(vec![]), dir.path()).unwrap();
        let csv = fs::read_to_string(dir.path().join("events.csv")).unwrap();
        assert_eq!(csv, format!("{EVENTS_HEADER}\n"));
        assert!(!dir.path().join("trajectory_lidar.txt").exists());
        let json: serde_json::Value =
            serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
        assert_eq!(json["frame_count"], 5);
    }

    #[test]
    fn trajectory_read_back_matches() {
        let dir = tempfile::tempdir().unwrap();
        let r = report(vec![]);
        emit_report(&r, dir.path()).unwrap();
        let back = read_trajectory(dir.path().join("trajectory_vo.txt")).unwrap();
        for ((t, p), (t0, p0)) in back.iter().zip(r.corrected_trajectory()) {
            assert_eq!(*t, t0);
            assert!((p.translation() - p0.translation()).norm() < 1e-9);
            assert!(p.rotation_angle_to(&p0) < 1e-9);
        }
    }
}
