//! Plain-text trajectory files: one pose per line,
//! `timestamp tx ty tz qx qy qz qw`, whitespace separated. Lines starting with `#`
//! and blank lines are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::Vector3;
use thiserror::Error;

use super::Pose;

#[derive(Debug, Error)]
pub enum TrajectoryIoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub fn parse_trajectory(text: &str) -> Result<Vec<(f64, Pose)>, TrajectoryIoError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let values = line
            .split_whitespace()
            .map(str::parse::<f64>)
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| TrajectoryIoError::Parse {
                line: idx + 1,
                message: e.to_string(),
            })?;
        if values.len() != 8 {
            return Err(TrajectoryIoError::Parse {
                line: idx + 1,
                message: format!("expected 8 values, found {}", values.len()),
            });
        }
        let qnorm = values[4..8].iter().map(|q| q * q).sum::<f64>().sqrt();
        if !(qnorm > 0.0) || !values.iter().all(|v| v.is_finite()) {
            return Err(TrajectoryIoError::Parse {
                line: idx + 1,
                message: "non-finite value or zero quaternion".into(),
            });
        }
        let pose = Pose::from_quaternion_xyzw(
            [values[4], values[5], values[6], values[7]],
            Vector3::new(values[1], values[2], values[3]),
        );
        out.push((values[0], pose));
    }
    Ok(out)
}

/// Formats with Rust's shortest round-trip float representation.
pub fn format_trajectory(samples: &[(f64, Pose)]) -> String {
    let mut s = String::new();
    for (ts, pose) in samples {
        let t = pose.translation();
        let q = pose.quaternion_xyzw();
        writeln!(s, "{} {} {} {} {} {} {} {}", ts, t.x, t.y, t.z, q[0], q[1], q[2], q[3]).expect("write to string");
    }
    s
}

pub fn read_trajectory(path: impl AsRef<Path>) -> Result<Vec<(f64, Pose)>, TrajectoryIoError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| TrajectoryIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_trajectory(&text)
}

pub fn write_trajectory(path: impl AsRef<Path>, samples: &[(f64, Pose)]) -> Result<(), TrajectoryIoError> {
    let path = path.as_ref();
    fs::write(path, format_trajectory(samples)).map_err(|source| TrajectoryIoError::Io {
        path: path.display().to_string(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let samples = vec![
            (0.0, Pose::identity()),
            (
                0.1,
                Pose::from_axis_angle(&Vector3::new(1.0, 2.0, 3.0), 0.3, Vector3::new(1.5, -2.25, 1e-7)),
            ),
        ];
        let back = parse_trajectory(&format_trajectory(&samples)).unwrap();
        for ((ta, pa), (tb, pb)) in samples.iter().zip(&back) {
            assert_eq!(ta, tb);
            assert_eq!(pa.translation(), pb.translation());
            assert!(pa.rotation_angle_to(pb) < 1e-12);
        }
    }

    #[test]
    fn rejects_short_rows() {
        let err = parse_trajectory("# header\n0 1 2 3 0 0 0\n").unwrap_err();
        assert!(matches!(err, TrajectoryIoError::Parse { line: 2, .. }));
    }
}
