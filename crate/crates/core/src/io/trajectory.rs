//! Plain-text trajectories, one camera-to-world pose per line:
//! `timestamp tx ty tz qx qy qz qw`. Blank lines and lines starting with
//! `#` are skipped.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::geometry::Pose;

/// Quaternions further than this from unit norm are rejected.
pub const QUAT_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub struct StampedPose {
    pub timestamp: f64,
    pub pose: Pose,
}

pub fn parse_trajectory(text: &str, path: &Path) -> Result<Vec<StampedPose>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 8 {
            return Err(err(format!("expected 8 fields, found {}", fields.len())));
        }
        let mut v = [0f64; 8];
        for (slot, f) in v.iter_mut().zip(&fields) {
            *slot = f
                .parse()
                .ok()
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| err(format!("`{f}` is not a finite number")))?;
        }
        let q = [v[4], v[5], v[6], v[7]];
        let norm = q.iter().map(|c| c * c).sum::<f64>().sqrt();
        if (norm - 1.0).abs() > QUAT_NORM_TOLERANCE {
            return Err(err(format!("quaternion norm {norm} is not within {QUAT_NORM_TOLERANCE} of 1")));
        }
        let pose = Pose::from_quaternion(Vector3::new(v[1], v[2], v[3]), q).map_err(|e| err(e.to_string()))?;
        out.push(StampedPose { timestamp: v[0], pose });
    }
    Ok(out)
}

pub fn read_trajectory(path: &Path) -> Result<Vec<StampedPose>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_trajectory(&text, path)
}

pub fn format_trajectory(poses: &[StampedPose]) -> String {
    let mut s = String::from("# timestamp tx ty tz qx qy qz qw\n");
    for p in poses {
        let t = p.pose.translation();
        let q = p.pose.to_quaternion_xyzw();
        let _ = writeln!(
            s,
            "{:?} {:?} {:?} {:?} {:?} {:?} {:?} {:?}",
            p.timestamp, t.x, t.y, t.z, q[0], q[1], q[2], q[3]
        );
    }
    s
}

pub fn write_trajectory(path: &Path, poses: &[StampedPose]) -> Result<()> {
    super::write_atomic(path, format_trajectory(poses).as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Vec<StampedPose>> {
        parse_trajectory(s, Path::new("traj.txt"))
    }

    #[test]
    fn identity_line() {
        let p = parse("0 0 0 0 0 0 0 1\n").unwrap();
        assert_eq!(p.len(), 1);
        assert_eq!(p[0].pose, Pose::identity());
    }

    #[test]
    fn near_unit_quaternion_is_renormalized() {
        let p = parse("# header\n\n1.5 1 2 3 0 0 0 1.0005\n").unwrap();
        assert_eq!(p[0].timestamp, 1.5);
        assert!((p[0].pose.rotation() - nalgebra::Matrix3::identity()).abs().max() < 1e-15);
        assert_eq!(*p[0].pose.translation(), Vector3::new(1.0, 2.0, 3.0));
        assert!(parse("0 0 0 0 0 0 0 1.01").is_err());
    }

    #[test]
    fn short_line_names_line_number() {
        let err = parse("0 0 0 0 0 0 0 1\n# c\n0 0 0 0 0 1\n").unwrap_err();
        match err {
            Error::Parse { line, .. } => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn format_roundtrip() {
        let poses = vec![
            StampedPose { timestamp: 0.0, pose: Pose::from_yaw(0.3, Vector3::new(1.0, -2.0, 0.5)) },
            StampedPose { timestamp: 0.1, pose: Pose::identity() },
        ];
        let back = parse(&format_trajectory(&poses)).unwrap();
        for (a, b) in poses.iter().zip(&back) {
            assert_eq!(a.timestamp, b.timestamp);
            assert!((a.pose.rotation() - b.pose.rotation()).abs().max() < 1e-15);
            assert_eq!(a.pose.translation(), b.pose.translation());
        }
    }
}
