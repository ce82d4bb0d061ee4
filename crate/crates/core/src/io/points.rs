//! Whitespace-separated `x y z` point clouds, one point per line. Extra
//! columns (colors, normals) are ignored; `#` lines are skipped.

use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::Point3;

pub fn parse_xyz(text: &str, path: &Path) -> Result<Vec<Point3>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut v = [0f64; 3];
        let mut fields = line.split_whitespace();
        for slot in &mut v {
            *slot = fields
                .next()
                .and_then(|f| f.parse().ok())
                .filter(|x: &f64| x.is_finite())
                .ok_or_else(|| Error::Parse {
                    path: path.to_path_buf(),
                    line: i + 1,
                    msg: "expected three finite coordinates".into(),
                })?;
        }
        out.push(Point3::new(v[0], v[1], v[2]));
    }
    Ok(out)
}

pub fn read_xyz(path: &Path) -> Result<Vec<Point3>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_xyz(&text, path)
}

pub fn format_xyz(points: &[Point3]) -> String {
    points.iter().map(|p| format!("{:?} {:?} {:?}\n", p.x, p.y, p.z)).collect()
}
