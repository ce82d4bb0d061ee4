//! Pair manifests: one [`PairRecord`] per line, tab-separated, after a
//! versioned header line. Empty optional fields are written as `-`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

pub const HEADER_TAG: &str = "#unicorr-manifest\tv1";

pub const COLUMNS: [&str; 14] = [
    "dataset",
    "scene",
    "src_image",
    "tgt_image",
    "src_depth",
    "tgt_depth",
    "depth_convention",
    "src_pose",
    "tgt_pose",
    "intrinsics",
    "scene_flow",
    "rigid_objects",
    "threshold",
    "attrs",
];

#[derive(Debug, Clone, PartialEq, Default)]
pub struct PairRecord {
    pub dataset: String,
    pub scene: String,
    pub src_image: String,
    pub tgt_image: String,
    pub src_depth: String,
    pub tgt_depth: String,
    pub depth_convention: String,
    /// Pose reference, e.g. `traj.txt:12` or a view id.
    pub src_pose: String,
    pub tgt_pose: String,
    /// `fx,fy,cx,cy,width,height`
    pub intrinsics: String,
    pub scene_flow: Option<String>,
    pub rigid_objects: Option<String>,
    /// Threshold preset name, or `None` for datasets that need none.
    pub threshold: Option<String>,
    /// Free-form `key=value` pairs joined by `;`.
    pub attrs: Vec<(String, String)>,
}

impl PairRecord {
    pub fn attr(&self, key: &str) -> Option<&str> {
        self.attrs.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// The same pair seen in the opposite direction.
    pub fn reversed(&self) -> PairRecord {
        PairRecord {
            src_image: self.tgt_image.clone(),
            tgt_image: self.src_image.clone(),
            src_depth: self.tgt_depth.clone(),
            tgt_depth: self.src_depth.clone(),
            src_pose: self.tgt_pose.clone(),
            tgt_pose: self.src_pose.clone(),
            ..self.clone()
        }
    }

    fn fields(&self) -> [String; 14] {
        let opt = |o: &Option<String>| o.clone().unwrap_or_else(|| "-".into());
        let attrs = if self.attrs.is_empty() {
            "-".to_string()
        } else {
            self.attrs.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join(";")
        };
        [
            self.dataset.clone(),
            self.scene.clone(),
            self.src_image.clone(),
            self.tgt_image.clone(),
            self.src_depth.clone(),
            self.tgt_depth.clone(),
            self.depth_convention.clone(),
            self.src_pose.clone(),
            self.tgt_pose.clone(),
            self.intrinsics.clone(),
            opt(&self.scene_flow),
            opt(&self.rigid_objects),
            opt(&self.threshold),
            attrs,
        ]
    }
}

pub fn format_manifest(records: &[PairRecord]) -> Result<String> {
    let mut s = format!("{HEADER_TAG}\t{}\n", COLUMNS.join("\t"));
    for (n, r) in records.iter().enumerate() {
        let fields = r.fields();
        for (name, f) in COLUMNS.iter().zip(&fields) {
            if f.is_empty() || f.contains(['\t', '\n', '\r']) {
                return Err(Error::InvalidInput(format!(
                    "record {n}: field `{name}` must be non-empty and free of tabs/newlines"
                )));
            }
        }
        let _ = writeln!(s, "{}", fields.join("\t"));
    }
    Ok(s)
}

pub fn parse_manifest(text: &str, path: &Path) -> Result<Vec<PairRecord>> {
    let mut lines = text.lines().enumerate();
    let expected_header = format!("{HEADER_TAG}\t{}", COLUMNS.join("\t"));
    match lines.next() {
        Some((_, h)) if h == expected_header => {}
        Some((_, h)) if h.starts_with("#unicorr-manifest") => {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: 1,
                msg: format!("unsupported manifest header `{h}`"),
            })
        }
        _ => return Err(Error::format(path, "missing manifest header")),
    }
    let mut out = Vec::new();
    for (i, line) in lines {
        if line.is_empty() {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let f: Vec<&str> = line.split('\t').collect();
        if f.len() != COLUMNS.len() {
            return Err(err(format!("expected {} fields, found {}", COLUMNS.len(), f.len())));
        }
        let opt = |s: &str| (s != "-").then(|| s.to_string());
        let attrs = if f[13] == "-" {
            Vec::new()
        } else {
            f[13]
                .split(';')
                .map(|kv| {
                    kv.split_once('=')
                        .map(|(k, v)| (k.to_string(), v.to_string()))
                        .ok_or_else(|| err(format!("attribute `{kv}` is not key=value")))
                })
                .collect::<Result<_>>()?
        };
        out.push(PairRecord {
            dataset: f[0].into(),
            scene: f[1].into(),
            src_image: f[2].into(),
            tgt_image: f[3].into(),
            src_depth: f[4].into(),
            tgt_depth: f[5].into(),
            depth_convention: f[6].into(),
            src_pose: f[7].into(),
            tgt_pose: f[8].into(),
            intrinsics: f[9].into(),
            scene_flow: opt(f[10]),
            rigid_objects: opt(f[11]),
            threshold: opt(f[12]),
            attrs,
        });
    }
    Ok(out)
}

pub fn read_manifest(path: &Path) -> Result<Vec<PairRecord>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest(&text, path)
}

pub fn write_manifest(path: &Path, records: &[PairRecord]) -> Result<()> {
    super::write_atomic(path, format_manifest(records)?.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PairRecord {
        PairRecord {
            dataset: "BlendedMVS".into(),
            scene: "s0".into(),
            src_image: "a.png".into(),
            tgt_image: "b.png".into(),
            src_depth: "a.pfm".into(),
            tgt_depth: "b.pfm".into(),
            depth_convention: "z".into(),
            src_pose: "traj.txt:0".into(),
            tgt_pose: "traj.txt:4".into(),
            intrinsics: "100,100,31.5,23.5,64,48".into(),
            scene_flow: None,
            rigid_objects: Some("seg.png".into()),
            threshold: Some("BlendedMVS".into()),
            attrs: vec![("bin".into(), "2".into()), ("angle".into(), "0.61".into())],
        }
    }

    #[test]
    fn roundtrip() {
        let recs = vec![sample(), sample().reversed()];
        let text = format_manifest(&recs).unwrap();
        assert!(text.starts_with("#unicorr-manifest\tv1\tdataset\t"));
        let back = parse_manifest(&text, Path::new("m.tsv")).unwrap();
        assert_eq!(back, recs);
        assert_eq!(back[0].attr("bin"), Some("2"));
        assert_eq!(back[1].src_image, "b.png");
    }

    #[test]
    fn rejects_bad_rows() {
        let mut r = sample();
        r.scene = "a\tb".into();
        assert!(format_manifest(&[r]).is_err());
        let text = format!("{HEADER_TAG}\t{}\nonly\ttwo\n", COLUMNS.join("\t"));
        assert!(matches!(parse_manifest(&text, Path::new("m")), Err(Error::Parse { line: 2, .. })));
        assert!(parse_manifest("#unicorr-manifest\tv9\n", Path::new("m")).is_err());
        assert!(parse_manifest("dataset\n", Path::new("m")).is_err());
    }
}
