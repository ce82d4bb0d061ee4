//! Loading of config-referenced inputs.

use std::path::Path;

use anyhow::{bail, Context, Result};
use nalgebra::Vector3;

use unicorr::geometry::{DepthConvention, DepthMap, Intrinsics, Pose};
use unicorr::io::config::Config;
use unicorr::io::{pfm, png, trajectory};
use unicorr::{FlowField, Grid};

fn numbers(text: &str) -> Result<Vec<f64>> {
    text.split(|c: char| c == ',' || c.is_whitespace())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<f64>().with_context(|| format!("`{s}` is not a number")))
        .collect()
}

/// `fx,fy,cx,cy,width,height`
pub fn parse_intrinsics(text: &str) -> Result<Intrinsics> {
    let v = numbers(text)?;
    if v.len() != 6 || v[4].fract() != 0.0 || v[5].fract() != 0.0 || v[4] < 1.0 || v[5] < 1.0 {
        bail!("intrinsics must be `fx,fy,cx,cy,width,height`, got `{text}`");
    }
    Ok(Intrinsics::new(v[0], v[1], v[2], v[3], v[4] as usize, v[5] as usize)?)
}

pub fn format_intrinsics(k: &Intrinsics) -> String {
    format!("{:?},{:?},{:?},{:?},{},{}", k.fx, k.fy, k.cx, k.cy, k.width, k.height)
}

/// Either inline `tx,ty,tz,qx,qy,qz,qw` (optionally prefixed `pose:`) or
/// `trajectory_path:line_index`, resolved against `base`.
pub fn parse_pose(text: &str, base: &Path) -> Result<Pose> {
    let inline = text.strip_prefix("pose:").unwrap_or(text);
    if let Ok(v) = numbers(inline) {
        if v.len() != 7 {
            bail!("inline pose needs 7 numbers (tx ty tz qx qy qz qw), got {}", v.len());
        }
        return Ok(Pose::from_quaternion(Vector3::new(v[0], v[1], v[2]), [v[3], v[4], v[5], v[6]])?);
    }
    let (file, idx) = text
        .rsplit_once(':')
        .with_context(|| format!("pose `{text}` is neither inline nor `file:index`"))?;
    let idx: usize = idx.parse().with_context(|| format!("pose index `{idx}`"))?;
    let path = base.join(file);
    let poses = trajectory::read_trajectory(&path)?;
    poses
        .get(idx)
        .map(|p| p.pose)
        .with_context(|| format!("{}: no pose {idx} ({} poses)", path.display(), poses.len()))
}

pub fn format_pose(p: &Pose) -> String {
    let t = p.translation();
    let q = p.to_quaternion_xyzw();
    format!("pose:{:?},{:?},{:?},{:?},{:?},{:?},{:?}", t.x, t.y, t.z, q[0], q[1], q[2], q[3])
}

fn ext(path: &Path) -> String {
    path.extension().map(|e| e.to_string_lossy().to_ascii_lowercase()).unwrap_or_default()
}

/// `.pfm` (non-positive and non-finite values invalid) or 16-bit `.png`
/// divided by `scale`.
pub fn load_depth(path: &Path, convention: DepthConvention, scale: f64) -> Result<DepthMap> {
    match ext(path).as_str() {
        "pfm" => Ok(DepthMap::from_values(pfm::read_pfm_grid(path)?, convention)),
        "png" => Ok(png::read_depth_png16(path, scale, convention)?.0),
        other => bail!("{}: unsupported depth format `.{other}`", path.display()),
    }
}

/// `.flo` or three-channel `.pfm`.
pub fn load_flow(path: &Path) -> Result<FlowField> {
    match ext(path).as_str() {
        "flo" => Ok(unicorr::io::flo::read_flo(path)?),
        "pfm" => Ok(pfm::flow_from_pfm(&pfm::read_pfm(path)?)?.0),
        other => bail!("{}: unsupported flow format `.{other}`", path.display()),
    }
}

pub fn load_grid(path: &Path) -> Result<Grid<f64>> {
    Ok(pfm::read_pfm_grid(path)?)
}

pub fn load_mask(path: &Path) -> Result<Grid<bool>> {
    Ok(png::read_mask_png(path)?)
}

pub fn depth_convention(cfg: &Config) -> Result<DepthConvention> {
    Ok(cfg.get_or("depth_convention", DepthConvention::ZDepth)?)
}

pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    numbers(text)
}

pub fn parse_color(text: &str) -> Result<[f32; 3]> {
    let v = numbers(text)?;
    if v.len() != 3 {
        bail!("color must be `r,g,b`, got `{text}`");
    }
    Ok([v[0] as f32, v[1] as f32, v[2] as f32])
}
