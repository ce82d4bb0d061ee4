//! Middlebury `.flo`: `"PIEH"`, `i32` width, `i32` height (little-endian),
//! then `width * height` interleaved `(u, v)` little-endian `f32` pairs,
//! row-major.
//!
//! Invalid pixels are written as NaN. On read, components that are
//! non-finite or exceed 1e9 in magnitude mark the pixel invalid.

use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::grid::Grid;

pub const MAGIC: &[u8; 4] = b"PIEH";
const UNKNOWN_FLOW: f32 = 1e9;

pub fn encode_flo(flow: &FlowField) -> Vec<u8> {
    let (w, h) = flow.dims();
    let mut out = Vec::with_capacity(12 + 8 * w * h);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for (u, v) in flow.du().as_slice().iter().zip(flow.dv().as_slice()) {
        out.extend_from_slice(&(*u as f32).to_le_bytes());
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_flo(bytes: &[u8], path: &Path) -> Result<FlowField> {
    if bytes.len() < 12 {
        return Err(Error::format(path, "truncated .flo header"));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::format(path, format!("bad .flo magic {:02x?}", &bytes[..4])));
    }
    let w = i32::from_le_bytes(bytes[4..8].try_into().unwrap());
    let h = i32::from_le_bytes(bytes[8..12].try_into().unwrap());
    if w <= 0 || h <= 0 {
        return Err(Error::format(path, format!("invalid .flo dimensions {w}x{h}")));
    }
    let (w, h) = (w as usize, h as usize);
    let need = 12 + 8 * w * h;
    if bytes.len() != need {
        return Err(Error::format(
            path,
            format!("payload is {} bytes, expected {need} for {w}x{h}", bytes.len()),
        ));
    }
    let mut du = Vec::with_capacity(w * h);
    let mut dv = Vec::with_capacity(w * h);
    let mut valid = Vec::with_capacity(w * h);
    for px in bytes[12..].chunks_exact(8) {
        let u = f32::from_le_bytes(px[..4].try_into().unwrap());
        let v = f32::from_le_bytes(px[4..].try_into().unwrap());
        valid.push(u.is_finite() && v.is_finite() && u.abs() < UNKNOWN_FLOW && v.abs() < UNKNOWN_FLOW);
        du.push(u as f64);
        dv.push(v as f64);
    }
    FlowField::new(
        Grid::from_vec(w, h, du)?,
        Grid::from_vec(w, h, dv)?,
        Grid::from_vec(w, h, valid)?,
    )
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    decode_flo(&super::read_file(path)?, path)
}

pub fn write_flo(path: &Path, flow: &FlowField) -> Result<()> {
    super::write_atomic(path, &encode_flo(flow))
}
