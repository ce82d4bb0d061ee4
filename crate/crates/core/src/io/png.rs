//! PNG codecs for 16-bit depth, 0/255 masks and 8-bit images.

use std::fs::File;
use std::io::{BufReader, Cursor};
use std::path::Path;

use ::png::{BitDepth, ColorType, Decoder, Encoder, Transformations};

use super::image::ImageBuffer;
use crate::error::{Error, Result};
use crate::geometry::{DepthConvention, DepthMap};
use crate::grid::Grid;

/// Summary of the raw values found while decoding a depth PNG.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct DepthRangeReport {
    pub zero: usize,
    /// Pixels at 65535, which usually means the sensor clipped.
    pub saturated: usize,
    pub min_raw: u16,
    pub max_raw: u16,
}

struct Decoded {
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    bytes: Vec<u8>,
}

fn decode(path: &Path, transformations: Transformations) -> Result<Decoded> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut decoder = Decoder::new(BufReader::new(file));
    decoder.set_transformations(transformations);
    let mut reader = decoder
        .read_info()
        .map_err(|e| Error::format(path, e.to_string()))?;
    let size = reader
        .output_buffer_size()
        .ok_or_else(|| Error::format(path, "PNG too large"))?;
    let mut bytes = vec![0; size];
    let info = reader
        .next_frame(&mut bytes)
        .map_err(|e| Error::format(path, e.to_string()))?;
    bytes.truncate(info.buffer_size());
    Ok(Decoded {
        width: info.width as usize,
        height: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        bytes,
    })
}

fn encode(path: &Path, width: usize, height: usize, color: ColorType, depth: BitDepth, data: &[u8]) -> Result<()> {
    let mut buf = Cursor::new(Vec::new());
    {
        let mut enc = Encoder::new(&mut buf, width as u32, height as u32);
        enc.set_color(color);
        enc.set_depth(depth);
        let mut writer = enc
            .write_header()
            .map_err(|e| Error::format(path, e.to_string()))?;
        writer
            .write_image_data(data)
            .map_err(|e| Error::format(path, e.to_string()))?;
    }
    super::write_atomic(path, &buf.into_inner())
}

/// Decodes a 16-bit grayscale PNG as `raw / scale`. Raw zero is invalid.
pub fn read_depth_png16(path: &Path, scale: f64, convention: DepthConvention) -> Result<(DepthMap, DepthRangeReport)> {
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidInput(format!("depth scale must be positive, got {scale}")));
    }
    let d = decode(path, Transformations::IDENTITY)?;
    if d.color != ColorType::Grayscale || d.depth != BitDepth::Sixteen {
        return Err(Error::format(
            path,
            format!("expected 16-bit grayscale depth, found {:?} {:?}", d.color, d.depth),
        ));
    }
    let raw: Vec<u16> = d.bytes.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]])).collect();
    let mut report = DepthRangeReport {
        min_raw: u16::MAX,
        ..Default::default()
    };
    for &r in &raw {
        match r {
            0 => report.zero += 1,
            u16::MAX => report.saturated += 1,
            _ => {}
        }
        if r != 0 {
            report.min_raw = report.min_raw.min(r);
            report.max_raw = report.max_raw.max(r);
        }
    }
    if report.zero == raw.len() {
        report.min_raw = 0;
    }
    if report.saturated > 0 {
        log::warn!("{}: {} depth pixels saturated at 65535", path.display(), report.saturated);
    }
    let values = Grid::from_vec(d.width, d.height, raw.iter().map(|&r| r as f64 / scale).collect())?;
    let valid = Grid::from_vec(d.width, d.height, raw.iter().map(|&r| r != 0).collect())?;
    Ok((DepthMap::new(values, valid, convention)?, report))
}

/// Encodes `round(depth * scale)`; invalid pixels become 0. Values outside
/// `1..=65535` after rounding are an error.
pub fn write_depth_png16(path: &Path, depth: &DepthMap, scale: f64) -> Result<()> {
    let mut data = Vec::with_capacity(2 * depth.values().len());
    for (i, v) in depth.values().as_slice().iter().enumerate() {
        let raw = if depth.valid().as_slice()[i] {
            let r = (v * scale).round();
            if !(1.0..=65535.0).contains(&r) {
                return Err(Error::InvalidInput(format!(
                    "depth {v} at scale {scale} does not fit a 16-bit PNG"
                )));
            }
            r as u16
        } else {
            0
        };
        data.extend_from_slice(&raw.to_be_bytes());
    }
    encode(path, depth.width(), depth.height(), ColorType::Grayscale, BitDepth::Sixteen, &data)
}

/// Nonzero pixels are true. Any bit depth or color type is accepted;
/// only the first channel is inspected.
pub fn read_mask_png(path: &Path) -> Result<Grid<bool>> {
    let img = read_image_png(path)?;
    let c = img.channels();
    let data = img.data().iter().step_by(c).map(|v| *v != 0.0).collect();
    Grid::from_vec(img.width(), img.height(), data)
}

pub fn write_mask_png(path: &Path, mask: &Grid<bool>) -> Result<()> {
    let data: Vec<u8> = mask.as_slice().iter().map(|m| if *m { 255 } else { 0 }).collect();
    encode(path, mask.width(), mask.height(), ColorType::Grayscale, BitDepth::Eight, &data)
}

/// Integer labels from an 8- or 16-bit grayscale PNG.
pub fn read_label_png(path: &Path) -> Result<Grid<u32>> {
    let d = decode(path, Transformations::IDENTITY)?;
    if d.color != ColorType::Grayscale {
        return Err(Error::format(path, format!("expected a grayscale label map, found {:?}", d.color)));
    }
    let labels: Vec<u32> = match d.depth {
        BitDepth::Eight => d.bytes.iter().map(|b| *b as u32).collect(),
        BitDepth::Sixteen => d.bytes.chunks_exact(2).map(|b| u16::from_be_bytes([b[0], b[1]]) as u32).collect(),
        other => return Err(Error::format(path, format!("unsupported label bit depth {other:?}"))),
    };
    Grid::from_vec(d.width, d.height, labels)
}

/// 16-bit labels; ids above 65535 are an error.
pub fn write_label_png(path: &Path, labels: &Grid<u32>) -> Result<()> {
    let mut data = Vec::with_capacity(2 * labels.len());
    for &l in labels.as_slice() {
        let v = u16::try_from(l).map_err(|_| Error::InvalidInput(format!("label {l} does not fit 16 bits")))?;
        data.extend_from_slice(&v.to_be_bytes());
    }
    encode(path, labels.width(), labels.height(), ColorType::Grayscale, BitDepth::Sixteen, &data)
}

/// Decodes to 8-bit gray or RGB. Alpha is dropped, palettes expanded and
/// 16-bit samples reduced to their high byte.
pub fn read_image_png(path: &Path) -> Result<ImageBuffer> {
    let d = decode(path, Transformations::EXPAND | Transformations::STRIP_16)?;
    let (src_channels, keep) = match d.color {
        ColorType::Grayscale => (1, 1),
        ColorType::GrayscaleAlpha => (2, 1),
        ColorType::Rgb => (3, 3),
        ColorType::Rgba => (4, 3),
        other => return Err(Error::format(path, format!("unsupported PNG color type {other:?}"))),
    };
    let data = d
        .bytes
        .chunks_exact(src_channels)
        .flat_map(|px| px[..keep].iter().map(|b| *b as f32))
        .collect();
    ImageBuffer::new(d.width, d.height, keep, data)
}

/// Values are rounded and clamped to `0..=255`.
pub fn write_image_png(path: &Path, img: &ImageBuffer) -> Result<()> {
    let color = if img.channels() == 3 { ColorType::Rgb } else { ColorType::Grayscale };
    let data: Vec<u8> = img.data().iter().map(|v| v.round().clamp(0.0, 255.0) as u8).collect();
    encode(path, img.width(), img.height(), color, BitDepth::Eight, &data)
}
