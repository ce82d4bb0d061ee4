//! Portable float map. The header is `Pf` (one channel) or `PF` (three),
//! then `width height`, then the scale. A negative scale marks a
//! little-endian payload. Rows are stored bottom-up on disk and kept
//! top-down in memory.

use std::path::Path;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct PfmImage {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    /// Absolute value of the header scale.
    pub scale: f32,
    pub little_endian: bool,
    /// Top-down, row-major, channel-interleaved.
    pub data: Vec<f32>,
}

impl PfmImage {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!("PFM supports 1 or 3 channels, got {channels}")));
        }
        if width == 0 || height == 0 || data.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "PFM payload of {} values does not fit {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(PfmImage {
            width,
            height,
            channels,
            scale: 1.0,
            little_endian: true,
            data,
        })
    }

    pub fn from_grid(grid: &Grid<f64>) -> Self {
        let data = grid.as_slice().iter().map(|v| *v as f32).collect();
        PfmImage::new(grid.width(), grid.height(), 1, data).expect("grid dims are positive")
    }

    /// Channel `c` as a grid.
    pub fn channel(&self, c: usize) -> Grid<f64> {
        assert!(c < self.channels);
        let data = self.data.iter().skip(c).step_by(self.channels).map(|v| *v as f64).collect();
        Grid::from_vec(self.width, self.height, data).expect("consistent dims")
    }
}

pub fn encode_pfm(img: &PfmImage) -> Vec<u8> {
    let tag = if img.channels == 3 { "PF" } else { "Pf" };
    let scale = if img.little_endian { -img.scale.abs() } else { img.scale.abs() };
    let mut out = format!("{tag}\n{} {}\n{scale:?}\n", img.width, img.height).into_bytes();
    let row = img.width * img.channels;
    out.reserve(4 * img.data.len());
    for r in (0..img.height).rev() {
        for v in &img.data[r * row..(r + 1) * row] {
            if img.little_endian {
                out.extend_from_slice(&v.to_le_bytes());
            } else {
                out.extend_from_slice(&v.to_be_bytes());
            }
        }
    }
    out
}

pub fn decode_pfm(bytes: &[u8], path: &Path) -> Result<PfmImage> {
    let mut pos = 0;
    let mut token = |what: &str| -> Result<String> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::format(path, format!("PFM header ends before {what}")));
        }
        let tok = String::from_utf8_lossy(&bytes[start..pos]).into_owned();
        Ok(tok)
    };
    let channels = match token("tag")?.as_str() {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(path, format!("bad PFM tag `{other}`"))),
    };
    let width: usize = parse_header(&token("width")?, "width", path)?;
    let height: usize = parse_header(&token("height")?, "height", path)?;
    let scale: f32 = parse_header(&token("scale")?, "scale", path)?;
    if width == 0 || height == 0 {
        return Err(Error::format(path, format!("invalid PFM dimensions {width}x{height}")));
    }
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(path, format!("invalid PFM scale {scale}")));
    }
    // exactly one whitespace byte separates the header from the payload
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(Error::format(path, "PFM header is not terminated"));
    }
    let payload = &bytes[pos + 1..];
    let n = width * height * channels;
    if payload.len() != 4 * n {
        return Err(Error::format(
            path,
            format!("PFM payload is {} bytes, expected {}", payload.len(), 4 * n),
        ));
    }
    let little_endian = scale < 0.0;
    let row = width * channels;
    let mut data = vec![0f32; n];
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let b: [u8; 4] = chunk.try_into().unwrap();
        let v = if little_endian { f32::from_le_bytes(b) } else { f32::from_be_bytes(b) };
        let (disk_row, col) = (i / row, i % row);
        data[(height - 1 - disk_row) * row + col] = v;
    }
    Ok(PfmImage {
        width,
        height,
        channels,
        scale: scale.abs(),
        little_endian,
        data,
    })
}

fn parse_header<T: std::str::FromStr>(tok: &str, what: &str, path: &Path) -> Result<T> {
    tok.parse()
        .map_err(|_| Error::format(path, format!("PFM {what} `{tok}` is not a number")))
}

pub fn read_pfm(path: &Path) -> Result<PfmImage> {
    decode_pfm(&super::read_file(path)?, path)
}

pub fn write_pfm(path: &Path, img: &PfmImage) -> Result<()> {
    super::write_atomic(path, &encode_pfm(img))
}

/// Reads a single-channel PFM into a grid.
pub fn read_pfm_grid(path: &Path) -> Result<Grid<f64>> {
    let img = read_pfm(path)?;
    if img.channels != 1 {
        return Err(Error::format(path, "expected a single-channel PFM"));
    }
    Ok(img.channel(0))
}

pub fn write_pfm_grid(path: &Path, grid: &Grid<f64>) -> Result<()> {
    write_pfm(path, &PfmImage::from_grid(grid))
}

/// Flow from a 3-channel PFM. The third channel is returned untouched so
/// it can be written back.
pub fn flow_from_pfm(img: &PfmImage) -> Result<(FlowField, Option<Grid<f64>>)> {
    match img.channels {
        3 => {
            let flow = FlowField::from_components(img.channel(0), img.channel(1))?;
            Ok((flow, Some(img.channel(2))))
        }
        _ => Err(Error::InvalidInput("flow PFM needs three channels".into())),
    }
}

pub fn flow_to_pfm(flow: &FlowField, third: Option<&Grid<f64>>) -> Result<PfmImage> {
    let (w, h) = flow.dims();
    if let Some(t) = third {
        crate::grid::ensure_dims(t, w, h, "third flow channel")?;
    }
    let mut data = Vec::with_capacity(3 * w * h);
    for i in 0..w * h {
        data.push(flow.du().as_slice()[i] as f32);
        data.push(flow.dv().as_slice()[i] as f32);
        data.push(third.map_or(0.0, |t| t.as_slice()[i] as f32));
    }
    PfmImage::new(w, h, 3, data)
}
