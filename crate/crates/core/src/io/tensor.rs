//! Minimal dense tensor container.
//!
//! ```text
//! offset  size      field
//! 0       4         magic "TNSR"
//! 4       1         version (1)
//! 5       1         dtype: 1 = f32, 2 = f64
//! 6       1         ndim
//! 7       1         reserved, 0
//! 8       8 * ndim  dims, u64 little-endian, outermost first
//! ...               payload, row-major, little-endian
//! ```
//!
//! Feature maps are stored as `[C, H, W]`.

use std::path::Path;

use crate::error::{Error, Result};
use crate::refine::FeatureMap;

pub const MAGIC: &[u8; 4] = b"TNSR";
pub const VERSION: u8 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum TensorData {
    F32(Vec<f32>),
    F64(Vec<f64>),
}

impl TensorData {
    pub fn len(&self) -> usize {
        match self {
            TensorData::F32(v) => v.len(),
            TensorData::F64(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn code(&self) -> u8 {
        match self {
            TensorData::F32(_) => 1,
            TensorData::F64(_) => 2,
        }
    }

    pub fn to_f64(&self) -> Vec<f64> {
        match self {
            TensorData::F32(v) => v.iter().map(|x| *x as f64).collect(),
            TensorData::F64(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    dims: Vec<usize>,
    data: TensorData,
}

impl Tensor {
    pub fn new(dims: Vec<usize>, data: TensorData) -> Result<Self> {
        if dims.len() > u8::MAX as usize {
            return Err(Error::InvalidInput(format!("{} dims exceed the container limit", dims.len())));
        }
        let n = dims.iter().try_fold(1usize, |a, d| a.checked_mul(*d));
        if n != Some(data.len()) {
            return Err(Error::InvalidInput(format!(
                "tensor payload of {} values does not match dims {dims:?}",
                data.len()
            )));
        }
        Ok(Tensor { dims, data })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn data(&self) -> &TensorData {
        &self.data
    }

    pub fn from_feature_map(f: &FeatureMap) -> Self {
        Tensor {
            dims: vec![f.channels(), f.height(), f.width()],
            data: TensorData::F64(f.as_slice().to_vec()),
        }
    }

    pub fn to_feature_map(&self) -> Result<FeatureMap> {
        match self.dims[..] {
            [c, h, w] => FeatureMap::new(c, w, h, self.data.to_f64()),
            _ => Err(Error::InvalidInput(format!(
                "feature maps need 3 dims [C, H, W], got {:?}",
                self.dims
            ))),
        }
    }
}

pub fn encode_tensor(t: &Tensor) -> Vec<u8> {
    let mut out = Vec::with_capacity(8 + 8 * t.dims.len() + 8 * t.data.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&[VERSION, t.data.code(), t.dims.len() as u8, 0]);
    for d in &t.dims {
        out.extend_from_slice(&(*d as u64).to_le_bytes());
    }
    match &t.data {
        TensorData::F32(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
        TensorData::F64(v) => v.iter().for_each(|x| out.extend_from_slice(&x.to_le_bytes())),
    }
    out
}

pub fn decode_tensor(bytes: &[u8], path: &Path) -> Result<Tensor> {
    let bad = |msg: String| Error::format(path, msg);
    if bytes.len() < 8 || &bytes[..4] != MAGIC {
        return Err(bad("missing TNSR magic".into()));
    }
    let (version, dtype, ndim) = (bytes[4], bytes[5], bytes[6] as usize);
    if version != VERSION {
        return Err(bad(format!("unsupported tensor version {version}")));
    }
    let elem = match dtype {
        1 => 4,
        2 => 8,
        other => return Err(bad(format!("unknown dtype code {other}"))),
    };
    let head = 8 + 8 * ndim;
    if bytes.len() < head {
        return Err(bad("truncated tensor header".into()));
    }
    let mut dims = Vec::with_capacity(ndim);
    for c in bytes[8..head].chunks_exact(8) {
        let d = u64::from_le_bytes(c.try_into().unwrap());
        dims.push(usize::try_from(d).map_err(|_| bad(format!("dimension {d} too large")))?);
    }
    let n = dims
        .iter()
        .try_fold(1usize, |a, d| a.checked_mul(*d))
        .ok_or_else(|| bad("tensor size overflows".into()))?;
    let payload = &bytes[head..];
    if Some(payload.len()) != n.checked_mul(elem) {
        return Err(bad(format!("payload is {} bytes, expected {} x {elem}", payload.len(), n)));
    }
    let data = if elem == 4 {
        TensorData::F32(payload.chunks_exact(4).map(|c| f32::from_le_bytes(c.try_into().unwrap())).collect())
    } else {
        TensorData::F64(payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect())
    };
    Ok(Tensor { dims, data })
}

pub fn read_tensor(path: &Path) -> Result<Tensor> {
    decode_tensor(&super::read_file(path)?, path)
}

pub fn write_tensor(path: &Path, t: &Tensor) -> Result<()> {
    super::write_atomic(path, &encode_tensor(t))
}

pub fn read_feature_map(path: &Path) -> Result<FeatureMap> {
    read_tensor(path)?.to_feature_map()
}

pub fn write_feature_map(path: &Path, f: &FeatureMap) -> Result<()> {
    write_tensor(path, &Tensor::from_feature_map(f))
}
