//! Local refinement by classification.
//!
//! For every source pixel the target features are sampled on a `k x k`
//! lattice of integer offsets around the regressed match `i + φ(i)`. A
//! softmax over the feature dot products weights the offsets, and the
//! weighted mean offset is added to the flow as a residual.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::geometry::{bilinear_taps, PixelCoord};
use crate::grid::{Grid, WindowGrid};

/// Dense `C x H x W` descriptor map, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    channels: usize,
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 || width == 0 || height == 0 {
            return Err(Error::InvalidInput("feature map dimensions must be positive".into()));
        }
        if data.len() != channels * width * height {
            return Err(Error::InvalidInput(format!(
                "feature payload has {} values, expected {channels}x{height}x{width}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("feature map contains non-finite values".into()));
        }
        Ok(Self {
            channels,
            width,
            height,
            data,
        })
    }

    pub fn from_fn(channels: usize, width: usize, height: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(channels * width * height);
        for c in 0..channels {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(c, x, y));
                }
            }
        }
        Self {
            channels,
            width,
            height,
            data,
        }
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, c: usize, x: usize, y: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }

    /// Descriptor at an integer pixel.
    pub fn descriptor(&self, x: usize, y: usize) -> Vec<f64> {
        (0..self.channels).map(|c| self.get(c, x, y)).collect()
    }

    /// Bilinearly interpolated descriptor written into `out`; false when the
    /// interpolation support leaves the map.
    pub fn sample_into(&self, pix: PixelCoord, out: &mut [f64]) -> bool {
        let Some(taps) = bilinear_taps(self.width, self.height, pix) else {
            return false;
        };
        let plane = self.width * self.height;
        for (c, o) in out.iter_mut().enumerate().take(self.channels) {
            let base = &self.data[c * plane..(c + 1) * plane];
            *o = taps.iter().map(|(i, w)| w * base[i]).fold(0.0, |a, b| a + b);
        }
        true
    }
}

/// Where the constant attention bias is added.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum BiasPlacement {
    /// On the zero-offset logit, favoring the regressed flow.
    #[default]
    Center,
    /// On the logit of one specific offset.
    Offset { dx: i64, dy: i64 },
    Disabled,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RefineConfig {
    pub k: usize,
    pub bias: f64,
    pub bias_placement: BiasPlacement,
    /// Scale dot products by `1/sqrt(C)`.
    pub temperature: bool,
}

impl Default for RefineConfig {
    fn default() -> Self {
        Self {
            k: 7,
            bias: 0.0,
            bias_placement: BiasPlacement::Center,
            temperature: true,
        }
    }
}

impl RefineConfig {
    fn validate(&self) -> Result<()> {
        if self.k < 3 || self.k % 2 == 0 {
            return Err(Error::InvalidInput(format!("refinement window must be odd and >= 3, got {}", self.k)));
        }
        if !self.bias.is_finite() {
            return Err(Error::InvalidInput("attention bias must be finite".into()));
        }
        if let BiasPlacement::Offset { dx, dy } = self.bias_placement {
            let r = (self.k as i64 - 1) / 2;
            if dx.abs() > r || dy.abs() > r {
                return Err(Error::InvalidInput(format!("bias offset ({dx}, {dy}) outside the window")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct RefineOutput {
    pub flow: FlowField,
    /// Softmax weights per window offset (zero on masked offsets).
    pub attn: WindowGrid,
    /// Pre-softmax logits; `-inf` on offsets whose samples left the target map.
    pub logits: WindowGrid,
    /// False where the pixel was left unrefined (invalid flow or no valid sample).
    pub refined: Grid<bool>,
}

/// Softmax over finite logits; masked (`-inf`) entries get weight zero.
pub(crate) fn masked_softmax(logits: &[f64], out: &mut [f64]) {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for (o, &l) in out.iter_mut().zip(logits) {
        *o = if l == f64::NEG_INFINITY { 0.0 } else { (l - m).exp() };
        total += *o;
    }
    for o in out.iter_mut() {
        *o /= total;
    }
}

/// Attention-weighted mean offset. Offsets `+d` and `-d` are accumulated as
/// a difference so a symmetric distribution yields exactly zero.
pub(crate) fn window_residual(attn: &[f64], k: usize) -> (f64, f64) {
    let r = (k - 1) / 2;
    let col = |dx: usize| (0..k).map(|row| attn[row * k + dx]).fold(0.0, |a, b| a + b);
    let row = |dy: usize| attn[dy * k..(dy + 1) * k].iter().fold(0.0, |a, b| a + b);
    let mut rx = 0.0;
    let mut ry = 0.0;
    for d in 1..=r {
        rx += d as f64 * (col(r + d) - col(r - d));
        ry += d as f64 * (row(r + d) - row(r - d));
    }
    let rf = r as f64;
    (rx.clamp(-rf, rf), ry.clamp(-rf, rf))
}

struct PixelRefine {
    flow: Option<(f64, f64)>,
    refined: bool,
    attn: Vec<f64>,
    logits: Vec<f64>,
}

/// Refines `flow_init` once using source/target feature maps.
pub fn refine_flow(
    flow_init: &FlowField,
    feat_src: &FeatureMap,
    feat_tgt: &FeatureMap,
    cfg: &RefineConfig,
) -> Result<RefineOutput> {
    cfg.validate()?;
    if feat_src.channels != feat_tgt.channels {
        return Err(Error::InvalidInput(format!(
            "feature channel counts differ ({} vs {})",
            feat_src.channels, feat_tgt.channels
        )));
    }
    let (w, h) = flow_init.dims();
    if feat_src.width != w || feat_src.height != h {
        return Err(Error::ShapeMismatch {
            what: "source features",
            got_w: feat_src.width,
            got_h: feat_src.height,
            want_w: w,
            want_h: h,
        });
    }
    let k = cfg.k;
    let n = k * k;
    let r = (k as i64 - 1) / 2;
    let scale = if cfg.temperature {
        1.0 / (feat_src.channels as f64).sqrt()
    } else {
        1.0
    };
    let bias_index = match cfg.bias_placement {
        BiasPlacement::Center => Some((r * k as i64 + r) as usize),
        BiasPlacement::Offset { dx, dy } => Some(((dy + r) * k as i64 + dx + r) as usize),
        BiasPlacement::Disabled => None,
    };

    let rows: Vec<Vec<PixelRefine>> = (0..h)
        .into_par_iter()
        .map(|y| {
            let mut src = vec![0.0; feat_src.channels];
            let mut sample = vec![0.0; feat_src.channels];
            (0..w)
                .map(|x| {
                    let flow = flow_init.at(x, y);
                    let mut logits = vec![f64::NEG_INFINITY; n];
                    let mut attn = vec![0.0; n];
                    let Some((fu, fv)) = flow else {
                        return PixelRefine {
                            flow,
                            refined: false,
                            attn,
                            logits,
                        };
                    };
                    for (c, s) in src.iter_mut().enumerate() {
                        *s = feat_src.get(c, x, y);
                    }
                    let center = (x as f64 + fu, y as f64 + fv);
                    let mut any = false;
                    for dy in -r..=r {
                        for dx in -r..=r {
                            let pix = PixelCoord::new(center.0 + dx as f64, center.1 + dy as f64);
                            if !feat_tgt.sample_into(pix, &mut sample) {
                                continue;
                            }
                            let idx = ((dy + r) * k as i64 + dx + r) as usize;
                            let dot = src.iter().zip(&sample).fold(0.0, |a, (p, q)| a + p * q);
                            let mut l = dot * scale;
                            if bias_index == Some(idx) {
                                l += cfg.bias;
                            }
                            logits[idx] = l;
                            any = true;
                        }
                    }
                    if !any {
                        return PixelRefine {
                            flow,
                            refined: false,
                            attn,
                            logits,
                        };
                    }
                    masked_softmax(&logits, &mut attn);
                    let (rx, ry) = window_residual(&attn, k);
                    PixelRefine {
                        flow: Some((fu + rx, fv + ry)),
                        refined: true,
                        attn,
                        logits,
                    }
                })
                .collect()
        })
        .collect();

    let mut flow = FlowField::invalid(w, h);
    let mut refined = Grid::filled(w, h, false);
    let mut attn = Vec::with_capacity(w * h * n);
    let mut logits = Vec::with_capacity(w * h * n);
    for (y, row) in rows.into_iter().enumerate() {
        for (x, px) in row.into_iter().enumerate() {
            flow.set(x, y, px.flow);
            *refined.get_mut(x, y) = px.refined;
            attn.extend(px.attn);
            logits.extend(px.logits);
        }
    }
    Ok(RefineOutput {
        flow,
        attn: WindowGrid::from_vec(w, h, k, attn)?,
        logits: WindowGrid::from_vec(w, h, k, logits)?,
        refined,
    })
}
