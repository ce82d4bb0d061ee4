//! Quality filters applied to rendered pairs.

use std::fmt::Write as _;

use super::matcher::Matcher;
use crate::covis::CovisResult;
use crate::error::{Error, Result};
use crate::geometry::bilinear_sample;
use crate::grid::{ensure_dims, Grid};
use crate::io::ImageBuffer;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureParams {
    /// Luma at or above this is over-exposed.
    pub over: u8,
    /// Luma at or below this is under-exposed.
    pub under: u8,
    pub max_frac: f64,
}

impl Default for ExposureParams {
    fn default() -> Self {
        ExposureParams {
            over: 250,
            under: 5,
            max_frac: 0.10,
        }
    }
}

/// Integer Rec. 601 luma of an 8-bit pixel, so gray `(v, v, v)` maps to `v`.
fn luma8(px: &[f32]) -> u8 {
    let q = |v: f32| v.round().clamp(0.0, 255.0) as u32;
    if px.len() == 1 {
        return q(px[0]) as u8;
    }
    ((299 * q(px[0]) + 587 * q(px[1]) + 114 * q(px[2]) + 500) / 1000) as u8
}

/// Fraction of pixels that are over- or under-exposed.
pub fn exposure_fraction(img: &ImageBuffer, params: &ExposureParams) -> f64 {
    let bad = img
        .data()
        .chunks_exact(img.channels())
        .map(luma8)
        .filter(|&l| l >= params.over || l <= params.under)
        .count();
    bad as f64 / (img.width() * img.height()) as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExposureResult {
    pub frac_src: f64,
    pub frac_tgt: f64,
    pub pass: bool,
}

/// Fails when either image exceeds the exposure budget on its own.
pub fn exposure_filter(src: &ImageBuffer, tgt: &ImageBuffer, params: &ExposureParams) -> ExposureResult {
    let frac_src = exposure_fraction(src, params);
    let frac_tgt = exposure_fraction(tgt, params);
    ExposureResult {
        frac_src,
        frac_tgt,
        pass: frac_src <= params.max_frac && frac_tgt <= params.max_frac,
    }
}

pub const MIN_COVIS_FRAC: f64 = 0.20;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovisFractionResult {
    pub fwd: f64,
    pub bwd: f64,
    pub pass: bool,
}

pub fn covis_fraction_filter(fwd: &CovisResult, bwd: &CovisResult, min_frac: f64) -> CovisFractionResult {
    let (f, b) = (fwd.covis_fraction(), bwd.covis_fraction());
    CovisFractionResult {
        fwd: f,
        bwd: b,
        pass: f >= min_frac && b >= min_frac,
    }
}

pub const MAX_SOLVABILITY_ERROR: f64 = 6.0;
pub const MIN_MATCHES: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Solvability {
    Pass,
    TooInaccurate,
    /// Fewer than [`MIN_MATCHES`] matches were found.
    Untextured,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolvabilityResult {
    pub outcome: Solvability,
    pub matches: usize,
    /// Mean displacement of matches, pixels.
    pub mean_error: Option<f64>,
}

impl SolvabilityResult {
    pub fn pass(&self) -> bool {
        self.outcome == Solvability::Pass
    }
}

/// Warps `tgt` into the source frame with the ground-truth flow, matches
/// the result against `src` and requires the mean residual displacement
/// to be below `max_err`.
pub fn solvability_check(
    src: &ImageBuffer,
    tgt: &ImageBuffer,
    gt: &CovisResult,
    matcher: &dyn Matcher,
    max_err: f64,
) -> Result<SolvabilityResult> {
    let (w, h) = gt.flow.dims();
    if src.dims() != (w, h) {
        return Err(Error::ShapeMismatch {
            what: "source image",
            got_w: src.width(),
            got_h: src.height(),
            want_w: w,
            want_h: h,
        });
    }
    ensure_dims(&gt.covis, w, h, "covisibility mask")?;
    let a = src.luma();
    let b_src = tgt.luma();
    let mut valid = Grid::filled(w, h, false);
    let warped = Grid::from_fn(w, h, |x, y| {
        let sample = (*gt.covis.get(x, y))
            .then(|| gt.flow.target(x, y))
            .flatten()
            .and_then(|p| bilinear_sample(&b_src, None, p));
        match sample {
            Some(v) => {
                *valid.get_mut(x, y) = true;
                v
            }
            None => 0.0,
        }
    });
    let matches = matcher.find_matches(&a, &warped, &valid);
    if matches.len() < MIN_MATCHES {
        return Ok(SolvabilityResult {
            outcome: Solvability::Untextured,
            matches: matches.len(),
            mean_error: None,
        });
    }
    let mean = matches.iter().map(|m| m.displacement()).sum::<f64>() / matches.len() as f64;
    Ok(SolvabilityResult {
        outcome: if mean < max_err { Solvability::Pass } else { Solvability::TooInaccurate },
        matches: matches.len(),
        mean_error: Some(mean),
    })
}

/// Everything measured for one pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterReport {
    pub exposure: ExposureResult,
    pub covis: CovisFractionResult,
    pub solvability: Option<SolvabilityResult>,
}

impl FilterReport {
    pub fn pass(&self) -> bool {
        self.exposure.pass && self.covis.pass && self.solvability.is_some_and(|s| s.pass())
    }

    /// `key=value` lines for a sidecar file.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "exposure_frac_src={}", self.exposure.frac_src);
        let _ = writeln!(s, "exposure_frac_tgt={}", self.exposure.frac_tgt);
        let _ = writeln!(s, "exposure_pass={}", self.exposure.pass);
        let _ = writeln!(s, "covis_frac_fwd={}", self.covis.fwd);
        let _ = writeln!(s, "covis_frac_bwd={}", self.covis.bwd);
        let _ = writeln!(s, "covis_pass={}", self.covis.pass);
        match &self.solvability {
            Some(r) => {
                let err = r.mean_error.map_or("nan".to_string(), |e| e.to_string());
                let _ = writeln!(s, "solvability_error_px={err}");
                let _ = writeln!(s, "solvability_matches={}", r.matches);
                let _ = writeln!(s, "solvability={:?}", r.outcome);
            }
            None => {
                let _ = writeln!(s, "solvability=skipped");
            }
        }
        let _ = writeln!(s, "pass={}", self.pass());
        s
    }
}

/// Runs all filters. Solvability is skipped when a cheaper filter fails.
pub fn filter_pair(
    src: &ImageBuffer,
    tgt: &ImageBuffer,
    fwd: &CovisResult,
    bwd: &CovisResult,
    matcher: &dyn Matcher,
) -> Result<FilterReport> {
    let exposure = exposure_filter(src, tgt, &ExposureParams::default());
    let covis = covis_fraction_filter(fwd, bwd, MIN_COVIS_FRAC);
    let solvability = if exposure.pass && covis.pass {
        Some(solvability_check(src, tgt, fwd, matcher, MAX_SOLVABILITY_ERROR)?)
    } else {
        None
    };
    Ok(FilterReport {
        exposure,
        covis,
        solvability,
    })
}
