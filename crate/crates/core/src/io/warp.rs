//! Backward warping and the two-view visualization grid.

use super::image::ImageBuffer;
use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::geometry::bilinear_taps;
use crate::grid::{ensure_dims, Grid};

pub const MAGENTA: [f32; 3] = [255.0, 0.0, 255.0];

/// `out(i) = tgt(i + flow(i))` where `covis(i)` holds and the sample is
/// inside `tgt`; every other pixel gets `marker`. Gray targets are
/// promoted to RGB so the marker stays visible.
pub fn warp_backward(tgt: &ImageBuffer, flow: &FlowField, covis: &Grid<bool>, marker: [f32; 3]) -> Result<ImageBuffer> {
    let (w, h) = flow.dims();
    ensure_dims(covis, w, h, "covisibility mask")?;
    let tgt = tgt.to_rgb();
    let data = tgt.data();
    let (tw, th) = tgt.dims();
    let mut out = ImageBuffer::filled(w, h, &marker)?;
    for y in 0..h {
        for x in 0..w {
            if !*covis.get(x, y) {
                continue;
            }
            let Some(taps) = flow.target(x, y).and_then(|p| bilinear_taps(tw, th, p)) else {
                continue;
            };
            let mut acc = [0f64; 3];
            for (idx, wt) in taps.iter() {
                for (c, a) in acc.iter_mut().enumerate() {
                    *a += wt * data[3 * idx + c] as f64;
                }
            }
            for (p, a) in out.pixel_mut(x, y).iter_mut().zip(acc) {
                *p = a as f32;
            }
        }
    }
    Ok(out)
}

/// `[src | tgt warped by forward flow]` over `[tgt | src warped by backward
/// flow]`. Both views must share dims.
pub fn visualization_grid(
    src: &ImageBuffer,
    tgt: &ImageBuffer,
    fwd: (&FlowField, &Grid<bool>),
    bwd: (&FlowField, &Grid<bool>),
    marker: [f32; 3],
) -> Result<ImageBuffer> {
    let (w, h) = src.dims();
    same_dims(tgt, w, h, "target image")?;
    let tiles = [
        src.to_rgb(),
        warp_backward(tgt, fwd.0, fwd.1, marker)?,
        tgt.to_rgb(),
        warp_backward(src, bwd.0, bwd.1, marker)?,
    ];
    for t in &tiles[1..] {
        same_dims(t, w, h, "warped view")?;
    }
    Ok(ImageBuffer::from_fn(2 * w, 2 * h, 3, |x, y, c| {
        let tile = &tiles[(y / h) * 2 + x / w];
        tile.pixel(x % w, y % h)[c]
    }))
}

fn same_dims(img: &ImageBuffer, w: usize, h: usize, what: &'static str) -> Result<()> {
    if img.dims() != (w, h) {
        return Err(Error::ShapeMismatch {
            what,
            got_w: img.width(),
            got_h: img.height(),
            want_w: w,
            want_h: h,
        });
    }
    Ok(())
}
