//! Sparse matchers used to decide whether a pair is solvable.

use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match {
    pub src: (f64, f64),
    pub tgt: (f64, f64),
    pub score: f64,
}

impl Match {
    pub fn displacement(&self) -> f64 {
        (self.tgt.0 - self.src.0).hypot(self.tgt.1 - self.src.1)
    }
}

/// Finds correspondences from `a` to `b`. Both images are grayscale on the
/// same lattice; only pixels with `valid` set may be used.
pub trait Matcher: Sync {
    fn find_matches(&self, a: &Grid<f64>, b: &Grid<f64>, valid: &Grid<bool>) -> Vec<Match>;
}

/// Template matching by zero-normalized cross-correlation. One patch per
/// cell of a `grid x grid` layout, placed at the cell's strongest
/// gradient, searched over integer shifts up to `search_radius`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZnccMatcher {
    pub grid: usize,
    /// Odd patch side.
    pub patch: usize,
    pub search_radius: usize,
    /// Minimum central-difference gradient magnitude at the patch center.
    pub min_gradient: f64,
    /// Minimum patch standard deviation, in 8-bit levels.
    pub min_std: f64,
    pub min_score: f64,
}

impl Default for ZnccMatcher {
    fn default() -> Self {
        ZnccMatcher {
            grid: 16,
            patch: 15,
            search_radius: 12,
            min_gradient: 8.0,
            min_std: 4.0,
            min_score: 0.8,
        }
    }
}

struct Patch {
    values: Vec<f64>,
    norm: f64,
}

fn patch_at(img: &Grid<f64>, valid: &Grid<bool>, cx: usize, cy: usize, r: usize) -> Option<Patch> {
    let mut values = Vec::with_capacity((2 * r + 1) * (2 * r + 1));
    for y in cy - r..=cy + r {
        for x in cx - r..=cx + r {
            if !*valid.get(x, y) {
                return None;
            }
            values.push(*img.get(x, y));
        }
    }
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    values.iter_mut().for_each(|v| *v -= mean);
    let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
    Some(Patch { values, norm })
}

impl Matcher for ZnccMatcher {
    fn find_matches(&self, a: &Grid<f64>, b: &Grid<f64>, valid: &Grid<bool>) -> Vec<Match> {
        let (w, h) = a.dims();
        let r = self.patch / 2;
        if w < 2 * r + 1 || h < 2 * r + 1 || self.grid == 0 {
            return Vec::new();
        }
        let grad = |x: usize, y: usize| {
            let gx = (a.get((x + 1).min(w - 1), y) - a.get(x.saturating_sub(1), y)) / 2.0;
            let gy = (a.get(x, (y + 1).min(h - 1)) - a.get(x, y.saturating_sub(1))) / 2.0;
            gx.hypot(gy)
        };
        let (span_x, span_y) = (w - 2 * r, h - 2 * r);
        let n_px = (2 * r + 1) * (2 * r + 1);
        let mut out = Vec::new();
        for gy in 0..self.grid {
            for gx in 0..self.grid {
                let (x0, x1) = (r + gx * span_x / self.grid, r + (gx + 1) * span_x / self.grid);
                let (y0, y1) = (r + gy * span_y / self.grid, r + (gy + 1) * span_y / self.grid);
                let mut best: Option<(f64, usize, usize)> = None;
                for y in y0..y1 {
                    for x in x0..x1 {
                        let g = grad(x, y);
                        if g >= self.min_gradient && best.is_none_or(|(bg, _, _)| g > bg) {
                            best = Some((g, x, y));
                        }
                    }
                }
                let Some((_, cx, cy)) = best else { continue };
                let Some(pa) = patch_at(a, valid, cx, cy, r) else { continue };
                if pa.norm / (n_px as f64).sqrt() < self.min_std {
                    continue;
                }
                let rad = self.search_radius as i64;
                let mut top: Option<(f64, usize, usize)> = None;
                for dy in -rad..=rad {
                    for dx in -rad..=rad {
                        let (tx, ty) = (cx as i64 + dx, cy as i64 + dy);
                        if tx < r as i64 || ty < r as i64 || tx + r as i64 >= w as i64 || ty + r as i64 >= h as i64 {
                            continue;
                        }
                        let Some(pb) = patch_at(b, valid, tx as usize, ty as usize, r) else { continue };
                        if pb.norm == 0.0 {
                            continue;
                        }
                        let dot: f64 = pa.values.iter().zip(&pb.values).map(|(p, q)| p * q).sum();
                        let score = dot / (pa.norm * pb.norm);
                        let better = match top {
                            None => true,
                            Some((s, bx, by)) => {
                                // prefer the smaller shift on ties
                                let (d_new, d_old) = (dx * dx + dy * dy, (bx as i64 - cx as i64).pow(2) + (by as i64 - cy as i64).pow(2));
                                score > s || (score == s && d_new < d_old)
                            }
                        };
                        if better {
                            top = Some((score, tx as usize, ty as usize));
                        }
                    }
                }
                if let Some((score, tx, ty)) = top.filter(|t| t.0 >= self.min_score) {
                    out.push(Match {
                        src: (cx as f64, cy as f64),
                        tgt: (tx as f64, ty as f64),
                        score,
                    });
                }
            }
        }
        out
    }
}
