//! Training objectives: robust flow loss over covisible pixels, covisibility
//! BCE, their weighted sum, refinement soft targets and cross-entropy, and
//! ground-truth patch similarity.

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::grid::{Grid, WindowGrid};
use crate::sum::pairwise_sum;

/// Weight of the covisibility term in the total loss.
pub const DEFAULT_COVIS_WEIGHT: f64 = 10.0;

/// Shape `alpha` and scale `c` (pixels) of the generalized Charbonnier loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustLossParams {
    pub alpha: f64,
    pub c: f64,
}

impl Default for RobustLossParams {
    fn default() -> Self {
        Self { alpha: 0.5, c: 0.24 }
    }
}

impl RobustLossParams {
    pub fn new(alpha: f64, c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidInput(format!("robust loss scale must be positive, got {c}")));
        }
        if !alpha.is_finite() || alpha == 0.0 || alpha == 2.0 {
            return Err(Error::InvalidInput(format!(
                "robust loss shape must be finite and differ from 0 and 2, got {alpha}"
            )));
        }
        Ok(Self { alpha, c })
    }

    /// Error at which the gradient peaks for `0 < alpha < 2`: the root of the
    /// second derivative, `c·sqrt(|α−2| / (1−α))`. `None` when the gradient
    /// has no interior maximum.
    pub fn gradient_peak(&self) -> Option<f64> {
        let b = (self.alpha - 2.0).abs();
        (self.alpha < 1.0).then(|| self.c * (b / (1.0 - self.alpha)).sqrt())
    }

    #[inline]
    fn value(&self, x: f64) -> f64 {
        let b = (self.alpha - 2.0).abs();
        let y = (x / self.c).powi(2) / b;
        // (1 + y)^(α/2) − 1 without cancellation for small y
        b / self.alpha * ((self.alpha / 2.0) * y.ln_1p()).exp_m1()
    }

    #[inline]
    fn grad(&self, x: f64) -> f64 {
        let b = (self.alpha - 2.0).abs();
        let y = (x / self.c).powi(2) / b;
        x / (self.c * self.c) * (1.0 + y).powf(self.alpha / 2.0 - 1.0)
    }
}

fn check_error(x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("robust loss expects a non-negative error, got {x}")))
    }
}

/// `|α−2|/α · (((x/c)² / |α−2| + 1)^(α/2) − 1)`
pub fn robust_charbonnier(x: f64, p: &RobustLossParams) -> Result<f64> {
    check_error(x)?;
    Ok(p.value(x))
}

/// Derivative of [`robust_charbonnier`] with respect to `x`:
/// `x/c² · ((x/c)²/|α−2| + 1)^(α/2 − 1)`.
pub fn robust_charbonnier_grad(x: f64, p: &RobustLossParams) -> Result<f64> {
    check_error(x)?;
    Ok(p.grad(x))
}

/// Per-pixel end-point error of valid pixels selected by `mask`, in row-major order.
fn masked_epe(pred: &FlowField, gt: &FlowField, mask: &Grid<bool>) -> Result<Vec<f64>> {
    gt.valid().ensure_same_dims(pred.valid(), "predicted flow")?;
    gt.valid().ensure_same_dims(mask, "mask")?;
    let (w, h) = gt.dims();
    let mut out = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !*mask.get(x, y) {
                continue;
            }
            if let (Some(a), Some(b)) = (pred.at(x, y), gt.at(x, y)) {
                out.push((a.0 - b.0).hypot(a.1 - b.1));
            }
        }
    }
    Ok(out)
}

/// Mean robust loss of the flow error over covisible pixels (pixels with
/// invalid prediction or ground truth are skipped). Zero when nothing is
/// covisible.
pub fn epe_loss(pred: &FlowField, gt: &FlowField, covis_gt: &Grid<bool>, p: &RobustLossParams) -> Result<f64> {
    let losses: Vec<f64> = masked_epe(pred, gt, covis_gt)?.into_iter().map(|e| p.value(e)).collect();
    if losses.is_empty() {
        return Ok(0.0);
    }
    Ok(pairwise_sum(&losses) / losses.len() as f64)
}

pub type CovisLogits = Grid<f64>;

/// Which pixels the covisibility BCE averages over.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum BceNormalization {
    /// Average over the supervision mask only.
    #[default]
    Supervised,
    /// Average over every pixel, ignoring the supervision mask.
    AllPixels,
}

/// `−y·log σ(z) − (1−y)·log(1−σ(z))`, evaluated without overflow.
#[inline]
pub fn bce_with_logits(z: f64, y: bool) -> f64 {
    let t = if y { 1.0 } else { 0.0 };
    z.max(0.0) - z * t + (-z.abs()).exp().ln_1p()
}

/// Binary cross-entropy of covisibility logits, averaged over the
/// supervision mask. Zero when the mask is empty.
pub fn bce_loss(logits: &CovisLogits, covis_gt: &Grid<bool>, supervision: &Grid<bool>) -> Result<f64> {
    bce_loss_with(logits, covis_gt, supervision, BceNormalization::Supervised)
}

pub fn bce_loss_with(
    logits: &CovisLogits,
    covis_gt: &Grid<bool>,
    supervision: &Grid<bool>,
    norm: BceNormalization,
) -> Result<f64> {
    logits.ensure_same_dims(covis_gt, "covisibility target")?;
    logits.ensure_same_dims(supervision, "supervision mask")?;
    let terms: Vec<f64> = logits
        .as_slice()
        .iter()
        .zip(covis_gt.as_slice())
        .zip(supervision.as_slice())
        .filter(|(_, &s)| s || norm == BceNormalization::AllPixels)
        .map(|((&z, &y), _)| bce_with_logits(z, y))
        .collect();
    if terms.is_empty() {
        return Ok(0.0);
    }
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossBreakdown {
    pub epe_loss: f64,
    pub bce_loss: f64,
    pub covis_weight: f64,
    pub total: f64,
}

impl LossBreakdown {
    pub fn compose(epe_loss: f64, bce_loss: f64, covis_weight: f64) -> Self {
        Self {
            epe_loss,
            bce_loss,
            covis_weight,
            total: epe_loss + covis_weight * bce_loss,
        }
    }

    /// `key=value` lines.
    pub fn to_kv(&self) -> String {
        format!(
            "epe_loss={}\nbce_loss={}\ncovis_weight={}\ntotal={}\n",
            self.epe_loss, self.bce_loss, self.covis_weight, self.total
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossConfig {
    pub robust: RobustLossParams,
    pub covis_weight: f64,
    pub bce_normalization: BceNormalization,
}

impl Default for LossConfig {
    fn default() -> Self {
        Self {
            robust: RobustLossParams::default(),
            covis_weight: DEFAULT_COVIS_WEIGHT,
            bce_normalization: BceNormalization::Supervised,
        }
    }
}

/// Ground truth for one pair as consumed by the losses.
#[derive(Debug, Clone, Copy)]
pub struct LossTargets<'a> {
    pub flow: &'a FlowField,
    pub covis: &'a Grid<bool>,
    pub supervision: &'a Grid<bool>,
}

pub fn total_loss(
    flow_pred: &FlowField,
    logits: &CovisLogits,
    gt: LossTargets<'_>,
    cfg: &LossConfig,
) -> Result<LossBreakdown> {
    let epe = epe_loss(flow_pred, gt.flow, gt.covis, &cfg.robust)?;
    let bce = bce_loss_with(logits, gt.covis, gt.supervision, cfg.bce_normalization)?;
    Ok(LossBreakdown::compose(epe, bce, cfg.covis_weight))
}

/// Soft classification targets for the local refinement window.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementTarget {
    pub weights: WindowGrid,
    pub in_window: Grid<bool>,
}

/// Bilinear split of the residual `t = flow_gt − flow_init` over the four
/// window cells bracketing it. Pixels whose residual leaves the window (or
/// with invalid flow) are marked out of window and carry zero weights.
pub fn refinement_soft_target(flow_gt: &FlowField, flow_init: &FlowField, k: usize) -> Result<RefinementTarget> {
    flow_gt.valid().ensure_same_dims(flow_init.valid(), "initial flow")?;
    let (w, h) = flow_gt.dims();
    let mut weights = WindowGrid::filled(w, h, k, 0.0)?;
    let mut in_window = Grid::filled(w, h, false);
    let r = weights.radius();
    let rf = r as f64;
    for y in 0..h {
        for x in 0..w {
            let (Some(g), Some(i)) = (flow_gt.at(x, y), flow_init.at(x, y)) else {
                continue;
            };
            let (tx, ty) = (g.0 - i.0, g.1 - i.1);
            if !(tx.abs() <= rf && ty.abs() <= rf) {
                continue;
            }
            *in_window.get_mut(x, y) = true;
            let (x0, y0) = (tx.floor(), ty.floor());
            let (a, b) = (tx - x0, ty - y0);
            let (x0, y0) = (x0 as i64, y0 as i64);
            let cells = [
                (x0, y0, (1.0 - a) * (1.0 - b)),
                (x0 + 1, y0, a * (1.0 - b)),
                (x0, y0 + 1, (1.0 - a) * b),
                (x0 + 1, y0 + 1, a * b),
            ];
            for (dx, dy, wgt) in cells {
                // cells past the window edge only ever receive zero weight
                if wgt > 0.0 {
                    let idx = weights.offset_index(dx, dy);
                    weights.window_mut(x, y)[idx] += wgt;
                }
            }
        }
    }
    Ok(RefinementTarget { weights, in_window })
}

/// `log softmax` of a window of logits.
pub(crate) fn log_softmax(logits: &[f64]) -> Vec<f64> {
    let m = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + logits.iter().map(|l| (l - m).exp()).sum::<f64>().ln();
    logits.iter().map(|l| l - lse).collect()
}

/// Cross-entropy between the window softmax and the soft targets, averaged
/// over in-window pixels. Zero when no pixel is in window.
pub fn refinement_ce_loss(attn_logits: &WindowGrid, target: &RefinementTarget) -> Result<f64> {
    let (w, h, k) = (target.weights.width(), target.weights.height(), target.weights.k());
    if attn_logits.width() != w || attn_logits.height() != h || attn_logits.k() != k {
        return Err(Error::InvalidInput(format!(
            "logit windows are {}x{} (k={}), targets are {}x{} (k={})",
            attn_logits.width(),
            attn_logits.height(),
            attn_logits.k(),
            w,
            h,
            k
        )));
    }
    let mut terms = Vec::new();
    for y in 0..h {
        for x in 0..w {
            if !*target.in_window.get(x, y) {
                continue;
            }
            let logp = log_softmax(attn_logits.window(x, y));
            let t = target.weights.window(x, y);
            let ce: f64 = t
                .iter()
                .zip(&logp)
                .filter(|(wt, _)| **wt > 0.0)
                .map(|(wt, lp)| -wt * lp)
                .sum();
            terms.push(ce);
        }
    }
    if terms.is_empty() {
        return Ok(0.0);
    }
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

/// Dense `Ns x Nt` patch-to-patch similarity matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSimilarity {
    pub patch: usize,
    pub patches_x: usize,
    pub patches_y: usize,
    /// Row-major, `rows = cols = patches_x * patches_y`.
    pub data: Vec<f64>,
}

impl PatchSimilarity {
    pub fn len(&self) -> usize {
        self.patches_x * self.patches_y
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, src: usize, tgt: usize) -> f64 {
        self.data[src * self.len() + tgt]
    }

    pub fn row(&self, src: usize) -> &[f64] {
        let n = self.len();
        &self.data[src * n..(src + 1) * n]
    }
}

/// Fraction of each source patch's pixels that are covisible and land in
/// each target patch. Both images share the flow's dimensions; partial
/// border patches are normalized by their real pixel count.
pub fn patch_similarity(flow_gt: &FlowField, covis_gt: &Grid<bool>, patch: usize) -> Result<PatchSimilarity> {
    if patch == 0 {
        return Err(Error::InvalidInput("patch size must be positive".into()));
    }
    flow_gt.valid().ensure_same_dims(covis_gt, "covisibility mask")?;
    let (w, h) = flow_gt.dims();
    let (px, py) = (w.div_ceil(patch), h.div_ceil(patch));
    let n = px * py;
    let mut counts = vec![0.0f64; n * n];
    let mut sizes = vec![0usize; n];
    let patch_of = |x: usize, y: usize| (y / patch) * px + x / patch;
    for y in 0..h {
        for x in 0..w {
            let s = patch_of(x, y);
            sizes[s] += 1;
            if !*covis_gt.get(x, y) {
                continue;
            }
            let Some(t) = flow_gt.target(x, y) else { continue };
            if !t.in_image(w, h) {
                continue;
            }
            let (tx, ty) = ((t.u + 0.5).floor() as usize, (t.v + 0.5).floor() as usize);
            counts[s * n + patch_of(tx, ty)] += 1.0;
        }
    }
    for (s, size) in sizes.iter().enumerate() {
        for v in &mut counts[s * n..(s + 1) * n] {
            *v /= *size as f64;
        }
    }
    Ok(PatchSimilarity {
        patch,
        patches_x: px,
        patches_y: py,
        data: counts,
    })
}
