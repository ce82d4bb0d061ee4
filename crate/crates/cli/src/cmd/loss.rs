//! `loss-check`

use std::path::PathBuf;

use anyhow::{bail, Result};
use clap::Args;

use unicorr::objective::{total_loss, BceNormalization, LossConfig, LossTargets, RobustLossParams};
use unicorr::Grid;

use crate::inputs::{load_flow, load_grid, load_mask};
use crate::Ctx;

#[derive(Args, Debug)]
pub struct LossCheckArgs {
    #[arg(long)]
    pred: PathBuf,
    #[arg(long)]
    gt: PathBuf,
    /// Ground-truth covisibility PNG.
    #[arg(long)]
    covis: PathBuf,
    /// Supervision PNG; every pixel when omitted.
    #[arg(long)]
    supervision: Option<PathBuf>,
    /// Covisibility logits, single-channel PFM; zeros when omitted.
    #[arg(long)]
    logits: Option<PathBuf>,
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    #[arg(long, default_value_t = 0.24)]
    c: f64,
    #[arg(long, default_value_t = unicorr::objective::DEFAULT_COVIS_WEIGHT)]
    covis_weight: f64,
    /// `supervised` or `all`.
    #[arg(long, default_value = "supervised")]
    bce_norm: String,
}

pub fn loss_check(_ctx: &Ctx, a: &LossCheckArgs) -> Result<()> {
    let pred = load_flow(&a.pred)?;
    let gt = load_flow(&a.gt)?;
    let (w, h) = gt.dims();
    let covis = load_mask(&a.covis)?;
    let supervision = match &a.supervision {
        Some(p) => load_mask(p)?,
        None => Grid::filled(w, h, true),
    };
    let logits = match &a.logits {
        Some(p) => load_grid(p)?,
        None => Grid::filled(w, h, 0.0),
    };
    let bce_normalization = match a.bce_norm.as_str() {
        "supervised" => BceNormalization::Supervised,
        "all" => BceNormalization::AllPixels,
        other => bail!("unknown --bce-norm `{other}` (expected supervised or all)"),
    };
    let cfg = LossConfig {
        robust: RobustLossParams::new(a.alpha, a.c)?,
        covis_weight: a.covis_weight,
        bce_normalization,
    };
    let targets = LossTargets {
        flow: &gt,
        covis: &covis,
        supervision: &supervision,
    };
    print!("{}", total_loss(&pred, &logits, targets, &cfg)?.to_kv());
    Ok(())
}
