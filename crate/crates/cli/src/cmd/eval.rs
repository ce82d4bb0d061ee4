//! `eval-flow` and `eval-wb`

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;

use unicorr::metrics::{eval_report, pose_auc, Aggregation, EvalMask, MetricRow, PoseErrorSample, WIDE_BASELINE_THRESHOLDS};

use crate::inputs::{load_flow, load_mask, parse_list};
use crate::Ctx;

#[derive(Args, Debug)]
pub struct EvalFlowArgs {
    /// Predicted flow (.flo or 3-channel .pfm).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth flow.
    #[arg(long)]
    gt: PathBuf,
    /// Evaluation mask PNG; all valid ground-truth pixels when omitted.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value = "unnamed")]
    dataset: String,
    /// Comma-separated outlier thresholds in pixels.
    #[arg(long, default_value = "1,3,5")]
    thresholds: String,
    /// Also report KITTI F1.
    #[arg(long)]
    f1: bool,
}

pub fn eval_flow(_ctx: &Ctx, a: &EvalFlowArgs) -> Result<()> {
    let pred = load_flow(&a.pred)?;
    let gt = load_flow(&a.gt)?;
    let mask = match &a.mask {
        Some(m) => EvalMask::external(load_mask(m)?),
        None => EvalMask::all(gt.width(), gt.height()),
    };
    let thresholds = parse_list(&a.thresholds)?;
    let row = MetricRow::evaluate(&a.dataset, &pred, &gt, &mask, &thresholds, a.f1)?;
    print!("{}", row.to_kv());
    Ok(())
}

#[derive(Args, Debug)]
pub struct EvalWbArgs {
    /// Tab-separated `dataset pred gt mask` rows; `-` for no mask.
    #[arg(long)]
    pairs: Option<PathBuf>,
    /// `rotation_error translation_angle_error` rows in degrees; `nan`
    /// marks a failed estimate.
    #[arg(long)]
    pose_errors: Option<PathBuf>,
    /// `pair` or `pixel`.
    #[arg(long, default_value = "pair")]
    aggregation: String,
    /// Outlier thresholds in pixels (default 1,2,5).
    #[arg(long)]
    thresholds: Option<String>,
    /// Pose AUC thresholds in degrees.
    #[arg(long, default_value = "5,10,20")]
    auc_thresholds: String,
}

pub fn eval_wb(_ctx: &Ctx, a: &EvalWbArgs) -> Result<()> {
    if a.pairs.is_none() && a.pose_errors.is_none() {
        bail!("eval-wb needs --pairs and/or --pose-errors");
    }
    if let Some(list) = &a.pairs {
        let thresholds = match &a.thresholds {
            Some(t) => parse_list(t)?,
            None => WIDE_BASELINE_THRESHOLDS.to_vec(),
        };
        let aggregation: Aggregation = a.aggregation.parse()?;
        let base = list.parent().map(|p| p.to_path_buf()).unwrap_or_default();
        let text = std::fs::read_to_string(list).with_context(|| format!("reading {}", list.display()))?;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let f: Vec<&str> = line.split('\t').collect();
            if f.len() != 4 {
                bail!("{}:{}: expected `dataset pred gt mask`", list.display(), i + 1);
            }
            let pred = load_flow(&base.join(f[1]))?;
            let gt = load_flow(&base.join(f[2]))?;
            let mask = if f[3] == "-" {
                EvalMask::all(gt.width(), gt.height())
            } else {
                EvalMask::external(load_mask(&base.join(f[3]))?)
            };
            rows.push(
                MetricRow::evaluate(f[0], &pred, &gt, &mask, &thresholds, false)
                    .with_context(|| format!("{}:{}", list.display(), i + 1))?,
            );
        }
        print!("{}", eval_report(&rows, aggregation)?.to_table());
    }
    if let Some(path) = &a.pose_errors {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut samples = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let v: Vec<f64> = line
                .split_whitespace()
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .with_context(|| format!("{}:{}", path.display(), i + 1))?;
            if v.len() != 2 {
                bail!("{}:{}: expected two angles", path.display(), i + 1);
            }
            samples.push(PoseErrorSample {
                rotation_error: v[0],
                translation_angle_error: v[1],
            });
        }
        let th = parse_list(&a.auc_thresholds)?;
        for (t, auc) in th.iter().zip(pose_auc(&samples, &th)?) {
            println!("auc@{t}={auc}");
        }
        println!("pose_pairs={}", samples.len());
    }
    Ok(())
}
