//! `refine`

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use unicorr::io::tensor::read_feature_map;
use unicorr::io::{flo, png};
use unicorr::refine::{refine_flow, BiasPlacement, RefineConfig};

use crate::inputs::load_flow;
use crate::Ctx;

#[derive(Args, Debug)]
pub struct RefineArgs {
    /// Regressed flow to refine.
    #[arg(long)]
    flow: PathBuf,
    /// Source features, `[C, H, W]` tensor file.
    #[arg(long)]
    feat_src: PathBuf,
    #[arg(long)]
    feat_tgt: PathBuf,
    /// Odd window side.
    #[arg(long, default_value_t = 7)]
    k: usize,
    /// Constant added to the zero-offset logit.
    #[arg(long, default_value_t = 0.0)]
    bias: f64,
    /// Do not scale similarities by 1/sqrt(C).
    #[arg(long)]
    no_temperature: bool,
}

pub fn refine(ctx: &Ctx, a: &RefineArgs) -> Result<()> {
    let flow = load_flow(&a.flow)?;
    let fs = read_feature_map(&a.feat_src)?;
    let ft = read_feature_map(&a.feat_tgt)?;
    let cfg = RefineConfig {
        k: a.k,
        bias: a.bias,
        bias_placement: BiasPlacement::Center,
        temperature: !a.no_temperature,
    };
    let out = refine_flow(&flow, &fs, &ft, &cfg)?;
    flo::write_flo(&ctx.output("refined.flo"), &out.flow)?;
    png::write_mask_png(&ctx.output("refined_mask.png"), &out.refined)?;
    println!("refined_fraction={}", out.refined.fraction_true());
    Ok(())
}
