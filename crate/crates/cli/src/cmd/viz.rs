//! `warp-viz`

use std::path::PathBuf;

use anyhow::Result;
use clap::Args;

use unicorr::io::png::{read_image_png, write_image_png};
use unicorr::io::warp::{visualization_grid, warp_backward};

use crate::inputs::{load_flow, load_mask, parse_color};
use crate::Ctx;

#[derive(Args, Debug)]
pub struct WarpVizArgs {
    #[arg(long)]
    src: PathBuf,
    #[arg(long)]
    tgt: PathBuf,
    /// Source-to-target flow.
    #[arg(long)]
    fwd_flow: PathBuf,
    #[arg(long)]
    fwd_covis: PathBuf,
    /// Target-to-source flow; with it the 2x2 grid is written.
    #[arg(long, requires = "bwd_covis")]
    bwd_flow: Option<PathBuf>,
    #[arg(long, requires = "bwd_flow")]
    bwd_covis: Option<PathBuf>,
    /// Color of non-covisible pixels.
    #[arg(long, default_value = "255,0,255")]
    marker: String,
}

pub fn warp_viz(ctx: &Ctx, a: &WarpVizArgs) -> Result<()> {
    let marker = parse_color(&a.marker)?;
    let src = read_image_png(&a.src)?;
    let tgt = read_image_png(&a.tgt)?;
    let fwd = load_flow(&a.fwd_flow)?;
    let fwd_covis = load_mask(&a.fwd_covis)?;
    let warped = warp_backward(&tgt, &fwd, &fwd_covis, marker)?;
    write_image_png(&ctx.output("warped_tgt.png"), &warped)?;
    if let (Some(bf), Some(bc)) = (&a.bwd_flow, &a.bwd_covis) {
        let bwd = load_flow(bf)?;
        let bwd_covis = load_mask(bc)?;
        write_image_png(&ctx.output("warped_src.png"), &warp_backward(&src, &bwd, &bwd_covis, marker)?)?;
        let grid = visualization_grid(&src, &tgt, (&fwd, &fwd_covis), (&bwd, &bwd_covis), marker)?;
        write_image_png(&ctx.output("grid.png"), &grid)?;
    }
    Ok(())
}
