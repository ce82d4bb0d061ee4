//! `gen-covis`
//!
//! Config keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `mode` | `static` (default), `sceneflow`, `rigid` or `fov` |
//! | `src_depth`, `tgt_depth` | `.pfm` or 16-bit `.png` depth maps |
//! | `depth_convention` | `z` (default) or `ray` |
//! | `depth_scale` | divisor for PNG depth, default 1000 |
//! | `intrinsics` | `fx,fy,cx,cy,width,height` |
//! | `tgt_intrinsics` | defaults to `intrinsics` |
//! | `src_pose`, `tgt_pose` | inline `tx,ty,tz,qx,qy,qz,qw` or `trajectory:index` |
//! | `threshold` | dataset preset name, or give `tau_d` and `tau_r` |
//! | `flow_gt`, `depth_change` | scene-flow labels (`sceneflow`, `fov`) |
//! | `segmentation`, `objects_t1`, `objects_t2` | label PNG and per-object trajectories (`rigid`) |

use anyhow::{bail, Context, Result};

use unicorr::covis::{
    covis_fov_only, covis_rigid, covis_sceneflow, covis_static, threshold_preset, CovisResult, RigidObjectsInput,
    SceneFlowInput, ThresholdParams, View,
};
use unicorr::io::{flo, pfm, png, trajectory};

use super::base_dir;
use crate::inputs::{depth_convention, load_depth, load_flow, load_grid, parse_intrinsics, parse_pose};
use crate::Ctx;

pub const KEYS: &[&str] = &[
    "mode",
    "src_depth",
    "tgt_depth",
    "depth_convention",
    "depth_scale",
    "intrinsics",
    "tgt_intrinsics",
    "src_pose",
    "tgt_pose",
    "threshold",
    "tau_d",
    "tau_r",
    "flow_gt",
    "depth_change",
    "segmentation",
    "objects_t1",
    "objects_t2",
    "seed",
    "jobs",
];

fn thresholds(ctx: &Ctx) -> Result<ThresholdParams> {
    let cfg = &ctx.config;
    match (cfg.get("threshold"), cfg.get_parsed::<f64>("tau_d")?, cfg.get_parsed::<f64>("tau_r")?) {
        (Some(name), None, None) => Ok(threshold_preset(name)?),
        (None, Some(d), Some(r)) => Ok(ThresholdParams::new(d, r)?),
        (None, None, None) => bail!("set `threshold` to a dataset name, or both `tau_d` and `tau_r`"),
        _ => bail!("`threshold` and `tau_d`/`tau_r` are mutually exclusive and `tau_d`/`tau_r` go together"),
    }
}

pub fn gen_covis(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.config;
    if cfg.path().as_os_str().is_empty() {
        bail!("gen-covis needs --config");
    }
    cfg.reject_unknown(KEYS)?;
    let mode = cfg.get("mode").unwrap_or("static");
    let mut extra = String::new();

    let result: CovisResult = if mode == "fov" {
        let flow = load_flow(&cfg.require_path("flow_gt")?)?;
        let (w, h) = flow.dims();
        covis_fov_only(&flow, w, h)
    } else {
        let base = base_dir(cfg);
        let conv = depth_convention(cfg)?;
        let scale = cfg.get_or("depth_scale", 1000.0)?;
        let intr = parse_intrinsics(cfg.get("intrinsics").context("missing required key `intrinsics`")?)?;
        let tgt_intr = match cfg.get("tgt_intrinsics") {
            Some(t) => parse_intrinsics(t)?,
            None => intr,
        };
        let src_depth = load_depth(&cfg.require_path("src_depth")?, conv, scale)?;
        let tgt_depth = load_depth(&cfg.require_path("tgt_depth")?, conv, scale)?;
        let src_pose = parse_pose(cfg.get("src_pose").context("missing required key `src_pose`")?, &base)?;
        let tgt_pose = parse_pose(cfg.get("tgt_pose").context("missing required key `tgt_pose`")?, &base)?;
        let thr = thresholds(ctx)?;
        let src = View::new(&src_depth, &src_pose, &intr);
        let tgt = View::new(&tgt_depth, &tgt_pose, &tgt_intr);
        match mode {
            "static" => covis_static(src, tgt, thr)?,
            "sceneflow" => {
                let input = SceneFlowInput {
                    flow_gt: load_flow(&cfg.require_path("flow_gt")?)?,
                    depth_change: Some(load_grid(&cfg.require_path("depth_change")?)?),
                };
                covis_sceneflow(src, tgt, &input, thr)?
            }
            "rigid" => {
                let poses = |key: &str| -> Result<Vec<_>> {
                    Ok(trajectory::read_trajectory(&cfg.require_path(key)?)?
                        .into_iter()
                        .map(|p| p.pose)
                        .collect())
                };
                let input = RigidObjectsInput {
                    segmentation: png::read_label_png(&cfg.require_path("segmentation")?)?,
                    poses_t1: poses("objects_t1")?,
                    poses_t2: poses("objects_t2")?,
                };
                let (r, diag) = covis_rigid(src, tgt, &input, thr)?;
                extra = format!("unknown_id_pixels={}\n", diag.unknown_id_pixels);
                r
            }
            other => bail!("unknown mode `{other}` (expected static, sceneflow, rigid or fov)"),
        }
    };

    flo::write_flo(&ctx.output("flow.flo"), &result.flow)?;
    png::write_mask_png(&ctx.output("covis.png"), &result.covis)?;
    png::write_mask_png(&ctx.output("supervision.png"), &result.supervision)?;
    png::write_mask_png(&ctx.output("fov.png"), &result.fov)?;
    pfm::write_pfm_grid(&ctx.output("reproj_error.pfm"), &result.reproj_error)?;
    print!(
        "mode={mode}\nwidth={}\nheight={}\ncovis_fraction={}\nfov_fraction={}\nsupervision_fraction={}\n{extra}",
        result.width(),
        result.height(),
        result.covis_fraction(),
        result.fov.fraction_true(),
        result.supervision.fraction_true(),
    );
    Ok(())
}
