//! `sample-pairs`
//!
//! Config keys:
//!
//! | key | meaning |
//! |-----|---------|
//! | `scene_dir` | directory with one subdirectory per scene, each holding `points.xyz` and `cameras.txt` |
//! | `dataset` | dataset name written to the manifest, default `TartanAirV2` |
//! | `pairs_per_scene` | pairs requested per scene, default 7 |
//! | `voxel_size` | meters, default 0.25 |
//! | `visibility` | `omni` (default: centers see all directions) or `front` |
//! | `intrinsics` | `fx,fy,cx,cy,width,height` of the rendered views |
//! | `max_attempts`, `roll_sigma`, `perturb_sigma`, `max_voxel_distance` | sampler settings |
//!
//! Writes `manifest.tsv`.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};

use unicorr::geometry::{Intrinsics, Pose};
use unicorr::io::manifest::{write_manifest, PairRecord};
use unicorr::io::{points, trajectory};
use unicorr::sampler::pair::{sample_scenes, SamplerConfig, Scene};
use unicorr::sampler::{compute_visibility, voxelize, Camera, VisibilityOptions};

use crate::inputs::{format_intrinsics, format_pose, parse_intrinsics};
use crate::Ctx;

pub const KEYS: &[&str] = &[
    "scene_dir",
    "dataset",
    "pairs_per_scene",
    "voxel_size",
    "visibility",
    "intrinsics",
    "max_attempts",
    "roll_sigma",
    "perturb_sigma",
    "max_voxel_distance",
    "seed",
    "jobs",
];

pub fn sample_pairs(ctx: &Ctx) -> Result<()> {
    let cfg = &ctx.config;
    if cfg.path().as_os_str().is_empty() {
        bail!("sample-pairs needs --config");
    }
    cfg.reject_unknown(KEYS)?;
    let scene_dir = cfg.require_path("scene_dir")?;
    let dataset = cfg.get("dataset").unwrap_or("TartanAirV2").to_string();
    let per_scene: usize = cfg.get_or("pairs_per_scene", 7)?;
    let voxel_size: f64 = cfg.get_or("voxel_size", 0.25)?;
    let opts = match cfg.get("visibility").unwrap_or("omni") {
        "omni" => VisibilityOptions {
            in_front: false,
            in_image: false,
        },
        "front" => VisibilityOptions::default(),
        other => bail!("unknown visibility `{other}` (expected omni or front)"),
    };
    let intr = match cfg.get("intrinsics") {
        Some(t) => parse_intrinsics(t)?,
        None => Intrinsics::new(320.0, 320.0, 319.5, 319.5, 640, 640)?,
    };
    let defaults = SamplerConfig::default();
    let sampler = SamplerConfig {
        seed: ctx.seed,
        max_attempts: cfg.get_or("max_attempts", defaults.max_attempts)?,
        roll_sigma: cfg.get_or("roll_sigma", defaults.roll_sigma)?,
        perturb_sigma: cfg.get_or("perturb_sigma", defaults.perturb_sigma)?,
        max_voxel_distance: cfg.get_parsed("max_voxel_distance")?,
        ..defaults
    };
    sampler.validate()?;

    let mut dirs: Vec<PathBuf> = std::fs::read_dir(&scene_dir)
        .with_context(|| format!("reading {}", scene_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        bail!("{}: no scene directories", scene_dir.display());
    }

    struct Loaded {
        name: String,
        centers: Vec<unicorr::geometry::Point3>,
        grid: unicorr::sampler::VoxelGrid,
        vis: unicorr::sampler::VisibilityTable,
    }
    let mut loaded = Vec::with_capacity(dirs.len());
    for dir in &dirs {
        let name = dir.file_name().unwrap_or_default().to_string_lossy().into_owned();
        let cloud = points::read_xyz(&dir.join("points.xyz"))?;
        let poses: Vec<Pose> = trajectory::read_trajectory(&dir.join("cameras.txt"))?
            .into_iter()
            .map(|p| p.pose)
            .collect();
        if poses.is_empty() {
            bail!("{}: no cameras", dir.join("cameras.txt").display());
        }
        let grid = voxelize(&cloud, voxel_size)?;
        let cams: Vec<Camera> = poses.iter().map(|p| Camera { pose: *p, intrinsics: intr }).collect();
        let vis = compute_visibility(&cams, &grid, opts);
        let centers = poses.iter().map(|p| p.center()).collect();
        loaded.push(Loaded { name, centers, grid, vis });
    }
    let scenes = loaded
        .iter()
        .map(|l| Scene::new(l.name.clone(), &l.centers, &l.grid, &l.vis).with_context(|| format!("scene `{}`", l.name)))
        .collect::<Result<Vec<_>>>()?;
    let jobs = if ctx.jobs == 0 { rayon::current_num_threads() } else { ctx.jobs };
    let samples = sample_scenes(&sampler, &scenes, per_scene, jobs)?;

    let intr_text = format_intrinsics(&intr);
    let mut records = Vec::new();
    let mut rejected = 0;
    for s in &samples {
        rejected += s.rejected.iter().sum::<usize>();
        for (n, p) in s.pairs.iter().enumerate() {
            let stem = format!("{}/{n:06}", s.scene);
            records.push(PairRecord {
                dataset: dataset.clone(),
                scene: s.scene.clone(),
                src_image: format!("{stem}_src.png"),
                tgt_image: format!("{stem}_tgt.png"),
                src_depth: format!("{stem}_src_depth.pfm"),
                tgt_depth: format!("{stem}_tgt_depth.pfm"),
                depth_convention: "z".into(),
                src_pose: format_pose(&p.src_pose),
                tgt_pose: format_pose(&p.tgt_pose),
                intrinsics: intr_text.clone(),
                scene_flow: None,
                rigid_objects: None,
                threshold: Some(dataset.clone()),
                attrs: vec![
                    ("bin".into(), p.bin.to_string()),
                    ("axis_angle".into(), format!("{:?}", p.axis_angle)),
                    ("perturbed_axis_angle".into(), format!("{:?}", p.perturbed_axis_angle)),
                    ("src_camera".into(), p.src_camera.to_string()),
                    ("tgt_camera".into(), p.tgt_camera.to_string()),
                    ("voxel".into(), p.target_voxel.to_string()),
                    ("roll_src".into(), format!("{:?}", p.roll_src)),
                    ("roll_tgt".into(), format!("{:?}", p.roll_tgt)),
                ],
            });
        }
    }
    write_manifest(&ctx.output("manifest.tsv"), &records)?;
    print!("scenes={}\npairs={}\nrejected={rejected}\n", samples.len(), records.len());
    Ok(())
}
