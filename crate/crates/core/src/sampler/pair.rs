//! Angle-controlled wide-baseline pair sampling and dataset pairing rules.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use super::voxel::{VisibilityTable, VoxelGrid};
use crate::error::{Error, Result};
use crate::geometry::{angle_between, Point3, Pose};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngleBin {
    /// Inclusive lower edge, radians.
    pub lo: f64,
    /// Exclusive upper edge, radians.
    pub hi: f64,
    /// Share of pairs drawn from this bin.
    pub weight: f64,
}

impl AngleBin {
    pub fn contains(&self, angle: f64) -> bool {
        angle >= self.lo && angle < self.hi
    }
}

/// `[0,30)`, `[30,60)`, `[60,90)`, `[90,120)` degrees weighted `2:2:2:1`.
pub fn ta_wb_bins() -> Vec<AngleBin> {
    let deg = PI / 180.0;
    [(0.0, 30.0, 2.0), (30.0, 60.0, 2.0), (60.0, 90.0, 2.0), (90.0, 120.0, 1.0)]
        .iter()
        .map(|&(lo, hi, w)| AngleBin {
            lo: lo * deg,
            hi: hi * deg,
            weight: w / 7.0,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SamplerConfig {
    pub bins: Vec<AngleBin>,
    /// Standard deviation of the per-view roll, radians.
    pub roll_sigma: f64,
    /// Per-axis standard deviation of the look-at perturbation, meters.
    pub perturb_sigma: f64,
    pub seed: u64,
    /// Attempts per requested pair before it is reported as rejected.
    pub max_attempts: usize,
    /// Only voxels within this distance of the source center are chosen.
    pub max_voxel_distance: Option<f64>,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            bins: ta_wb_bins(),
            roll_sigma: 0.1,
            perturb_sigma: 0.1,
            seed: 0,
            max_attempts: 100,
            max_voxel_distance: None,
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bins.is_empty() {
            return Err(Error::InvalidInput("sampler needs at least one angle bin".into()));
        }
        let total: f64 = self.bins.iter().map(|b| b.weight).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("bin proportions sum to {total}, expected 1")));
        }
        for (i, b) in self.bins.iter().enumerate() {
            if !(b.lo >= 0.0 && b.lo < b.hi && b.hi <= PI + 1e-12 && b.weight >= 0.0) {
                return Err(Error::InvalidInput(format!("invalid angle bin {i}: {b:?}")));
            }
            for o in &self.bins[..i] {
                if b.lo < o.hi && o.lo < b.hi {
                    return Err(Error::InvalidInput(format!("angle bins {o:?} and {b:?} overlap")));
                }
            }
        }
        if !(self.roll_sigma >= 0.0 && self.perturb_sigma >= 0.0) {
            return Err(Error::InvalidInput("noise sigmas must be non-negative".into()));
        }
        if self.max_attempts == 0 {
            return Err(Error::InvalidInput("max_attempts must be positive".into()));
        }
        Ok(())
    }
}

/// One sampled pair of viewing directions toward a shared voxel.
#[derive(Debug, Clone, PartialEq)]
pub struct PairCandidate {
    pub src_camera: usize,
    pub tgt_camera: usize,
    pub src_center: Point3,
    pub tgt_center: Point3,
    /// Unit directions from each center toward the target voxel center.
    pub src_dir: Vector3<f64>,
    pub tgt_dir: Vector3<f64>,
    pub roll_src: f64,
    pub roll_tgt: f64,
    /// Offsets added to the look-at point of each view.
    pub perturb_src: Vector3<f64>,
    pub perturb_tgt: Vector3<f64>,
    pub target_voxel: usize,
    pub bin: usize,
    /// Angle between `src_dir` and `tgt_dir`.
    pub axis_angle: f64,
    /// Angle between the optical axes after perturbation.
    pub perturbed_axis_angle: f64,
    /// Camera-to-world poses after roll and perturbation.
    pub src_pose: Pose,
    pub tgt_pose: Pose,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    /// No attempt found a target camera inside the bin.
    NoTargetInBin { attempts: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub enum SampleOutcome {
    Accepted(Box<PairCandidate>),
    Rejected(Rejection),
}

/// Camera-to-world pose at `center` looking at `target`, with `+y` of the
/// image pointing as close to world `-z` as possible, then rolled about
/// the optical axis.
pub fn look_at(center: &Point3, target: &Point3, roll: f64) -> Result<Pose> {
    let f = target - center;
    let norm = f.norm();
    if !(norm > 0.0 && norm.is_finite()) {
        return Err(Error::InvalidInput("look-at target coincides with the camera center".into()));
    }
    let f = f / norm;
    let up = if f.z.abs() < 0.999 { Vector3::z() } else { Vector3::y() };
    let right = f.cross(&up).normalize();
    let down = f.cross(&right);
    let base = Matrix3::from_columns(&[right, down, f]);
    let roll = Rotation3::from_axis_angle(&Vector3::z_axis(), roll);
    Pose::new(base * roll.matrix(), center.coords)
}

/// Precomputed lookups for one scene.
#[derive(Debug, Clone)]
pub struct Scene<'a> {
    pub name: String,
    pub centers: &'a [Point3],
    pub grid: &'a VoxelGrid,
    pub vis: &'a VisibilityTable,
    /// Occupied voxels visible from each camera.
    visible_occupied: Vec<Vec<usize>>,
}

impl<'a> Scene<'a> {
    pub fn new(name: impl Into<String>, centers: &'a [Point3], grid: &'a VoxelGrid, vis: &'a VisibilityTable) -> Result<Self> {
        if vis.cameras() != centers.len() || vis.voxels() != grid.len() {
            return Err(Error::InvalidInput(format!(
                "visibility table is {}x{}, scene has {} cameras and {} voxels",
                vis.cameras(),
                vis.voxels(),
                centers.len(),
                grid.len()
            )));
        }
        let visible_occupied: Vec<Vec<usize>> = (0..centers.len())
            .map(|c| vis.visible(c).filter(|&v| grid.is_occupied(v)).collect())
            .collect();
        if visible_occupied.iter().all(|v| v.is_empty()) {
            return Err(Error::NoVisibleVoxels);
        }
        Ok(Scene {
            name: name.into(),
            centers,
            grid,
            vis,
            visible_occupied,
        })
    }
}

/// Draws a source camera, a voxel it sees, and a target camera that sees
/// the same voxel from a direction inside `cfg.bins[bin]`.
pub fn sample_pair<R: Rng + ?Sized>(cfg: &SamplerConfig, scene: &Scene<'_>, bin: usize, rng: &mut R) -> Result<SampleOutcome> {
    let range = cfg
        .bins
        .get(bin)
        .ok_or_else(|| Error::InvalidInput(format!("bin {bin} out of range")))?;
    let roll_dist = Normal::new(0.0, cfg.roll_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let perturb_dist = Normal::new(0.0, cfg.perturb_sigma).map_err(|e| Error::InvalidInput(e.to_string()))?;
    let n_cams = scene.centers.len();
    let mut candidates = Vec::with_capacity(n_cams);
    for _ in 0..cfg.max_attempts {
        let src = rng.random_range(0..n_cams);
        let src_center = scene.centers[src];
        let pool: &[usize] = &scene.visible_occupied[src];
        let voxel = match cfg.max_voxel_distance {
            None if !pool.is_empty() => pool[rng.random_range(0..pool.len())],
            None => continue,
            Some(limit) => {
                let near: Vec<usize> = pool
                    .iter()
                    .copied()
                    .filter(|&v| (scene.grid.center(v) - src_center).norm() <= limit)
                    .collect();
                if near.is_empty() {
                    continue;
                }
                near[rng.random_range(0..near.len())]
            }
        };
        let vc = scene.grid.center(voxel);
        let Some(src_dir) = unit(vc - src_center) else { continue };
        candidates.clear();
        for (j, c) in scene.centers.iter().enumerate() {
            if !scene.vis.is_visible(j, voxel) {
                continue;
            }
            let Some(dir) = unit(vc - c) else { continue };
            let angle = angle_between(&src_dir, &dir);
            if range.contains(angle) {
                candidates.push((j, dir, angle));
            }
        }
        if candidates.is_empty() {
            continue;
        }
        let (tgt, tgt_dir, axis_angle) = candidates[rng.random_range(0..candidates.len())];
        let tgt_center = scene.centers[tgt];
        let roll_src = roll_dist.sample(rng);
        let roll_tgt = roll_dist.sample(rng);
        let mut perturb = || Vector3::new(perturb_dist.sample(rng), perturb_dist.sample(rng), perturb_dist.sample(rng));
        let perturb_src = perturb();
        let perturb_tgt = perturb();
        let src_pose = look_at(&src_center, &(vc + perturb_src), roll_src)?;
        let tgt_pose = look_at(&tgt_center, &(vc + perturb_tgt), roll_tgt)?;
        return Ok(SampleOutcome::Accepted(Box::new(PairCandidate {
            src_camera: src,
            tgt_camera: tgt,
            src_center,
            tgt_center,
            src_dir,
            tgt_dir,
            roll_src,
            roll_tgt,
            perturb_src,
            perturb_tgt,
            target_voxel: voxel,
            bin,
            axis_angle,
            perturbed_axis_angle: angle_between(&src_pose.forward(), &tgt_pose.forward()),
            src_pose,
            tgt_pose,
        })));
    }
    Ok(SampleOutcome::Rejected(Rejection::NoTargetInBin {
        attempts: cfg.max_attempts,
    }))
}

fn unit(v: Vector3<f64>) -> Option<Vector3<f64>> {
    Unit::try_new(v, 0.0).map(Unit::into_inner)
}

/// Splits `total` across weights by the largest-remainder rule. Ties go
/// to the earlier entry.
pub fn largest_remainder(total: usize, weights: &[f64]) -> Vec<usize> {
    let sum: f64 = weights.iter().sum();
    if weights.is_empty() || sum <= 0.0 {
        return vec![0; weights.len()];
    }
    let quotas: Vec<f64> = weights.iter().map(|w| total as f64 * w / sum).collect();
    let mut counts: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().take(total.saturating_sub(assigned)) {
        counts[i] += 1;
    }
    counts
}

/// Per-bin pair counts for the four wide-baseline bins.
pub fn ta_wb_bin_plan(total: usize) -> [usize; 4] {
    let c = largest_remainder(total, &[2.0, 2.0, 2.0, 1.0]);
    [c[0], c[1], c[2], c[3]]
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SceneSamples {
    pub scene: String,
    pub pairs: Vec<PairCandidate>,
    /// Requested pairs that were given up on, per bin.
    pub rejected: Vec<usize>,
}

/// Samples `total` pairs from one scene, split across bins by weight. The
/// stream depends only on `cfg.seed` and `stream`.
pub fn sample_scene(cfg: &SamplerConfig, scene: &Scene<'_>, total: usize, stream: u64) -> Result<SceneSamples> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(stream);
    let weights: Vec<f64> = cfg.bins.iter().map(|b| b.weight).collect();
    let plan = largest_remainder(total, &weights);
    let mut out = SceneSamples {
        scene: scene.name.clone(),
        pairs: Vec::with_capacity(total),
        rejected: vec![0; cfg.bins.len()],
    };
    for (bin, &count) in plan.iter().enumerate() {
        for _ in 0..count {
            match sample_pair(cfg, scene, bin, &mut rng)? {
                SampleOutcome::Accepted(p) => out.pairs.push(*p),
                SampleOutcome::Rejected(_) => out.rejected[bin] += 1,
            }
        }
    }
    Ok(out)
}

/// Samples every scene on a pool of `jobs` threads. Scene `i` uses stream
/// `i`, so the result does not depend on `jobs`.
pub fn sample_scenes(cfg: &SamplerConfig, scenes: &[Scene<'_>], per_scene: usize, jobs: usize) -> Result<Vec<SceneSamples>> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("thread pool: {e}")))?;
    pool.install(|| {
        scenes
            .par_iter()
            .enumerate()
            .map(|(i, s)| sample_scene(cfg, s, per_scene, i as u64))
            .collect()
    })
}

/// Unordered pairs whose mutual covisibility, the smaller of the two
/// directed fractions, exceeds `min_mutual`.
pub fn mutual_pairs(fractions: &[Vec<f64>], min_mutual: f64) -> Result<Vec<(usize, usize)>> {
    let n = fractions.len();
    if let Some(row) = fractions.iter().position(|r| r.len() != n) {
        return Err(Error::InvalidInput(format!("covisibility matrix row {row} is not length {n}")));
    }
    let mut out = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if fractions[i][j].min(fractions[j][i]) > min_mutual {
                out.push((i, j));
            }
        }
    }
    Ok(out)
}

pub const SCANNETPP_MIN_MUTUAL: f64 = 0.25;

pub fn scannetpp_pairing(fractions: &[Vec<f64>]) -> Result<Vec<(usize, usize)>> {
    mutual_pairs(fractions, SCANNETPP_MIN_MUTUAL)
}
