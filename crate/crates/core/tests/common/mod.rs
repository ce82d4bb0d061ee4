//! Scene generators and naive reference implementations shared by the
//! integration tests. The references favor obviousness over speed.

#![allow(dead_code)]

use nalgebra::{Matrix3, Rotation3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use unicorr::geometry::{
    bilinear_sample, project, ray_distance, transform, unproject, DepthConvention, DepthMap, Intrinsics, PixelCoord,
    Point3, Pose,
};
use unicorr::covis::{covis_fov_only, covis_static, CovisResult, ThresholdParams, View};
use unicorr::io::ImageBuffer;
use unicorr::sampler::filters::{solvability_check, Solvability, MAX_SOLVABILITY_ERROR};
use unicorr::sampler::matcher::ZnccMatcher;
use unicorr::sampler::pair::ta_wb_bins;
use unicorr::sampler::voxel::{compute_visibility, voxelize, Camera, VisibilityOptions, VisibilityTable, VoxelGrid};
use unicorr::{FlowField, Grid};

use std::f64::consts::PI;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

// ---------------------------------------------------------------- scenes

/// A ground plane `n·X = d` plus an optional sphere occluder.
#[derive(Debug, Clone, Copy)]
pub struct World {
    pub plane_n: Vector3<f64>,
    pub plane_d: f64,
    pub sphere: Option<(Point3, f64)>,
}

/// Parameter `t` along `o + t·dir` of the first surface hit.
pub fn trace(world: &World, o: &Point3, dir: &Vector3<f64>) -> Option<f64> {
    let mut best: Option<f64> = None;
    let denom = world.plane_n.dot(dir);
    if denom.abs() > 1e-12 {
        let t = (world.plane_d - world.plane_n.dot(&o.coords)) / denom;
        if t > 1e-9 {
            best = Some(t);
        }
    }
    if let Some((c, r)) = world.sphere {
        let oc = o - c;
        let a = dir.dot(dir);
        let b = 2.0 * oc.dot(dir);
        let cc = oc.dot(&oc) - r * r;
        let disc = b * b - 4.0 * a * cc;
        if disc >= 0.0 {
            let t = (-b - disc.sqrt()) / (2.0 * a);
            if t > 1e-9 && best.is_none_or(|bt| t < bt) {
                best = Some(t);
            }
        }
    }
    best
}

/// Depth image of `world` seen by `(pose, intr)` in the given convention.
pub fn render_depth(world: &World, pose: &Pose, intr: &Intrinsics, conv: DepthConvention) -> DepthMap {
    let o = pose.center();
    let values = Grid::from_fn(intr.width, intr.height, |x, y| {
        let d_cam = Vector3::new((x as f64 - intr.cx) / intr.fx, (y as f64 - intr.cy) / intr.fy, 1.0);
        let d_w = pose.rotation() * d_cam;
        match trace(world, &o, &d_w) {
            // t is the z-depth because the camera-frame ray has unit z
            Some(t) => match conv {
                DepthConvention::ZDepth => t,
                DepthConvention::RayDistance => t * d_cam.norm(),
            },
            None => 0.0,
        }
    });
    DepthMap::from_values(values, conv)
}

pub fn random_rotation(rng: &mut impl Rng, max_angle: f64) -> Matrix3<f64> {
    let axis = Vector3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
    let axis = if axis.norm() < 1e-6 { Vector3::z() } else { axis.normalize() };
    *Rotation3::from_axis_angle(&nalgebra::Unit::new_normalize(axis), rng.random_range(-max_angle..max_angle)).matrix()
}

pub struct StaticScene {
    pub intr1: Intrinsics,
    pub intr2: Intrinsics,
    pub pose1: Pose,
    pub pose2: Pose,
    pub depth1: DepthMap,
    pub depth2: DepthMap,
    pub world: World,
}

/// Two cameras looking down `+z` at a plane with a sphere in between.
/// A few depth pixels are knocked out at random.
pub fn random_static_scene(seed: u64, max_dim: usize) -> StaticScene {
    let mut r = rng(seed);
    let w = r.random_range(8..=max_dim);
    let h = r.random_range(8..=max_dim);
    let f = r.random_range(0.6..1.4) * w as f64;
    let mk = |r: &mut ChaCha8Rng, w: usize, h: usize| {
        Intrinsics::new(f * r.random_range(0.9..1.1), f * r.random_range(0.9..1.1), (w as f64 - 1.0) / 2.0 + r.random_range(-2.0..2.0), (h as f64 - 1.0) / 2.0 + r.random_range(-2.0..2.0), w, h)
            .unwrap()
    };
    let intr1 = mk(&mut r, w, h);
    let intr2 = if r.random_bool(0.5) {
        intr1
    } else {
        let (w2, h2) = (r.random_range(8..=max_dim), r.random_range(8..=max_dim));
        mk(&mut r, w2, h2)
    };
    let pose1 = Pose::new(random_rotation(&mut r, 0.1), Vector3::new(r.random_range(-0.2..0.2), r.random_range(-0.2..0.2), 0.0)).unwrap();
    let pose2 = Pose::new(
        random_rotation(&mut r, 0.25),
        Vector3::new(r.random_range(-0.8..0.8), r.random_range(-0.8..0.8), r.random_range(-0.5..0.5)),
    )
    .unwrap();
    let tilt = Vector3::new(r.random_range(-0.2..0.2), r.random_range(-0.2..0.2), 1.0).normalize();
    let world = World {
        plane_n: tilt,
        plane_d: r.random_range(3.0..6.0),
        sphere: r.random_bool(0.8).then(|| {
            (Point3::new(r.random_range(-0.5..0.5), r.random_range(-0.5..0.5), r.random_range(1.5..2.5)), r.random_range(0.2..0.6))
        }),
    };
    let conv = if r.random_bool(0.5) { DepthConvention::ZDepth } else { DepthConvention::RayDistance };
    let mut d1 = render_depth(&world, &pose1, &intr1, conv);
    let mut d2 = render_depth(&world, &pose2, &intr2, conv);
    for d in [&mut d1, &mut d2] {
        let mut values = d.values().clone();
        for v in values.as_mut_slice() {
            if r.random_bool(0.03) {
                *v = 0.0;
            }
        }
        *d = DepthMap::from_values(values, conv);
    }
    StaticScene { intr1, intr2, pose1, pose2, depth1: d1, depth2: d2, world }
}

// ---------------------------------------------------------------- covis oracle

/// One pixel of a reference covisibility computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OraclePixel {
    pub flow: Option<(f64, f64)>,
    pub covis: bool,
    pub fov: bool,
    pub supervision: bool,
    pub error: Option<f64>,
}

const NOTHING: OraclePixel = OraclePixel { flow: None, covis: false, fov: false, supervision: false, error: None };

fn s6(v1: bool, f1: bool, vo: bool) -> bool {
    (v1 && !f1) || (f1 && vo)
}

/// Judges world point `p` against the target observed at `i_t`.
fn oracle_judge(
    p: &Point3,
    i_t: PixelCoord,
    flow: (f64, f64),
    tgt_pose: &Pose,
    tgt_intr: &Intrinsics,
    tgt_depth: &DepthMap,
    tau_d: f64,
    tau_r: f64,
) -> OraclePixel {
    let center = tgt_pose.center();
    let dist = (p - center).norm();
    let sampled = bilinear_sample(tgt_depth.values(), Some(tgt_depth.valid()), i_t);
    match sampled {
        None => OraclePixel { flow: Some(flow), covis: false, fov: true, supervision: s6(true, true, false), error: None },
        Some(d) => {
            let Ok(d2) = ray_distance(tgt_intr, i_t, d, tgt_depth.convention()) else {
                return OraclePixel { flow: Some(flow), covis: false, fov: true, supervision: s6(true, true, false), error: None };
            };
            let e = (dist - d2).abs();
            OraclePixel {
                flow: Some(flow),
                covis: e < tau_d + tau_r * dist,
                fov: true,
                supervision: s6(true, true, true),
                error: Some(e),
            }
        }
    }
}

fn oracle_project(
    x: usize,
    y: usize,
    p: &Point3,
    tgt_pose: &Pose,
    tgt_intr: &Intrinsics,
    tgt_depth: &DepthMap,
    tau_d: f64,
    tau_r: f64,
) -> OraclePixel {
    let q = transform(&tgt_pose.inverse(), p);
    let out = |flow| OraclePixel { flow, covis: false, fov: false, supervision: s6(true, false, false), error: None };
    if q.z <= 0.0 || q.z.is_nan() {
        return out(None);
    }
    let (i_t, _) = project(tgt_intr, &q).unwrap();
    let flow = (i_t.u - x as f64, i_t.v - y as f64);
    let inside = i_t.u >= -0.5 && i_t.u < tgt_intr.width as f64 - 0.5 && i_t.v >= -0.5 && i_t.v < tgt_intr.height as f64 - 0.5;
    if !inside {
        return out(Some(flow));
    }
    oracle_judge(p, i_t, flow, tgt_pose, tgt_intr, tgt_depth, tau_d, tau_r)
}

pub fn oracle_static(s: &StaticScene, tau_d: f64, tau_r: f64) -> Vec<OraclePixel> {
    let (w, h) = (s.intr1.width, s.intr1.height);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let Some(d) = s.depth1.at(x, y) else {
                out.push(NOTHING);
                continue;
            };
            let p_cam = unproject(&s.intr1, PixelCoord::new(x as f64, y as f64), d, s.depth1.convention()).unwrap();
            let p = transform(&s.pose1, &p_cam);
            out.push(oracle_project(x, y, &p, &s.pose2, &s.intr2, &s.depth2, tau_d, tau_r));
        }
    }
    out
}

pub fn oracle_sceneflow(
    s: &StaticScene,
    flow: &FlowField,
    depth_change: &Grid<f64>,
    tau_d: f64,
    tau_r: f64,
) -> Vec<OraclePixel> {
    let (w, h) = (s.intr1.width, s.intr1.height);
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let Some(f) = flow.at(x, y) else {
                out.push(NOTHING);
                continue;
            };
            let dd = *depth_change.get(x, y);
            let d1 = match s.depth1.at(x, y) {
                Some(d) if dd.is_finite() => d,
                _ => {
                    out.push(OraclePixel { flow: Some(f), ..NOTHING });
                    continue;
                }
            };
            let i_t = PixelCoord::new(x as f64 + f.0, y as f64 + f.1);
            let inside = i_t.u >= -0.5 && i_t.u < w as f64 - 0.5 && i_t.v >= -0.5 && i_t.v < h as f64 - 0.5;
            let moved = d1 + dd;
            if !(moved > 0.0) || !inside {
                out.push(OraclePixel { flow: Some(f), covis: false, fov: false, supervision: s6(true, false, false), error: None });
                continue;
            }
            let p = transform(&s.pose2, &unproject(&s.intr1, i_t, moved, s.depth1.convention()).unwrap());
            out.push(oracle_judge(&p, i_t, f, &s.pose2, &s.intr2, &s.depth2, tau_d, tau_r));
        }
    }
    out
}

pub fn oracle_rigid(
    s: &StaticScene,
    seg: &Grid<u32>,
    poses_t1: &[Pose],
    poses_t2: &[Pose],
    tau_d: f64,
    tau_r: f64,
) -> (Vec<OraclePixel>, usize) {
    let (w, h) = (s.intr1.width, s.intr1.height);
    let mut out = Vec::with_capacity(w * h);
    let mut unknown = 0;
    for y in 0..h {
        for x in 0..w {
            let Some(d) = s.depth1.at(x, y) else {
                out.push(NOTHING);
                continue;
            };
            let id = *seg.get(x, y) as usize;
            if id == 0 || id > poses_t1.len() {
                unknown += 1;
                out.push(NOTHING);
                continue;
            }
            let p_cam = unproject(&s.intr1, PixelCoord::new(x as f64, y as f64), d, s.depth1.convention()).unwrap();
            let mut p = transform(&s.pose1, &p_cam);
            let (t1, t2) = (&poses_t1[id - 1], &poses_t2[id - 1]);
            if t1 != t2 {
                p = transform(t2, &transform(&t1.inverse(), &p));
            }
            out.push(oracle_project(x, y, &p, &s.pose2, &s.intr2, &s.depth2, tau_d, tau_r));
        }
    }
    (out, unknown)
}

/// Bitwise comparison of a library result with reference pixels.
pub fn matches_oracle(r: &CovisResult, oracle: &[OraclePixel]) -> Result<(), String> {
    let bits = |v: Option<f64>| v.map(f64::to_bits);
    for (i, o) in oracle.iter().enumerate() {
        let (x, y) = (i % r.width(), i / r.width());
        let lib = OraclePixel {
            flow: r.flow.at(x, y),
            covis: *r.covis.get(x, y),
            fov: *r.fov.get(x, y),
            supervision: *r.supervision.get(x, y),
            error: r.reproj_defined.get(x, y).then(|| *r.reproj_error.get(x, y)),
        };
        let same = lib.covis == o.covis
            && lib.fov == o.fov
            && lib.supervision == o.supervision
            && bits(lib.error) == bits(o.error)
            && lib.flow.map(|f| (f.0.to_bits(), f.1.to_bits())) == o.flow.map(|f| (f.0.to_bits(), f.1.to_bits()));
        if !same {
            return Err(format!("pixel ({x},{y}): library {lib:?} vs oracle {o:?}"));
        }
    }
    Ok(())
}

// ---------------------------------------------------------------- random fields

pub fn random_flow(r: &mut impl Rng, w: usize, h: usize, scale: f64, invalid: f64) -> FlowField {
    FlowField::from_fn(w, h, |_, _| {
        (!r.random_bool(invalid)).then(|| (r.random_range(-scale..scale), r.random_range(-scale..scale)))
    })
}

pub fn random_mask(r: &mut impl Rng, w: usize, h: usize, p: f64) -> Grid<bool> {
    Grid::from_fn(w, h, |_, _| r.random_bool(p))
}

// ---------------------------------------------------------------- metric oracles

pub fn epe_list(pred: &FlowField, gt: &FlowField, mask: &Grid<bool>) -> Vec<(f64, f64)> {
    let mut v = Vec::new();
    for y in 0..gt.height() {
        for x in 0..gt.width() {
            if !*mask.get(x, y) {
                continue;
            }
            if let (Some(p), Some(g)) = (pred.at(x, y), gt.at(x, y)) {
                let e = ((p.0 - g.0).powi(2) + (p.1 - g.1).powi(2)).sqrt();
                v.push((e, (g.0 * g.0 + g.1 * g.1).sqrt()));
            }
        }
    }
    v
}

pub fn oracle_aepe(pred: &FlowField, gt: &FlowField, mask: &Grid<bool>) -> f64 {
    let e = epe_list(pred, gt, mask);
    e.iter().map(|p| p.0).sum::<f64>() / e.len() as f64
}

pub fn oracle_outlier(pred: &FlowField, gt: &FlowField, mask: &Grid<bool>, t: f64) -> f64 {
    let e = epe_list(pred, gt, mask);
    e.iter().filter(|p| p.0 > t).count() as f64 / e.len() as f64
}

pub fn oracle_f1(pred: &FlowField, gt: &FlowField, mask: &Grid<bool>) -> f64 {
    let e = epe_list(pred, gt, mask);
    e.iter().filter(|p| p.0 > 3.0 && p.0 > 0.05 * p.1).count() as f64 / e.len() as f64
}

/// Area under the recall curve the way the common evaluation scripts do
/// it: sorted errors, recall `k/n`, prepend the origin, cut at `t`, then
/// trapezoid-integrate and normalize.
pub fn oracle_auc(errors: &[f64], t: f64) -> f64 {
    let mut e: Vec<f64> = errors.iter().map(|v| if v.is_nan() { f64::INFINITY } else { *v }).collect();
    e.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = e.len() as f64;
    let mut xs = vec![0.0];
    let mut ys = vec![0.0];
    for (i, v) in e.iter().enumerate() {
        xs.push(*v);
        ys.push((i + 1) as f64 / n);
    }
    let last = xs.iter().rposition(|x| *x < t).unwrap();
    let mut cx: Vec<f64> = xs[..=last].to_vec();
    let mut cy: Vec<f64> = ys[..=last].to_vec();
    cx.push(t);
    cy.push(ys[last]);
    let mut area = 0.0;
    for i in 1..cx.len() {
        area += (cx[i] - cx[i - 1]) * (cy[i] + cy[i - 1]) / 2.0;
    }
    area / t
}

// ---------------------------------------------------------------- loss oracles

/// General robust loss written straight from its definition.
pub fn oracle_rho(x: f64, alpha: f64, c: f64) -> f64 {
    let b = (alpha - 2.0).abs();
    b / alpha * (((x / c).powi(2) / b + 1.0).powf(alpha / 2.0) - 1.0)
}

pub fn oracle_epe_loss(pred: &FlowField, gt: &FlowField, covis: &Grid<bool>, alpha: f64, c: f64) -> f64 {
    let e: Vec<f64> = epe_list(pred, gt, covis).iter().map(|p| oracle_rho(p.0, alpha, c)).collect();
    if e.is_empty() {
        0.0
    } else {
        e.iter().sum::<f64>() / e.len() as f64
    }
}

pub fn oracle_bce(logits: &Grid<f64>, covis: &Grid<bool>, supervision: &Grid<bool>) -> f64 {
    let mut total = 0.0;
    let mut n = 0usize;
    for i in 0..logits.len() {
        if !supervision.as_slice()[i] {
            continue;
        }
        let z = logits.as_slice()[i];
        let s = 1.0 / (1.0 + (-z).exp());
        total += if covis.as_slice()[i] { -s.ln() } else { -(1.0 - s).ln() };
        n += 1;
    }
    if n == 0 {
        0.0
    } else {
        total / n as f64
    }
}

// ---------------------------------------------------------------- refinement oracle

fn feat_at(f: &unicorr::refine::FeatureMap, c: usize, x: usize, y: usize) -> f64 {
    f.get(c, x, y)
}

/// Bilinear lookup that needs every tap with nonzero weight in bounds.
fn feat_bilinear(f: &unicorr::refine::FeatureMap, u: f64, v: f64) -> Option<Vec<f64>> {
    let (x0, y0) = (u.floor(), v.floor());
    let (a, b) = (u - x0, v - y0);
    let mut taps = vec![(x0, y0, (1.0 - a) * (1.0 - b))];
    if a > 0.0 {
        taps.push((x0 + 1.0, y0, a * (1.0 - b)));
    }
    if b > 0.0 {
        taps.push((x0, y0 + 1.0, (1.0 - a) * b));
    }
    if a > 0.0 && b > 0.0 {
        taps.push((x0 + 1.0, y0 + 1.0, a * b));
    }
    if taps.iter().any(|t| t.0 < 0.0 || t.1 < 0.0 || t.0 >= f.width() as f64 || t.1 >= f.height() as f64) {
        return None;
    }
    Some(
        (0..f.channels())
            .map(|c| taps.iter().map(|t| t.2 * feat_at(f, c, t.0 as usize, t.1 as usize)).sum())
            .collect(),
    )
}

/// Reference refinement of one pixel. `None` when the pixel is left as is.
pub fn oracle_refine_pixel(
    flow: &FlowField,
    fs: &unicorr::refine::FeatureMap,
    ft: &unicorr::refine::FeatureMap,
    x: usize,
    y: usize,
    k: usize,
    bias: f64,
) -> Option<(f64, f64)> {
    let (u, v) = flow.at(x, y)?;
    let r = (k as i64 - 1) / 2;
    let c = fs.channels();
    let mut logits = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if let Some(s) = feat_bilinear(ft, x as f64 + u + dx as f64, y as f64 + v + dy as f64) {
                let dot: f64 = (0..c).map(|ch| feat_at(fs, ch, x, y) * s[ch]).sum();
                let b = if dx == 0 && dy == 0 { bias } else { 0.0 };
                logits.push((dx, dy, dot / (c as f64).sqrt() + b));
            }
        }
    }
    if logits.is_empty() {
        return None;
    }
    let m = logits.iter().map(|l| l.2).fold(f64::NEG_INFINITY, f64::max);
    let z: f64 = logits.iter().map(|l| (l.2 - m).exp()).sum();
    let mut du = 0.0;
    let mut dv = 0.0;
    for (dx, dy, l) in &logits {
        let p = (l - m).exp() / z;
        du += p * *dx as f64;
        dv += p * *dy as f64;
    }
    Some((u + du, v + dv))
}

// ---------------------------------------------------------------- shared fixtures

pub fn run_static(s: &StaticScene, tau_d: f64, tau_r: f64) -> CovisResult {
    covis_static(
        View::new(&s.depth1, &s.pose1, &s.intr1),
        View::new(&s.depth2, &s.pose2, &s.intr2),
        ThresholdParams::new(tau_d, tau_r).unwrap(),
    )
    .unwrap()
}

/// Same intrinsics for both frames, plus a scene-flow label derived from
/// the static geometry with noise, holes and non-finite depth changes.
pub fn sceneflow_case(seed: u64) -> (StaticScene, FlowField, Grid<f64>) {
    let mut s = random_static_scene(seed, 48);
    s.intr2 = s.intr1;
    s.depth2 = render_depth(&s.world, &s.pose2, &s.intr2, s.depth1.convention());
    let base = run_static(&s, 0.1, 0.01);
    let mut r = rng(7000 + seed);
    let (w, h) = (s.intr1.width, s.intr1.height);
    let flow = FlowField::from_fn(w, h, |x, y| {
        if r.random_bool(0.05) {
            return None;
        }
        let f = base.flow.at(x, y).unwrap_or((0.0, 0.0));
        Some((f.0 + r.random_range(-0.5..0.5), f.1 + r.random_range(-0.5..0.5)))
    });
    let dd = Grid::from_fn(w, h, |_, _| match r.random_range(0..40) {
        0 => f64::NAN,
        1 => -1e3,
        _ => r.random_range(-0.3..0.3),
    });
    (s, flow, dd)
}


/// Three objects, one of them static; ids 0 and 4 have no pose.
pub fn rigid_case(seed: u64) -> (StaticScene, Grid<u32>, Vec<Pose>, Vec<Pose>) {
    let s = random_static_scene(seed + 500, 48);
    let mut r = rng(9000 + seed);
    let seg = Grid::from_fn(s.intr1.width, s.intr1.height, |x, y| {
        if r.random_bool(0.03) {
            if r.random_bool(0.5) {
                0
            } else {
                4
            }
        } else {
            1 + ((x / 8 + y / 8) % 3) as u32
        }
    });
    let mut t1 = Vec::new();
    let mut t2 = Vec::new();
    for k in 0..3 {
        let a = Pose::new(
            random_rotation(&mut r, 0.3),
            Vector3::new(r.random_range(-1.0..1.0), r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)),
        )
        .unwrap();
        let b = if k == 0 {
            a
        } else {
            Pose::new(
                random_rotation(&mut r, 0.1) * a.rotation(),
                a.translation() + Vector3::new(r.random_range(-0.2..0.2), r.random_range(-0.2..0.2), r.random_range(-0.2..0.2)),
            )
            .unwrap()
        };
        t1.push(a);
        t2.push(b);
    }
    (s, seg, t1, t2)
}


/// Closed-form flow of the plane `n_w · X = d_w` between two pinhole cameras.
pub fn plane_flow(s: &StaticScene, x: f64, y: f64) -> (f64, f64) {
    let rel = s.pose2.inverse().compose(&s.pose1);
    let n1 = s.pose1.rotation().transpose() * s.world.plane_n;
    let d1 = s.world.plane_d - s.world.plane_n.dot(s.pose1.translation());
    let k = |i: &unicorr::geometry::Intrinsics| Matrix3::new(i.fx, 0.0, i.cx, 0.0, i.fy, i.cy, 0.0, 0.0, 1.0);
    let h = k(&s.intr2) * (rel.rotation() + rel.translation() * n1.transpose() / d1) * k(&s.intr1).try_inverse().unwrap();
    let p = h * Vector3::new(x, y, 1.0);
    (p.x / p.z - x, p.y / p.z - y)
}

pub fn plane_scene(seed: u64) -> StaticScene {
    let mut s = random_static_scene(seed, 64);
    s.world.sphere = None;
    s.depth1 = render_depth(&s.world, &s.pose1, &s.intr1, s.depth1.convention());
    s.depth2 = render_depth(&s.world, &s.pose2, &s.intr2, s.depth1.convention());
    s
}


/// Largest forward/backward round-trip error over covisible pixels whose
/// landing point is surrounded by backward-covisible pixels.
pub fn cycle_error(fwd: &CovisResult, bwd: &CovisResult) -> (f64, usize) {
    let (bu, bv) = (bwd.flow.du(), bwd.flow.dv());
    let mut worst = 0.0f64;
    let mut n = 0;
    for y in 0..fwd.height() {
        for x in 0..fwd.width() {
            if !*fwd.covis.get(x, y) {
                continue;
            }
            let t = fwd.flow.target(x, y).unwrap();
            let (Some(u), Some(v)) = (bilinear_sample(bu, Some(&bwd.covis), t), bilinear_sample(bv, Some(&bwd.covis), t))
            else {
                continue;
            };
            let f = fwd.flow.at(x, y).unwrap();
            worst = worst.max((f.0 + u).hypot(f.1 + v));
            n += 1;
        }
    }
    (worst, n)
}


/// Points on a unit sphere and camera centers on rings around it.
pub fn ring_scene(n_rings: usize, per_ring: usize) -> (Vec<Point3>, VoxelGrid, VisibilityTable) {
    let mut points = Vec::new();
    for i in 0..60 {
        for j in 0..120 {
            let th = PI * (i as f64 + 0.5) / 60.0;
            let ph = 2.0 * PI * j as f64 / 120.0;
            points.push(Point3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()));
        }
    }
    let grid = voxelize(&points, 0.2).unwrap();
    let mut centers = Vec::new();
    for ring in 0..n_rings {
        let z = -1.0 + 2.0 * (ring as f64 + 0.5) / n_rings as f64;
        for k in 0..per_ring {
            let a = 2.0 * PI * k as f64 / per_ring as f64 + ring as f64 * 0.3;
            centers.push(Point3::new(3.0 * a.cos(), 3.0 * a.sin(), z));
        }
    }
    let cams: Vec<Camera> = centers
        .iter()
        .map(|c| Camera {
            pose: Pose::from_translation(c.coords),
            intrinsics: Intrinsics::new(100.0, 100.0, 50.0, 50.0, 100, 100).unwrap(),
        })
        .collect();
    let vis = compute_visibility(&cams, &grid, VisibilityOptions { in_front: false, in_image: false });
    (centers, grid, vis)
}

/// Per-bin counts of accepted pairs, binned by their sampled axis angle.
pub fn histogram(samples: &[unicorr::sampler::pair::SceneSamples]) -> [usize; 4] {
    let bins = ta_wb_bins();
    let mut h = [0; 4];
    for p in samples.iter().flat_map(|s| &s.pairs) {
        let b = bins.iter().position(|b| b.contains(p.axis_angle)).unwrap();
        assert_eq!(b, p.bin);
        h[b] += 1;
    }
    h
}


pub fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> ImageBuffer {
    ImageBuffer::from_fn(w, h, 1, |x, y, _| f(x, y))
}


pub fn fov_result(w: usize, h: usize, covisible: usize) -> CovisResult {
    let flow = FlowField::from_fn(w, h, |x, y| Some(if y * w + x < covisible { (0.0, 0.0) } else { (1e3, 0.0) }));
    covis_fov_only(&flow, w, h)
}


pub fn texture(w: usize, h: usize, seed: u64) -> ImageBuffer {

    let mut r = rng(seed);
    let blobs: Vec<(f64, f64, f64)> =
        (0..80).map(|_| (r.random_range(0.0..w as f64), r.random_range(0.0..h as f64), r.random_range(2.0..6.0))).collect();
    ImageBuffer::from_fn(w, h, 1, |x, y, _| {
        let v: f64 = blobs
            .iter()
            .enumerate()
            .map(|(i, b)| {
                let d2 = (x as f64 - b.0).powi(2) + (y as f64 - b.1).powi(2);
                (if i % 2 == 0 { 1.0 } else { -1.0 }) * (-d2 / (2.0 * b.2 * b.2)).exp()
            })
            .sum();
        (128.0 + 90.0 * v.tanh()) as f32
    })
}

/// Target is the source shifted by `(sx, sy)`; the label says `(lx, ly)`.
pub fn solvability_case(sx: i64, sy: i64, lx: f64, ly: f64) -> Solvability {
    let (w, h) = (128, 128);
    let big = texture(w + 20, h + 20, 3);
    let src = ImageBuffer::from_fn(w, h, 1, |x, y, _| big.pixel(x + 10, y + 10)[0]);
    let tgt = ImageBuffer::from_fn(w, h, 1, |x, y, _| {
        big.pixel((x as i64 + 10 - sx) as usize, (y as i64 + 10 - sy) as usize)[0]
    });
    let flow = FlowField::from_fn(w, h, |_, _| Some((lx, ly)));
    let gt = covis_fov_only(&flow, w, h);
    solvability_check(&src, &tgt, &gt, &ZnccMatcher::default(), MAX_SOLVABILITY_ERROR).unwrap().outcome
}

