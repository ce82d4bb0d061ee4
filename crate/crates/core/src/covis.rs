//! Ground-truth flow, covisibility, field-of-view and supervision masks.
//!
//! A source pixel is covisible when its 3-D point, carried into the target
//! frame, agrees with the target depth observed at its projection:
//!
//! `e = | ‖p − O₂‖ − D₂(i_t) | < τ_d + τ_r · ‖p − O₂‖`
//!
//! where `D₂(i_t)` is the bilinearly interpolated target depth converted to
//! ray distance. The three entry points differ only in how `p` and `i_t`
//! are obtained: static scenes, scene-flow labels, and rigid posed objects.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::flow::FlowField;
use crate::geometry::{self, DepthMap, Intrinsics, PixelCoord, Point3, Pose};
use crate::grid::Grid;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdParams {
    /// Absolute 3-D tolerance in meters.
    pub tau_d: f64,
    /// Tolerance added per meter of distance from the target camera.
    pub tau_r: f64,
}

impl ThresholdParams {
    pub fn new(tau_d: f64, tau_r: f64) -> Result<Self> {
        if !(tau_d >= 0.0 && tau_r >= 0.0 && tau_d.is_finite() && tau_r.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "thresholds must be finite and non-negative (tau_d={tau_d}, tau_r={tau_r})"
            )));
        }
        Ok(Self { tau_d, tau_r })
    }

    /// Admissible error bound for a point at `distance` from the target camera.
    #[inline]
    pub fn bound(&self, distance: f64) -> f64 {
        self.tau_d + self.tau_r * distance
    }

    #[inline]
    pub fn admits(&self, error: f64, distance: f64) -> bool {
        error < self.bound(distance)
    }
}

const PRESETS: &[(&str, f64, f64)] = &[
    ("BlendedMVS", 0.1, 0.005),
    ("MegaDepth", 0.1, 0.005),
    ("TartanAirV2", 0.1, 0.01),
    ("ScanNet++V2", 0.1, 0.005),
    ("HabitatCAD", 0.1, 0.005),
    ("FlyingThings", 0.01, 0.001),
    ("Monkaa", 0.01, 0.001),
    ("Kubric4D", 0.1, 0.005),
];

/// Datasets whose covisibility does not come from a reprojection threshold.
const NO_THRESHOLD: &[&str] = &["Spring", "HD1K", "FlyingChairs"];

pub(crate) fn normalize_name(name: &str) -> String {
    name.to_ascii_lowercase()
        .replace("++", "pp")
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect()
}

fn canonical(name: &str) -> Option<&'static str> {
    let key = normalize_name(name);
    let alias = match key.as_str() {
        "tartanair" => "tartanairv2",
        "scannetpp" | "scannet" => "scannetppv2",
        "habitat" => "habitatcad",
        "flyingthings3d" => "flyingthings",
        "kubric" => "kubric4d",
        other => other,
    };
    PRESETS
        .iter()
        .map(|p| p.0)
        .chain(NO_THRESHOLD.iter().copied())
        .find(|n| normalize_name(n) == alias)
}

/// Names accepted by [`threshold_preset`].
pub fn preset_names() -> Vec<&'static str> {
    PRESETS.iter().map(|p| p.0).collect()
}

/// Reprojection thresholds used for a dataset. Matching ignores case and
/// punctuation (`"tartanair-v2"` and `"TartanAirV2"` are the same).
pub fn threshold_preset(dataset: &str) -> Result<ThresholdParams> {
    match canonical(dataset) {
        Some(name) => match PRESETS.iter().find(|p| p.0 == name) {
            Some(&(_, tau_d, tau_r)) => Ok(ThresholdParams { tau_d, tau_r }),
            None => Err(Error::NoThreshold(name)),
        },
        None => Err(Error::UnknownDataset {
            name: dataset.to_string(),
            known: preset_names(),
        }),
    }
}

/// Everything computed for one ordered image pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CovisResult {
    pub flow: FlowField,
    pub covis: Grid<bool>,
    pub fov: Grid<bool>,
    pub supervision: Grid<bool>,
    /// Reprojection error in meters; NaN where `reproj_defined` is false.
    pub reproj_error: Grid<f64>,
    pub reproj_defined: Grid<bool>,
}

impl CovisResult {
    pub fn width(&self) -> usize {
        self.covis.width()
    }

    pub fn height(&self) -> usize {
        self.covis.height()
    }

    /// Fraction of all source pixels that are covisible.
    pub fn covis_fraction(&self) -> f64 {
        self.covis.fraction_true()
    }

    /// Exact equality, comparing floats by bit pattern.
    pub fn bitwise_eq(&self, other: &CovisResult) -> bool {
        self.flow.bitwise_eq(&other.flow)
            && self.covis == other.covis
            && self.fov == other.fov
            && self.supervision == other.supervision
            && self.reproj_defined == other.reproj_defined
            && self
                .reproj_error
                .as_slice()
                .iter()
                .zip(other.reproj_error.as_slice())
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    fn from_pixels(width: usize, height: usize, rows: Vec<Vec<PixelOut>>) -> Self {
        let px: Vec<PixelOut> = rows.into_iter().flatten().collect();
        debug_assert_eq!(px.len(), width * height);
        let grid = |f: &dyn Fn(&PixelOut) -> bool| Grid::from_vec(width, height, px.iter().map(f).collect()).unwrap();
        let flow = FlowField::new(
            Grid::from_vec(width, height, px.iter().map(|p| p.flow.map_or(f64::NAN, |f| f.0)).collect()).unwrap(),
            Grid::from_vec(width, height, px.iter().map(|p| p.flow.map_or(f64::NAN, |f| f.1)).collect()).unwrap(),
            grid(&|p| p.flow.is_some()),
        )
        .unwrap();
        Self {
            flow,
            covis: grid(&|p| p.covis),
            fov: grid(&|p| p.fov),
            supervision: grid(&|p| p.supervision),
            reproj_error: Grid::from_vec(width, height, px.iter().map(|p| p.error.unwrap_or(f64::NAN)).collect())
                .unwrap(),
            reproj_defined: grid(&|p| p.error.is_some()),
        }
    }
}

/// Supervision rule for one pixel: `(V₁ ∧ ¬F₁) ∨ (F₁ ∧ V_other)`.
#[inline]
pub fn supervision_value(source_valid: bool, fov: bool, target_valid: bool) -> bool {
    (source_valid && !fov) || (fov && target_valid)
}

/// Pixel-wise [`supervision_value`] over whole masks.
pub fn supervision_mask(source_valid: &Grid<bool>, fov: &Grid<bool>, target_valid: &Grid<bool>) -> Result<Grid<bool>> {
    source_valid.ensure_same_dims(fov, "fov mask")?;
    source_valid.ensure_same_dims(target_valid, "target validity mask")?;
    let data = source_valid
        .as_slice()
        .iter()
        .zip(fov.as_slice())
        .zip(target_valid.as_slice())
        .map(|((&v1, &f1), &vo)| supervision_value(v1, f1, vo))
        .collect();
    Grid::from_vec(source_valid.width(), source_valid.height(), data)
}

/// One camera of a pair: its depth map, camera-to-world pose and intrinsics.
#[derive(Debug, Clone, Copy)]
pub struct View<'a> {
    pub depth: &'a DepthMap,
    pub pose: &'a Pose,
    pub intrinsics: &'a Intrinsics,
}

impl<'a> View<'a> {
    pub fn new(depth: &'a DepthMap, pose: &'a Pose, intrinsics: &'a Intrinsics) -> Self {
        Self {
            depth,
            pose,
            intrinsics,
        }
    }

    fn validate(&self, what: &'static str) -> Result<()> {
        self.intrinsics.validate()?;
        self.depth.ensure_matches(self.intrinsics, what)
    }
}

/// Scene-flow labels of an optical-flow pair.
#[derive(Debug, Clone)]
pub struct SceneFlowInput {
    pub flow_gt: FlowField,
    /// Change of the source depth between the two frames, in the source
    /// depth map's convention.
    pub depth_change: Option<Grid<f64>>,
}

/// Segmentation into rigid objects plus each object's pose at both times.
#[derive(Debug, Clone)]
pub struct RigidObjectsInput {
    /// Object id per source pixel, in `1..=K`.
    pub segmentation: Grid<u32>,
    /// `poses_t1[k - 1]` is the object-to-world pose of object `k` at the source time.
    pub poses_t1: Vec<Pose>,
    pub poses_t2: Vec<Pose>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct RigidDiagnostics {
    /// Valid-depth source pixels whose object id has no pose.
    pub unknown_id_pixels: usize,
}

#[derive(Debug, Clone, Copy)]
struct PixelOut {
    flow: Option<(f64, f64)>,
    covis: bool,
    fov: bool,
    supervision: bool,
    error: Option<f64>,
}

impl PixelOut {
    const INVALID: PixelOut = PixelOut {
        flow: None,
        covis: false,
        fov: false,
        supervision: false,
        error: None,
    };

    /// Valid source, outside the target's view.
    fn out_of_view(flow: Option<(f64, f64)>) -> Self {
        PixelOut {
            flow,
            covis: false,
            fov: false,
            supervision: supervision_value(true, false, false),
            error: None,
        }
    }
}

/// Target-side state shared by every source pixel.
struct Target<'a> {
    world_to_cam: Pose,
    center: Point3,
    intr: &'a Intrinsics,
    depth: &'a DepthMap,
    thr: ThresholdParams,
}

impl<'a> Target<'a> {
    fn new(view: &View<'a>, thr: ThresholdParams) -> Self {
        Self {
            world_to_cam: view.pose.inverse(),
            center: view.pose.center(),
            intr: view.intrinsics,
            depth: view.depth,
            thr,
        }
    }

    /// Compares the expected distance of world point `p` against the target
    /// depth observed at `i_t`. Caller guarantees `i_t` lies on the image.
    fn judge(&self, flow: (f64, f64), p: &Point3, i_t: PixelCoord) -> PixelOut {
        let distance = (p - self.center).norm();
        let observed = self
            .depth
            .sample(i_t)
            .and_then(|d| geometry::ray_distance(self.intr, i_t, d, self.depth.convention()).ok());
        match observed {
            Some(d2) => {
                let e = (distance - d2).abs();
                PixelOut {
                    flow: Some(flow),
                    covis: self.thr.admits(e, distance),
                    fov: true,
                    supervision: supervision_value(true, true, true),
                    error: Some(e),
                }
            }
            None => PixelOut {
                flow: Some(flow),
                covis: false,
                fov: true,
                supervision: supervision_value(true, true, false),
                error: None,
            },
        }
    }

    /// Projects world point `p` into the target and judges it.
    fn project_and_judge(&self, i_s: PixelCoord, p: &Point3) -> PixelOut {
        let q = geometry::transform(&self.world_to_cam, p);
        if !(q.z > 0.0) {
            return PixelOut::out_of_view(None);
        }
        let (i_t, _) = match geometry::project(self.intr, &q) {
            Ok(v) => v,
            Err(_) => return PixelOut::out_of_view(None),
        };
        let flow = (i_t.u - i_s.u, i_t.v - i_s.v);
        if !i_t.in_image(self.intr.width, self.intr.height) {
            return PixelOut::out_of_view(Some(flow));
        }
        self.judge(flow, p, i_t)
    }
}

fn source_point(view: &View<'_>, x: usize, y: usize) -> Option<(PixelCoord, Point3)> {
    let d = view.depth.at(x, y)?;
    let i_s = PixelCoord::new(x as f64, y as f64);
    let p_cam = geometry::unproject(view.intrinsics, i_s, d, view.depth.convention()).ok()?;
    Some((i_s, geometry::transform(view.pose, &p_cam)))
}

fn run_rows(width: usize, height: usize, pixel: impl Fn(usize, usize) -> PixelOut + Sync) -> CovisResult {
    let rows: Vec<Vec<PixelOut>> = (0..height)
        .into_par_iter()
        .map(|y| (0..width).map(|x| pixel(x, y)).collect())
        .collect();
    CovisResult::from_pixels(width, height, rows)
}

/// Covisibility for a static scene seen by two posed depth cameras.
pub fn covis_static(src: View<'_>, tgt: View<'_>, thr: ThresholdParams) -> Result<CovisResult> {
    src.validate("source depth")?;
    tgt.validate("target depth")?;
    let target = Target::new(&tgt, thr);
    Ok(run_rows(src.depth.width(), src.depth.height(), |x, y| match source_point(&src, x, y) {
        Some((i_s, p)) => target.project_and_judge(i_s, &p),
        None => PixelOut::INVALID,
    }))
}

/// Covisibility for a dynamic pair with optical-flow and depth-change labels.
///
/// Both views must share one camera model. The output flow is the provided
/// ground truth; source validity additionally requires valid flow and a
/// finite depth change.
pub fn covis_sceneflow(
    src: View<'_>,
    tgt: View<'_>,
    sf: &SceneFlowInput,
    thr: ThresholdParams,
) -> Result<CovisResult> {
    src.validate("source depth")?;
    tgt.validate("target depth")?;
    if src.intrinsics != tgt.intrinsics {
        return Err(Error::InvalidInput(
            "scene-flow covisibility needs one camera model for both frames".into(),
        ));
    }
    let depth_change = sf
        .depth_change
        .as_ref()
        .ok_or_else(|| Error::InvalidInput("scene-flow covisibility requires a depth-change map".into()))?;
    let (w, h) = (src.depth.width(), src.depth.height());
    crate::grid::ensure_dims(sf.flow_gt.valid(), w, h, "ground-truth flow")?;
    crate::grid::ensure_dims(depth_change, w, h, "depth change")?;
    let target = Target::new(&tgt, thr);
    let intr = src.intrinsics;
    let conv = src.depth.convention();

    Ok(run_rows(w, h, |x, y| {
        let Some(flow) = sf.flow_gt.at(x, y) else {
            return PixelOut::INVALID;
        };
        let d1 = src.depth.at(x, y);
        let dd = *depth_change.get(x, y);
        let Some(d1) = d1.filter(|_| dd.is_finite()) else {
            return PixelOut {
                flow: Some(flow),
                ..PixelOut::INVALID
            };
        };
        let i_t = PixelCoord::new(x as f64 + flow.0, y as f64 + flow.1);
        let moved = d1 + dd;
        if !(moved > 0.0) || !i_t.in_image(intr.width, intr.height) {
            return PixelOut::out_of_view(Some(flow));
        }
        let Ok(p_cam) = geometry::unproject(intr, i_t, moved, conv) else {
            return PixelOut::out_of_view(Some(flow));
        };
        let p = geometry::transform(tgt.pose, &p_cam);
        target.judge(flow, &p, i_t)
    }))
}

/// Covisibility for scenes made of rigid objects with known poses.
///
/// Source pixels whose object id has no pose are marked invalid and counted
/// in the returned diagnostics.
pub fn covis_rigid(
    src: View<'_>,
    tgt: View<'_>,
    ro: &RigidObjectsInput,
    thr: ThresholdParams,
) -> Result<(CovisResult, RigidDiagnostics)> {
    src.validate("source depth")?;
    tgt.validate("target depth")?;
    let (w, h) = (src.depth.width(), src.depth.height());
    crate::grid::ensure_dims(&ro.segmentation, w, h, "segmentation")?;
    if ro.poses_t1.len() != ro.poses_t2.len() {
        return Err(Error::InvalidInput(format!(
            "object pose lists differ in length ({} vs {})",
            ro.poses_t1.len(),
            ro.poses_t2.len()
        )));
    }
    // None for objects that did not move: their points pass through untouched.
    let motions: Vec<Option<(Pose, Pose)>> = ro
        .poses_t1
        .iter()
        .zip(&ro.poses_t2)
        .map(|(t1, t2)| (t1 != t2).then(|| (t1.inverse(), *t2)))
        .collect();
    let target = Target::new(&tgt, thr);

    let result = run_rows(w, h, |x, y| {
        let Some((i_s, p)) = source_point(&src, x, y) else {
            return PixelOut::INVALID;
        };
        let id = *ro.segmentation.get(x, y) as usize;
        if id == 0 || id > motions.len() {
            return PixelOut::INVALID;
        }
        let p = match &motions[id - 1] {
            None => p,
            Some((to_object, to_world)) => {
                geometry::transform(to_world, &geometry::transform(to_object, &p))
            }
        };
        target.project_and_judge(i_s, &p)
    });

    let unknown = (0..h)
        .flat_map(|y| (0..w).map(move |x| (x, y)))
        .filter(|&(x, y)| {
            let id = *ro.segmentation.get(x, y) as usize;
            src.depth.at(x, y).is_some() && (id == 0 || id > motions.len())
        })
        .count();
    Ok((
        result,
        RigidDiagnostics {
            unknown_id_pixels: unknown,
        },
    ))
}

/// Field-of-view proxy used when only optical flow is available: a pixel is
/// "covisible" when its flow lands on the image. Supervision is empty.
pub fn covis_fov_only(flow_gt: &FlowField, width: usize, height: usize) -> CovisResult {
    let (sw, sh) = flow_gt.dims();
    let rows = (0..sh)
        .into_par_iter()
        .map(|y| {
            (0..sw)
                .map(|x| {
                    let flow = flow_gt.at(x, y);
                    let inside = flow_gt.target(x, y).is_some_and(|t| t.in_image(width, height));
                    PixelOut {
                        flow,
                        covis: inside,
                        fov: inside,
                        supervision: false,
                        error: None,
                    }
                })
                .collect()
        })
        .collect();
    CovisResult::from_pixels(sw, sh, rows)
}
