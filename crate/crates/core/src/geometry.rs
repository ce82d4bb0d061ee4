//! Pinhole cameras, rigid camera-to-world poses and bilinear sampling.
//!
//! Pixel coordinates put the origin at the *center* of the top-left pixel:
//! pixel `(x, y)` covers the square `[x - 0.5, x + 0.5) x [y - 0.5, y + 0.5)`.
//! Every projection, interpolation and bounds test in the crate uses this
//! convention.

use nalgebra::{Matrix3, Point3 as NPoint3, UnitQuaternion, Quaternion, Vector3};

use crate::error::{Error, Result};
use crate::grid::Grid;

pub type Point3 = NPoint3<f64>;

/// Fractional coordinates closer than this to a lattice point sample that
/// lattice point exactly.
pub const LATTICE_SNAP: f64 = 1e-9;

const ORTHO_TOL: f64 = 1e-9;

/// Continuous pixel position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelCoord {
    pub u: f64,
    pub v: f64,
}

impl PixelCoord {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    /// True when the position falls on the image area, i.e. inside the
    /// footprint of some pixel.
    pub fn in_image(&self, width: usize, height: usize) -> bool {
        self.u >= -0.5 && self.u < width as f64 - 0.5 && self.v >= -0.5 && self.v < height as f64 - 0.5
    }
}

/// How a depth map stores distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DepthConvention {
    /// Distance along the optical axis.
    ZDepth,
    /// Euclidean distance from the camera center.
    RayDistance,
}

impl std::str::FromStr for DepthConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "z" | "zdepth" | "z-depth" | "z_depth" => Ok(DepthConvention::ZDepth),
            "ray" | "raydistance" | "ray-distance" | "ray_distance" => Ok(DepthConvention::RayDistance),
            other => Err(Error::InvalidInput(format!(
                "unknown depth convention `{other}` (expected z-depth or ray-distance)"
            ))),
        }
    }
}

impl std::fmt::Display for DepthConvention {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DepthConvention::ZDepth => "z-depth",
            DepthConvention::RayDistance => "ray-distance",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Intrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl Intrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: usize, height: usize) -> Result<Self> {
        let intr = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        intr.validate()?;
        Ok(intr)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx.is_finite() && self.fy.is_finite() && self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::InvalidInput(format!(
                "focal lengths must be positive and finite (fx={}, fy={})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidInput("image size must be positive".into()));
        }
        let cx_ok = self.cx >= 0.0 && self.cx < self.width as f64;
        let cy_ok = self.cy >= 0.0 && self.cy < self.height as f64;
        if !(cx_ok && cy_ok) {
            return Err(Error::InvalidInput(format!(
                "principal point ({}, {}) outside {}x{} image",
                self.cx, self.cy, self.width, self.height
            )));
        }
        Ok(())
    }

    /// Direction of the ray through `pix`, scaled so that its z component is 1.
    #[inline]
    pub fn ray(&self, pix: PixelCoord) -> Vector3<f64> {
        Vector3::new((pix.u - self.cx) / self.fx, (pix.v - self.cy) / self.fy, 1.0)
    }
}

/// Rigid camera-to-world transform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl Pose {
    pub fn new(rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        if !rotation.iter().chain(translation.iter()).all(|v| v.is_finite()) {
            return Err(Error::InvalidInput("pose contains non-finite entries".into()));
        }
        let ortho = (rotation.transpose() * rotation - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if ortho > ORTHO_TOL || (det - 1.0).abs() > ORTHO_TOL {
            return Err(Error::InvalidInput(format!(
                "rotation is not a proper orthonormal matrix (|RᵀR - I| = {ortho:e}, det = {det})"
            )));
        }
        Ok(Self {
            rotation,
            translation,
        })
    }

    pub fn identity() -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        }
    }

    pub fn from_translation(translation: Vector3<f64>) -> Self {
        Self {
            rotation: Matrix3::identity(),
            translation,
        }
    }

    /// Builds a pose from a translation and an `(x, y, z, w)` quaternion.
    /// The quaternion is renormalized.
    pub fn from_quaternion(translation: Vector3<f64>, xyzw: [f64; 4]) -> Result<Self> {
        let q = Quaternion::new(xyzw[3], xyzw[0], xyzw[1], xyzw[2]);
        if q.norm() == 0.0 || !q.norm().is_finite() {
            return Err(Error::InvalidInput("zero or non-finite quaternion".into()));
        }
        let unit = UnitQuaternion::from_quaternion(q);
        Self::new(*unit.to_rotation_matrix().matrix(), translation)
    }

    /// Rotation about the world z axis by `angle` radians.
    pub fn from_yaw(angle: f64, translation: Vector3<f64>) -> Self {
        let (s, c) = angle.sin_cos();
        Self {
            rotation: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
            translation,
        }
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Camera center in world coordinates.
    pub fn center(&self) -> Point3 {
        Point3::from(self.translation)
    }

    /// Optical axis (camera +z) expressed in world coordinates.
    pub fn forward(&self) -> Vector3<f64> {
        self.rotation.column(2).into_owned()
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose {
            rotation: rt,
            translation: -(rt * self.translation),
        }
    }

    /// `self * other`
    pub fn compose(&self, other: &Pose) -> Pose {
        Pose {
            rotation: self.rotation * other.rotation,
            translation: self.rotation * other.translation + self.translation,
        }
    }

    pub fn to_quaternion_xyzw(&self) -> [f64; 4] {
        let rot = nalgebra::Rotation3::from_matrix_unchecked(self.rotation);
        let q = UnitQuaternion::from_rotation_matrix(&rot);
        [q.i, q.j, q.k, q.w]
    }
}

/// Applies a rigid transform to a point.
#[inline]
pub fn transform(pose: &Pose, p: &Point3) -> Point3 {
    Point3::from(pose.rotation * p.coords + pose.translation)
}

/// Camera-frame 3-D point seen at `pix` with the given depth.
pub fn unproject(intr: &Intrinsics, pix: PixelCoord, depth: f64, convention: DepthConvention) -> Result<Point3> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::InvalidInput(format!("depth must be positive and finite, got {depth}")));
    }
    let ray = intr.ray(pix);
    let p = match convention {
        DepthConvention::ZDepth => ray * depth,
        DepthConvention::RayDistance => ray * (depth / ray.norm()),
    };
    Ok(Point3::from(p))
}

/// Projects a camera-frame point. The returned pixel can lie outside the image.
#[inline]
pub fn project(intr: &Intrinsics, p: &Point3) -> Result<(PixelCoord, bool)> {
    if p.z == 0.0 {
        return Err(Error::DegenerateProjection);
    }
    let u = intr.fx * (p.x / p.z) + intr.cx;
    let v = intr.fy * (p.y / p.z) + intr.cy;
    Ok((PixelCoord::new(u, v), p.z > 0.0))
}

/// Converts a stored depth at `pix` into Euclidean distance from the camera center.
#[inline]
pub fn ray_distance(intr: &Intrinsics, pix: PixelCoord, depth: f64, convention: DepthConvention) -> Result<f64> {
    if !(depth > 0.0) || !depth.is_finite() {
        return Err(Error::InvalidInput(format!("depth must be positive and finite, got {depth}")));
    }
    Ok(match convention {
        DepthConvention::RayDistance => depth,
        DepthConvention::ZDepth => depth * intr.ray(pix).norm(),
    })
}

/// Angle in `[0, π]` between two vectors.
#[inline]
pub fn angle_between(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    a.cross(b).norm().atan2(a.dot(b))
}

/// Angle between the optical axes of two cameras.
pub fn optical_axis_angle(a: &Pose, b: &Pose) -> f64 {
    angle_between(&a.forward(), &b.forward())
}

/// Geodesic angle of the relative rotation between two poses.
pub fn relative_rotation_angle(a: &Pose, b: &Pose) -> f64 {
    let r = a.rotation.transpose() * b.rotation;
    ((r.trace() - 1.0) / 2.0).clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone)]
pub struct DepthMap {
    values: Grid<f64>,
    valid: Grid<bool>,
    convention: DepthConvention,
}

impl DepthMap {
    /// Entries that are non-finite or not strictly positive are marked invalid.
    pub fn new(values: Grid<f64>, valid: Grid<bool>, convention: DepthConvention) -> Result<Self> {
        values.ensure_same_dims(&valid, "depth validity")?;
        let valid = Grid::from_fn(values.width(), values.height(), |x, y| {
            let d = *values.get(x, y);
            *valid.get(x, y) && d.is_finite() && d > 0.0
        });
        Ok(Self {
            values,
            valid,
            convention,
        })
    }

    pub fn from_values(values: Grid<f64>, convention: DepthConvention) -> Self {
        let valid = values.map(|d| d.is_finite() && *d > 0.0);
        Self {
            values,
            valid,
            convention,
        }
    }

    pub fn width(&self) -> usize {
        self.values.width()
    }

    pub fn height(&self) -> usize {
        self.values.height()
    }

    pub fn values(&self) -> &Grid<f64> {
        &self.values
    }

    pub fn valid(&self) -> &Grid<bool> {
        &self.valid
    }

    pub fn convention(&self) -> DepthConvention {
        self.convention
    }

    /// Stored depth at an integer pixel, if valid.
    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Option<f64> {
        if *self.valid.get(x, y) {
            Some(*self.values.get(x, y))
        } else {
            None
        }
    }

    /// Bilinear sample of the stored depth, honoring validity.
    #[inline]
    pub fn sample(&self, pix: PixelCoord) -> Option<f64> {
        bilinear_sample(&self.values, Some(&self.valid), pix)
    }

    pub(crate) fn ensure_matches(&self, intr: &Intrinsics, what: &'static str) -> Result<()> {
        crate::grid::ensure_dims(&self.values, intr.width, intr.height, what)
    }
}

/// Lattice neighbors with non-zero interpolation weight around a position.
#[derive(Debug, Clone, Copy)]
pub struct BilinearTaps {
    taps: [(usize, f64); 4],
    len: usize,
}

impl BilinearTaps {
    /// `(flat index, weight)` pairs in fixed order: (x0,y0), (x1,y0), (x0,y1), (x1,y1).
    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.taps[..self.len].iter().copied()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }
}

#[inline]
fn split_coord(c: f64) -> (f64, f64) {
    let mut base = c.floor();
    let mut frac = c - base;
    if frac < LATTICE_SNAP {
        frac = 0.0;
    } else if frac > 1.0 - LATTICE_SNAP {
        base += 1.0;
        frac = 0.0;
    }
    (base, frac)
}

/// Interpolation support of `pix` on a `width x height` lattice, or `None`
/// when any contributing neighbor falls outside it.
#[inline]
pub fn bilinear_taps(width: usize, height: usize, pix: PixelCoord) -> Option<BilinearTaps> {
    if !pix.is_finite() {
        return None;
    }
    let (bx, ax) = split_coord(pix.u);
    let (by, ay) = split_coord(pix.v);
    if bx < 0.0 || by < 0.0 {
        return None;
    }
    let (x0, y0) = (bx as usize, by as usize);
    let need_x = if ax > 0.0 { x0 + 1 } else { x0 };
    let need_y = if ay > 0.0 { y0 + 1 } else { y0 };
    if need_x >= width || need_y >= height {
        return None;
    }
    let mut taps = [(0usize, 0.0f64); 4];
    let mut len = 0;
    let mut push = |x: usize, y: usize, w: f64| {
        taps[len] = (y * width + x, w);
        len += 1;
    };
    push(x0, y0, (1.0 - ax) * (1.0 - ay));
    if ax > 0.0 {
        push(x0 + 1, y0, ax * (1.0 - ay));
    }
    if ay > 0.0 {
        push(x0, y0 + 1, (1.0 - ax) * ay);
    }
    if ax > 0.0 && ay > 0.0 {
        push(x0 + 1, y0 + 1, ax * ay);
    }
    Some(BilinearTaps { taps, len })
}

/// Bilinear blend of `values` at `pix`. `None` unless every contributing
/// neighbor is inside the grid and (when a mask is given) valid.
#[inline]
pub fn bilinear_sample(values: &Grid<f64>, valid: Option<&Grid<bool>>, pix: PixelCoord) -> Option<f64> {
    let taps = bilinear_taps(values.width(), values.height(), pix)?;
    let data = values.as_slice();
    let mut acc = 0.0;
    for (idx, w) in taps.iter() {
        if let Some(mask) = valid {
            if !mask.as_slice()[idx] {
                return None;
            }
        }
        acc += w * data[idx];
    }
    Some(acc)
}
