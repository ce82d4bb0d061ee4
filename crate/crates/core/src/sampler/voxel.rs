//! Voxel occupancy and per-camera voxel visibility.

use nalgebra::Vector3;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{project, transform, Intrinsics, Point3, Pose};

#[derive(Debug, Clone, PartialEq)]
pub struct VoxelGrid {
    origin: Vector3<f64>,
    voxel_size: f64,
    dims: [usize; 3],
    occupancy: Vec<bool>,
}

impl VoxelGrid {
    /// An empty grid whose voxel `(0,0,0)` starts at `origin`.
    pub fn new(origin: Vector3<f64>, voxel_size: f64, dims: [usize; 3]) -> Result<Self> {
        if !(voxel_size > 0.0 && voxel_size.is_finite()) {
            return Err(Error::InvalidInput(format!("voxel size must be positive, got {voxel_size}")));
        }
        if dims.contains(&0) || !origin.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid voxel grid dims {dims:?} / origin {origin:?}")));
        }
        let n = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or_else(|| Error::InvalidInput(format!("voxel grid {dims:?} is too large")))?;
        Ok(VoxelGrid {
            origin,
            voxel_size,
            dims,
            occupancy: vec![false; n],
        })
    }

    pub fn origin(&self) -> &Vector3<f64> {
        &self.origin
    }

    pub fn voxel_size(&self) -> f64 {
        self.voxel_size
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn len(&self) -> usize {
        self.occupancy.len()
    }

    pub fn is_empty(&self) -> bool {
        self.occupancy.is_empty()
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        (ijk[2] * self.dims[1] + ijk[1]) * self.dims[0] + ijk[0]
    }

    pub fn coords(&self, index: usize) -> [usize; 3] {
        let [nx, ny, _] = self.dims;
        [index % nx, (index / nx) % ny, index / (nx * ny)]
    }

    pub fn center(&self, index: usize) -> Point3 {
        let c = self.coords(index);
        Point3::from(self.origin + Vector3::new(c[0] as f64 + 0.5, c[1] as f64 + 0.5, c[2] as f64 + 0.5) * self.voxel_size)
    }

    /// Voxel containing `p`, if it lies inside the grid.
    pub fn voxel_of(&self, p: &Point3) -> Option<usize> {
        let g = (p.coords - self.origin) / self.voxel_size;
        let mut ijk = [0usize; 3];
        for a in 0..3 {
            let f = g[a].floor();
            if !(f >= 0.0 && f < self.dims[a] as f64) {
                return None;
            }
            ijk[a] = f as usize;
        }
        Some(self.index(ijk))
    }

    pub fn is_occupied(&self, index: usize) -> bool {
        self.occupancy[index]
    }

    pub fn set_occupied(&mut self, index: usize, value: bool) {
        self.occupancy[index] = value;
    }

    pub fn occupied_count(&self) -> usize {
        self.occupancy.iter().filter(|o| **o).count()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.occupancy.iter().enumerate().filter(|(_, o)| **o).map(|(i, _)| i)
    }

    /// Walks the voxels crossed by the segment from `from` to the center of
    /// `target` and reports whether any occupied voxel lies strictly
    /// between them. The voxel containing `from` is not an occluder.
    pub fn segment_clear(&self, from: &Point3, target: usize) -> bool {
        let s = (from.coords - self.origin) / self.voxel_size;
        let t_ijk = self.coords(target);
        let e = Vector3::new(t_ijk[0] as f64 + 0.5, t_ijk[1] as f64 + 0.5, t_ijk[2] as f64 + 0.5);
        let d = e - s;

        // clip the segment against the grid box
        let mut t0 = 0.0f64;
        for a in 0..3 {
            let hi = self.dims[a] as f64;
            if d[a] == 0.0 {
                if s[a] < 0.0 || s[a] >= hi {
                    return true;
                }
            } else {
                let (ta, tb) = ((0.0 - s[a]) / d[a], (hi - s[a]) / d[a]);
                t0 = t0.max(ta.min(tb));
            }
        }
        let inside_start = t0 == 0.0;
        let q = s + d * t0;
        let mut v = [0i64; 3];
        for a in 0..3 {
            v[a] = (q[a].floor() as i64).clamp(0, self.dims[a] as i64 - 1);
        }

        let mut step = [0i64; 3];
        let mut t_max = [f64::INFINITY; 3];
        let mut t_delta = [f64::INFINITY; 3];
        for a in 0..3 {
            if d[a] > 0.0 {
                step[a] = 1;
                t_max[a] = (v[a] as f64 + 1.0 - s[a]) / d[a];
                t_delta[a] = 1.0 / d[a];
            } else if d[a] < 0.0 {
                step[a] = -1;
                t_max[a] = (v[a] as f64 - s[a]) / d[a];
                t_delta[a] = -1.0 / d[a];
            }
        }

        let target = target as i64;
        let mut first = true;
        loop {
            let idx = (v[2] * self.dims[1] as i64 + v[1]) * self.dims[0] as i64 + v[0];
            if idx == target {
                return true;
            }
            if !(first && inside_start) && self.occupancy[idx as usize] {
                return false;
            }
            first = false;
            let a = (0..3).min_by(|&i, &j| t_max[i].total_cmp(&t_max[j])).unwrap();
            if t_max[a] > 1.0 {
                return true;
            }
            v[a] += step[a];
            if v[a] < 0 || v[a] >= self.dims[a] as i64 {
                return true;
            }
            t_max[a] += t_delta[a];
        }
    }
}

/// Occupies every voxel containing at least one point. The grid starts at
/// the componentwise minimum of the cloud.
pub fn voxelize(points: &[Point3], voxel_size: f64) -> Result<VoxelGrid> {
    if points.is_empty() {
        return Err(Error::InvalidInput("cannot voxelize an empty point cloud".into()));
    }
    if let Some(p) = points.iter().find(|p| !p.coords.iter().all(|v| v.is_finite())) {
        return Err(Error::InvalidInput(format!("non-finite point {p}")));
    }
    let mut lo = points[0].coords;
    let mut hi = lo;
    for p in points {
        lo = lo.inf(&p.coords);
        hi = hi.sup(&p.coords);
    }
    if !(voxel_size > 0.0 && voxel_size.is_finite()) {
        return Err(Error::InvalidInput(format!("voxel size must be positive, got {voxel_size}")));
    }
    let cell = |p: &Vector3<f64>, a: usize| ((p[a] - lo[a]) / voxel_size).floor() as usize;
    let dims = [cell(&hi, 0) + 1, cell(&hi, 1) + 1, cell(&hi, 2) + 1];
    let mut grid = VoxelGrid::new(lo, voxel_size, dims)?;
    for p in points {
        let idx = grid.index([cell(&p.coords, 0), cell(&p.coords, 1), cell(&p.coords, 2)]);
        grid.occupancy[idx] = true;
    }
    Ok(grid)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub pose: Pose,
    pub intrinsics: Intrinsics,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VisibilityOptions {
    /// Voxel centers must have positive depth in the camera.
    pub in_front: bool,
    /// Voxel centers must also project inside the image.
    pub in_image: bool,
}

impl Default for VisibilityOptions {
    fn default() -> Self {
        VisibilityOptions {
            in_front: true,
            in_image: false,
        }
    }
}

/// Per-camera bitsets over voxel indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VisibilityTable {
    voxels: usize,
    bits: Vec<Vec<u64>>,
}

impl VisibilityTable {
    pub fn cameras(&self) -> usize {
        self.bits.len()
    }

    pub fn voxels(&self) -> usize {
        self.voxels
    }

    pub fn is_visible(&self, camera: usize, voxel: usize) -> bool {
        self.bits[camera][voxel / 64] >> (voxel % 64) & 1 == 1
    }

    pub fn count(&self, camera: usize) -> usize {
        self.bits[camera].iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn visible(&self, camera: usize) -> impl Iterator<Item = usize> + '_ {
        let words = &self.bits[camera];
        (0..self.voxels).filter(move |&v| words[v / 64] >> (v % 64) & 1 == 1)
    }

    /// True when every visible voxel of `self` is visible in `other`.
    pub fn is_subset_of(&self, other: &VisibilityTable) -> bool {
        self.voxels == other.voxels
            && self.bits.len() == other.bits.len()
            && self.bits.iter().zip(&other.bits).all(|(a, b)| a.iter().zip(b).all(|(x, y)| x & !y == 0))
    }
}

/// Marks a voxel visible when its center passes the `opts` tests and the
/// segment from the camera center to it crosses no other occupied voxel.
/// Empty voxels get a verdict too, so callers can intersect with occupancy
/// as needed.
pub fn compute_visibility(cameras: &[Camera], grid: &VoxelGrid, opts: VisibilityOptions) -> VisibilityTable {
    let n = grid.len();
    let bits = cameras
        .par_iter()
        .map(|cam| {
            let world_to_cam = cam.pose.inverse();
            let center = cam.pose.center();
            let mut words = vec![0u64; n.div_ceil(64)];
            for v in 0..n {
                let c = grid.center(v);
                if opts.in_front || opts.in_image {
                    let pc = transform(&world_to_cam, &c);
                    if pc.z <= 0.0 {
                        continue;
                    }
                    if opts.in_image {
                        match project(&cam.intrinsics, &pc) {
                            Ok((pix, true)) if pix.in_image(cam.intrinsics.width, cam.intrinsics.height) => {}
                            _ => continue,
                        }
                    }
                }
                if grid.segment_clear(&center, v) {
                    words[v / 64] |= 1 << (v % 64);
                }
            }
            words
        })
        .collect();
    VisibilityTable { voxels: n, bits }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn p(x: f64, y: f64, z: f64) -> Point3 {
        Point3::new(x, y, z)
    }

    fn omni(center: Point3) -> Camera {
        Camera {
            pose: Pose::from_translation(center.coords),
            intrinsics: Intrinsics::new(10.0, 10.0, 5.0, 5.0, 10, 10).unwrap(),
        }
    }

    const OMNI: VisibilityOptions = VisibilityOptions {
        in_front: false,
        in_image: false,
    };

    #[test]
    fn voxelize_examples() {
        let g = voxelize(&[p(1.0, 2.0, 3.0)], 0.25).unwrap();
        assert_eq!(g.dims(), [1, 1, 1]);
        assert_eq!(g.occupied_count(), 1);
        assert_eq!(g.voxel_of(&p(1.0, 2.0, 3.0)), Some(0));

        let g = voxelize(&[p(0.0, 0.0, 0.0), p(2.5, 0.0, 0.0)], 0.25).unwrap();
        let idx: Vec<_> = g.occupied().map(|i| g.coords(i)).collect();
        assert_eq!(idx, vec![[0, 0, 0], [10, 0, 0]]);

        assert!(voxelize(&[], 1.0).is_err());
        assert!(voxelize(&[p(0.0, 0.0, 0.0)], 0.0).is_err());
    }

    #[test]
    fn cube_counting() {
        // 8x8x8 lattice of points at spacing 0.5 inside voxels of size 1
        let mut pts = Vec::new();
        for i in 0..8 {
            for j in 0..8 {
                for k in 0..8 {
                    pts.push(p(0.25 + 0.5 * i as f64, 0.25 + 0.5 * j as f64, 0.25 + 0.5 * k as f64));
                }
            }
        }
        let g = voxelize(&pts, 1.0).unwrap();
        assert_eq!(g.occupied_count(), 4 * 4 * 4);
    }

    #[test]
    fn occluder_blocks() {
        let mut g = VoxelGrid::new(Vector3::zeros(), 1.0, [10, 1, 1]).unwrap();
        g.set_occupied(9, true);
        let cam = [omni(p(-5.0, 0.5, 0.5))];
        let vis = compute_visibility(&cam, &g, OMNI);
        assert!(vis.is_visible(0, 9));
        g.set_occupied(4, true);
        let vis = compute_visibility(&cam, &g, OMNI);
        assert!(!vis.is_visible(0, 9));
        assert!(vis.is_visible(0, 4));
        assert!(vis.is_visible(0, 0));
    }

    #[test]
    fn in_front_test() {
        let g = VoxelGrid::new(Vector3::new(-0.5, -0.5, 2.0), 1.0, [1, 1, 1]).unwrap();
        let fwd = [omni(p(0.0, 0.0, 0.0))];
        assert!(compute_visibility(&fwd, &g, VisibilityOptions::default()).is_visible(0, 0));
        let back = [omni(p(0.0, 0.0, 5.0))];
        assert!(!compute_visibility(&back, &g, VisibilityOptions::default()).is_visible(0, 0));
        assert!(compute_visibility(&back, &g, OMNI).is_visible(0, 0));
    }

    #[test]
    fn mirrored_scene_is_symmetric() {
        let mut g = VoxelGrid::new(Vector3::zeros(), 1.0, [9, 3, 1]).unwrap();
        for i in [1, 7] {
            g.set_occupied(g.index([i, 1, 0]), true);
        }
        let cams = [omni(p(0.5, 1.5, 0.5)), omni(p(8.5, 1.5, 0.5))];
        let vis = compute_visibility(&cams, &g, OMNI);
        for v in 0..g.len() {
            let [x, y, z] = g.coords(v);
            let mirrored = g.index([8 - x, y, z]);
            assert_eq!(vis.is_visible(0, v), vis.is_visible(1, mirrored));
        }
    }

    proptest! {
        #[test]
        fn occupancy_never_adds_visibility(
            occ in proptest::collection::vec(any::<bool>(), 6 * 5 * 4),
            extra in proptest::collection::vec(0usize..120, 1..10),
            cams in proptest::collection::vec((-3.0..9.0f64, -3.0..8.0f64, -3.0..7.0f64), 1..4),
        ) {
            let mut g = VoxelGrid::new(Vector3::zeros(), 1.0, [6, 5, 4]).unwrap();
            for (i, o) in occ.iter().enumerate() {
                g.set_occupied(i, *o && i % 3 == 0);
            }
            let cams: Vec<_> = cams.iter().map(|&(x, y, z)| omni(p(x, y, z))).collect();
            let before = compute_visibility(&cams, &g, OMNI);
            for e in extra {
                g.set_occupied(e, true);
            }
            let after = compute_visibility(&cams, &g, OMNI);
            prop_assert!(after.is_subset_of(&before));
        }
    }
}
