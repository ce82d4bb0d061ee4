use crate::error::Result;
use crate::geometry::PixelCoord;
use crate::grid::Grid;

/// Dense per-pixel displacement `(du, dv)` from a source image into a target
/// image, with validity. Invalid entries always hold NaN.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    du: Grid<f64>,
    dv: Grid<f64>,
    valid: Grid<bool>,
}

impl FlowField {
    /// Entries with non-finite components are marked invalid.
    pub fn new(du: Grid<f64>, dv: Grid<f64>, valid: Grid<bool>) -> Result<Self> {
        du.ensure_same_dims(&dv, "flow v component")?;
        du.ensure_same_dims(&valid, "flow validity")?;
        let (w, h) = du.dims();
        let mut out = Self {
            du,
            dv,
            valid,
        };
        for i in 0..w * h {
            let ok = out.valid.as_slice()[i] && out.du.as_slice()[i].is_finite() && out.dv.as_slice()[i].is_finite();
            out.set_flat(i, ok, out.du.as_slice()[i], out.dv.as_slice()[i]);
        }
        Ok(out)
    }

    /// Field valid wherever both components are finite.
    pub fn from_components(du: Grid<f64>, dv: Grid<f64>) -> Result<Self> {
        let valid = Grid::filled(du.width(), du.height(), true);
        Self::new(du, dv, valid)
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            du: Grid::filled(width, height, 0.0),
            dv: Grid::filled(width, height, 0.0),
            valid: Grid::filled(width, height, true),
        }
    }

    pub fn invalid(width: usize, height: usize) -> Self {
        Self {
            du: Grid::filled(width, height, f64::NAN),
            dv: Grid::filled(width, height, f64::NAN),
            valid: Grid::filled(width, height, false),
        }
    }

    /// Builds a field from a per-pixel closure; `None` marks the pixel invalid.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> Option<(f64, f64)>) -> Self {
        let mut out = Self::invalid(width, height);
        for y in 0..height {
            for x in 0..width {
                if let Some((u, v)) = f(x, y) {
                    out.set(x, y, Some((u, v)));
                }
            }
        }
        out
    }

    pub fn width(&self) -> usize {
        self.du.width()
    }

    pub fn height(&self) -> usize {
        self.du.height()
    }

    pub fn dims(&self) -> (usize, usize) {
        self.du.dims()
    }

    pub fn du(&self) -> &Grid<f64> {
        &self.du
    }

    pub fn dv(&self) -> &Grid<f64> {
        &self.dv
    }

    pub fn valid(&self) -> &Grid<bool> {
        &self.valid
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize) -> Option<(f64, f64)> {
        if *self.valid.get(x, y) {
            Some((*self.du.get(x, y), *self.dv.get(x, y)))
        } else {
            None
        }
    }

    /// Position `(x, y) + flow(x, y)` in the target image.
    #[inline]
    pub fn target(&self, x: usize, y: usize) -> Option<PixelCoord> {
        self.at(x, y)
            .map(|(du, dv)| PixelCoord::new(x as f64 + du, y as f64 + dv))
    }

    pub fn set(&mut self, x: usize, y: usize, value: Option<(f64, f64)>) {
        let i = y * self.width() + x;
        match value {
            Some((u, v)) if u.is_finite() && v.is_finite() => self.set_flat(i, true, u, v),
            _ => self.set_flat(i, false, f64::NAN, f64::NAN),
        }
    }

    fn set_flat(&mut self, i: usize, ok: bool, u: f64, v: f64) {
        self.valid.as_mut_slice()[i] = ok;
        self.du.as_mut_slice()[i] = if ok { u } else { f64::NAN };
        self.dv.as_mut_slice()[i] = if ok { v } else { f64::NAN };
    }

    /// Bitwise equality of validity and of the components at valid pixels.
    pub fn bitwise_eq(&self, other: &FlowField) -> bool {
        self.dims() == other.dims()
            && self.valid == other.valid
            && self
                .du
                .as_slice()
                .iter()
                .zip(other.du.as_slice())
                .chain(self.dv.as_slice().iter().zip(other.dv.as_slice()))
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}
