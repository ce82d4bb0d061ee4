//! Dense row-major 2-D grids.

use crate::error::{Error, Result};

/// Row-major `height x width` lattice of values.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid<T> {
    width: usize,
    height: usize,
    data: Vec<T>,
}

impl<T> Grid<T> {
    pub fn from_vec(width: usize, height: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "grid payload has {} entries, expected {}x{} = {}",
                data.len(),
                width,
                height,
                width * height
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> &T {
        &self.data[y * self.width + x]
    }

    #[inline]
    pub fn get_mut(&mut self, x: usize, y: usize) -> &mut T {
        &mut self.data[y * self.width + x]
    }

    pub fn as_slice(&self) -> &[T] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [T] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<T> {
        self.data
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, T> {
        self.data.chunks_exact(self.width.max(1))
    }

    pub fn map<U>(&self, f: impl FnMut(&T) -> U) -> Grid<U> {
        Grid {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(f).collect(),
        }
    }

    /// Errors unless `other` has the same dimensions as `self`.
    pub fn ensure_same_dims<U>(&self, other: &Grid<U>, what: &'static str) -> Result<()> {
        ensure_dims(other, self.width, self.height, what)
    }
}

impl<T: Clone> Grid<T> {
    pub fn filled(width: usize, height: usize, value: T) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }
}

impl Grid<bool> {
    pub fn count_true(&self) -> usize {
        self.data.iter().filter(|&&b| b).count()
    }

    /// Fraction of `true` entries over all entries; 0 for an empty grid.
    pub fn fraction_true(&self) -> f64 {
        if self.data.is_empty() {
            0.0
        } else {
            self.count_true() as f64 / self.data.len() as f64
        }
    }
}

pub(crate) fn ensure_dims<U>(grid: &Grid<U>, width: usize, height: usize, what: &'static str) -> Result<()> {
    if grid.width != width || grid.height != height {
        return Err(Error::ShapeMismatch {
            what,
            got_w: grid.width,
            got_h: grid.height,
            want_w: width,
            want_h: height,
        });
    }
    Ok(())
}

/// Per-pixel `k x k` window of values (attention weights, logits, soft
/// targets). Window entries are row-major over offsets `(dx, dy)` in
/// `[-r, r]²`, `r = (k - 1) / 2`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowGrid {
    width: usize,
    height: usize,
    k: usize,
    data: Vec<f64>,
}

impl WindowGrid {
    pub fn filled(width: usize, height: usize, k: usize, value: f64) -> Result<Self> {
        check_window(k)?;
        Ok(Self {
            width,
            height,
            k,
            data: vec![value; width * height * k * k],
        })
    }

    pub fn from_vec(width: usize, height: usize, k: usize, data: Vec<f64>) -> Result<Self> {
        check_window(k)?;
        if data.len() != width * height * k * k {
            return Err(Error::InvalidInput(format!(
                "window grid payload has {} entries, expected {}",
                data.len(),
                width * height * k * k
            )));
        }
        Ok(Self {
            width,
            height,
            k,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn radius(&self) -> i64 {
        (self.k as i64 - 1) / 2
    }

    /// Flat index of offset `(dx, dy)` inside a window.
    #[inline]
    pub fn offset_index(&self, dx: i64, dy: i64) -> usize {
        let r = self.radius();
        ((dy + r) as usize) * self.k + (dx + r) as usize
    }

    #[inline]
    pub fn window(&self, x: usize, y: usize) -> &[f64] {
        let n = self.k * self.k;
        let i = (y * self.width + x) * n;
        &self.data[i..i + n]
    }

    #[inline]
    pub fn window_mut(&mut self, x: usize, y: usize) -> &mut [f64] {
        let n = self.k * self.k;
        let i = (y * self.width + x) * n;
        &mut self.data[i..i + n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

fn check_window(k: usize) -> Result<()> {
    if k % 2 == 0 || k == 0 {
        return Err(Error::InvalidInput(format!("window side must be odd, got {k}")));
    }
    Ok(())
}
