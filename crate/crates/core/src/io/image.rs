//! In-memory image with 1 or 3 channels of `f32` samples on an 8-bit scale.

use crate::error::{Error, Result};
use crate::grid::Grid;

#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!("image dims must be positive, got {width}x{height}")));
        }
        if channels != 1 && channels != 3 {
            return Err(Error::InvalidInput(format!("images have 1 or 3 channels, got {channels}")));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidInput(format!(
                "image payload of {} values does not fit {width}x{height}x{channels}",
                data.len()
            )));
        }
        Ok(ImageBuffer {
            width,
            height,
            channels,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, color: &[f32]) -> Result<Self> {
        let data = color.iter().copied().cycle().take(width * height * color.len()).collect();
        ImageBuffer::new(width, height, color.len(), data)
    }

    /// # Panics
    /// On zero dims or a channel count other than 1 or 3.
    pub fn from_fn(width: usize, height: usize, channels: usize, mut f: impl FnMut(usize, usize, usize) -> f32) -> Self {
        let mut data = Vec::with_capacity(width * height * channels);
        for y in 0..height {
            for x in 0..width {
                for c in 0..channels {
                    data.push(f(x, y, c));
                }
            }
        }
        ImageBuffer::new(width, height, channels, data).expect("valid image dims")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    /// Rec. 601 luma; gray images are returned as is.
    pub fn luma(&self) -> Grid<f64> {
        Grid::from_fn(self.width, self.height, |x, y| {
            let p = self.pixel(x, y);
            if self.channels == 1 {
                p[0] as f64
            } else {
                0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
            }
        })
    }

    pub fn from_gray(grid: &Grid<f64>) -> Self {
        let data = grid.as_slice().iter().map(|v| *v as f32).collect();
        ImageBuffer::new(grid.width(), grid.height(), 1, data).expect("grid dims are positive")
    }

    pub fn to_rgb(&self) -> ImageBuffer {
        if self.channels == 3 {
            return self.clone();
        }
        ImageBuffer::from_fn(self.width, self.height, 3, |x, y, _| self.pixel(x, y)[0])
    }
}
