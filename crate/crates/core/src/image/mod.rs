//! Grayscale image primitives: sampling, gradients, FAST tests, keypoint
//! selection, pyramids and pyramidal Lucas-Kanade tracking.

mod fast;
mod gradient;
mod keypoints;
mod lk;
pub mod pgm;
mod pyramid;

pub use fast::{fast12_pretest, fast9_score, is_fast9_corner, FastResult, CIRCLE_OFFSETS};
pub use gradient::{gradient_at, gradient_unchecked};
pub use keypoints::{select_keypoints, SelectionConfig, SelectionMode};
pub use lk::{lk_track, TrackStatus, TrackedPoint, TrackerConfig};
pub use pyramid::Pyramid;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("pixel ({x}, {y}) is too close to the image border (margin {margin})")]
    OutOfBounds { x: f64, y: f64, margin: u32 },
    #[error("buffer holds {actual} intensities, expected {expected}")]
    SizeMismatch { expected: usize, actual: usize },
    #[error("pyramid sizes differ: {0:?} vs {1:?}")]
    PyramidMismatch((u32, u32), (u32, u32)),
    #[error("invalid tracker configuration: {0}")]
    Config(&'static str),
}

/// Row-major 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ImageGray {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl ImageGray {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Result<Self, ImageError> {
        let expected = width as usize * height as usize;
        if data.len() != expected {
            return Err(ImageError::SizeMismatch {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { width, height, data })
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Self {
        Self {
            width,
            height,
            data: vec![value; width as usize * height as usize],
        }
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Self {
        let mut data = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    pub fn as_raw(&self) -> &[u8] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.data[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, v: u8) {
        let w = self.width as usize;
        self.data[y as usize * w + x as usize] = v;
    }

    /// Bilinear interpolation; coordinates are clamped to the image.
    #[inline]
    pub fn sample(&self, x: f64, y: f64) -> f64 {
        let max_x = f64::from(self.width - 1);
        let max_y = f64::from(self.height - 1);
        let x = x.clamp(0.0, max_x);
        let y = y.clamp(0.0, max_y);
        let x0 = x.floor();
        let y0 = y.floor();
        let fx = x - x0;
        let fy = y - y0;
        let (x0, y0) = (x0 as usize, y0 as usize);
        let x1 = (x0 + 1).min(self.width as usize - 1);
        let y1 = (y0 + 1).min(self.height as usize - 1);
        let w = self.width as usize;
        let p = |xx: usize, yy: usize| f64::from(self.data[yy * w + xx]);
        let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
        let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
        top * (1.0 - fy) + bottom * fy
    }

    pub fn mean(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.data.iter().map(|&v| f64::from(v)).sum::<f64>() / self.data.len() as f64
    }

    pub fn std_dev(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        let m = self.mean();
        let var = self.data.iter().map(|&v| (f64::from(v) - m).powi(2)).sum::<f64>() / self.data.len() as f64;
        var.sqrt()
    }

    /// True when the integer pixel has at least `margin` pixels on every side.
    pub fn is_inside(&self, x: i64, y: i64, margin: u32) -> bool {
        let m = i64::from(margin);
        x >= m && y >= m && x < i64::from(self.width) - m && y < i64::from(self.height) - m
    }
}
