use serde::{Deserialize, Serialize};

/// Multi-octave value noise anchored in plane coordinates (meters).
///
/// Octave `k` has lattice spacing `wavelength / 2^k` and weight `persistence^k`.
/// Sampling takes the pixel footprint on the plane and fades out octaves the
/// image cannot resolve, which keeps distant surfaces from aliasing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Texture {
    pub seed: u64,
    /// Mean intensity.
    pub mean: f64,
    /// Peak deviation from the mean when every octave is resolved.
    pub amplitude: f64,
    /// Lattice spacing of the coarsest octave, meters.
    pub wavelength: f64,
    pub octaves: u32,
    pub persistence: f64,
    /// Lattice spacing along the grain divided by the spacing across it; values
    /// above 1 give a streaked, grain-like pattern.
    pub grain: f64,
    /// Direction of the grain in plane coordinates, radians from the u axis.
    pub grain_angle: f64,
}

/// Octaves whose lattice spacing covers fewer pixels than this are dropped.
/// The footprint is taken across the grain, the direction of finest spacing.
const MIN_OCTAVE_PIXELS: f64 = 1.0;
/// Octaves at or above this many pixels contribute fully.
const FULL_OCTAVE_PIXELS: f64 = 2.0;

impl Texture {
    pub fn new(seed: u64, mean: f64, amplitude: f64, wavelength: f64, octaves: u32) -> Self {
        Self {
            seed,
            mean,
            amplitude,
            wavelength,
            octaves,
            persistence: 0.5,
            grain: 1.0,
            grain_angle: 0.0,
        }
    }

    pub fn with_grain(mut self, grain: f64, angle: f64) -> Self {
        self.grain = grain;
        self.grain_angle = angle;
        self
    }

    /// A flat surface with no texture at all.
    pub fn flat(mean: f64) -> Self {
        Self::new(0, mean, 0.0, 1.0, 0)
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Unfiltered intensity at plane coordinates `(u, v)`.
    pub fn sample(&self, u: f64, v: f64) -> f64 {
        self.sample_filtered(u, v, 0.0)
    }

    /// Intensity at `(u, v)` for a pixel covering `footprint` meters of the plane.
    pub fn sample_filtered(&self, u: f64, v: f64, footprint: f64) -> f64 {
        if self.amplitude == 0.0 || self.octaves == 0 {
            return self.mean;
        }
        let (sin, cos) = self.grain_angle.sin_cos();
        // across-grain and along-grain coordinates
        let a = -sin * u + cos * v;
        let b = (cos * u + sin * v) / self.grain;
        let mut sum = 0.0;
        let mut total = 0.0;
        let mut weight = 1.0;
        let mut spacing = self.wavelength;
        for octave in 0..self.octaves {
            total += weight;
            let pixels = if footprint > 0.0 {
                spacing / footprint
            } else {
                f64::INFINITY
            };
            let fade = ((pixels - MIN_OCTAVE_PIXELS) / (FULL_OCTAVE_PIXELS - MIN_OCTAVE_PIXELS)).clamp(0.0, 1.0);
            if fade > 0.0 {
                let seed = self
                    .seed
                    .wrapping_add(u64::from(octave).wrapping_mul(0x632B_E59B_D9B4_E019));
                sum += weight * fade * value_noise(seed, a / spacing, b / spacing);
            }
            weight *= self.persistence;
            spacing *= 0.5;
        }
        self.mean + self.amplitude * sum / total
    }
}

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Lattice value in [-1, 1).
fn lattice(seed: u64, i: i64, j: i64) -> f64 {
    let z = mix(mix(seed.wrapping_add((i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)))
        .wrapping_add((j as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F)));
    (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
}

fn fade(t: f64) -> f64 {
    t * t * t * (t * (t * 6.0 - 15.0) + 10.0)
}

fn value_noise(seed: u64, x: f64, y: f64) -> f64 {
    let (xi, yi) = (x.floor(), y.floor());
    let (i, j) = (xi as i64, yi as i64);
    let (sx, sy) = (fade(x - xi), fade(y - yi));
    let v00 = lattice(seed, i, j);
    let v10 = lattice(seed, i + 1, j);
    let v01 = lattice(seed, i, j + 1);
    let v11 = lattice(seed, i + 1, j + 1);
    let top = v00 + sx * (v10 - v00);
    let bottom = v01 + sx * (v11 - v01);
    top + sy * (bottom - top)
}
