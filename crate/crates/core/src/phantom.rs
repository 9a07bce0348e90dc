//! Synthetic "brain" phantoms with a planted symmetry axis and an optional
//! one-sided tumor, plus their ground truth.
//!
//! The head is an elliptical skull ring around a textured brain interior.
//! Every intensity is a function of `|x - c(y)|` where `c(y)` is the planted
//! axis snapped to a multiple of one half, so the noise-free phantom without
//! a tumor is exactly mirror-symmetric under row-wise reflection.

use std::f64::consts::TAU;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymmetry::Region;
use crate::image::{GrayImage, Mask};
use crate::rng::Xoshiro256;
use crate::symmetry::snap;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PhantomError {
    #[error("invalid phantom spec: {0}")]
    Invalid(String),
    #[error("tumor pixel ({x}, {y}) lies outside the brain interior")]
    TumorOutsideBrain { x: usize, y: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TumorSpec {
    pub cx: f64,
    pub cy: f64,
    pub radius: f64,
    /// Added to the brain intensity inside the disk.
    pub delta: i32,
    /// Amplitude of concentric rings inside the disk; zero for a smooth blob.
    #[serde(default)]
    pub texture_amplitude: f64,
    #[serde(default = "default_ring_period")]
    pub ring_period: f64,
}

fn default_ring_period() -> f64 {
    8.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhantomSpec {
    pub width: usize,
    pub height: usize,
    pub axis_a0: f64,
    #[serde(default)]
    pub axis_a1: f64,
    /// Row of the skull ellipse center.
    pub center_y: f64,
    /// Outer skull semi-axes `(horizontal, vertical)`.
    pub skull_semi_axes: (f64, f64),
    pub skull_thickness: f64,
    pub background: u8,
    pub brain: u8,
    pub skull: u8,
    #[serde(default)]
    pub texture_amplitude: f64,
    #[serde(default = "default_texture_period")]
    pub texture_period: f64,
    #[serde(default)]
    pub tumor: Option<TumorSpec>,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_texture_period() -> f64 {
    24.0
}

impl PhantomSpec {
    /// A 256x256 head centered on the vertical axis `x = 127.5`.
    pub fn standard() -> Self {
        Self {
            width: 256,
            height: 256,
            axis_a0: 127.5,
            axis_a1: 0.0,
            center_y: 128.0,
            skull_semi_axes: (100.0, 115.0),
            skull_thickness: 8.0,
            background: 16,
            brain: 112,
            skull: 208,
            texture_amplitude: 0.0,
            texture_period: default_texture_period(),
            tumor: None,
            noise_sigma: 0.0,
            seed: 0,
        }
    }

    pub fn without_tumor(&self) -> Self {
        Self {
            tumor: None,
            ..self.clone()
        }
    }

    /// Axis column at row `y`, snapped to a multiple of one half.
    pub fn axis_at(&self, y: usize) -> f64 {
        snap(self.axis_a0 + self.axis_a1 * y as f64)
    }

    fn ellipse_level(&self, x: usize, y: usize, shrink: f64) -> f64 {
        let u = x as f64 - self.axis_at(y);
        let v = y as f64 - self.center_y;
        let (a, b) = (
            self.skull_semi_axes.0 - shrink,
            self.skull_semi_axes.1 - shrink,
        );
        (u / a).powi(2) + (v / b).powi(2)
    }

    pub fn in_brain(&self, x: usize, y: usize) -> bool {
        self.ellipse_level(x, y, self.skull_thickness) <= 1.0
    }

    pub fn in_head(&self, x: usize, y: usize) -> bool {
        self.ellipse_level(x, y, 0.0) <= 1.0
    }

    fn validate(&self) -> Result<(), PhantomError> {
        let bad = |m: &str| Err(PhantomError::Invalid(m.to_string()));
        if self.width == 0 || self.height == 0 {
            return bad("dimensions must be positive");
        }
        let (a, b) = self.skull_semi_axes;
        if !(a > self.skull_thickness && b > self.skull_thickness && self.skull_thickness >= 0.0) {
            return bad("skull semi-axes must exceed the skull thickness");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return bad("noise_sigma must be nonnegative");
        }
        if !(self.texture_period > 0.0) {
            return bad("texture_period must be positive");
        }
        if let Some(t) = &self.tumor {
            if !(t.radius > 0.0 && t.ring_period > 0.0) {
                return bad("tumor radius and ring period must be positive");
            }
        }
        Ok(())
    }

    fn tumor_disk(&self) -> Result<Option<Mask>, PhantomError> {
        let Some(t) = &self.tumor else {
            return Ok(None);
        };
        let mut mask = Mask::empty(self.width, self.height);
        let r2 = t.radius * t.radius;
        let x_lo = (t.cx - t.radius).floor() as i64;
        let x_hi = (t.cx + t.radius).ceil() as i64;
        let y_lo = (t.cy - t.radius).floor() as i64;
        let y_hi = (t.cy + t.radius).ceil() as i64;
        for y in y_lo..=y_hi {
            for x in x_lo..=x_hi {
                let (dx, dy) = (x as f64 - t.cx, y as f64 - t.cy);
                if dx * dx + dy * dy > r2 {
                    continue;
                }
                if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
                    return Err(PhantomError::TumorOutsideBrain {
                        x: x.max(0) as usize,
                        y: y.max(0) as usize,
                    });
                }
                let (ux, uy) = (x as usize, y as usize);
                if !self.in_brain(ux, uy) {
                    return Err(PhantomError::TumorOutsideBrain { x: ux, y: uy });
                }
                mask.set(ux, uy, true);
            }
        }
        Ok(Some(mask))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub axis_a0: f64,
    pub axis_a1: f64,
    pub tumor_mask: Mask,
    pub area_px: usize,
}

impl GroundTruth {
    pub fn tumor_region(&self) -> Option<Region> {
        Region::from_pixels(self.tumor_mask.iter_set().collect())
    }

    pub fn centroid(&self) -> Option<(f64, f64)> {
        self.tumor_region().map(|r| r.centroid)
    }
}

fn clamp_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Renders the phantom and its ground truth. Deterministic for a given spec.
pub fn generate_phantom(spec: &PhantomSpec) -> Result<(GrayImage, GroundTruth), PhantomError> {
    spec.validate()?;
    let tumor_mask = spec.tumor_disk()?;
    let mut values = Vec::with_capacity(spec.width * spec.height);
    for y in 0..spec.height {
        let c = spec.axis_at(y);
        for x in 0..spec.width {
            let v = if spec.in_brain(x, y) {
                let u = (x as f64 - c).abs();
                let w = y as f64 - spec.center_y;
                let k = TAU / spec.texture_period;
                spec.brain as f64 + spec.texture_amplitude * (k * u).cos() * (k * w).cos()
            } else if spec.in_head(x, y) {
                spec.skull as f64
            } else {
                spec.background as f64
            };
            values.push(v);
        }
    }
    if let (Some(t), Some(mask)) = (&spec.tumor, &tumor_mask) {
        for (x, y) in mask.iter_set() {
            let d = (x as f64 - t.cx).hypot(y as f64 - t.cy);
            let rings = t.texture_amplitude * (TAU * (t.radius - d) / t.ring_period).cos();
            values[y * spec.width + x] = spec.brain as f64 + t.delta as f64 + rings;
        }
    }
    let mut rng = Xoshiro256::seed_from_u64(spec.seed);
    let pixels = values
        .into_iter()
        .map(|v| {
            if spec.noise_sigma > 0.0 {
                clamp_u8(v + spec.noise_sigma * rng.next_gaussian())
            } else {
                clamp_u8(v)
            }
        })
        .collect();
    let image = GrayImage::new(spec.width, spec.height, pixels).expect("validated dimensions");
    let tumor_mask = tumor_mask.unwrap_or_else(|| Mask::empty(spec.width, spec.height));
    let truth = GroundTruth {
        axis_a0: spec.axis_a0,
        axis_a1: spec.axis_a1,
        area_px: tumor_mask.count(),
        tumor_mask,
    };
    Ok((image, truth))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Grade {
    High,
    Low,
}

impl fmt::Display for Grade {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Grade::High => "high",
            Grade::Low => "low",
        })
    }
}

/// One fixture of the suite.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteEntry {
    pub name: &'static str,
    pub grade: Grade,
    pub spec: PhantomSpec,
}

/// Version tag of [`phantom_suite`]; bump when any parameter changes.
pub const SUITE_VERSION: u32 = 1;

/// Six 256x256 tumor phantoms: three high grade (radius 22-26 px, ringed
/// texture) and three low grade (radius 9-11 px, smooth). All share a
/// lightly textured, noisy brain with intensities at quantization bin
/// centers.
pub fn phantom_suite() -> Vec<SuiteEntry> {
    let base = PhantomSpec {
        texture_amplitude: 6.0,
        noise_sigma: 14.0,
        ..PhantomSpec::standard()
    };
    let tumor = |cx: f64, cy: f64, radius: f64, texture_amplitude: f64| TumorSpec {
        cx,
        cy,
        radius,
        delta: 64,
        texture_amplitude,
        ring_period: 8.0,
    };
    let entries = [
        ("high_1", Grade::High, tumor(85.0, 100.0, 24.0, 40.0), 101),
        ("high_2", Grade::High, tumor(172.0, 150.0, 22.0, 40.0), 102),
        ("high_3", Grade::High, tumor(88.0, 165.0, 26.0, 40.0), 103),
        ("low_1", Grade::Low, tumor(170.0, 95.0, 10.0, 0.0), 201),
        ("low_2", Grade::Low, tumor(80.0, 140.0, 9.0, 0.0), 202),
        ("low_3", Grade::Low, tumor(162.0, 172.0, 11.0, 0.0), 203),
    ];
    entries
        .into_iter()
        .map(|(name, grade, t, seed)| SuiteEntry {
            name,
            grade,
            spec: PhantomSpec {
                tumor: Some(t),
                seed,
                ..base.clone()
            },
        })
        .collect()
}
