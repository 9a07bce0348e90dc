//! Reflection-based asymmetry scoring and tumor-candidate extraction.
//!
//! Edge pixels whose mirror image across the axis lands near another edge
//! pixel are *weakened*; the rest are *enhanced*. Enhanced pixels are closed,
//! hole-filled and grouped into 8-connected regions. The largest qualifying
//! region is reported together with an algebraic circle fit of its boundary.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::image::{EdgeMap, GrayImage, Mask, RgbImage};
use crate::lsq::{self, LsqError, Sample};
use crate::symmetry::{reflect_across_axis, AxisModel};
use crate::ParamError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EdgeWeight {
    /// A mirrored counterpart exists.
    Weakened,
    Enhanced,
}

/// Per-pixel weights; `None` for non-edge pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AsymmetryMap {
    width: usize,
    height: usize,
    weights: Vec<Option<EdgeWeight>>,
}

impl AsymmetryMap {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn weight(&self, x: usize, y: usize) -> Option<EdgeWeight> {
        self.weights[y * self.width + x]
    }

    pub fn enhanced_count(&self) -> usize {
        self.weights
            .iter()
            .filter(|w| **w == Some(EdgeWeight::Enhanced))
            .count()
    }

    pub fn weakened_count(&self) -> usize {
        self.weights
            .iter()
            .filter(|w| **w == Some(EdgeWeight::Weakened))
            .count()
    }

    pub fn enhanced_mask(&self) -> Mask {
        let bits = self
            .weights
            .iter()
            .map(|w| *w == Some(EdgeWeight::Enhanced))
            .collect();
        Mask::new(self.width, self.height, bits).expect("same dimensions")
    }
}

/// Summed-area table over a mask for constant-time window counts.
struct IntegralMask {
    width: usize,
    sums: Vec<u32>,
}

impl IntegralMask {
    fn new(mask: &Mask) -> Self {
        let (w, h) = (mask.width(), mask.height());
        let mut sums = vec![0u32; (w + 1) * (h + 1)];
        for y in 0..h {
            let mut row = 0;
            for x in 0..w {
                row += mask.get(x, y) as u32;
                sums[(y + 1) * (w + 1) + x + 1] = sums[y * (w + 1) + x + 1] + row;
            }
        }
        Self { width: w, sums }
    }

    /// Set pixels in the inclusive rectangle.
    fn count(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> u32 {
        let s = |x: usize, y: usize| self.sums[y * (self.width + 1) + x];
        s(x1 + 1, y1 + 1) + s(x0, y0) - s(x0, y1 + 1) - s(x1 + 1, y0)
    }
}

/// Classifies every edge pixel by whether an edge pixel exists within
/// Chebyshev distance `tol` of its reflection.
pub fn asymmetry_map(edges: &EdgeMap, axis: &AxisModel, tol: usize) -> AsymmetryMap {
    let (w, h) = (edges.width(), edges.height());
    let integral = IntegralMask::new(edges);
    let weights = edges
        .bits()
        .iter()
        .enumerate()
        .map(|(i, &is_edge)| {
            if !is_edge {
                return None;
            }
            let matched = reflect_across_axis((i % w, i / w), axis, w)
                .inside()
                .is_some_and(|(rx, ry)| {
                    let x0 = rx.saturating_sub(tol);
                    let y0 = ry.saturating_sub(tol);
                    let x1 = (rx + tol).min(w - 1);
                    let y1 = (ry + tol).min(h - 1);
                    integral.count(x0, y0, x1, y1) > 0
                });
            Some(if matched {
                EdgeWeight::Weakened
            } else {
                EdgeWeight::Enhanced
            })
        })
        .collect();
    AsymmetryMap {
        width: w,
        height: h,
        weights,
    }
}

/// 3x3 dilation. Pixels outside the raster count as unset.
pub fn dilate3(mask: &Mask) -> Mask {
    Mask::from_fn(mask.width(), mask.height(), |x, y| {
        (-1..=1).any(|dy| (-1..=1).any(|dx| mask.get_signed(x as i64 + dx, y as i64 + dy)))
    })
}

/// 3x3 erosion. Pixels outside the raster count as set, so that
/// [`close3`] never removes pixels along the border.
pub fn erode3(mask: &Mask) -> Mask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    Mask::from_fn(mask.width(), mask.height(), |x, y| {
        (-1..=1).all(|dy| {
            (-1..=1).all(|dx| {
                let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                nx < 0 || ny < 0 || nx >= w || ny >= h || mask.get(nx as usize, ny as usize)
            })
        })
    })
}

/// One pass of 3x3 morphological closing.
pub fn close3(mask: &Mask) -> Mask {
    erode3(&dilate3(mask))
}

/// Sets every unset pixel that is not 4-connected to the raster border
/// through unset pixels.
pub fn fill_holes(mask: &Mask) -> Mask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    for y in 0..h {
        for x in 0..w {
            if (x == 0 || y == 0 || x == w - 1 || y == h - 1) && !mask.get(x, y) {
                outside[y * w + x] = true;
                queue.push_back((x, y));
            }
        }
    }
    while let Some((x, y)) = queue.pop_front() {
        let neighbors = [
            (x.wrapping_sub(1), y),
            (x + 1, y),
            (x, y.wrapping_sub(1)),
            (x, y + 1),
        ];
        for (nx, ny) in neighbors {
            if nx < w && ny < h && !mask.get(nx, ny) && !outside[ny * w + nx] {
                outside[ny * w + nx] = true;
                queue.push_back((nx, ny));
            }
        }
    }
    Mask::new(w, h, outside.into_iter().map(|o| !o).collect()).expect("same dimensions")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox {
    pub min_x: usize,
    pub max_x: usize,
    pub min_y: usize,
    pub max_y: usize,
}

/// A nonempty pixel set with exact derived statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    /// Pixels in raster order.
    pub pixels: Vec<(usize, usize)>,
    pub area_px: usize,
    pub centroid: (f64, f64),
    pub bbox: BBox,
}

impl Region {
    /// Returns `None` for an empty pixel list.
    pub fn from_pixels(mut pixels: Vec<(usize, usize)>) -> Option<Self> {
        if pixels.is_empty() {
            return None;
        }
        pixels.sort_unstable_by_key(|&(x, y)| (y, x));
        pixels.dedup();
        let n = pixels.len() as f64;
        let (mut sx, mut sy) = (0.0, 0.0);
        let mut bbox = BBox {
            min_x: usize::MAX,
            max_x: 0,
            min_y: usize::MAX,
            max_y: 0,
        };
        for &(x, y) in &pixels {
            sx += x as f64;
            sy += y as f64;
            bbox.min_x = bbox.min_x.min(x);
            bbox.max_x = bbox.max_x.max(x);
            bbox.min_y = bbox.min_y.min(y);
            bbox.max_y = bbox.max_y.max(y);
        }
        Some(Self {
            area_px: pixels.len(),
            centroid: (sx / n, sy / n),
            bbox,
            pixels,
        })
    }

    pub fn to_mask(&self, width: usize, height: usize) -> Mask {
        let mut m = Mask::empty(width, height);
        for &(x, y) in &self.pixels {
            m.set(x, y, true);
        }
        m
    }

    /// Pixels with at least one 4-neighbor outside the region.
    pub fn boundary(&self) -> Vec<(usize, usize)> {
        let set: std::collections::HashSet<(usize, usize)> = self.pixels.iter().copied().collect();
        self.pixels
            .iter()
            .copied()
            .filter(|&(x, y)| {
                x == 0
                    || y == 0
                    || !set.contains(&(x - 1, y))
                    || !set.contains(&(x + 1, y))
                    || !set.contains(&(x, y - 1))
                    || !set.contains(&(x, y + 1))
            })
            .collect()
    }

    fn order_key(&self) -> (std::cmp::Reverse<usize>, usize, usize) {
        (
            std::cmp::Reverse(self.area_px),
            self.bbox.min_y,
            self.bbox.min_x,
        )
    }
}

/// Maximal 8-connected components, largest first; ties broken by the
/// bounding box's top row, then its left column.
pub fn connected_components(mask: &Mask) -> Vec<Region> {
    let (w, h) = (mask.width(), mask.height());
    let mut seen = vec![false; w * h];
    let mut regions = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if seen[start] || !mask.bits()[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut pixels = Vec::new();
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            pixels.push((x, y));
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    let (nx, ny) = (x as i64 + dx, y as i64 + dy);
                    if mask.get_signed(nx, ny) {
                        let j = ny as usize * w + nx as usize;
                        if !seen[j] {
                            seen[j] = true;
                            queue.push_back(j);
                        }
                    }
                }
            }
        }
        regions.extend(Region::from_pixels(pixels));
    }
    regions.sort_by_key(Region::order_key);
    regions
}

/// Enhanced pixels after one 3x3 closing and hole filling, split into
/// 8-connected regions.
pub fn tumor_candidates(map: &AsymmetryMap) -> Vec<Region> {
    connected_components(&fill_holes(&close3(&map.enhanced_mask())))
}

/// Largest region of at least `min_area` pixels.
pub fn select_tumor_region(regions: &[Region], min_area: usize) -> Option<Region> {
    regions
        .iter()
        .filter(|r| r.area_px >= min_area)
        .min_by_key(|r| r.order_key())
        .cloned()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundaryCircle {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

/// Algebraic least-squares circle `x^2 + y^2 = c0 + c1 x + c2 y`.
///
/// Coordinates are shifted to their mean before the normal equations are
/// formed.
pub fn fit_circle(points: &[(f64, f64)]) -> Result<BoundaryCircle, LsqError> {
    if points.len() < 3 {
        return Err(LsqError::InsufficientData {
            needed: 3,
            got: points.len(),
        });
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let samples: Vec<_> = points
        .iter()
        .map(|&(x, y)| {
            let (u, v) = (x - mx, y - my);
            Sample::plane(u, v, u * u + v * v)
        })
        .collect();
    let system = lsq::build_normal_system(&samples)?;
    let [c0, c1, c2] = lsq::cramer_solve(&system)?;
    let r2 = c0 + (c1 * c1 + c2 * c2) / 4.0;
    if !(r2 > 0.0) {
        return Err(LsqError::Singular {
            det: lsq::det3(system.matrix),
            tolerance: lsq::singular_tolerance(&system.matrix),
        });
    }
    Ok(BoundaryCircle {
        cx: mx + c1 / 2.0,
        cy: my + c2 / 2.0,
        r: r2.sqrt(),
    })
}

pub fn fit_boundary_circle(region: &Region) -> Result<BoundaryCircle, LsqError> {
    let pts: Vec<_> = region
        .boundary()
        .into_iter()
        .map(|(x, y)| (x as f64, y as f64))
        .collect();
    fit_circle(&pts)
}

/// Physical pixel size in millimetres.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PixelSpacing {
    pub sx: f64,
    pub sy: f64,
}

impl Default for PixelSpacing {
    fn default() -> Self {
        Self { sx: 1.0, sy: 1.0 }
    }
}

impl PixelSpacing {
    pub fn new(sx: f64, sy: f64) -> Result<Self, ParamError> {
        let s = Self { sx, sy };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.sx > 0.0 && self.sy > 0.0 && self.sx.is_finite() && self.sy.is_finite()) {
            return Err(ParamError::new(
                "spacing",
                format!("components must be positive, got {}x{}", self.sx, self.sy),
            ));
        }
        Ok(())
    }
}

/// `(pixel count, pixel count * sx * sy)`.
pub fn compute_area(region: &Region, spacing: PixelSpacing) -> Result<(usize, f64), ParamError> {
    spacing.validate()?;
    let n = region.pixels.len();
    Ok((n, n as f64 * spacing.sx * spacing.sy))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EdgeCounts {
    pub roberts: usize,
    pub prewitt: usize,
    pub canny: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TumorReport {
    pub detected: bool,
    pub region: Option<Region>,
    pub circle: Option<BoundaryCircle>,
    pub area_px: usize,
    pub area_mm2: f64,
    pub axis: AxisModel,
    pub edge_counts: EdgeCounts,
}

impl TumorReport {
    pub fn not_detected(axis: AxisModel, edge_counts: EdgeCounts) -> Self {
        Self {
            detected: false,
            region: None,
            circle: None,
            area_px: 0,
            area_mm2: 0.0,
            axis,
            edge_counts,
        }
    }
}

pub const AXIS_COLOR: [u8; 3] = [0, 0, 255];
pub const CIRCLE_COLOR: [u8; 3] = [0, 255, 0];

/// Midpoint circle rasterization around the rounded center.
pub fn circle_points(cx: f64, cy: f64, r: f64) -> Vec<(i64, i64)> {
    let (cx, cy, r) = (cx.round() as i64, cy.round() as i64, r.round() as i64);
    let mut pts = Vec::new();
    let (mut x, mut y, mut d) = (r, 0i64, 1 - r);
    while x >= y {
        for (px, py) in [
            (x, y),
            (y, x),
            (-y, x),
            (-x, y),
            (-x, -y),
            (-y, -x),
            (y, -x),
            (x, -y),
        ] {
            pts.push((cx + px, cy + py));
        }
        y += 1;
        if d < 0 {
            d += 2 * y + 1;
        } else {
            x -= 1;
            d += 2 * (y - x) + 1;
        }
    }
    pts.sort_unstable();
    pts.dedup();
    pts
}

/// Gray base, region tinted 50% toward red, fitted circle in green and the
/// axis in blue on top.
pub fn render_overlay(image: &GrayImage, report: &TumorReport) -> RgbImage {
    let mut out = RgbImage::from_gray(image);
    let (w, h) = (image.width(), image.height());
    if let Some(region) = &report.region {
        for &(x, y) in &region.pixels {
            let g = image.get(x, y) as u16;
            let tint = |a: u16, b: u16| (a + b).div_ceil(2) as u8;
            out.set(x, y, [tint(g, 255), tint(g, 0), tint(g, 0)]);
        }
    }
    if let Some(c) = &report.circle {
        for (x, y) in circle_points(c.cx, c.cy, c.r) {
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                out.set(x as usize, y as usize, CIRCLE_COLOR);
            }
        }
    }
    for y in 0..h {
        let x = report.axis.column(y);
        if x >= 0 && (x as usize) < w {
            out.set(x as usize, y, AXIS_COLOR);
        }
    }
    out
}
