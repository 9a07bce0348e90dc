//! Gradient operators (Roberts, Prewitt, Sobel), the Canny detector and
//! edge counting.
//!
//! All convolutions replicate the border pixels. Gradients follow image
//! coordinates: `gx` grows to the right, `gy` grows downward.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::{EdgeMap, GrayImage, Mask};
use crate::ParamError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EdgeError {
    #[error("{operator} needs at least {min}x{min} pixels, got {width}x{height}")]
    TooSmall {
        operator: &'static str,
        min: usize,
        width: usize,
        height: usize,
    },
    #[error(transparent)]
    Param(#[from] ParamError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientOperator {
    Roberts,
    Prewitt,
    Sobel,
}

impl GradientOperator {
    pub const ALL: [GradientOperator; 3] = [Self::Roberts, Self::Prewitt, Self::Sobel];

    pub fn name(self) -> &'static str {
        match self {
            Self::Roberts => "roberts",
            Self::Prewitt => "prewitt",
            Self::Sobel => "sobel",
        }
    }

    fn min_size(self) -> usize {
        match self {
            Self::Roberts => 2,
            Self::Prewitt | Self::Sobel => 3,
        }
    }
}

impl fmt::Display for GradientOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GradientOperator {
    type Err = ParamError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "roberts" | "robert" => Ok(Self::Roberts),
            "prewitt" => Ok(Self::Prewitt),
            "sobel" => Ok(Self::Sobel),
            other => Err(ParamError::new(
                "operator",
                format!("unknown operator `{other}`"),
            )),
        }
    }
}

/// A real-valued raster used for intermediate results.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn from_gray(image: &GrayImage) -> Self {
        Self {
            width: image.width(),
            height: image.height(),
            data: image.pixels().iter().map(|&v| v as f64).collect(),
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Border-replicating access.
    #[inline]
    fn clamped(&self, x: isize, y: isize) -> f64 {
        let x = x.clamp(0, self.width as isize - 1) as usize;
        let y = y.clamp(0, self.height as isize - 1) as usize;
        self.data[y * self.width + x]
    }
}

/// Per-pixel gradient components with derived magnitude and orientation.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientField {
    pub width: usize,
    pub height: usize,
    pub gx: Vec<f64>,
    pub gy: Vec<f64>,
    pub magnitude: Vec<f64>,
    /// `atan2(gy, gx)` in radians.
    pub orientation: Vec<f64>,
}

impl GradientField {
    fn from_components(width: usize, height: usize, gx: Vec<f64>, gy: Vec<f64>) -> Self {
        let magnitude = gx.iter().zip(&gy).map(|(a, b)| a.hypot(*b)).collect();
        let orientation = gx.iter().zip(&gy).map(|(a, b)| b.atan2(*a)).collect();
        Self {
            width,
            height,
            gx,
            gy,
            magnitude,
            orientation,
        }
    }

    pub fn max_magnitude(&self) -> f64 {
        self.magnitude.iter().copied().fold(0.0, f64::max)
    }
}

fn check_size(op: GradientOperator, width: usize, height: usize) -> Result<(), EdgeError> {
    let min = op.min_size();
    if width < min || height < min {
        return Err(EdgeError::TooSmall {
            operator: op.name(),
            min,
            width,
            height,
        });
    }
    Ok(())
}

/// Applies one of the classic gradient operators to an 8-bit image.
pub fn gradient(image: &GrayImage, operator: GradientOperator) -> Result<GradientField, EdgeError> {
    gradient_of_plane(&Plane::from_gray(image), operator)
}

pub fn gradient_of_plane(
    plane: &Plane,
    operator: GradientOperator,
) -> Result<GradientField, EdgeError> {
    let (w, h) = (plane.width, plane.height);
    check_size(operator, w, h)?;
    let mut gx = Vec::with_capacity(w * h);
    let mut gy = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let p = |dx: isize, dy: isize| plane.clamped(x + dx, y + dy);
            let (a, b) = match operator {
                GradientOperator::Roberts => (p(0, 0) - p(1, 1), p(1, 0) - p(0, 1)),
                GradientOperator::Prewitt => (
                    (p(1, -1) + p(1, 0) + p(1, 1)) - (p(-1, -1) + p(-1, 0) + p(-1, 1)),
                    (p(-1, 1) + p(0, 1) + p(1, 1)) - (p(-1, -1) + p(0, -1) + p(1, -1)),
                ),
                GradientOperator::Sobel => (
                    (p(1, -1) + 2.0 * p(1, 0) + p(1, 1)) - (p(-1, -1) + 2.0 * p(-1, 0) + p(-1, 1)),
                    (p(-1, 1) + 2.0 * p(0, 1) + p(1, 1)) - (p(-1, -1) + 2.0 * p(0, -1) + p(1, -1)),
                ),
            };
            gx.push(a);
            gy.push(b);
        }
    }
    Ok(GradientField::from_components(w, h, gx, gy))
}

/// Marks pixels whose magnitude reaches `t` times the field maximum.
pub fn threshold_edges(field: &GradientField, t: f64) -> Result<EdgeMap, ParamError> {
    if !(t > 0.0 && t <= 1.0) {
        return Err(ParamError::new(
            "threshold",
            format!("{t} is outside (0, 1]"),
        ));
    }
    let max = field.max_magnitude();
    let bits = if max > 0.0 {
        let cut = t * max;
        field.magnitude.iter().map(|&m| m >= cut).collect()
    } else {
        vec![false; field.magnitude.len()]
    };
    Ok(Mask::new(field.width, field.height, bits).expect("field dimensions are valid"))
}

pub fn count_edges(map: &EdgeMap) -> usize {
    map.count()
}

/// Canny parameters. Thresholds are fractions of the maximum Sobel magnitude
/// of the smoothed image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CannyParams {
    pub sigma: f64,
    pub low: f64,
    pub high: f64,
}

impl Default for CannyParams {
    fn default() -> Self {
        Self {
            sigma: 1.4,
            low: 0.1,
            high: 0.3,
        }
    }
}

impl CannyParams {
    pub fn new(sigma: f64, low: f64, high: f64) -> Result<Self, ParamError> {
        let p = Self { sigma, low, high };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(ParamError::new(
                "sigma",
                format!("{} must be positive", self.sigma),
            ));
        }
        if !(self.low > 0.0 && self.low < self.high && self.high <= 1.0) {
            return Err(ParamError::new(
                "canny thresholds",
                format!(
                    "need 0 < low < high <= 1, got low={} high={}",
                    self.low, self.high
                ),
            ));
        }
        Ok(())
    }
}

/// Sampled Gaussian truncated at `ceil(3 sigma)` and normalized to sum 1.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable Gaussian blur with border replication.
pub fn gaussian_smooth(image: &GrayImage, sigma: f64) -> Plane {
    let src = Plane::from_gray(image);
    let kernel = gaussian_kernel(sigma);
    let r = (kernel.len() / 2) as isize;
    let (w, h) = (src.width, src.height);
    let convolve = |plane: &Plane, horizontal: bool| {
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h as isize {
            for x in 0..w as isize {
                let center = plane.clamped(x, y);
                let mut acc = 0.0;
                for (i, kv) in kernel.iter().enumerate() {
                    let o = i as isize - r;
                    let v = if horizontal {
                        plane.clamped(x + o, y)
                    } else {
                        plane.clamped(x, y + o)
                    };
                    acc += kv * (v - center);
                }
                data.push(center + acc);
            }
        }
        Plane {
            width: w,
            height: h,
            data,
        }
    };
    let tmp = convolve(&src, true);
    convolve(&tmp, false)
}

/// Offsets of the neighbor pair along the quantized gradient direction.
/// The first entry precedes the pixel in raster order.
pub fn nms_neighbors(orientation: f64) -> [(isize, isize); 2] {
    let mut deg = orientation.to_degrees();
    if deg < 0.0 {
        deg += 180.0;
    }
    if !(22.5..157.5).contains(&deg) {
        [(-1, 0), (1, 0)]
    } else if deg < 67.5 {
        [(-1, -1), (1, 1)]
    } else if deg < 112.5 {
        [(0, -1), (0, 1)]
    } else {
        [(1, -1), (-1, 1)]
    }
}

/// Thins the magnitude ridge to single pixels across the edge.
///
/// A pixel survives if it exceeds the preceding neighbor and is not exceeded
/// by the following one. Differences below a tiny relative tolerance count as
/// ties, so a symmetric ridge straddling two pixels keeps only the first.
pub fn non_maximum_suppression(field: &GradientField) -> Vec<f64> {
    let (w, h) = (field.width as isize, field.height as isize);
    let eps = 1e-9 * field.max_magnitude();
    let mag = |x: isize, y: isize| {
        let x = x.clamp(0, w - 1);
        let y = y.clamp(0, h - 1);
        field.magnitude[(y * w + x) as usize]
    };
    let mut out = vec![0.0; field.magnitude.len()];
    for y in 0..h {
        for x in 0..w {
            let i = (y * w + x) as usize;
            let m = field.magnitude[i];
            if m <= eps {
                continue;
            }
            let [(bx, by), (ax, ay)] = nms_neighbors(field.orientation[i]);
            let before = mag(x + bx, y + by);
            let after = mag(x + ax, y + ay);
            if m - before > eps && after - m <= eps {
                out[i] = m;
            }
        }
    }
    out
}

/// Double threshold with 8-connected hysteresis.
fn hysteresis(width: usize, height: usize, thinned: &[f64], low: f64, high: f64) -> EdgeMap {
    let mut mask = Mask::empty(width, height);
    let mut queue = VecDeque::new();
    for (i, &m) in thinned.iter().enumerate() {
        if m > 0.0 && m >= high {
            mask.set(i % width, i / width, true);
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % width) as isize, (i / width) as isize);
        for dy in -1..=1isize {
            for dx in -1..=1isize {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= width as isize || ny >= height as isize {
                    continue;
                }
                let j = ny as usize * width + nx as usize;
                let m = thinned[j];
                if m > 0.0 && m >= low && !mask.get(nx as usize, ny as usize) {
                    mask.set(nx as usize, ny as usize, true);
                    queue.push_back(j);
                }
            }
        }
    }
    mask
}

/// Canny detector: Gaussian smoothing, Sobel gradient, non-maximum
/// suppression on four quantized directions, hysteresis.
pub fn canny(image: &GrayImage, params: &CannyParams) -> Result<EdgeMap, EdgeError> {
    params.validate()?;
    check_size(GradientOperator::Sobel, image.width(), image.height())?;
    let smoothed = gaussian_smooth(image, params.sigma);
    let field = gradient_of_plane(&smoothed, GradientOperator::Sobel)?;
    let max = field.max_magnitude();
    if max <= 0.0 {
        return Ok(Mask::empty(image.width(), image.height()));
    }
    let thinned = non_maximum_suppression(&field);
    Ok(hysteresis(
        field.width,
        field.height,
        &thinned,
        params.low * max,
        params.high * max,
    ))
}

/// Sobel field of the Canny-smoothed image, exposed for inspection.
pub fn smoothed_sobel(image: &GrayImage, sigma: f64) -> Result<GradientField, EdgeError> {
    gradient_of_plane(&gaussian_smooth(image, sigma), GradientOperator::Sobel)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn step_image(w: usize, h: usize, at: usize, lo: u8, hi: u8) -> GrayImage {
        GrayImage::from_fn(w, h, |x, _| if x < at { lo } else { hi })
    }

    #[test]
    fn constant_image_has_no_gradient() {
        let img = GrayImage::filled(8, 6, 77);
        for op in GradientOperator::ALL {
            let f = gradient(&img, op).unwrap();
            assert!(f
                .gx
                .iter()
                .chain(&f.gy)
                .chain(&f.magnitude)
                .all(|&v| v == 0.0));
        }
    }

    #[test]
    fn prewitt_on_vertical_step() {
        let img = step_image(8, 6, 4, 0, 255);
        let f = gradient(&img, GradientOperator::Prewitt).unwrap();
        for y in 0..6 {
            for x in 0..8 {
                let i = y * 8 + x;
                let expected = if x == 3 || x == 4 { 765.0 } else { 0.0 };
                assert_eq!(f.gx[i], expected, "gx at ({x},{y})");
                assert_eq!(f.gy[i], 0.0);
            }
        }
    }

    #[test]
    fn too_small_images_are_rejected() {
        let img = GrayImage::filled(2, 2, 0);
        assert!(gradient(&img, GradientOperator::Roberts).is_ok());
        assert!(matches!(
            gradient(&img, GradientOperator::Sobel),
            Err(EdgeError::TooSmall { min: 3, .. })
        ));
        let tiny = GrayImage::filled(1, 5, 0);
        assert!(gradient(&tiny, GradientOperator::Roberts).is_err());
        assert!(canny(&img, &CannyParams::default()).is_err());
    }

    #[test]
    fn rotation_swaps_components_for_3x3_operators() {
        let img = GrayImage::from_fn(7, 5, |x, y| ((x * 37 + y * 91 + x * y * 13) % 256) as u8);
        let rot = img.rotate90();
        for op in [GradientOperator::Prewitt, GradientOperator::Sobel] {
            let a = gradient(&img, op).unwrap();
            let b = gradient(&rot, op).unwrap();
            // rot(x, y) = img(y, h - 1 - x)
            for y in 0..rot.height() {
                for x in 0..rot.width() {
                    let (ox, oy) = (y, img.height() - 1 - x);
                    let ia = oy * img.width() + ox;
                    let ib = y * rot.width() + x;
                    assert_eq!(b.gx[ib].abs(), a.gy[ia].abs());
                    assert_eq!(b.gy[ib].abs(), a.gx[ia].abs());
                }
            }
        }
    }

    #[test]
    fn field_invariants_hold() {
        let img = GrayImage::from_fn(9, 9, |x, y| ((x * x * 7 + y * 29) % 256) as u8);
        for op in GradientOperator::ALL {
            let f = gradient(&img, op).unwrap();
            for i in 0..f.gx.len() {
                assert!((f.magnitude[i] - (f.gx[i].powi(2) + f.gy[i].powi(2)).sqrt()).abs() < 1e-9);
                assert_eq!(f.orientation[i], f.gy[i].atan2(f.gx[i]));
            }
        }
    }

    #[test]
    fn threshold_edges_cases() {
        let zero = gradient(&GrayImage::filled(4, 4, 9), GradientOperator::Sobel).unwrap();
        assert_eq!(threshold_edges(&zero, 0.5).unwrap().count(), 0);
        assert!(threshold_edges(&zero, 0.0).is_err());
        assert!(threshold_edges(&zero, 1.5).is_err());

        let img = GrayImage::from_fn(9, 9, |x, y| if (x, y) == (4, 4) { 255 } else { 0 });
        let f = gradient(&img, GradientOperator::Sobel).unwrap();
        let max = f.magnitude.iter().copied().fold(0.0, f64::max);
        let at_max = threshold_edges(&f, 1.0).unwrap();
        for (i, &m) in f.magnitude.iter().enumerate() {
            assert_eq!(at_max.bits()[i], m == max);
        }
        // brute force scan for t = 0.5
        let half = threshold_edges(&f, 0.5).unwrap();
        for (i, &m) in f.magnitude.iter().enumerate() {
            assert_eq!(half.bits()[i], m >= 0.5 * max);
        }
        assert_eq!(half.count(), 8);
    }

    #[test]
    fn gaussian_kernel_is_normalized() {
        for sigma in [0.5, 1.0, 1.4, 2.3, 4.0] {
            let k = gaussian_kernel(sigma);
            assert_eq!(k.len(), 2 * (3.0 * sigma).ceil() as usize + 1);
            assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let smoothed = gaussian_smooth(&GrayImage::filled(10, 7, 123), 1.4);
        assert!(smoothed.data.iter().all(|&v| (v - 123.0).abs() < 1e-9));
    }

    #[test]
    fn canny_params_validation() {
        assert!(CannyParams::new(1.4, 0.1, 0.3).is_ok());
        assert!(CannyParams::new(0.0, 0.1, 0.3).is_err());
        assert!(CannyParams::new(1.0, 0.3, 0.3).is_err());
        assert!(CannyParams::new(1.0, 0.0, 0.3).is_err());
        assert!(CannyParams::new(1.0, 0.1, 1.2).is_err());
    }

    #[test]
    fn canny_on_constant_is_empty() {
        let e = canny(&GrayImage::filled(16, 16, 200), &CannyParams::default()).unwrap();
        assert_eq!(count_edges(&e), 0);
    }

    #[test]
    fn canny_on_vertical_step_is_one_pixel_wide() {
        for at in [5, 10, 11] {
            let img = step_image(24, 17, at, 30, 220);
            let e = canny(&img, &CannyParams::default()).unwrap();
            assert_eq!(count_edges(&e), 17);
            for y in 0..17 {
                let cols: Vec<usize> = (0..24).filter(|&x| e.get(x, y)).collect();
                assert_eq!(cols, vec![at - 1], "row {y}");
            }
        }
    }

    #[test]
    fn canny_is_subset_of_low_threshold() {
        let img = GrayImage::from_fn(32, 32, |x, y| {
            let d = (x as f64 - 15.0).hypot(y as f64 - 13.0);
            if d < 9.0 {
                180
            } else {
                ((x * 3 + y * 5) % 40) as u8
            }
        });
        let p = CannyParams::default();
        let e = canny(&img, &p).unwrap();
        let f = smoothed_sobel(&img, p.sigma).unwrap();
        let weak = threshold_edges(&f, p.low).unwrap();
        assert!(e.count() > 0);
        assert!(e.is_subset_of(&weak));
    }

    #[test]
    fn count_edges_counts() {
        let mut m = Mask::empty(4, 4);
        assert_eq!(count_edges(&m), 0);
        for i in 0..5 {
            m.set(i % 4, i / 4, true);
        }
        assert_eq!(count_edges(&m), 5);
    }

    #[test]
    fn operator_names_parse() {
        for op in GradientOperator::ALL {
            assert_eq!(op.name().parse::<GradientOperator>().unwrap(), op);
        }
        assert!("laplace".parse::<GradientOperator>().is_err());
    }
}
