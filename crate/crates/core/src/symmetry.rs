//! Symmetry axis estimation and row-wise reflection.
//!
//! The axis is modelled as a column position per row, `x(y) = a0 + a1 y
//! [+ a2 y^2]`, fitted by least squares to the midpoints between the
//! outermost edge pixels of each row.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::image::EdgeMap;
use crate::lsq::{self, LsqError, Sample};
use crate::ParamError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AxisError {
    #[error("only {rows} rows carry two or more edge pixels, need at least 3")]
    InsufficientBoundary { rows: usize },
    #[error("axis leaves the sanity band [-width, 2 width] at row {row} (x = {x})")]
    OutOfBounds { row: usize, x: f64 },
    #[error(transparent)]
    Lsq(#[from] LsqError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum AxisDegree {
    Linear,
    Quadratic,
}

impl AxisDegree {
    pub fn as_u8(self) -> u8 {
        match self {
            Self::Linear => 1,
            Self::Quadratic => 2,
        }
    }
}

impl TryFrom<u8> for AxisDegree {
    type Error = ParamError;

    fn try_from(v: u8) -> Result<Self, Self::Error> {
        match v {
            1 => Ok(Self::Linear),
            2 => Ok(Self::Quadratic),
            _ => Err(ParamError::new("axis degree", format!("{v} is not 1 or 2"))),
        }
    }
}

impl From<AxisDegree> for u8 {
    fn from(d: AxisDegree) -> u8 {
        d.as_u8()
    }
}

impl fmt::Display for AxisDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.as_u8())
    }
}

/// Fitted symmetry axis with the residual sum of squares of its fit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisModel {
    pub degree: AxisDegree,
    pub a0: f64,
    pub a1: f64,
    pub a2: Option<f64>,
    pub sr: f64,
}

impl AxisModel {
    pub fn vertical(x: f64) -> Self {
        Self::linear(x, 0.0)
    }

    pub fn linear(a0: f64, a1: f64) -> Self {
        Self {
            degree: AxisDegree::Linear,
            a0,
            a1,
            a2: None,
            sr: 0.0,
        }
    }

    pub fn quadratic(a0: f64, a1: f64, a2: f64) -> Self {
        Self {
            degree: AxisDegree::Quadratic,
            a0,
            a1,
            a2: Some(a2),
            sr: 0.0,
        }
    }

    #[inline]
    pub fn evaluate(&self, y: f64) -> f64 {
        self.a0 + self.a1 * y + self.a2.unwrap_or(0.0) * y * y
    }

    /// Axis position at row `y` rounded to the nearest multiple of 0.5.
    #[inline]
    pub fn snapped(&self, y: usize) -> f64 {
        snap(self.evaluate(y as f64))
    }

    /// Pixel column used to draw the axis: `floor(snapped(y))`.
    #[inline]
    pub fn column(&self, y: usize) -> i64 {
        self.snapped(y).floor() as i64
    }

    pub fn check_bounds(&self, width: usize, height: usize) -> Result<(), AxisError> {
        let w = width as f64;
        for row in 0..height {
            let x = self.evaluate(row as f64);
            if !(x >= -w && x <= 2.0 * w) {
                return Err(AxisError::OutOfBounds { row, x });
            }
        }
        Ok(())
    }
}

/// Rounds to the nearest multiple of one half, so `2 * snap(v)` is integral.
#[inline]
pub fn snap(v: f64) -> f64 {
    (2.0 * v).round() / 2.0
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MidpointSample {
    pub row: usize,
    pub midpoint: f64,
}

/// Midpoint between the leftmost and rightmost edge pixel of each row that
/// has at least two edge pixels.
pub fn extract_midpoints(edges: &EdgeMap) -> Result<Vec<MidpointSample>, AxisError> {
    let w = edges.width();
    let samples: Vec<_> = edges
        .bits()
        .chunks_exact(w)
        .enumerate()
        .filter_map(|(row, bits)| {
            let left = bits.iter().position(|&b| b)?;
            let right = bits.iter().rposition(|&b| b)?;
            (right > left).then(|| MidpointSample {
                row,
                midpoint: (left + right) as f64 / 2.0,
            })
        })
        .collect();
    if samples.len() < 3 {
        return Err(AxisError::InsufficientBoundary {
            rows: samples.len(),
        });
    }
    Ok(samples)
}

/// Least-squares axis through the midpoints, with the column as response
/// and the row as regressor.
///
/// The quadratic model is solved on rows rescaled to `[-1, 1]` and mapped
/// back afterwards.
pub fn fit_axis(samples: &[MidpointSample], degree: AxisDegree) -> Result<AxisModel, AxisError> {
    let needed = degree.as_u8() as usize + 1;
    let mut rows: Vec<usize> = samples.iter().map(|s| s.row).collect();
    rows.sort_unstable();
    rows.dedup();
    if rows.len() < needed {
        return Err(LsqError::InsufficientData {
            needed,
            got: rows.len(),
        }
        .into());
    }
    match degree {
        AxisDegree::Linear => {
            let pts: Vec<_> = samples.iter().map(|s| (s.row as f64, s.midpoint)).collect();
            let fit = lsq::fit_line(&pts)?;
            Ok(AxisModel {
                sr: fit.sr,
                ..AxisModel::linear(fit.a0, fit.a1)
            })
        }
        AxisDegree::Quadratic => {
            let (lo, hi) = (rows[0] as f64, *rows.last().unwrap() as f64);
            let center = (lo + hi) / 2.0;
            let scale = ((hi - lo) / 2.0).max(1.0);
            let pts: Vec<_> = samples
                .iter()
                .map(|s| {
                    let t = (s.row as f64 - center) / scale;
                    Sample::plane(t, t * t, s.midpoint)
                })
                .collect();
            let system = lsq::build_normal_system(&pts)?;
            let [b0, b1, b2] = lsq::cramer_solve(&system)?;
            // x = b0 + b1 t + b2 t^2 with t = (y - c) / s
            let a2 = b2 / (scale * scale);
            let a1 = b1 / scale - 2.0 * b2 * center / (scale * scale);
            let a0 = b0 - b1 * center / scale + b2 * center * center / (scale * scale);
            let mut model = AxisModel::quadratic(a0, a1, a2);
            model.sr = samples
                .iter()
                .map(|s| (s.midpoint - model.evaluate(s.row as f64)).powi(2))
                .sum();
            Ok(model)
        }
    }
}

/// Result of mirroring a pixel across the axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reflection {
    Inside { x: usize, y: usize },
    Outside { x: i64, y: usize },
}

impl Reflection {
    pub fn inside(self) -> Option<(usize, usize)> {
        match self {
            Reflection::Inside { x, y } => Some((x, y)),
            Reflection::Outside { .. } => None,
        }
    }
}

/// Horizontal reflection within row `y`: `x' = 2 snap(axis(y)) - x`.
pub fn reflect_across_axis(point: (usize, usize), axis: &AxisModel, width: usize) -> Reflection {
    let (x, y) = point;
    let twice = (2.0 * axis.evaluate(y as f64)).round() as i64;
    let rx = twice - x as i64;
    if rx >= 0 && (rx as usize) < width {
        Reflection::Inside { x: rx as usize, y }
    } else {
        Reflection::Outside { x: rx, y }
    }
}
