//! Least-squares fitting through the normal equations, solved with
//! Cramer's rule.
//!
//! Two models are supported: the straight line `y = a0 + a1 x` (a 2x2
//! system) and the two-regressor plane `y = a0 + a1 x1 + a2 x2` (a 3x3
//! system). All arithmetic is `f64` with plain left-to-right summation.

use thiserror::Error;

use crate::ParamError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LsqError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientData { needed: usize, got: usize },
    #[error("all regressor values are equal; slope is undetermined")]
    DegenerateRegressor,
    #[error("singular system: |det| = {det:e} is within tolerance {tolerance:e}")]
    Singular { det: f64, tolerance: f64 },
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// One observation. Line fits leave `x2` empty.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub x1: f64,
    pub x2: Option<f64>,
    pub y: f64,
}

impl Sample {
    pub fn line(x: f64, y: f64) -> Self {
        Self { x1: x, x2: None, y }
    }

    pub fn plane(x1: f64, x2: f64, y: f64) -> Self {
        Self {
            x1,
            x2: Some(x2),
            y,
        }
    }
}

/// Fitted coefficients and the minimized sum of squared residuals `sr`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub a0: f64,
    pub a1: f64,
    pub a2: Option<f64>,
    pub sr: f64,
}

impl LinearFit {
    #[inline]
    pub fn predict(&self, x1: f64, x2: f64) -> f64 {
        self.a0 + self.a1 * x1 + self.a2.unwrap_or(0.0) * x2
    }
}

/// Residuals `e_i = y_i - a0 - a1 x1_i [- a2 x2_i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Residuals(pub Vec<f64>);

impl Residuals {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn sum_of_squares(&self) -> f64 {
        self.0.iter().map(|e| e * e).sum()
    }
}

/// Normal equations of the two-regressor model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalSystem {
    pub matrix: [[f64; 3]; 3],
    pub rhs: [f64; 3],
    pub n: usize,
}

pub fn det2(m: [[f64; 2]; 2]) -> f64 {
    m[0][0] * m[1][1] - m[0][1] * m[1][0]
}

/// Cofactor expansion along the first row.
pub fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Determinant of a 2x2 or 3x3 matrix given as rows.
pub fn determinant<R: AsRef<[f64]>>(rows: &[R]) -> Result<f64, LsqError> {
    let n = rows.len();
    if !(n == 2 || n == 3) || rows.iter().any(|r| r.as_ref().len() != n) {
        return Err(ParamError::new(
            "matrix",
            format!("only 2x2 and 3x3 are supported, got {n} rows"),
        )
        .into());
    }
    let r = |i: usize, j: usize| rows[i].as_ref()[j];
    Ok(if n == 2 {
        det2([[r(0, 0), r(0, 1)], [r(1, 0), r(1, 1)]])
    } else {
        det3([
            [r(0, 0), r(0, 1), r(0, 2)],
            [r(1, 0), r(1, 1), r(1, 2)],
            [r(2, 0), r(2, 1), r(2, 2)],
        ])
    })
}

/// Scale-aware singularity bound `1e-10 * max(1, max|a_ij|^3)`.
pub fn singular_tolerance(matrix: &[[f64; 3]; 3]) -> f64 {
    let max = matrix.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    1e-10 * max.powi(3).max(1.0)
}

/// Solves a 3x3 system as ratios of determinants. Column `k` of the matrix
/// is replaced by the right-hand side to form the numerator of unknown `k`.
pub fn cramer3(matrix: [[f64; 3]; 3], rhs: [f64; 3]) -> Result<[f64; 3], LsqError> {
    let d = det3(matrix);
    let tolerance = singular_tolerance(&matrix);
    if !(d.abs() > tolerance) {
        return Err(LsqError::Singular { det: d, tolerance });
    }
    let mut out = [0.0; 3];
    for (k, slot) in out.iter_mut().enumerate() {
        let mut mk = matrix;
        for (row, b) in mk.iter_mut().zip(rhs) {
            row[k] = b;
        }
        *slot = det3(mk) / d;
    }
    Ok(out)
}

/// 2x2 counterpart of [`cramer3`], with the same style of tolerance.
pub fn cramer2(matrix: [[f64; 2]; 2], rhs: [f64; 2]) -> Result<[f64; 2], LsqError> {
    let d = det2(matrix);
    let max = matrix.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = 1e-10 * max.powi(2).max(1.0);
    if !(d.abs() > tolerance) {
        return Err(LsqError::Singular { det: d, tolerance });
    }
    let d0 = det2([[rhs[0], matrix[0][1]], [rhs[1], matrix[1][1]]]);
    let d1 = det2([[matrix[0][0], rhs[0]], [matrix[1][0], rhs[1]]]);
    Ok([d0 / d, d1 / d])
}

pub fn cramer_solve(system: &NormalSystem) -> Result<[f64; 3], LsqError> {
    cramer3(system.matrix, system.rhs)
}

/// Accumulates `[[n, Sx1, Sx2], [Sx1, Sx1^2, Sx1x2], [Sx2, Sx1x2, Sx2^2]]`
/// and `[Sy, Sx1y, Sx2y]`.
pub fn build_normal_system(samples: &[Sample]) -> Result<NormalSystem, LsqError> {
    if samples.len() < 3 {
        return Err(LsqError::InsufficientData {
            needed: 3,
            got: samples.len(),
        });
    }
    let (mut s1, mut s2, mut s11, mut s12, mut s22) = (0.0, 0.0, 0.0, 0.0, 0.0);
    let (mut sy, mut s1y, mut s2y) = (0.0, 0.0, 0.0);
    for s in samples {
        let x2 = s.x2.ok_or_else(|| {
            ParamError::new("samples", "two-regressor system needs x2 on every sample")
        })?;
        s1 += s.x1;
        s2 += x2;
        s11 += s.x1 * s.x1;
        s12 += s.x1 * x2;
        s22 += x2 * x2;
        sy += s.y;
        s1y += s.x1 * s.y;
        s2y += x2 * s.y;
    }
    let n = samples.len() as f64;
    Ok(NormalSystem {
        matrix: [[n, s1, s2], [s1, s11, s12], [s2, s12, s22]],
        rhs: [sy, s1y, s2y],
        n: samples.len(),
    })
}

/// Straight-line fit through the 2x2 normal equations.
pub fn fit_line(points: &[(f64, f64)]) -> Result<LinearFit, LsqError> {
    if points.len() < 2 {
        return Err(LsqError::InsufficientData {
            needed: 2,
            got: points.len(),
        });
    }
    let x0 = points[0].0;
    if points.iter().all(|p| p.0 == x0) {
        return Err(LsqError::DegenerateRegressor);
    }
    let (mut sx, mut sxx, mut sy, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(x, y) in points {
        sx += x;
        sxx += x * x;
        sy += y;
        sxy += x * y;
    }
    let n = points.len() as f64;
    let [a0, a1] = cramer2([[n, sx], [sx, sxx]], [sy, sxy])?;
    let sr = points.iter().map(|&(x, y)| (y - a0 - a1 * x).powi(2)).sum();
    Ok(LinearFit {
        a0,
        a1,
        a2: None,
        sr,
    })
}

/// Two-regressor fit `y = a0 + a1 x1 + a2 x2`.
pub fn fit_plane(samples: &[Sample]) -> Result<LinearFit, LsqError> {
    let system = build_normal_system(samples)?;
    let [a0, a1, a2] = cramer_solve(&system)?;
    let fit = LinearFit {
        a0,
        a1,
        a2: Some(a2),
        sr: 0.0,
    };
    let sr = residuals(&fit, samples)?.sum_of_squares();
    Ok(LinearFit { sr, ..fit })
}

pub fn residuals(fit: &LinearFit, samples: &[Sample]) -> Result<Residuals, LsqError> {
    samples
        .iter()
        .map(|s| match (fit.a2, s.x2) {
            (None, None) => Ok(s.y - fit.a0 - fit.a1 * s.x1),
            (Some(a2), Some(x2)) => Ok(s.y - fit.a0 - fit.a1 * s.x1 - a2 * x2),
            _ => Err(ParamError::new("samples", "regressor arity does not match the fit").into()),
        })
        .collect::<Result<Vec<_>, _>>()
        .map(Residuals)
}
