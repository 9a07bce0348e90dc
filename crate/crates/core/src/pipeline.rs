//! End-to-end detection pipeline.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::asymmetry::{self, AsymmetryMap, EdgeCounts, PixelSpacing, TumorReport};
use crate::edge::{self, CannyParams, EdgeError, GradientOperator};
use crate::image::{EdgeMap, GrayImage, PnmImage, RgbImage};
use crate::lsq::LsqError;
use crate::row_symmetry::{self, SymmetryParams};
use crate::symmetry::{self, AxisDegree, AxisError, AxisModel};
use crate::ParamError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub canny: CannyParams,
    pub symmetry: SymmetryParams,
    pub axis_degree: AxisDegree,
    /// Chebyshev radius for reflection matching, in pixels.
    pub tol: usize,
    pub min_area: usize,
    pub spacing: PixelSpacing,
    /// Fraction of the maximum magnitude used to binarize Roberts and
    /// Prewitt fields for edge counting.
    pub edge_threshold: f64,
    /// Run edge detection on the unprocessed gray image.
    pub raw_edges: bool,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            canny: CannyParams::default(),
            symmetry: SymmetryParams::default(),
            axis_degree: AxisDegree::Linear,
            tol: 2,
            min_area: 30,
            spacing: PixelSpacing::default(),
            edge_threshold: 0.1,
            raw_edges: false,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ParamError> {
        self.canny.validate()?;
        self.symmetry.validate()?;
        self.spacing.validate()?;
        if self.min_area == 0 {
            return Err(ParamError::new("min_area", "must be at least 1"));
        }
        if !(self.edge_threshold > 0.0 && self.edge_threshold <= 1.0) {
            return Err(ParamError::new("edge_threshold", "must lie in (0, 1]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Config,
    EdgeDetection,
    Axis,
    CircleFit,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Config => "config",
            Stage::EdgeDetection => "edge detection",
            Stage::Axis => "axis fit",
            Stage::CircleFit => "circle fit",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageError {
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Edge(#[from] EdgeError),
    #[error(transparent)]
    Axis(#[from] AxisError),
    #[error(transparent)]
    Lsq(#[from] LsqError),
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: Stage,
    #[source]
    pub source: StageError,
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> Result<T, PipelineError>;
}

impl<T, E: Into<StageError>> AtStage<T> for Result<T, E> {
    fn at(self, stage: Stage) -> Result<T, PipelineError> {
        self.map_err(|e| PipelineError {
            stage,
            source: e.into(),
        })
    }
}

/// Final report plus every intermediate raster.
#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub report: TumorReport,
    pub overlay: RgbImage,
    pub gray: GrayImage,
    pub homogenized: GrayImage,
    pub edges: EdgeMap,
    pub asymmetry: AsymmetryMap,
}

/// Counts Roberts and Prewitt edges (thresholded) and Canny edges.
pub fn edge_counts(
    image: &GrayImage,
    canny_edges: &EdgeMap,
    threshold: f64,
) -> Result<EdgeCounts, StageError> {
    let count = |op| -> Result<usize, StageError> {
        let field = edge::gradient(image, op)?;
        Ok(edge::count_edges(&edge::threshold_edges(
            &field, threshold,
        )?))
    };
    Ok(EdgeCounts {
        roberts: count(GradientOperator::Roberts)?,
        prewitt: count(GradientOperator::Prewitt)?,
        canny: edge::count_edges(canny_edges),
    })
}

/// Estimates the symmetry axis from an edge map.
pub fn estimate_axis(edges: &EdgeMap, degree: AxisDegree) -> Result<AxisModel, AxisError> {
    let samples = symmetry::extract_midpoints(edges)?;
    let axis = symmetry::fit_axis(&samples, degree)?;
    axis.check_bounds(edges.width(), edges.height())?;
    Ok(axis)
}

/// Gray conversion, row homogenization, Canny, axis fit, reflection
/// matching, region selection, circle fit and area.
pub fn run_pipeline(
    image: &PnmImage,
    config: &PipelineConfig,
) -> Result<PipelineOutput, PipelineError> {
    config.validate().at(Stage::Config)?;
    let gray = image.to_gray();
    let homogenized = row_symmetry::process_image(&gray, &config.symmetry);
    let edge_source = if config.raw_edges {
        &gray
    } else {
        &homogenized
    };

    let edges = edge::canny(edge_source, &config.canny).at(Stage::EdgeDetection)?;
    let counts =
        edge_counts(edge_source, &edges, config.edge_threshold).at(Stage::EdgeDetection)?;

    let axis = estimate_axis(&edges, config.axis_degree).at(Stage::Axis)?;
    let asymmetry = asymmetry::asymmetry_map(&edges, &axis, config.tol);
    let candidates = asymmetry::tumor_candidates(&asymmetry);
    let report = match asymmetry::select_tumor_region(&candidates, config.min_area) {
        None => TumorReport::not_detected(axis, counts),
        Some(region) => {
            let circle = asymmetry::fit_boundary_circle(&region).at(Stage::CircleFit)?;
            let (area_px, area_mm2) =
                asymmetry::compute_area(&region, config.spacing).at(Stage::Config)?;
            TumorReport {
                detected: true,
                region: Some(region),
                circle: Some(circle),
                area_px,
                area_mm2,
                axis,
                edge_counts: counts,
            }
        }
    };
    let overlay = asymmetry::render_overlay(&gray, &report);
    Ok(PipelineOutput {
        report,
        overlay,
        gray,
        homogenized,
        edges,
        asymmetry,
    })
}
