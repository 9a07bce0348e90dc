//! bisym-core: asymmetric region detection in near-bilaterally-symmetric
//! grayscale images.
//!
//! The detection pipeline runs:
//! gray conversion -> row homogenization -> Canny edges -> symmetry axis fit
//! -> reflection matching -> region extraction -> circle fit and area.
//!
//! Every stage is a pure function over immutable values, so images can be
//! processed concurrently without coordination.

pub mod asymmetry;
pub mod edge;
pub mod image;
pub mod lsq;
pub mod phantom;
pub mod pipeline;
pub mod report;
pub mod rng;
pub mod row_symmetry;
pub mod symmetry;

use thiserror::Error;

pub use asymmetry::{
    asymmetry_map, compute_area, connected_components, fit_boundary_circle, render_overlay,
    select_tumor_region, AsymmetryMap, BoundaryCircle, EdgeCounts, PixelSpacing, Region,
    TumorReport,
};
pub use edge::{
    canny, count_edges, gradient, threshold_edges, CannyParams, GradientField, GradientOperator,
};
pub use image::{
    decode_pnm, encode_pnm, quantize_intensity, rgb_to_gray, EdgeMap, GrayImage, Mask, PnmImage,
    RgbImage,
};
pub use lsq::{
    build_normal_system, cramer_solve, determinant, fit_line, residuals, LinearFit, NormalSystem,
    Sample,
};
pub use phantom::{generate_phantom, phantom_suite, GroundTruth, PhantomSpec};
pub use pipeline::{run_pipeline, PipelineConfig, PipelineError, PipelineOutput};
pub use report::{emit_report, parse_report, ReportDocument};
pub use row_symmetry::{process_image, process_row, SymmetryParams};
pub use symmetry::{
    extract_midpoints, fit_axis, reflect_across_axis, AxisDegree, AxisModel, MidpointSample,
};

/// Tool version echoed into reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// An out-of-range configuration value.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("invalid parameter `{name}`: {message}")]
pub struct ParamError {
    pub name: &'static str,
    pub message: String,
}

impl ParamError {
    pub fn new(name: &'static str, message: impl Into<String>) -> Self {
        Self {
            name,
            message: message.into(),
        }
    }
}
