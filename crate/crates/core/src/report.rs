//! Canonical JSON report.
//!
//! Keys appear in a fixed order and every float is rounded to six
//! significant digits when the document is built, so that
//! `parse_report(emit_report(doc)) == doc`.

use serde::{Deserialize, Serialize};

use crate::asymmetry::{EdgeCounts, TumorReport};
use crate::pipeline::PipelineConfig;

/// Rounds to six significant digits through the decimal representation.
pub fn round_sig6(v: f64) -> f64 {
    if v == 0.0 || !v.is_finite() {
        return v;
    }
    format!("{v:.5e}").parse().expect("formatted float parses")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub sigma: f64,
    pub canny_low: f64,
    pub canny_high: f64,
    pub mt: u8,
    pub quant_levels: u32,
    pub axis_degree: u8,
    pub tol: usize,
    pub min_area: usize,
    pub spacing: [f64; 2],
    pub edge_threshold: f64,
    pub raw_edges: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AxisEcho {
    pub degree: u8,
    pub a0: f64,
    pub a1: f64,
    pub a2: Option<f64>,
    pub sr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CircleEcho {
    pub cx: f64,
    pub cy: f64,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportDocument {
    pub input: String,
    pub version: String,
    pub config: ConfigEcho,
    pub edge_counts: EdgeCounts,
    pub axis: AxisEcho,
    pub detected: bool,
    pub area_px: usize,
    pub area_mm2: f64,
    pub circle: Option<CircleEcho>,
}

impl ReportDocument {
    pub fn new(input: impl Into<String>, config: &PipelineConfig, report: &TumorReport) -> Self {
        let r = round_sig6;
        Self {
            input: input.into(),
            version: crate::VERSION.to_string(),
            config: ConfigEcho {
                sigma: r(config.canny.sigma),
                canny_low: r(config.canny.low),
                canny_high: r(config.canny.high),
                mt: config.symmetry.mt,
                quant_levels: config.symmetry.levels,
                axis_degree: config.axis_degree.as_u8(),
                tol: config.tol,
                min_area: config.min_area,
                spacing: [r(config.spacing.sx), r(config.spacing.sy)],
                edge_threshold: r(config.edge_threshold),
                raw_edges: config.raw_edges,
            },
            edge_counts: report.edge_counts,
            axis: AxisEcho {
                degree: report.axis.degree.as_u8(),
                a0: r(report.axis.a0),
                a1: r(report.axis.a1),
                a2: report.axis.a2.map(r),
                sr: r(report.axis.sr),
            },
            detected: report.detected,
            area_px: report.area_px,
            area_mm2: r(report.area_mm2),
            circle: report.circle.map(|c| CircleEcho {
                cx: r(c.cx),
                cy: r(c.cy),
                r: r(c.r),
            }),
        }
    }
}

/// Pretty-printed JSON in schema order, newline terminated.
pub fn emit_report(doc: &ReportDocument) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(doc).expect("report serializes");
    out.push(b'\n');
    out
}

pub fn parse_report(bytes: &[u8]) -> Result<ReportDocument, serde_json::Error> {
    serde_json::from_slice(bytes)
}
