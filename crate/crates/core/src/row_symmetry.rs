//! Stack-driven row homogenization.
//!
//! Each row starts as a single segment. A segment whose pixels all stay
//! within `mt` of its middle pixel is flooded with the quantized middle
//! intensity; otherwise it is split at the middle and both halves go back on
//! the stack.

use serde::{Deserialize, Serialize};

use crate::image::{GrayImage, Quantizer};
use crate::ParamError;

/// Inclusive column range within a row.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowSegment {
    pub first: usize,
    pub last: usize,
}

impl RowSegment {
    /// `floor((first + last) / 2)`
    #[inline]
    pub fn mid(&self) -> usize {
        (self.first + self.last) / 2
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymmetryParams {
    /// Maximum deviation from the middle pixel before a segment is split.
    /// Zero is accepted and degenerates to per-pixel quantization.
    pub mt: u8,
    pub levels: u32,
}

impl Default for SymmetryParams {
    fn default() -> Self {
        Self { mt: 32, levels: 8 }
    }
}

impl SymmetryParams {
    pub fn new(mt: u8, levels: u32) -> Result<Self, ParamError> {
        let p = Self { mt, levels };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        Quantizer::new(self.levels)?;
        Ok(())
    }

    fn quantizer(&self) -> Quantizer {
        Quantizer::new(self.levels).expect("validated levels")
    }
}

/// Homogenizes `row` in place. Returns the number of segments popped.
pub fn process_row_in_place(row: &mut [u8], mt: u8, quantizer: &Quantizer) -> usize {
    if row.is_empty() {
        return 0;
    }
    let mut stack = vec![RowSegment {
        first: 0,
        last: row.len() - 1,
    }];
    let mut popped = 0;
    while let Some(seg) = stack.pop() {
        popped += 1;
        debug_assert!(seg.first <= seg.last);
        let mid = seg.mid();
        let reference = row[mid];
        let span = &mut row[seg.first..=seg.last];
        let split = seg.first != seg.last && span.iter().any(|&p| p.abs_diff(reference) > mt);
        if split {
            stack.push(RowSegment {
                first: seg.first,
                last: mid,
            });
            stack.push(RowSegment {
                first: mid + 1,
                last: seg.last,
            });
        } else {
            span.fill(quantizer.apply(reference));
        }
    }
    popped
}

pub fn process_row(row: &[u8], params: &SymmetryParams) -> Vec<u8> {
    let mut out = row.to_vec();
    process_row_in_place(&mut out, params.mt, &params.quantizer());
    out
}

/// Applies [`process_row`] to every row independently.
pub fn process_image(image: &GrayImage, params: &SymmetryParams) -> GrayImage {
    let q = params.quantizer();
    let mut out = image.clone();
    for y in 0..out.height() {
        process_row_in_place(out.row_mut(y), params.mt, &q);
    }
    out
}
