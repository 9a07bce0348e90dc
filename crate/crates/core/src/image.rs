//! Raster value types, the binary PNM codec (P4/P5/P6), gray conversion
//! and uniform intensity quantization.

use std::fmt;

use thiserror::Error;

use crate::ParamError;

/// Errors produced while building images or decoding PNM streams.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ImageError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyDimensions { width: usize, height: usize },
    #[error("pixel buffer holds {actual} values, expected {expected} for {width}x{height}")]
    BufferSize {
        width: usize,
        height: usize,
        expected: usize,
        actual: usize,
    },
    #[error("unsupported magic number {0:?}, expected P4, P5 or P6")]
    BadMagic(String),
    #[error("malformed PNM header field `{0}`")]
    MalformedHeader(&'static str),
    #[error("unsupported maxval {0}, only 255 is accepted")]
    UnsupportedMaxval(u32),
    #[error("truncated payload: expected {expected} bytes, found {actual}")]
    Truncated { expected: usize, actual: usize },
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<(), ImageError> {
    if width == 0 || height == 0 {
        return Err(ImageError::EmptyDimensions { width, height });
    }
    let expected = width * height;
    if len != expected {
        return Err(ImageError::BufferSize {
            width,
            height,
            expected,
            actual: len,
        });
    }
    Ok(())
}

/// An 8-bit grayscale raster stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self, ImageError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Panics if either dimension is zero.
    pub fn filled(width: usize, height: usize, value: u8) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("nonzero dimensions")
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> u8) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels).expect("nonzero dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u8) {
        self.pixels[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[u8] {
        &self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn row_mut(&mut self, y: usize) -> &mut [u8] {
        &mut self.pixels[y * self.width..(y + 1) * self.width]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, u8> {
        self.pixels.chunks_exact(self.width)
    }

    /// Left-right mirror about the vertical center line.
    pub fn flip_horizontal(&self) -> Self {
        let mut out = self.clone();
        for row in out.pixels.chunks_exact_mut(self.width) {
            row.reverse();
        }
        out
    }

    /// Rotates 90 degrees clockwise.
    pub fn rotate90(&self) -> Self {
        let (w, h) = (self.width, self.height);
        Self::from_fn(h, w, |x, y| self.get(y, h - 1 - x))
    }
}

impl fmt::Debug for GrayImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "GrayImage({}x{})", self.width, self.height)
    }
}

/// An 8-bit RGB raster stored row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        check_dims(width, height, pixels.len())?;
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    /// Replicates a gray image into all three channels.
    pub fn from_gray(gray: &GrayImage) -> Self {
        Self {
            width: gray.width,
            height: gray.height,
            pixels: gray.pixels.iter().map(|&g| [g, g, g]).collect(),
        }
    }
}

impl fmt::Debug for RgbImage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RgbImage({}x{})", self.width, self.height)
    }
}

/// A binary raster. Edge maps, tumor masks and morphology results all use it.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

/// Binary map of detected edge pixels.
pub type EdgeMap = Mask;

impl Mask {
    pub fn new(width: usize, height: usize, bits: Vec<bool>) -> Result<Self, ImageError> {
        check_dims(width, height, bits.len())?;
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    /// Panics if either dimension is zero.
    pub fn empty(width: usize, height: usize) -> Self {
        Self::new(width, height, vec![false; width * height]).expect("nonzero dimensions")
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                bits.push(f(x, y));
            }
        }
        Self::new(width, height, bits).expect("nonzero dimensions")
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.bits[y * self.width + x]
    }

    /// Like [`Mask::get`] but returns `false` outside the raster.
    #[inline]
    pub fn get_signed(&self, x: i64, y: i64) -> bool {
        x >= 0
            && y >= 0
            && (x as usize) < self.width
            && (y as usize) < self.height
            && self.bits[y as usize * self.width + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: bool) {
        self.bits[y * self.width + x] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Set pixels in raster order.
    pub fn iter_set(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let w = self.width;
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(i, _)| (i % w, i / w))
    }

    /// True if every set pixel of `self` is also set in `other`.
    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }
}

impl fmt::Debug for Mask {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "Mask({}x{}, {} set)",
            self.width,
            self.height,
            self.count()
        )
    }
}

/// A decoded PNM raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PnmImage {
    Gray(GrayImage),
    Rgb(RgbImage),
}

impl PnmImage {
    /// Gray images pass through; RGB images go through [`rgb_to_gray`].
    pub fn to_gray(&self) -> GrayImage {
        match self {
            PnmImage::Gray(g) => g.clone(),
            PnmImage::Rgb(c) => rgb_to_gray(c),
        }
    }
}

impl From<GrayImage> for PnmImage {
    fn from(img: GrayImage) -> Self {
        PnmImage::Gray(img)
    }
}

impl From<RgbImage> for PnmImage {
    fn from(img: RgbImage) -> Self {
        PnmImage::Rgb(img)
    }
}

struct HeaderReader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> HeaderReader<'a> {
    fn skip_whitespace_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            let b = self.bytes[self.pos];
            if b == b'#' {
                while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, field: &'static str) -> Result<u32, ImageError> {
        self.skip_whitespace_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::MalformedHeader(field));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or(ImageError::MalformedHeader(field))
    }

    /// Exactly one whitespace byte separates the header from the payload.
    fn payload_start(&mut self, field: &'static str) -> Result<usize, ImageError> {
        match self.bytes.get(self.pos) {
            Some(b) if b.is_ascii_whitespace() => Ok(self.pos + 1),
            _ => Err(ImageError::MalformedHeader(field)),
        }
    }
}

fn read_header(bytes: &[u8]) -> Result<(String, HeaderReader<'_>), ImageError> {
    if bytes.len() < 2 {
        return Err(ImageError::MalformedHeader("magic"));
    }
    let magic = String::from_utf8_lossy(&bytes[..2]).into_owned();
    Ok((magic, HeaderReader { bytes, pos: 2 }))
}

fn payload(bytes: &[u8], start: usize, expected: usize) -> Result<&[u8], ImageError> {
    let actual = bytes.len().saturating_sub(start);
    if actual < expected {
        return Err(ImageError::Truncated { expected, actual });
    }
    Ok(&bytes[start..start + expected])
}

/// Decodes a binary P5 (gray) or P6 (RGB) file with maxval 255.
pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage, ImageError> {
    let (magic, mut rd) = read_header(bytes)?;
    let channels = match magic.as_str() {
        "P5" => 1,
        "P6" => 3,
        _ => return Err(ImageError::BadMagic(magic)),
    };
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    let maxval = rd.number("maxval")?;
    if maxval != 255 {
        return Err(ImageError::UnsupportedMaxval(maxval));
    }
    let start = rd.payload_start("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::EmptyDimensions { width, height });
    }
    let data = payload(bytes, start, width * height * channels)?;
    if channels == 1 {
        Ok(PnmImage::Gray(GrayImage::new(
            width,
            height,
            data.to_vec(),
        )?))
    } else {
        let px = data.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
        Ok(PnmImage::Rgb(RgbImage::new(width, height, px)?))
    }
}

/// Canonical binary encoding: `P5\n<w> <h>\n255\n` or `P6\n...` plus payload.
pub fn encode_pnm(image: &PnmImage) -> Vec<u8> {
    match image {
        PnmImage::Gray(g) => encode_pgm(g),
        PnmImage::Rgb(c) => encode_ppm(c),
    }
}

pub fn encode_pgm(image: &GrayImage) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.extend_from_slice(&image.pixels);
    out
}

pub fn encode_ppm(image: &RgbImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width, image.height).into_bytes();
    out.reserve(image.pixels.len() * 3);
    for px in &image.pixels {
        out.extend_from_slice(px);
    }
    out
}

/// Packed binary PBM (P4). Set pixels are written as 1 (black).
pub fn encode_pbm(mask: &Mask) -> Vec<u8> {
    let mut out = format!("P4\n{} {}\n", mask.width, mask.height).into_bytes();
    let stride = mask.width.div_ceil(8);
    for row in mask.bits.chunks_exact(mask.width) {
        let mut packed = vec![0u8; stride];
        for (x, _) in row.iter().enumerate().filter(|(_, &b)| b) {
            packed[x / 8] |= 0x80 >> (x % 8);
        }
        out.extend_from_slice(&packed);
    }
    out
}

pub fn decode_pbm(bytes: &[u8]) -> Result<Mask, ImageError> {
    let (magic, mut rd) = read_header(bytes)?;
    if magic != "P4" {
        return Err(ImageError::BadMagic(magic));
    }
    let width = rd.number("width")? as usize;
    let height = rd.number("height")? as usize;
    let start = rd.payload_start("height")?;
    if width == 0 || height == 0 {
        return Err(ImageError::EmptyDimensions { width, height });
    }
    let stride = width.div_ceil(8);
    let data = payload(bytes, start, stride * height)?;
    let mut bits = Vec::with_capacity(width * height);
    for row in data.chunks_exact(stride) {
        bits.extend((0..width).map(|x| row[x / 8] & (0x80 >> (x % 8)) != 0));
    }
    Mask::new(width, height, bits)
}

/// BT.601 luma, `round(0.299 R + 0.587 G + 0.114 B)` with ties rounded up.
/// Evaluated in integer thousandths so the rounding is exact.
pub fn rgb_to_gray(image: &RgbImage) -> GrayImage {
    let pixels = image
        .pixels
        .iter()
        .map(|&[r, g, b]| {
            let sum = 299 * r as u32 + 587 * g as u32 + 114 * b as u32;
            ((sum + 500) / 1000) as u8
        })
        .collect();
    GrayImage {
        width: image.width,
        height: image.height,
        pixels,
    }
}

/// Uniform quantizer mapping an intensity to the midpoint of its bin.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Quantizer {
    levels: u32,
    bin_width: u32,
}

impl Quantizer {
    /// `levels` must be a power of two between 1 and 128 so that bins have an
    /// integral midpoint.
    pub fn new(levels: u32) -> Result<Self, ParamError> {
        if levels == 0 || 256 % levels != 0 || levels > 128 {
            return Err(ParamError::new(
                "levels",
                format!("{levels} must divide 256 and be at most 128"),
            ));
        }
        Ok(Self {
            levels,
            bin_width: 256 / levels,
        })
    }

    pub fn levels(&self) -> u32 {
        self.levels
    }

    pub fn bin_width(&self) -> u32 {
        self.bin_width
    }

    #[inline]
    pub fn apply(&self, v: u8) -> u8 {
        let w = self.bin_width;
        (w * (v as u32 / w) + w / 2) as u8
    }

    /// All representatives in increasing order.
    pub fn representatives(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.levels).map(|k| (k * self.bin_width + self.bin_width / 2) as u8)
    }
}

pub fn quantize_intensity(v: u8, levels: u32) -> Result<u8, ParamError> {
    Ok(Quantizer::new(levels)?.apply(v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn decode_minimal_p5() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0, 64, 128, 255]);
        let img = decode_pnm(&bytes).unwrap();
        let PnmImage::Gray(g) = img else {
            panic!("expected gray")
        };
        assert_eq!((g.width(), g.height()), (2, 2));
        assert_eq!(g.pixels(), &[0, 64, 128, 255]);
    }

    #[test]
    fn decode_skips_comments() {
        let mut bytes = b"P5\n# made by hand\n2 1\n# another\n255\n".to_vec();
        bytes.extend_from_slice(&[7, 9]);
        assert_eq!(
            decode_pnm(&bytes).unwrap(),
            PnmImage::Gray(GrayImage::new(2, 1, vec![7, 9]).unwrap())
        );
    }

    #[test]
    fn truncated_payload() {
        let mut bytes = b"P5 2 2 255\n".to_vec();
        bytes.extend_from_slice(&[0, 64, 128]);
        assert_eq!(
            decode_pnm(&bytes),
            Err(ImageError::Truncated {
                expected: 4,
                actual: 3
            })
        );
    }

    #[test]
    fn header_errors_name_the_field() {
        assert_eq!(
            decode_pnm(b"P5 2 2 65535\n\0\0"),
            Err(ImageError::UnsupportedMaxval(65535))
        );
        assert_eq!(
            decode_pnm(b"P5 x 2 255\n"),
            Err(ImageError::MalformedHeader("width"))
        );
        assert_eq!(
            decode_pnm(b"P5 2 2"),
            Err(ImageError::MalformedHeader("maxval"))
        );
        assert!(matches!(
            decode_pnm(b"P3 1 1 255\n0"),
            Err(ImageError::BadMagic(_))
        ));
        assert!(matches!(
            decode_pnm(b"P5 0 2 255\n"),
            Err(ImageError::EmptyDimensions { .. })
        ));
    }

    #[test]
    fn canonical_encodings() {
        let g = GrayImage::new(1, 1, vec![0]).unwrap();
        assert_eq!(encode_pgm(&g), b"P5\n1 1\n255\n\0");
        let c = RgbImage::new(2, 1, vec![[1, 2, 3], [4, 5, 6]]).unwrap();
        assert_eq!(encode_ppm(&c), b"P6\n2 1\n255\n\x01\x02\x03\x04\x05\x06");
    }

    #[test]
    fn pbm_packs_rows_msb_first() {
        let m = Mask::from_fn(10, 2, |x, y| x == 0 || (y == 1 && x == 9));
        let enc = encode_pbm(&m);
        assert_eq!(enc, b"P4\n10 2\n\x80\x00\x80\x40");
        assert_eq!(decode_pbm(&enc).unwrap(), m);
    }

    #[test]
    fn gray_conversion_examples() {
        let img = RgbImage::new(3, 1, vec![[255, 255, 255], [0, 0, 0], [255, 0, 0]]).unwrap();
        // 0.299 * 255 = 76.245
        assert_eq!(rgb_to_gray(&img).pixels(), &[255, 0, 76]);
    }

    #[test]
    fn quantize_examples() {
        assert_eq!(quantize_intensity(0, 8).unwrap(), 16);
        assert_eq!(quantize_intensity(100, 8).unwrap(), 112);
        assert_eq!(quantize_intensity(255, 8).unwrap(), 240);
        assert!(quantize_intensity(10, 3).is_err());
        assert!(quantize_intensity(10, 0).is_err());
    }

    #[test]
    fn quantizer_alphabet_is_exactly_levels_wide() {
        for levels in [1, 2, 4, 8, 16, 32, 64, 128] {
            let q = Quantizer::new(levels).unwrap();
            let mut prev = 0;
            let mut outputs: Vec<u8> = (0..=255u8).map(|v| q.apply(v)).collect();
            for &o in &outputs {
                assert!(o >= prev, "monotone");
                prev = o;
            }
            outputs.dedup();
            assert_eq!(outputs.len(), levels as usize);
            assert_eq!(outputs, q.representatives().collect::<Vec<_>>());
        }
    }

    #[test]
    fn gray_triples_are_fixed_points() {
        let px = (0..=255u8).map(|g| [g, g, g]).collect();
        let img = RgbImage::new(256, 1, px).unwrap();
        let expected: Vec<u8> = (0..=255).collect();
        assert_eq!(rgb_to_gray(&img).pixels(), expected.as_slice());
    }

    #[test]
    fn rotate_and_flip() {
        let img = GrayImage::new(3, 2, vec![1, 2, 3, 4, 5, 6]).unwrap();
        assert_eq!(img.flip_horizontal().pixels(), &[3, 2, 1, 6, 5, 4]);
        let r = img.rotate90();
        assert_eq!((r.width(), r.height()), (2, 3));
        assert_eq!(r.pixels(), &[4, 1, 5, 2, 6, 3]);
    }

    fn gray_image() -> impl Strategy<Value = GrayImage> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<u8>(), w * h)
                .prop_map(move |px| GrayImage::new(w, h, px).unwrap())
        })
    }

    fn rgb_image() -> impl Strategy<Value = RgbImage> {
        (1usize..12, 1usize..12).prop_flat_map(|(w, h)| {
            proptest::collection::vec(any::<[u8; 3]>(), w * h)
                .prop_map(move |px| RgbImage::new(w, h, px).unwrap())
        })
    }

    proptest! {
        #[test]
        fn quantize_is_idempotent(v in any::<u8>(), exp in 0u32..8) {
            let q = Quantizer::new(1 << exp).unwrap();
            prop_assert_eq!(q.apply(q.apply(v)), q.apply(v));
        }

        #[test]
        fn pgm_roundtrip(img in gray_image()) {
            let bytes = encode_pgm(&img);
            prop_assert_eq!(decode_pnm(&bytes).unwrap(), PnmImage::Gray(img));
            prop_assert_eq!(encode_pnm(&decode_pnm(&bytes).unwrap()), bytes);
        }

        #[test]
        fn ppm_roundtrip(img in rgb_image()) {
            let bytes = encode_ppm(&img);
            prop_assert_eq!(decode_pnm(&bytes).unwrap(), PnmImage::Rgb(img));
        }
    }
}
