//! Page raster loading and binarization.
//!
//! Everything downstream works on [`BinaryImage`], where `true` marks ink.
//! Ink is dark: a pixel is foreground when its intensity is strictly below
//! the threshold.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use image::{DynamicImage, ImageFormat, ImageReader};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RasterError {
    #[error("cannot read {path}: {source}")]
    Unreadable {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("unsupported image format for {path} (expected PGM/PNM or PNG)")]
    UnsupportedFormat { path: String },
    #[error("malformed image data in {path}: {message}")]
    Format { path: String, message: String },
    #[error("image {path} has zero size")]
    EmptyImage { path: String },
    #[error("raster dimensions {width}x{height} do not match {len} samples")]
    DimensionMismatch { width: usize, height: usize, len: usize },
    #[error("cannot write {path}: {message}")]
    Write { path: String, message: String },
}

/// 8-bit intensity raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    pub width: usize,
    pub height: usize,
    pub samples: Vec<u8>,
    pub doc_id: String,
}

impl GrayImage {
    pub fn new(
        width: usize,
        height: usize,
        samples: Vec<u8>,
        doc_id: impl Into<String>,
    ) -> Result<Self, RasterError> {
        if width == 0 || height == 0 || samples.len() != width * height {
            return Err(RasterError::DimensionMismatch {
                width,
                height,
                len: samples.len(),
            });
        }
        Ok(Self {
            width,
            height,
            samples,
            doc_id: doc_id.into(),
        })
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.samples[y * self.width + x]
    }

    /// Intensity-inverted copy (`255 - v`).
    pub fn inverted(&self) -> Self {
        Self {
            samples: self.samples.iter().map(|&v| 255 - v).collect(),
            ..self.clone()
        }
    }
}

/// Row-major ink mask; `true` is foreground.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    pub width: usize,
    pub height: usize,
    pub mask: Vec<bool>,
    pub doc_id: String,
}

impl BinaryImage {
    /// All-background image.
    pub fn blank(width: usize, height: usize, doc_id: impl Into<String>) -> Self {
        Self {
            width,
            height,
            mask: vec![false; width * height],
            doc_id: doc_id.into(),
        }
    }

    pub fn new(
        width: usize,
        height: usize,
        mask: Vec<bool>,
        doc_id: impl Into<String>,
    ) -> Result<Self, RasterError> {
        if mask.len() != width * height {
            return Err(RasterError::DimensionMismatch {
                width,
                height,
                len: mask.len(),
            });
        }
        Ok(Self {
            width,
            height,
            mask,
            doc_id: doc_id.into(),
        })
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> bool {
        self.mask[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, ink: bool) {
        self.mask[y * self.width + x] = ink;
    }

    pub fn foreground_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Renders ink as 0 and background as 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            samples: self.mask.iter().map(|&m| if m { 0 } else { 255 }).collect(),
            doc_id: self.doc_id.clone(),
        }
    }

    /// Copy of the page shifted down by `dy` rows (new rows are background).
    pub fn shifted_down(&self, dy: usize) -> Self {
        let mut out = Self::blank(self.width, self.height + dy, self.doc_id.clone());
        out.mask[dy * self.width..].copy_from_slice(&self.mask);
        out
    }
}

/// Thresholding method.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Binarization {
    #[default]
    Otsu,
    /// Pixels with intensity `< t` become ink.
    Fixed(u8),
}

impl FromStr for Binarization {
    type Err = String;

    /// Parses `otsu` or `fixed:<t>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("otsu") {
            return Ok(Binarization::Otsu);
        }
        if let Some(t) = s.strip_prefix("fixed:") {
            return t
                .trim()
                .parse::<u8>()
                .map(Binarization::Fixed)
                .map_err(|_| format!("invalid fixed threshold `{t}` (expected 0..=255)"));
        }
        Err(format!("unknown binarization `{s}` (expected otsu or fixed:<t>)"))
    }
}

impl TryFrom<String> for Binarization {
    type Error = String;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Binarization> for String {
    fn from(b: Binarization) -> Self {
        b.to_string()
    }
}

impl fmt::Display for Binarization {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Binarization::Otsu => write!(f, "otsu"),
            Binarization::Fixed(t) => write!(f, "fixed:{t}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Binarized {
    pub image: BinaryImage,
    pub threshold: u8,
    /// Set when Otsu found no split (constant image); the mask is then all
    /// background.
    pub degenerate: bool,
}

/// Loads a PGM/PNM or PNG page. Color input is reduced to luminance with
/// weights (0.299, 0.587, 0.114).
pub fn load_document(path: impl AsRef<Path>) -> Result<GrayImage, RasterError> {
    let path = path.as_ref();
    let shown = path.display().to_string();
    let bytes = std::fs::read(path).map_err(|source| RasterError::Unreadable {
        path: shown.clone(),
        source,
    })?;
    let doc_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    decode_document(&bytes, doc_id, &shown)
}

/// Decodes an in-memory image; `origin` only labels errors.
pub fn decode_document(
    bytes: &[u8],
    doc_id: impl Into<String>,
    origin: &str,
) -> Result<GrayImage, RasterError> {
    let format = image::guess_format(bytes).map_err(|_| RasterError::UnsupportedFormat {
        path: origin.to_string(),
    })?;
    if !matches!(format, ImageFormat::Pnm | ImageFormat::Png) {
        return Err(RasterError::UnsupportedFormat {
            path: origin.to_string(),
        });
    }
    if format == ImageFormat::Pnm && pnm_declares_zero_size(bytes) {
        return Err(RasterError::EmptyImage {
            path: origin.to_string(),
        });
    }
    let reader = ImageReader::with_format(std::io::Cursor::new(bytes), format);
    let decoded = reader.decode().map_err(|e| RasterError::Format {
        path: origin.to_string(),
        message: e.to_string(),
    })?;
    if decoded.width() == 0 || decoded.height() == 0 {
        return Err(RasterError::EmptyImage {
            path: origin.to_string(),
        });
    }
    Ok(to_luminance(decoded, doc_id.into()))
}

fn to_luminance(img: DynamicImage, doc_id: String) -> GrayImage {
    let width = img.width() as usize;
    let height = img.height() as usize;
    let samples = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        DynamicImage::ImageLuma16(buf) => buf.pixels().map(|p| (p.0[0] >> 8) as u8).collect(),
        DynamicImage::ImageLumaA8(buf) => buf.pixels().map(|p| p.0[0]).collect(),
        other => other
            .to_rgb8()
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                let y = 0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b);
                y.round().clamp(0.0, 255.0) as u8
            })
            .collect(),
    };
    GrayImage {
        width,
        height,
        samples,
        doc_id,
    }
}

/// Peeks at a PNM header for a zero width or height.
fn pnm_declares_zero_size(bytes: &[u8]) -> bool {
    let text = String::from_utf8_lossy(&bytes[..bytes.len().min(512)]);
    let mut tokens = Vec::new();
    for line in text.lines() {
        let line = line.split('#').next().unwrap_or("");
        tokens.extend(line.split_whitespace().map(str::to_string));
        if tokens.len() >= 3 {
            break;
        }
    }
    matches!(
        (tokens.get(1).and_then(|t| t.parse::<u64>().ok()),
         tokens.get(2).and_then(|t| t.parse::<u64>().ok())),
        (Some(0), _) | (_, Some(0))
    )
}

/// Writes an 8-bit binary PGM (P5).
pub fn write_pgm(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let path = path.as_ref();
    let err = |e: std::io::Error| RasterError::Write {
        path: path.display().to_string(),
        message: e.to_string(),
    };
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(err)?);
    write!(file, "P5\n{} {}\n255\n", img.width, img.height).map_err(err)?;
    file.write_all(&img.samples).map_err(err)?;
    file.flush().map_err(err)
}

/// Writes an 8-bit grayscale PNG.
pub fn write_png(img: &GrayImage, path: impl AsRef<Path>) -> Result<(), RasterError> {
    let path = path.as_ref();
    let buf = image::GrayImage::from_raw(img.width as u32, img.height as u32, img.samples.clone())
        .ok_or(RasterError::DimensionMismatch {
            width: img.width,
            height: img.height,
            len: img.samples.len(),
        })?;
    buf.save_with_format(path, ImageFormat::Png)
        .map_err(|e| RasterError::Write {
            path: path.display().to_string(),
            message: e.to_string(),
        })
}

pub fn binarize(img: &GrayImage, method: Binarization) -> Binarized {
    let (threshold, degenerate) = match method {
        Binarization::Fixed(t) => (t, false),
        Binarization::Otsu => match otsu_threshold(&img.samples) {
            Some(t) => (t, false),
            None => (0, true),
        },
    };
    let mask = img.samples.iter().map(|&v| v < threshold).collect();
    Binarized {
        image: BinaryImage {
            width: img.width,
            height: img.height,
            mask,
            doc_id: img.doc_id.clone(),
        },
        threshold,
        degenerate,
    }
}

/// Otsu threshold over all candidates `t` in `0..=255`, where the dark class
/// is `{v < t}`. Returns `None` when no candidate splits the pixels into two
/// non-empty classes.
///
/// Between-class variance is compared exactly in integers, so an image and
/// its inverse pick complementary splits. Candidates producing the same
/// split form a plateau; the middle of the winning plateau is returned.
pub fn otsu_threshold(samples: &[u8]) -> Option<u8> {
    let mut hist = [0u64; 256];
    for &v in samples {
        hist[v as usize] += 1;
    }
    let total: u64 = samples.len() as u64;
    let sum_all: u128 = hist
        .iter()
        .enumerate()
        .map(|(v, &c)| v as u128 * c as u128)
        .sum();

    // score(t) = (N*S0 - n0*S)^2 / (n0*n1), proportional to the between-class variance.
    let mut best: Option<(u128, u128)> = None;
    let mut best_t = 0usize;
    let mut n0: u64 = 0;
    let mut s0: u128 = 0;
    for t in 1..=255usize {
        n0 += hist[t - 1];
        s0 += (t as u128 - 1) * hist[t - 1] as u128;
        let n1 = total - n0;
        if n0 == 0 || n1 == 0 {
            continue;
        }
        let diff = (total as i128 * s0 as i128 - n0 as i128 * sum_all as i128).unsigned_abs();
        let num = diff * diff;
        let den = n0 as u128 * n1 as u128;
        let better = match best {
            None => true,
            Some((bn, bd)) => wide_mul(num, bd) > wide_mul(bn, den),
        };
        if better {
            best = Some((num, den));
            best_t = t;
        }
    }
    best?;
    // Extend over candidates that yield the same split: no pixel at value t.
    let mut last = best_t;
    while last < 255 && hist[last] == 0 {
        last += 1;
    }
    Some(((best_t + last) / 2) as u8)
}

/// Full 256-bit product of two u128 values as (high, low).
fn wide_mul(a: u128, b: u128) -> (u128, u128) {
    const MASK: u128 = u64::MAX as u128;
    let (a_hi, a_lo) = (a >> 64, a & MASK);
    let (b_hi, b_lo) = (b >> 64, b & MASK);
    let ll = a_lo * b_lo;
    let lh = a_lo * b_hi;
    let hl = a_hi * b_lo;
    let hh = a_hi * b_hi;
    let mid = (ll >> 64) + (lh & MASK) + (hl & MASK);
    let low = (ll & MASK) | (mid << 64);
    let high = hh + (lh >> 64) + (hl >> 64) + (mid >> 64);
    (high, low)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gray(w: usize, h: usize, s: Vec<u8>) -> GrayImage {
        GrayImage::new(w, h, s, "t").unwrap()
    }

    #[test]
    fn white_pgm_decodes_to_single_sample() {
        let img = decode_document(b"P2\n1 1\n255\n255\n", "w", "mem").unwrap();
        assert_eq!((img.width, img.height, img.samples), (1, 1, vec![255]));
    }

    #[test]
    fn pgm_samples_are_row_major() {
        let img = decode_document(b"P5\n2 2\n255\n\x00\xff\xff\x00", "d", "mem").unwrap();
        assert_eq!(img.samples, vec![0, 255, 255, 0]);
    }

    #[test]
    fn truncated_pgm_is_a_format_error() {
        let err = decode_document(b"P5\n4 4\n255\n\x00\x01", "d", "mem").unwrap_err();
        assert!(matches!(err, RasterError::Format { .. }), "{err:?}");
    }

    #[test]
    fn zero_size_and_unknown_format_are_distinct() {
        let err = decode_document(b"P5\n0 3\n255\n", "d", "mem").unwrap_err();
        assert!(matches!(err, RasterError::EmptyImage { .. }), "{err:?}");
        let err = decode_document(b"hello world", "d", "mem").unwrap_err();
        assert!(matches!(err, RasterError::UnsupportedFormat { .. }), "{err:?}");
    }

    #[test]
    fn missing_file_is_unreadable() {
        let err = load_document("/nonexistent/page.pgm").unwrap_err();
        assert!(matches!(err, RasterError::Unreadable { .. }));
    }

    #[test]
    fn color_png_uses_luminance_weights() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.png");
        let buf = image::RgbImage::from_raw(2, 1, vec![255, 0, 0, 0, 0, 255]).unwrap();
        buf.save(&path).unwrap();
        let img = load_document(&path).unwrap();
        assert_eq!(img.doc_id, "c");
        // 0.299*255 = 76.245, 0.114*255 = 29.07
        assert_eq!(img.samples, vec![76, 29]);
    }

    #[test]
    fn all_white_otsu_is_all_background() {
        let b = binarize(&gray(3, 2, vec![255; 6]), Binarization::Otsu);
        assert!(b.degenerate);
        assert_eq!(b.image.foreground_count(), 0);
    }

    #[test]
    fn bimodal_threshold_separates_modes() {
        let mut s = vec![10u8; 50];
        s.extend(vec![200u8; 50]);
        let b = binarize(&gray(10, 10, s), Binarization::Otsu);
        assert!(!b.degenerate);
        assert!(b.threshold > 10 && b.threshold < 200, "t = {}", b.threshold);
        assert!(b.image.mask[..50].iter().all(|&m| m));
        assert!(b.image.mask[50..].iter().all(|&m| !m));
    }

    #[test]
    fn fixed_threshold_compares_directly() {
        let b = binarize(&gray(2, 2, vec![0, 255, 255, 0]), Binarization::Fixed(128));
        assert_eq!(b.image.mask, vec![true, false, false, true]);
    }

    #[test]
    fn otsu_matches_exhaustive_float_scan() {
        // Reference: textbook float formulation, first maximizing t.
        let samples: Vec<u8> = (0..400u32).map(|i| ((i * 37 + i * i) % 251) as u8).collect();
        let n = samples.len() as f64;
        let mut best = (f64::MIN, 0usize);
        for t in 1..=255usize {
            let lo: Vec<f64> = samples.iter().filter(|&&v| (v as usize) < t).map(|&v| v as f64).collect();
            let hi: Vec<f64> = samples.iter().filter(|&&v| (v as usize) >= t).map(|&v| v as f64).collect();
            if lo.is_empty() || hi.is_empty() {
                continue;
            }
            let m0 = lo.iter().sum::<f64>() / lo.len() as f64;
            let m1 = hi.iter().sum::<f64>() / hi.len() as f64;
            let var = (lo.len() as f64 / n) * (hi.len() as f64 / n) * (m0 - m1).powi(2);
            if var > best.0 * (1.0 + 1e-12) {
                best = (var, t);
            }
        }
        let t = otsu_threshold(&samples).unwrap() as usize;
        let split = |t: usize| samples.iter().filter(|&&v| (v as usize) < t).count();
        assert_eq!(split(t), split(best.1));
    }

    #[test]
    fn binarization_parses_cli_form() {
        assert_eq!("otsu".parse::<Binarization>().unwrap(), Binarization::Otsu);
        assert_eq!("fixed:128".parse::<Binarization>().unwrap(), Binarization::Fixed(128));
        assert!("fixed:300".parse::<Binarization>().is_err());
        assert!("sauvola".parse::<Binarization>().is_err());
        let json = serde_json::to_string(&Binarization::Fixed(90)).unwrap();
        assert_eq!(json, "\"fixed:90\"");
        assert_eq!(serde_json::from_str::<Binarization>(&json).unwrap(), Binarization::Fixed(90));
    }

    #[test]
    fn wide_mul_agrees_with_small_products() {
        assert_eq!(wide_mul(3, 5), (0, 15));
        assert_eq!(wide_mul(u128::MAX, 2), (1, u128::MAX - 1));
    }
}
