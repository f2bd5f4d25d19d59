//! Typographic coding of a binary page.
//!
//! Lines come from the horizontal projection profile, letters from
//! 8-connected components inside each line strip. Each letter's bounding box
//! is compared with the line's x-height band and mapped to one of four codes:
//! base (0), ascender (1), descender (2) or full (3).

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::BinaryImage;

#[derive(Debug, Error, PartialEq)]
pub enum CoderError {
    #[error("min_gap must be at least 1")]
    MinGap,
    #[error("min_ink must be at least 1")]
    MinInk,
    #[error("tau must lie in (0, 0.5], got {0}")]
    Tau(f64),
    #[error("reference band needs at least one blob")]
    NoBlobs,
    #[error("row span {top}..={bottom} lies outside an image of height {height}")]
    SpanOutOfRange {
        top: usize,
        bottom: usize,
        height: usize,
    },
    #[error("code {0} is outside the alphabet 0..=3")]
    InvalidCode(u8),
}

/// Inclusive range of pixel rows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowSpan {
    pub top: usize,
    pub bottom: usize,
}

impl RowSpan {
    pub fn new(top: usize, bottom: usize) -> Self {
        debug_assert!(top <= bottom);
        Self { top, bottom }
    }

    pub fn rows(&self) -> usize {
        self.bottom - self.top + 1
    }
}

/// Bounding box of one connected component, inclusive pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Blob {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Blob {
    pub fn new(x0: usize, y0: usize, x1: usize, y1: usize) -> Self {
        debug_assert!(x0 <= x1 && y0 <= y1);
        Self { x0, y0, x1, y1 }
    }

    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    pub fn area(&self) -> usize {
        self.width() * self.height()
    }

    pub fn center(&self) -> (f64, f64) {
        (
            (self.x0 + self.x1) as f64 / 2.0,
            (self.y0 + self.y1) as f64 / 2.0,
        )
    }
}

/// The x-height band of a line and its central reference line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceBand {
    pub center: f64,
    pub top: f64,
    pub bottom: f64,
}

impl ReferenceBand {
    pub fn new(top: f64, bottom: f64) -> Self {
        Self {
            center: (top + bottom) / 2.0,
            top,
            bottom,
        }
    }

    pub fn height(&self) -> f64 {
        self.bottom - self.top
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[repr(u8)]
pub enum LetterClass {
    Base = 0,
    Ascender = 1,
    Descender = 2,
    Full = 3,
}

impl LetterClass {
    pub const ALL: [LetterClass; 4] = [
        LetterClass::Base,
        LetterClass::Ascender,
        LetterClass::Descender,
        LetterClass::Full,
    ];

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Result<Self, CoderError> {
        match code {
            0 => Ok(LetterClass::Base),
            1 => Ok(LetterClass::Ascender),
            2 => Ok(LetterClass::Descender),
            3 => Ok(LetterClass::Full),
            other => Err(CoderError::InvalidCode(other)),
        }
    }

    pub fn rises(self) -> bool {
        matches!(self, LetterClass::Ascender | LetterClass::Full)
    }

    pub fn drops(self) -> bool {
        matches!(self, LetterClass::Descender | LetterClass::Full)
    }
}

/// A document as a sequence over {0,1,2,3}, read line by line.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CodedText {
    pub doc_id: String,
    pub codes: Vec<u8>,
}

impl CodedText {
    pub fn new(doc_id: impl Into<String>, codes: Vec<u8>) -> Result<Self, CoderError> {
        if let Some(&bad) = codes.iter().find(|&&c| c > 3) {
            return Err(CoderError::InvalidCode(bad));
        }
        Ok(Self {
            doc_id: doc_id.into(),
            codes,
        })
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    /// Plain digit string, e.g. `"0102"`.
    pub fn to_digits(&self) -> String {
        self.codes.iter().map(|&c| char::from(b'0' + c)).collect()
    }

    pub fn from_digits(doc_id: impl Into<String>, digits: &str) -> Result<Self, CoderError> {
        let codes = digits
            .trim()
            .bytes()
            .map(|b| b.wrapping_sub(b'0'))
            .collect();
        Self::new(doc_id, codes)
    }
}

impl fmt::Display for CodedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_digits())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TextLine {
    pub span: RowSpan,
    pub band: ReferenceBand,
    /// Sorted by left edge.
    pub blobs: Vec<Blob>,
    pub classes: Vec<LetterClass>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoderParams {
    /// Fraction of the band height a box must overshoot to count as
    /// rising or dropping.
    pub tau: f64,
    /// Background gaps shorter than this many rows are bridged.
    pub min_gap: usize,
    /// Rows with fewer ink pixels than this count as background.
    pub min_ink: usize,
    /// Components with a smaller bounding-box area are dropped as specks.
    pub min_area: usize,
}

impl Default for CoderParams {
    fn default() -> Self {
        Self {
            tau: 0.25,
            min_gap: 2,
            min_ink: 1,
            min_area: 4,
        }
    }
}

impl CoderParams {
    pub fn validate(&self) -> Result<(), CoderError> {
        if !(self.tau > 0.0 && self.tau <= 0.5) {
            return Err(CoderError::Tau(self.tau));
        }
        if self.min_gap == 0 {
            return Err(CoderError::MinGap);
        }
        if self.min_ink == 0 {
            return Err(CoderError::MinInk);
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncodedPage {
    pub coded: CodedText,
    pub lines: Vec<TextLine>,
    /// Components dropped by the `min_area` filter.
    pub discarded: usize,
}

pub fn horizontal_projection(img: &BinaryImage) -> Vec<usize> {
    if img.width == 0 {
        return vec![0; img.height];
    }
    img.mask
        .chunks(img.width)
        .map(|row| row.iter().filter(|&&m| m).count())
        .collect()
}

/// Maximal runs of rows with at least `min_ink` ink pixels; background gaps
/// shorter than `min_gap` rows are bridged.
pub fn segment_lines(
    profile: &[usize],
    min_gap: usize,
    min_ink: usize,
) -> Result<Vec<RowSpan>, CoderError> {
    if min_gap == 0 {
        return Err(CoderError::MinGap);
    }
    if min_ink == 0 {
        return Err(CoderError::MinInk);
    }
    let mut spans: Vec<RowSpan> = Vec::new();
    let mut start: Option<usize> = None;
    for (y, &count) in profile.iter().enumerate() {
        match (count >= min_ink, start) {
            (true, None) => start = Some(y),
            (false, Some(s)) => {
                push_bridged(&mut spans, RowSpan::new(s, y - 1), min_gap);
                start = None;
            }
            _ => {}
        }
    }
    if let Some(s) = start {
        push_bridged(&mut spans, RowSpan::new(s, profile.len() - 1), min_gap);
    }
    Ok(spans)
}

fn push_bridged(spans: &mut Vec<RowSpan>, span: RowSpan, min_gap: usize) {
    if let Some(last) = spans.last_mut() {
        let gap = span.top - last.bottom - 1;
        if gap < min_gap {
            last.bottom = span.bottom;
            return;
        }
    }
    spans.push(span);
}

/// 8-connected components of the strip `span`, sorted left to right.
/// Components whose box area is below `min_area` are dropped; their count is
/// returned alongside.
pub fn extract_blobs(
    img: &BinaryImage,
    span: RowSpan,
    min_area: usize,
) -> Result<(Vec<Blob>, usize), CoderError> {
    if span.top > span.bottom || span.bottom >= img.height {
        return Err(CoderError::SpanOutOfRange {
            top: span.top,
            bottom: span.bottom,
            height: img.height,
        });
    }
    let w = img.width;
    let rows = span.rows();
    let mut seen = vec![false; w * rows];
    let mut stack = Vec::new();
    let mut blobs = Vec::new();
    let mut discarded = 0;

    for ly in 0..rows {
        for x in 0..w {
            let idx = ly * w + x;
            if seen[idx] || !img.get(x, span.top + ly) {
                continue;
            }
            seen[idx] = true;
            stack.push((x, ly));
            let (mut x0, mut y0, mut x1, mut y1) = (x, ly, x, ly);
            while let Some((cx, cy)) = stack.pop() {
                x0 = x0.min(cx);
                x1 = x1.max(cx);
                y0 = y0.min(cy);
                y1 = y1.max(cy);
                for ny in cy.saturating_sub(1)..=(cy + 1).min(rows - 1) {
                    for nx in cx.saturating_sub(1)..=(cx + 1).min(w - 1) {
                        let n = ny * w + nx;
                        if !seen[n] && img.get(nx, span.top + ny) {
                            seen[n] = true;
                            stack.push((nx, ny));
                        }
                    }
                }
            }
            let blob = Blob::new(x0, span.top + y0, x1, span.top + y1);
            if blob.area() < min_area {
                discarded += 1;
            } else {
                blobs.push(blob);
            }
        }
    }
    blobs.sort_by_key(|b| (b.x0, b.y0, b.x1, b.y1));
    Ok((blobs, discarded))
}

/// Estimates the x-height band of a line.
///
/// Every letter class covers the x-height rows, while only some letters
/// reach into the ascender or descender zones. The band is therefore the
/// contiguous run of rows covered by the largest number of boxes (the first
/// such run when several tie).
pub fn reference_band(blobs: &[Blob]) -> Result<ReferenceBand, CoderError> {
    let top = blobs.iter().map(|b| b.y0).min().ok_or(CoderError::NoBlobs)?;
    let bottom = blobs.iter().map(|b| b.y1).max().unwrap_or(top);
    let mut coverage = vec![0isize; bottom - top + 2];
    for b in blobs {
        coverage[b.y0 - top] += 1;
        coverage[b.y1 - top + 1] -= 1;
    }
    let mut running = 0;
    for c in coverage.iter_mut() {
        running += *c;
        *c = running;
    }
    coverage.pop();
    let peak = coverage.iter().copied().max().unwrap_or(0);
    let first = coverage.iter().position(|&c| c == peak).unwrap_or(0);
    let run = coverage[first..].iter().take_while(|&&c| c == peak).count();
    Ok(ReferenceBand::new(
        (top + first) as f64,
        (top + first + run - 1) as f64,
    ))
}

pub fn classify_blob(blob: &Blob, band: &ReferenceBand, tau: f64) -> LetterClass {
    let slack = tau * band.height();
    let up = (blob.y0 as f64) < band.top - slack;
    let down = (blob.y1 as f64) > band.bottom + slack;
    match (up, down) {
        (true, true) => LetterClass::Full,
        (true, false) => LetterClass::Ascender,
        (false, true) => LetterClass::Descender,
        (false, false) => LetterClass::Base,
    }
}

/// Runs projection, line segmentation, blob extraction, band estimation and
/// classification, concatenating codes in reading order.
pub fn encode_document(img: &BinaryImage, params: &CoderParams) -> Result<EncodedPage, CoderError> {
    params.validate()?;
    let profile = horizontal_projection(img);
    let spans = segment_lines(&profile, params.min_gap, params.min_ink)?;
    let mut drafts = Vec::with_capacity(spans.len());
    let mut discarded = 0;
    for span in spans {
        let (blobs, dropped) = extract_blobs(img, span, params.min_area)?;
        discarded += dropped;
        if blobs.is_empty() {
            continue;
        }
        let band = reference_band(&blobs)?;
        drafts.push(TextLine {
            span,
            band,
            blobs,
            classes: Vec::new(),
        });
    }
    refine_bands(&mut drafts, params.tau);

    let mut codes = Vec::new();
    for line in &mut drafts {
        line.classes = line
            .blobs
            .iter()
            .map(|b| classify_blob(b, &line.band, params.tau))
            .collect();
        codes.extend(line.classes.iter().map(|c| c.code()));
    }
    if discarded > 0 {
        log::debug!("{}: discarded {discarded} small components", img.doc_id);
    }
    Ok(EncodedPage {
        coded: CodedText {
            doc_id: img.doc_id.clone(),
            codes,
        },
        lines: drafts,
        discarded,
    })
}

fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    Some(values[(values.len() - 1) / 2])
}

/// Corrects lines whose band came out taller than the page's x-height.
///
/// A line where every letter rises (or every letter drops) has no rows
/// that only the x-height band covers, so [`reference_band`] returns the
/// band merged with the ascender or descender zone. Such lines are
/// re-anchored from the rest of the page: first by extrapolating the
/// baseline with the median line pitch, otherwise by matching the excess
/// height against the page's typical ascender and descender extents.
fn refine_bands(lines: &mut [TextLine], tau: f64) {
    if lines.len() < 2 {
        return;
    }
    // x-height: median band height, weighted by the number of letters
    let mut by_height: Vec<(f64, usize)> = lines.iter().map(|l| (l.band.height(), l.blobs.len())).collect();
    by_height.sort_by(|a, b| a.0.total_cmp(&b.0));
    let total: usize = by_height.iter().map(|h| h.1).sum();
    let mut acc = 0;
    let mut x_height = by_height[0].0;
    for &(h, w) in &by_height {
        acc += w;
        if 2 * acc >= total {
            x_height = h;
            break;
        }
    }
    let slack = tau * x_height;
    let reliable: Vec<bool> = lines.iter().map(|l| l.band.height() <= x_height + slack + 1e-9).collect();
    if reliable.iter().all(|&r| r) {
        return;
    }

    let mut rises = Vec::new();
    let mut drops = Vec::new();
    for (line, _) in lines.iter().zip(&reliable).filter(|(_, &r)| r) {
        let s = tau * line.band.height();
        for b in &line.blobs {
            if (b.y0 as f64) < line.band.top - s {
                rises.push(line.band.top - b.y0 as f64);
            }
            if (b.y1 as f64) > line.band.bottom + s {
                drops.push(b.y1 as f64 - line.band.bottom);
            }
        }
    }
    let rise = median(&mut rises);
    let drop = median(&mut drops);

    let anchors: Vec<usize> = (0..lines.len()).filter(|&i| reliable[i]).collect();
    let mut steps: Vec<f64> = anchors
        .windows(2)
        .map(|w| (lines[w[1]].band.bottom - lines[w[0]].band.bottom) / (w[1] - w[0]) as f64)
        .collect();
    let pitch = median(&mut steps);

    for i in 0..lines.len() {
        if reliable[i] {
            continue;
        }
        let covered = lines[i].band;
        let fits = |band: &ReferenceBand| {
            band.top >= covered.top - slack && band.bottom <= covered.bottom + slack
        };
        let from_pitch = pitch.and_then(|p| {
            let anchor = *anchors.iter().min_by_key(|&&a| (a.abs_diff(i), a > i))?;
            let bottom = lines[anchor].band.bottom + p * (i as f64 - anchor as f64);
            Some(ReferenceBand::new(bottom - x_height, bottom)).filter(|b| fits(b))
        });
        let from_extents = || {
            let excess = covered.height() - x_height;
            let mut options = Vec::new();
            if let Some(r) = rise {
                options.push((r, covered.bottom - x_height));
            }
            if let Some(d) = drop {
                options.push((d, covered.top));
            }
            if let (Some(r), Some(d)) = (rise, drop) {
                options.push((r + d, covered.top + r));
            }
            options
                .into_iter()
                .min_by(|a, b| (a.0 - excess).abs().total_cmp(&(b.0 - excess).abs()))
                .map(|(_, top)| ReferenceBand::new(top, top + x_height))
        };
        if let Some(band) = from_pitch.or_else(from_extents) {
            lines[i].band = band;
        }
    }
}
