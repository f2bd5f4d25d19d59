//! Ground-truthed synthetic corpora: coded sequences drawn from per-script
//! class distributions, and pages rendering those codes as rectangles.

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coder::{CodedText, LetterClass};
use crate::raster::BinaryImage;

#[derive(Debug, Error, PartialEq)]
pub enum SynthError {
    #[error("profile `{name}`: {message}")]
    Profile { name: String, message: String },
    #[error("{0} profiles but {1} document counts")]
    CountMismatch(usize, usize),
    #[error("document counts must be at least 1")]
    ZeroCount,
    #[error("sequence length range {0}..={1} is invalid (minimum 4)")]
    Length(usize, usize),
    #[error("layout: {0}")]
    Layout(String),
}

/// Typographic statistics of one script.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScriptProfile {
    pub name: String,
    /// Probabilities of base, ascender, descender, full.
    pub class_probs: [f64; 4],
    /// Optional first-order transition matrix (rows sum to 1); the first
    /// code is drawn from `class_probs`.
    #[serde(default)]
    pub transition_bias: Option<[[f64; 4]; 4]>,
}

impl ScriptProfile {
    pub fn new(name: impl Into<String>, class_probs: [f64; 4]) -> Self {
        Self {
            name: name.into(),
            class_probs,
            transition_bias: None,
        }
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let err = |message: String| SynthError::Profile {
            name: self.name.clone(),
            message,
        };
        check_distribution(&self.class_probs).map_err(|m| err(format!("class_probs {m}")))?;
        if let Some(rows) = &self.transition_bias {
            for (i, row) in rows.iter().enumerate() {
                check_distribution(row).map_err(|m| err(format!("transition row {i} {m}")))?;
            }
        }
        Ok(())
    }
}

fn check_distribution(p: &[f64; 4]) -> Result<(), String> {
    if p.iter().any(|&x| !x.is_finite() || x < 0.0) {
        return Err("has a negative or non-finite entry".into());
    }
    let sum: f64 = p.iter().sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(format!("sums to {sum}, not 1"));
    }
    Ok(())
}

/// Page geometry for rendering, in pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Layout {
    /// Rows of the x-height band.
    pub band_height: usize,
    pub ascender_extent: usize,
    pub descender_extent: usize,
    pub glyph_width: usize,
    pub glyph_gap: usize,
    /// Background rows between the lowest descender of one line and the
    /// highest ascender of the next.
    pub line_gap: usize,
    pub margin_x: usize,
    pub margin_y: usize,
    /// Width of the text block; glyphs wrap to the next line beyond it.
    pub text_width: usize,
}

impl Default for Layout {
    fn default() -> Self {
        Self {
            band_height: 12,
            ascender_extent: 7,
            descender_extent: 5,
            glyph_width: 5,
            glyph_gap: 2,
            line_gap: 4,
            margin_x: 6,
            margin_y: 6,
            text_width: 400,
        }
    }
}

impl Layout {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.band_height < 3 {
            return Err(SynthError::Layout("band_height must be at least 3".into()));
        }
        if self.glyph_gap < 1 {
            return Err(SynthError::Layout("glyph_gap must be at least 1".into()));
        }
        if self.glyph_width < 1 {
            return Err(SynthError::Layout("glyph_width must be at least 1".into()));
        }
        if self.line_gap < 1 {
            return Err(SynthError::Layout("line_gap must be at least 1".into()));
        }
        if self.text_width < self.glyph_width {
            return Err(SynthError::Layout("text_width is narrower than one glyph".into()));
        }
        Ok(())
    }

    pub fn glyphs_per_line(&self) -> usize {
        (self.text_width + self.glyph_gap) / (self.glyph_width + self.glyph_gap)
    }

    pub fn line_height(&self) -> usize {
        self.ascender_extent + self.band_height + self.descender_extent
    }

    /// Vertical distance between consecutive baselines.
    pub fn line_pitch(&self) -> usize {
        self.line_height() + self.line_gap
    }

    /// Rows `(top, bottom)` of a glyph of class `class` on line `line`.
    pub fn glyph_rows(&self, line: usize, class: LetterClass) -> (usize, usize) {
        let band_top = self.margin_y + line * self.line_pitch() + self.ascender_extent;
        let band_bottom = band_top + self.band_height - 1;
        let top = if class.rises() { band_top - self.ascender_extent } else { band_top };
        let bottom = if class.drops() { band_bottom + self.descender_extent } else { band_bottom };
        (top, bottom)
    }
}

/// Draws each code as a filled rectangle, wrapping lines at `text_width`.
pub fn render_page(text: &CodedText, layout: &Layout) -> Result<BinaryImage, SynthError> {
    layout.validate()?;
    let per_line = layout.glyphs_per_line();
    let lines = text.len().div_ceil(per_line).max(1);
    let used = text.len().min(per_line).max(1);
    let width = 2 * layout.margin_x + used * layout.glyph_width + (used - 1) * layout.glyph_gap;
    let height = 2 * layout.margin_y + lines * layout.line_pitch() - layout.line_gap;
    let mut img = BinaryImage::blank(width, height, text.doc_id.clone());
    for (i, &code) in text.codes.iter().enumerate() {
        let class = LetterClass::from_code(code).map_err(|e| SynthError::Layout(e.to_string()))?;
        let (line, col) = (i / per_line, i % per_line);
        let x0 = layout.margin_x + col * (layout.glyph_width + layout.glyph_gap);
        let (top, bottom) = layout.glyph_rows(line, class);
        for y in top..=bottom {
            for x in x0..x0 + layout.glyph_width {
                img.set(x, y, true);
            }
        }
    }
    Ok(img)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthSpec {
    pub profiles: Vec<ScriptProfile>,
    pub docs_per_profile: Vec<usize>,
    /// Inclusive range of sequence lengths.
    pub seq_len: (usize, usize),
    #[serde(default)]
    pub layout: Layout,
    #[serde(default)]
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        if self.profiles.len() != self.docs_per_profile.len() {
            return Err(SynthError::CountMismatch(self.profiles.len(), self.docs_per_profile.len()));
        }
        if self.docs_per_profile.contains(&0) {
            return Err(SynthError::ZeroCount);
        }
        let (lo, hi) = self.seq_len;
        if lo < 4 || hi < lo {
            return Err(SynthError::Length(lo, hi));
        }
        for p in &self.profiles {
            p.validate()?;
        }
        self.layout.validate()
    }

    /// Three well-separated profiles with 5, 10 and 5 documents, each
    /// dominated by a different letter class.
    pub fn three_script_benchmark(seed: u64) -> Self {
        Self {
            profiles: vec![
                ScriptProfile::new("cyrillic", [0.85, 0.05, 0.05, 0.05]),
                ScriptProfile::new("angular", [0.05, 0.85, 0.05, 0.05]),
                ScriptProfile::new("round", [0.05, 0.05, 0.85, 0.05]),
            ],
            docs_per_profile: vec![5, 10, 5],
            seq_len: (2000, 2400),
            layout: Layout::default(),
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthDoc {
    pub coded: CodedText,
    pub class: String,
}

fn sample_index(probs: &[f64; 4], rng: &mut ChaCha8Rng) -> u8 {
    // validated distributions always have positive total weight
    WeightedIndex::new(probs).expect("validated distribution").sample(rng) as u8
}

/// Draws every document's codes; deterministic given the spec's seed.
/// Document ids are `<profile>_<nnn>`.
pub fn generate_coded_corpus(spec: &SynthSpec) -> Result<Vec<SynthDoc>, SynthError> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut docs = Vec::new();
    for (profile, &count) in spec.profiles.iter().zip(&spec.docs_per_profile) {
        for d in 0..count {
            let len = rng.random_range(spec.seq_len.0..=spec.seq_len.1);
            let mut codes = Vec::with_capacity(len);
            let mut prev = sample_index(&profile.class_probs, &mut rng);
            codes.push(prev);
            for _ in 1..len {
                let probs = match &profile.transition_bias {
                    Some(rows) => &rows[prev as usize],
                    None => &profile.class_probs,
                };
                prev = sample_index(probs, &mut rng);
                codes.push(prev);
            }
            docs.push(SynthDoc {
                coded: CodedText {
                    doc_id: format!("{}_{:03}", profile.name, d),
                    codes,
                },
                class: profile.name.clone(),
            });
        }
    }
    Ok(docs)
}
