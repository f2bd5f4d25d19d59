//! Texture statistics of a coded text viewed as a 1-D, four-level image.
//!
//! Run-length features follow the classic Galloway / Chu / Dasarathy-Holder
//! definitions with gray level `i = code + 1` and run length `j`. The local
//! binary pattern of a position compares it with its left and right
//! neighbours (`>=`, two bits); the adjacent pattern concatenates two
//! consecutive LBP codes into a 4-bit index.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::coder::CodedText;

pub const LEVELS: usize = 4;
pub const RL_LEN: usize = 11;
pub const ALBP_LEN: usize = 16;

pub const RL_NAMES: [&str; RL_LEN] = [
    "sre", "lre", "gln", "rln", "rp", "lgre", "hgre", "srlge", "srhge", "lrlge", "lrhge",
];

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("document `{0}` has no codes")]
    Empty(String),
    #[error("document `{doc_id}` has {len} codes, need at least {need}")]
    TooShort { doc_id: String, len: usize, need: usize },
    #[error("feature mode {mode} requires {missing} features")]
    ModeMismatch { mode: FeatureMode, missing: &'static str },
    #[error("inconsistent feature vectors: expected {expected} values, `{doc_id}` has {found}")]
    InconsistentLength {
        doc_id: String,
        expected: usize,
        found: usize,
    },
    #[error("normalization needs at least 2 documents, got {0}")]
    TooFewDocuments(usize),
    #[error("feature CSV: {0}")]
    Csv(String),
}

impl From<csv::Error> for FeatureError {
    fn from(e: csv::Error) -> Self {
        FeatureError::Csv(e.to_string())
    }
}

/// Run counts `p(i, j)` for gray level `i` in 1..=4 and run length `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunLengthMatrix {
    /// `counts[i - 1][j - 1]`.
    counts: [Vec<u64>; LEVELS],
    n_runs: u64,
    n_symbols: u64,
}

impl RunLengthMatrix {
    pub fn n_runs(&self) -> u64 {
        self.n_runs
    }

    pub fn n_symbols(&self) -> u64 {
        self.n_symbols
    }

    pub fn max_run(&self) -> usize {
        self.counts.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// `p(i, j)` with 1-based gray level and run length.
    pub fn get(&self, level: usize, run: usize) -> u64 {
        if !(1..=LEVELS).contains(&level) || run == 0 {
            return 0;
        }
        self.counts[level - 1].get(run - 1).copied().unwrap_or(0)
    }

    /// Non-zero cells as `(level, run, count)`.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, u64)> + '_ {
        self.counts.iter().enumerate().flat_map(|(i, row)| {
            row.iter()
                .enumerate()
                .filter(|(_, &c)| c > 0)
                .map(move |(j, &c)| (i + 1, j + 1, c))
        })
    }
}

pub fn run_length_matrix(text: &CodedText) -> Result<RunLengthMatrix, FeatureError> {
    if text.is_empty() {
        return Err(FeatureError::Empty(text.doc_id.clone()));
    }
    let mut counts: [Vec<u64>; LEVELS] = Default::default();
    let mut n_runs = 0;
    for run in text.codes.chunk_by(|a, b| a == b) {
        let row = &mut counts[run[0] as usize];
        if row.len() < run.len() {
            row.resize(run.len(), 0);
        }
        row[run.len() - 1] += 1;
        n_runs += 1;
    }
    Ok(RunLengthMatrix {
        counts,
        n_runs,
        n_symbols: text.len() as u64,
    })
}

/// The eleven run-length statistics, in their canonical order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RlFeatures {
    pub sre: f64,
    pub lre: f64,
    pub gln: f64,
    pub rln: f64,
    pub rp: f64,
    pub lgre: f64,
    pub hgre: f64,
    pub srlge: f64,
    pub srhge: f64,
    pub lrlge: f64,
    pub lrhge: f64,
}

impl RlFeatures {
    pub fn to_array(&self) -> [f64; RL_LEN] {
        [
            self.sre, self.lre, self.gln, self.rln, self.rp, self.lgre, self.hgre, self.srlge,
            self.srhge, self.lrlge, self.lrhge,
        ]
    }
}

pub fn run_length_features(m: &RunLengthMatrix) -> Result<RlFeatures, FeatureError> {
    if m.n_runs == 0 {
        return Err(FeatureError::Empty(String::new()));
    }
    let nr = m.n_runs as f64;
    let mut f = RlFeatures {
        sre: 0.0,
        lre: 0.0,
        gln: 0.0,
        rln: 0.0,
        rp: nr / m.n_symbols as f64,
        lgre: 0.0,
        hgre: 0.0,
        srlge: 0.0,
        srhge: 0.0,
        lrlge: 0.0,
        lrhge: 0.0,
    };
    let mut per_run = vec![0u64; m.max_run()];
    for (i, row) in m.counts.iter().enumerate() {
        let i2 = ((i + 1) * (i + 1)) as f64;
        let mut level_total = 0u64;
        for (j, &c) in row.iter().enumerate() {
            if c == 0 {
                continue;
            }
            let j2 = ((j + 1) * (j + 1)) as f64;
            let p = c as f64;
            level_total += c;
            per_run[j] += c;
            f.sre += p / j2;
            f.lre += p * j2;
            f.lgre += p / i2;
            f.hgre += p * i2;
            f.srlge += p / (i2 * j2);
            f.srhge += p * i2 / j2;
            f.lrlge += p * j2 / i2;
            f.lrhge += p * i2 * j2;
        }
        f.gln += (level_total as f64).powi(2);
    }
    f.rln = per_run.iter().map(|&c| (c as f64).powi(2)).sum();
    for v in [
        &mut f.sre, &mut f.lre, &mut f.gln, &mut f.rln, &mut f.lgre, &mut f.hgre, &mut f.srlge,
        &mut f.srhge, &mut f.lrlge, &mut f.lrhge,
    ] {
        *v /= nr;
    }
    Ok(f)
}

/// Two-bit LBP code of every interior position: `2·[left ≥ centre] + [right ≥ centre]`.
pub fn lbp_codes(text: &CodedText) -> Result<Vec<u8>, FeatureError> {
    if text.len() < 3 {
        return Err(FeatureError::TooShort {
            doc_id: text.doc_id.clone(),
            len: text.len(),
            need: 3,
        });
    }
    Ok(text
        .codes
        .windows(3)
        .map(|w| (u8::from(w[0] >= w[1]) << 1) | u8::from(w[2] >= w[1]))
        .collect())
}

/// Normalized histogram of adjacent LBP pairs, index `4·lbp[t] + lbp[t+1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlbpHistogram {
    pub bins: [f64; ALBP_LEN],
}

pub fn albp_histogram(text: &CodedText) -> Result<AlbpHistogram, FeatureError> {
    if text.len() < 4 {
        return Err(FeatureError::TooShort {
            doc_id: text.doc_id.clone(),
            len: text.len(),
            need: 4,
        });
    }
    let lbp = lbp_codes(text)?;
    let mut counts = [0u64; ALBP_LEN];
    for pair in lbp.windows(2) {
        counts[(pair[0] * 4 + pair[1]) as usize] += 1;
    }
    let total = (lbp.len() - 1) as f64;
    let mut bins = [0.0; ALBP_LEN];
    for (b, &c) in bins.iter_mut().zip(&counts) {
        *b = c as f64 / total;
    }
    Ok(AlbpHistogram { bins })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    Rl,
    Albp,
    #[default]
    Concat,
}

impl FeatureMode {
    /// Number of features the mode produces.
    pub fn dim(self) -> usize {
        match self {
            FeatureMode::Rl => RL_LEN,
            FeatureMode::Albp => ALBP_LEN,
            FeatureMode::Concat => RL_LEN + ALBP_LEN,
        }
    }

    /// Shortest coded text the mode can describe.
    pub fn min_codes(self) -> usize {
        match self {
            FeatureMode::Rl => 1,
            FeatureMode::Albp | FeatureMode::Concat => 4,
        }
    }
}

impl fmt::Display for FeatureMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureMode::Rl => "rl",
            FeatureMode::Albp => "albp",
            FeatureMode::Concat => "concat",
        })
    }
}

impl FromStr for FeatureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rl" => Ok(FeatureMode::Rl),
            "albp" => Ok(FeatureMode::Albp),
            "concat" => Ok(FeatureMode::Concat),
            other => Err(format!("unknown feature mode `{other}` (expected rl, albp or concat)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub doc_id: String,
    pub mode: FeatureMode,
    pub values: Vec<f64>,
}

pub fn assemble_feature_vector(
    doc_id: impl Into<String>,
    rl: Option<&RlFeatures>,
    albp: Option<&AlbpHistogram>,
    mode: FeatureMode,
) -> Result<FeatureVector, FeatureError> {
    let need_rl = || rl.ok_or(FeatureError::ModeMismatch { mode, missing: "run-length" });
    let need_albp = || albp.ok_or(FeatureError::ModeMismatch { mode, missing: "ALBP" });
    let values = match mode {
        FeatureMode::Rl => need_rl()?.to_array().to_vec(),
        FeatureMode::Albp => need_albp()?.bins.to_vec(),
        FeatureMode::Concat => {
            let mut v = need_rl()?.to_array().to_vec();
            v.extend_from_slice(&need_albp()?.bins);
            v
        }
    };
    Ok(FeatureVector {
        doc_id: doc_id.into(),
        mode,
        values,
    })
}

/// Computes whatever `mode` needs from a coded text.
pub fn extract_features(text: &CodedText, mode: FeatureMode) -> Result<FeatureVector, FeatureError> {
    let rl = match mode {
        FeatureMode::Rl | FeatureMode::Concat => {
            Some(run_length_features(&run_length_matrix(text)?)?)
        }
        FeatureMode::Albp => None,
    };
    let albp = match mode {
        FeatureMode::Albp | FeatureMode::Concat => Some(albp_histogram(text)?),
        FeatureMode::Rl => None,
    };
    assemble_feature_vector(text.doc_id.clone(), rl.as_ref(), albp.as_ref(), mode)
}

/// Per-dimension min-max scaling to [0, 1]; constant dimensions become 0.
pub fn normalize_corpus(vectors: &[FeatureVector]) -> Result<Vec<FeatureVector>, FeatureError> {
    if vectors.len() < 2 {
        return Err(FeatureError::TooFewDocuments(vectors.len()));
    }
    let dim = vectors[0].values.len();
    check_lengths(vectors, dim)?;
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for v in vectors {
        for (k, &x) in v.values.iter().enumerate() {
            lo[k] = lo[k].min(x);
            hi[k] = hi[k].max(x);
        }
    }
    Ok(vectors
        .iter()
        .map(|v| FeatureVector {
            values: v
                .values
                .iter()
                .enumerate()
                .map(|(k, &x)| {
                    let range = hi[k] - lo[k];
                    if range > 0.0 {
                        (x - lo[k]) / range
                    } else {
                        0.0
                    }
                })
                .collect(),
            ..v.clone()
        })
        .collect())
}

fn check_lengths(vectors: &[FeatureVector], dim: usize) -> Result<(), FeatureError> {
    match vectors.iter().find(|v| v.values.len() != dim) {
        Some(v) => Err(FeatureError::InconsistentLength {
            doc_id: v.doc_id.clone(),
            expected: dim,
            found: v.values.len(),
        }),
        None => Ok(()),
    }
}

/// Writes `doc_id,f1..fK`, one row per document.
pub fn write_feature_csv<W: Write>(out: W, vectors: &[FeatureVector]) -> Result<(), FeatureError> {
    let dim = vectors.first().map_or(0, |v| v.values.len());
    check_lengths(vectors, dim)?;
    let mut wtr = csv::Writer::from_writer(out);
    let mut header = vec!["doc_id".to_string()];
    header.extend((1..=dim).map(|k| format!("f{k}")));
    wtr.write_record(&header)?;
    for v in vectors {
        let mut row = vec![v.doc_id.clone()];
        row.extend(v.values.iter().map(|x| x.to_string()));
        wtr.write_record(&row)?;
    }
    wtr.flush().map_err(|e| FeatureError::Csv(e.to_string()))
}

/// Reads a feature CSV. The mode is inferred from the column count where
/// possible (11 → rl, 16 → albp, 27 → concat).
pub fn read_feature_csv<R: Read>(input: R) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut rdr = csv::Reader::from_reader(input);
    let headers = rdr.headers()?.clone();
    if headers.get(0) != Some("doc_id") {
        return Err(FeatureError::Csv("first column must be `doc_id`".into()));
    }
    let dim = headers.len() - 1;
    let mode = match dim {
        RL_LEN => FeatureMode::Rl,
        ALBP_LEN => FeatureMode::Albp,
        d if d == RL_LEN + ALBP_LEN => FeatureMode::Concat,
        d => return Err(FeatureError::Csv(format!("unexpected feature count {d}"))),
    };
    let mut out = Vec::new();
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let values = record
            .iter()
            .skip(1)
            .map(|s| {
                s.trim().parse::<f64>().map_err(|_| {
                    FeatureError::Csv(format!("row {}: `{s}` is not a number", row + 2))
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        out.push(FeatureVector {
            doc_id: record.get(0).unwrap_or_default().to_string(),
            mode,
            values,
        });
    }
    Ok(out)
}
