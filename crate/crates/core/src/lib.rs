//! Script discrimination for document page images.
//!
//! A page is binarized, split into text lines and letters, and each letter
//! is coded by its vertical extent relative to the line's x-height band
//! (base 0, ascender 1, descender 2, full 3). The code sequence is read as a
//! four-level 1-D image, described by run-length statistics and adjacent
//! local binary patterns, and documents are grouped with a graph-based
//! genetic clusterer.

pub mod clustering;
pub mod coder;
pub mod evaluation;
pub mod features;
pub mod raster;
pub mod synth;

pub use clustering::{cluster_documents, ClusterConfig, ClusterOutcome, Partition};
pub use coder::{encode_document, CodedText, CoderParams, LetterClass};
pub use features::{extract_features, normalize_corpus, FeatureMode, FeatureVector};
pub use raster::{binarize, load_document, Binarization, BinaryImage, GrayImage};
