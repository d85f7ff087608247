//! Music information retrieval toolkit.
//!
//! The crate decodes audio (WAV) and symbolic music (Standard MIDI Files,
//! note CSVs), extracts spectral and pitch-class descriptors, aggregates
//! them on beat grids, reduces dimensionality (PCA, classical MDS, t-SNE),
//! measures frame similarity, learns pattern-graph specifications from
//! symbol sequences, and renders everything as deterministic PPM images
//! and SVG charts.
//!
//! All numeric work is `f64` and every artifact is byte-deterministic:
//! the same inputs (and seed, where one applies) always produce identical
//! output files.

pub mod audio;
pub mod beat;
pub mod features;
mod linalg;
pub mod pattern;
pub mod reduce;
pub mod render;
pub mod similarity;
pub mod spectral;
pub mod symbolic;
