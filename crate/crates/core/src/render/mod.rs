//! Deterministic rendering: PPM heatmaps and color strips, SVG
//! trajectories, bar charts, boxplots, and polar correlation views.
//! Identical inputs always produce byte-identical artifacts.

mod chart;
mod raster;

pub use chart::{
    boxplot_stats, render_bar_chart, render_boxplots, render_polar_correlation,
    render_trajectory, BoxplotStats,
};
pub use raster::{render_color_strip, render_heatmap, ColorMap, Image};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("matrix row {0} has a different length")]
    RaggedMatrix(usize),
    #[error("input is empty")]
    EmptyInput,
    #[error("expected {expected} dimensions, got {got}")]
    WrongDimensionality { expected: usize, got: usize },
    #[error("embedding has no points")]
    EmptyEmbedding,
    #[error("labels and heights differ in length: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("bar height {0} is negative")]
    NegativeHeight(f64),
    #[error("polar view supports at most 12 variables, got {0}")]
    TooManyVariables(usize),
    #[error("colormap needs at least 2 anchors, got {0}")]
    BadColorMap(usize),
}
