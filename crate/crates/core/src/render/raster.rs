//! RGB8 raster images with bit-exact PPM (P6) output: heatmaps and
//! color-sequence strips.

use super::RenderError;
use crate::reduce::Embedding;

/// Row-major RGB8 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// `width * height` pixels, row 0 first.
    pub pixels: Vec<[u8; 3]>,
}

impl Image {
    pub fn new(width: usize, height: usize) -> Self {
        Image {
            width,
            height,
            pixels: vec![[0, 0, 0]; width * height],
        }
    }

    pub fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        self.pixels[y * self.width + x] = rgb;
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    /// Binary PPM: `P6\n<width> <height>\n255\n` then raw RGB triples.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for px in &self.pixels {
            out.extend_from_slice(px);
        }
        out
    }
}

/// Piecewise-linear color map over `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColorMap {
    pub anchors: Vec<[u8; 3]>,
}

impl ColorMap {
    pub fn new(anchors: Vec<[u8; 3]>) -> Result<Self, RenderError> {
        if anchors.len() < 2 {
            return Err(RenderError::BadColorMap(anchors.len()));
        }
        Ok(ColorMap { anchors })
    }

    /// Black to white.
    pub fn grayscale() -> Self {
        ColorMap {
            anchors: vec![[0, 0, 0], [255, 255, 255]],
        }
    }

    /// Black through red to yellow.
    pub fn heat() -> Self {
        ColorMap {
            anchors: vec![[0, 0, 0], [255, 0, 0], [255, 255, 0]],
        }
    }

    /// Interpolates at `v` in `[0, 1]`; endpoints reproduce the anchors.
    pub fn sample(&self, v: f64) -> [u8; 3] {
        let v = v.clamp(0.0, 1.0);
        let segments = self.anchors.len() - 1;
        let pos = v * segments as f64;
        let idx = (pos.floor() as usize).min(segments - 1);
        let frac = pos - idx as f64;
        let a = self.anchors[idx];
        let b = self.anchors[idx + 1];
        [0, 1, 2].map(|c| (a[c] as f64 + (b[c] as f64 - a[c] as f64) * frac).round() as u8)
    }
}

impl std::str::FromStr for ColorMap {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "gray" | "grayscale" => Ok(ColorMap::grayscale()),
            "heat" => Ok(ColorMap::heat()),
            other => Err(format!("unknown colormap `{other}`")),
        }
    }
}

/// Renders a matrix as a one-pixel-per-cell heatmap.
///
/// Values are min-max normalized (a constant matrix maps to 0); matrix
/// row 0 lands at the image bottom. `invert` maps v to 1-v, for
/// distance-valued matrices where low should read bright.
pub fn render_heatmap(
    matrix: &[Vec<f64>],
    cmap: &ColorMap,
    invert: bool,
) -> Result<Image, RenderError> {
    let rows = matrix.len();
    if rows == 0 || matrix[0].is_empty() {
        return Err(RenderError::EmptyInput);
    }
    let cols = matrix[0].len();
    for (i, row) in matrix.iter().enumerate() {
        if row.len() != cols {
            return Err(RenderError::RaggedMatrix(i));
        }
        if let Some(j) = row.iter().position(|v| !v.is_finite()) {
            return Err(RenderError::NonFinite { row: i, col: j });
        }
    }

    let lo = matrix.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let hi = matrix
        .iter()
        .flatten()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;

    let mut image = Image::new(cols, rows);
    for (r, row) in matrix.iter().enumerate() {
        let y = rows - 1 - r; // row 0 at the bottom
        for (x, v) in row.iter().enumerate() {
            let mut norm = if span > 0.0 { (v - lo) / span } else { 0.0 };
            if invert {
                norm = 1.0 - norm;
            }
            image.set(x, y, cmap.sample(norm));
        }
    }
    Ok(image)
}

/// Paints each embedded point as a solid column block, channels taken
/// from its three dimensions, each min-max scaled to 0..255 (constant
/// dimensions map to 0).
pub fn render_color_strip(
    embedding: &Embedding,
    column_width: usize,
    height: usize,
) -> Result<Image, RenderError> {
    if embedding.n_dims() != 3 {
        return Err(RenderError::WrongDimensionality {
            expected: 3,
            got: embedding.n_dims(),
        });
    }
    if embedding.n_points() == 0 || column_width == 0 || height == 0 {
        return Err(RenderError::EmptyInput);
    }
    let n = embedding.n_points();

    let mut channels = vec![vec![0u8; n]; 3];
    for c in 0..3 {
        let column: Vec<f64> = embedding.points.iter().map(|p| p[c]).collect();
        let lo = column.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = column.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = hi - lo;
        for (i, v) in column.iter().enumerate() {
            channels[c][i] = if span > 0.0 {
                ((v - lo) / span * 255.0).round() as u8
            } else {
                0
            };
        }
    }

    let mut image = Image::new(n * column_width, height);
    for i in 0..n {
        let rgb = [channels[0][i], channels[1][i], channels[2][i]];
        for x in i * column_width..(i + 1) * column_width {
            for y in 0..height {
                image.set(x, y, rgb);
            }
        }
    }
    Ok(image)
}
