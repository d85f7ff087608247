//! SVG charts: projected 3-D trajectories, bar charts, boxplots, and the
//! polar correlation view. All numbers are written with 6 significant
//! digits so output is byte-deterministic.

use super::RenderError;
use crate::reduce::Embedding;
use crate::similarity::ValidityReport;
use serde::{Deserialize, Serialize};

/// Formats with 6 significant digits, plain decimal notation.
fn fmt6(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (5 - magnitude).max(0) as usize;
    let mut s = format!("{x:.decimals$}");
    if s.contains('.') {
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
    }
    if s == "-0" {
        s = "0".to_string();
    }
    s
}

fn svg_open(width: f64, height: f64) -> String {
    format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"{}\" height=\"{}\" viewBox=\"0 0 {} {}\">\n",
        fmt6(width),
        fmt6(height),
        fmt6(width),
        fmt6(height)
    )
}

// ---------------------------------------------------------------------------
// Trajectory

const TRAJECTORY_W: f64 = 800.0;
const TRAJECTORY_H: f64 = 600.0;

/// Renders a 3-D embedding as an isometric 2-D trajectory.
///
/// Projection: `x' = x - z cos 30`, `y' = y - z sin 30`; the projected
/// bounding box is fitted into the canvas with a 5% margin. Points are
/// joined in order by line segments; every `label_stride`-th point is
/// annotated with its index (`label_stride = 0` disables labels).
pub fn render_trajectory(
    embedding: &Embedding,
    label_stride: usize,
) -> Result<String, RenderError> {
    if embedding.n_points() == 0 {
        return Err(RenderError::EmptyEmbedding);
    }
    if embedding.n_dims() != 3 {
        return Err(RenderError::WrongDimensionality {
            expected: 3,
            got: embedding.n_dims(),
        });
    }

    let cos30 = (30f64).to_radians().cos();
    let sin30 = (30f64).to_radians().sin();
    let projected: Vec<(f64, f64)> = embedding
        .points
        .iter()
        .map(|p| (p[0] - p[2] * cos30, p[1] - p[2] * sin30))
        .collect();

    let min_x = projected.iter().map(|p| p.0).fold(f64::INFINITY, f64::min);
    let max_x = projected.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max);
    let min_y = projected.iter().map(|p| p.1).fold(f64::INFINITY, f64::min);
    let max_y = projected.iter().map(|p| p.1).fold(f64::NEG_INFINITY, f64::max);
    let span_x = (max_x - min_x).max(f64::MIN_POSITIVE);
    let span_y = (max_y - min_y).max(f64::MIN_POSITIVE);

    let margin_x = 0.05 * TRAJECTORY_W;
    let margin_y = 0.05 * TRAJECTORY_H;
    let to_canvas = |p: (f64, f64)| -> (f64, f64) {
        let tx = (p.0 - min_x) / span_x;
        let ty = (p.1 - min_y) / span_y;
        (
            margin_x + tx * (TRAJECTORY_W - 2.0 * margin_x),
            // SVG y grows downward; flip so larger y' plots higher
            TRAJECTORY_H - margin_y - ty * (TRAJECTORY_H - 2.0 * margin_y),
        )
    };
    let canvas: Vec<(f64, f64)> = projected.into_iter().map(to_canvas).collect();

    let mut svg = svg_open(TRAJECTORY_W, TRAJECTORY_H);
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    for pair in canvas.windows(2) {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#3465a4\" stroke-width=\"1.5\"/>\n",
            fmt6(pair[0].0),
            fmt6(pair[0].1),
            fmt6(pair[1].0),
            fmt6(pair[1].1)
        ));
    }
    for (i, (x, y)) in canvas.iter().enumerate() {
        svg.push_str(&format!(
            "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"#204a87\"/>\n",
            fmt6(*x),
            fmt6(*y)
        ));
        if label_stride > 0 && i % label_stride == 0 {
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"10\" fill=\"#555555\">{}</text>\n",
                fmt6(x + 4.0),
                fmt6(y - 4.0),
                i
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

// ---------------------------------------------------------------------------
// Bar chart

const CHART_W: f64 = 640.0;
const CHART_H: f64 = 400.0;
const MARGIN_LEFT: f64 = 56.0;
const MARGIN_RIGHT: f64 = 16.0;
const MARGIN_TOP: f64 = 16.0;
const MARGIN_BOTTOM: f64 = 40.0;

/// Tick step from the 1-2-5 progression giving at most `max_ticks`
/// intervals over `[0, top]`.
fn nice_step(top: f64, max_ticks: usize) -> f64 {
    if top <= 0.0 {
        return 1.0;
    }
    let raw = top / max_ticks as f64;
    let magnitude = 10f64.powf(raw.log10().floor());
    for mult in [1.0, 2.0, 5.0, 10.0] {
        if magnitude * mult >= raw - 1e-12 * top {
            return magnitude * mult;
        }
    }
    magnitude * 10.0
}

fn y_axis(svg: &mut String, top: f64, scale_h: f64) {
    let step = nice_step(top, 5);
    let mut tick = 0.0;
    while tick <= top + 1e-9 * top.max(1.0) {
        let y = CHART_H - MARGIN_BOTTOM - if top > 0.0 { tick / top * scale_h } else { 0.0 };
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#cccccc\"/>\n",
            fmt6(MARGIN_LEFT - 4.0),
            fmt6(y),
            fmt6(CHART_W - MARGIN_RIGHT),
            fmt6(y)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" fill=\"#333333\">{}</text>\n",
            fmt6(MARGIN_LEFT - 8.0),
            fmt6(y + 3.0),
            fmt6(tick)
        ));
        if step <= 0.0 {
            break;
        }
        tick += step;
    }
    // axes
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt6(MARGIN_LEFT),
        fmt6(MARGIN_TOP),
        fmt6(MARGIN_LEFT),
        fmt6(CHART_H - MARGIN_BOTTOM)
    ));
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt6(MARGIN_LEFT),
        fmt6(CHART_H - MARGIN_BOTTOM),
        fmt6(CHART_W - MARGIN_RIGHT),
        fmt6(CHART_H - MARGIN_BOTTOM)
    ));
}

/// Vertical bar chart with category labels beneath the bars and y ticks
/// on a 1-2-5 progression. The tallest bar spans the full plot height.
pub fn render_bar_chart(labels: &[String], heights: &[f64]) -> Result<String, RenderError> {
    if labels.len() != heights.len() {
        return Err(RenderError::LengthMismatch(labels.len(), heights.len()));
    }
    if labels.is_empty() {
        return Err(RenderError::EmptyInput);
    }
    if let Some(h) = heights.iter().find(|h| **h < 0.0) {
        return Err(RenderError::NegativeHeight(*h));
    }

    let top = heights.iter().copied().fold(0.0, f64::max);
    let plot_w = CHART_W - MARGIN_LEFT - MARGIN_RIGHT;
    let plot_h = CHART_H - MARGIN_TOP - MARGIN_BOTTOM;

    let mut svg = svg_open(CHART_W, CHART_H);
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    y_axis(&mut svg, top, plot_h);

    let slot = plot_w / labels.len() as f64;
    let bar_w = slot * 0.8;
    for (i, (label, h)) in labels.iter().zip(heights.iter()).enumerate() {
        let x = MARGIN_LEFT + i as f64 * slot + (slot - bar_w) / 2.0;
        let bar_h = if top > 0.0 { h / top * plot_h } else { 0.0 };
        let y = CHART_H - MARGIN_BOTTOM - bar_h;
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#4878a8\"/>\n",
            fmt6(x),
            fmt6(y),
            fmt6(bar_w),
            fmt6(bar_h)
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333333\">{}</text>\n",
            fmt6(x + bar_w / 2.0),
            fmt6(CHART_H - MARGIN_BOTTOM + 14.0),
            xml_escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

// ---------------------------------------------------------------------------
// Boxplots

/// Five-number summary with 1.5 IQR whiskers and outliers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxplotStats {
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Most extreme data points inside the 1.5 IQR fences.
    pub whisker_low: f64,
    pub whisker_high: f64,
    pub outliers: Vec<f64>,
}

/// Quantile by linear interpolation between order statistics at position
/// `(n - 1) * q` (the "type 7" convention). `sorted` must be ascending.
fn quantile_type7(sorted: &[f64], q: f64) -> f64 {
    let pos = (sorted.len() - 1) as f64 * q;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Computes boxplot statistics for a batch of values.
pub fn boxplot_stats(values: &[f64]) -> Result<BoxplotStats, RenderError> {
    if values.is_empty() {
        return Err(RenderError::EmptyInput);
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(RenderError::NonFinite { row: 0, col: i });
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.total_cmp(b));

    let q1 = quantile_type7(&sorted, 0.25);
    let median = quantile_type7(&sorted, 0.5);
    let q3 = quantile_type7(&sorted, 0.75);
    let iqr = q3 - q1;
    let fence_low = q1 - 1.5 * iqr;
    let fence_high = q3 + 1.5 * iqr;

    let inside: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v >= fence_low && *v <= fence_high)
        .collect();
    // quartiles always lie inside the fences, so `inside` is non-empty
    let whisker_low = inside[0];
    let whisker_high = inside[inside.len() - 1];
    let outliers: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|v| *v < fence_low || *v > fence_high)
        .collect();

    Ok(BoxplotStats {
        min: sorted[0],
        q1,
        median,
        q3,
        max: sorted[sorted.len() - 1],
        whisker_low,
        whisker_high,
        outliers,
    })
}

/// Side-by-side box-and-whisker glyphs on a shared value axis; outliers
/// drawn as circles.
pub fn render_boxplots(groups: &[(String, BoxplotStats)]) -> Result<String, RenderError> {
    if groups.is_empty() {
        return Err(RenderError::EmptyInput);
    }
    let lo = groups
        .iter()
        .flat_map(|(_, s)| {
            s.outliers
                .iter()
                .copied()
                .chain([s.min, s.whisker_low])
        })
        .fold(f64::INFINITY, f64::min);
    let hi = groups
        .iter()
        .flat_map(|(_, s)| {
            s.outliers
                .iter()
                .copied()
                .chain([s.max, s.whisker_high])
        })
        .fold(f64::NEG_INFINITY, f64::max);
    let span = (hi - lo).max(f64::MIN_POSITIVE);

    let plot_h = CHART_H - MARGIN_TOP - MARGIN_BOTTOM;
    let plot_w = CHART_W - MARGIN_LEFT - MARGIN_RIGHT;
    let to_y = |v: f64| CHART_H - MARGIN_BOTTOM - (v - lo) / span * plot_h;

    let mut svg = svg_open(CHART_W, CHART_H);
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");

    // shared value axis with 1-2-5 ticks over [lo, hi]
    let step = nice_step(span, 6);
    let mut tick = (lo / step).ceil() * step;
    while tick <= hi + 1e-9 * span {
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#cccccc\"/>\n",
            fmt6(MARGIN_LEFT - 4.0),
            fmt6(to_y(tick)),
            fmt6(CHART_W - MARGIN_RIGHT),
            fmt6(to_y(tick))
        ));
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"10\" text-anchor=\"end\" fill=\"#333333\">{}</text>\n",
            fmt6(MARGIN_LEFT - 8.0),
            fmt6(to_y(tick) + 3.0),
            fmt6(tick)
        ));
        tick += step;
    }
    svg.push_str(&format!(
        "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
        fmt6(MARGIN_LEFT),
        fmt6(MARGIN_TOP),
        fmt6(MARGIN_LEFT),
        fmt6(CHART_H - MARGIN_BOTTOM)
    ));

    let slot = plot_w / groups.len() as f64;
    let box_w = (slot * 0.5).min(60.0);
    for (i, (label, s)) in groups.iter().enumerate() {
        let cx = MARGIN_LEFT + (i as f64 + 0.5) * slot;
        let half = box_w / 2.0;
        // whisker stem and caps
        for (a, b) in [(s.whisker_low, s.q1), (s.q3, s.whisker_high)] {
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
                fmt6(cx),
                fmt6(to_y(a)),
                fmt6(cx),
                fmt6(to_y(b))
            ));
        }
        for w in [s.whisker_low, s.whisker_high] {
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\"/>\n",
                fmt6(cx - half / 2.0),
                fmt6(to_y(w)),
                fmt6(cx + half / 2.0),
                fmt6(to_y(w))
            ));
        }
        // box and median
        svg.push_str(&format!(
            "<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#dbe7f2\" stroke=\"#000000\"/>\n",
            fmt6(cx - half),
            fmt6(to_y(s.q3)),
            fmt6(box_w),
            fmt6(to_y(s.q1) - to_y(s.q3))
        ));
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#000000\" stroke-width=\"1.5\"/>\n",
            fmt6(cx - half),
            fmt6(to_y(s.median)),
            fmt6(cx + half),
            fmt6(to_y(s.median))
        ));
        for outlier in &s.outliers {
            svg.push_str(&format!(
                "<circle cx=\"{}\" cy=\"{}\" r=\"2.5\" fill=\"none\" stroke=\"#000000\"/>\n",
                fmt6(cx),
                fmt6(to_y(*outlier))
            ));
        }
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"middle\" fill=\"#333333\">{}</text>\n",
            fmt6(cx),
            fmt6(CHART_H - MARGIN_BOTTOM + 14.0),
            xml_escape(label)
        ));
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

// ---------------------------------------------------------------------------
// Polar correlation

const POLAR_SIZE: f64 = 500.0;
const POLAR_RADIUS: f64 = 190.0;

/// Draws variables on a unit circle: variable 0 at angle 0, variable i at
/// the cumulative angle `sum_{j<i} theta_{j,j+1}`; every pair gets a
/// chord annotated with its required angle. Pairs whose drawn angular
/// separation disagrees with the required angle are flagged with a
/// dashed red stroke — a circle offers only one dimension, so a valid
/// matrix can still show flagged chords.
pub fn render_polar_correlation(report: &ValidityReport) -> Result<String, RenderError> {
    let n = report.angles.len();
    if n > 12 {
        return Err(RenderError::TooManyVariables(n));
    }
    if n == 0 {
        return Err(RenderError::EmptyInput);
    }
    let tol = 1e-9;

    let mut positions = vec![0.0f64; n];
    for i in 1..n {
        positions[i] = positions[i - 1] + report.angles[i - 1][i];
    }

    let center = POLAR_SIZE / 2.0;
    let at = |angle: f64| -> (f64, f64) {
        // angles run counter-clockwise from the +x axis; SVG y is down
        (
            center + POLAR_RADIUS * angle.cos(),
            center - POLAR_RADIUS * angle.sin(),
        )
    };

    let mut svg = svg_open(POLAR_SIZE, POLAR_SIZE);
    svg.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    svg.push_str(&format!(
        "<circle cx=\"{}\" cy=\"{}\" r=\"{}\" fill=\"none\" stroke=\"#888888\"/>\n",
        fmt6(center),
        fmt6(center),
        fmt6(POLAR_RADIUS)
    ));

    // spokes and labels
    for (i, angle) in positions.iter().enumerate() {
        let (x, y) = at(*angle);
        svg.push_str(&format!(
            "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#bbbbbb\"/>\n",
            fmt6(center),
            fmt6(center),
            fmt6(x),
            fmt6(y)
        ));
        let (lx, ly) = (
            center + (POLAR_RADIUS + 16.0) * angle.cos(),
            center - (POLAR_RADIUS + 16.0) * angle.sin(),
        );
        svg.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"12\" text-anchor=\"middle\" fill=\"#333333\">{}</text>\n",
            fmt6(lx),
            fmt6(ly + 4.0),
            i
        ));
    }

    // chords with required-angle annotations
    for i in 0..n {
        for j in (i + 1)..n {
            let required = report.angles[i][j];
            let raw = (positions[j] - positions[i]).abs() % (2.0 * std::f64::consts::PI);
            let drawn = raw.min(2.0 * std::f64::consts::PI - raw);
            let invalid = (drawn - required).abs() > tol;
            let (x1, y1) = at(positions[i]);
            let (x2, y2) = at(positions[j]);
            let style = if invalid {
                "stroke=\"#cc3333\" stroke-dasharray=\"6,3\""
            } else {
                "stroke=\"#555555\""
            };
            svg.push_str(&format!(
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" {}/>\n",
                fmt6(x1),
                fmt6(y1),
                fmt6(x2),
                fmt6(y2),
                style
            ));
            svg.push_str(&format!(
                "<text x=\"{}\" y=\"{}\" font-size=\"9\" text-anchor=\"middle\" fill=\"{}\">{}</text>\n",
                fmt6((x1 + x2) / 2.0),
                fmt6((y1 + y2) / 2.0 - 3.0),
                if invalid { "#cc3333" } else { "#777777" },
                fmt6(required)
            ));
        }
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}
