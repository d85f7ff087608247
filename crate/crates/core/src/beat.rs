//! Beat grids and beat-aligned feature aggregation.
//!
//! Grids come from annotation files (one beat time per line) or from a
//! fixed-tempo estimator driven by the onset envelope. Frame-level
//! features are aggregated per inter-beat interval by median or mean.

use crate::features::{FeatureKind, FeatureMatrix};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum BeatError {
    #[error("beat times must be non-negative and strictly increasing (line {0})")]
    NotMonotonic(usize),
    #[error("need at least 2 beat times, got {0}")]
    TooFewBeats(usize),
    #[error("parse error at line {line}: {message}")]
    ParseError { line: usize, message: String },
    #[error("expected an onset matrix, got {0}")]
    WrongKind(String),
    #[error("need at least 4 onset frames, got {0}")]
    TooFewFrames(usize),
    #[error("onset envelope is all zero; no beats to find")]
    NoBeats,
    #[error("frame hop too coarse for the 60-180 BPM search range")]
    TempoRangeEmpty,
    #[error("estimated grid has fewer than 2 beats inside the clip")]
    GridTooShort,
    #[error("features and beat grid cover disjoint time ranges")]
    NoOverlap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BeatSource {
    Annotated,
    Estimated,
}

/// Strictly increasing beat times in seconds.
#[derive(Debug, Clone, PartialEq)]
pub struct BeatGrid {
    pub beat_times: Vec<f64>,
    pub source: BeatSource,
    pub tempo_bpm: Option<f64>,
}

/// Per-interval aggregation method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Aggregation {
    Median,
    Mean,
}

impl std::str::FromStr for Aggregation {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "median" => Ok(Aggregation::Median),
            "mean" => Ok(Aggregation::Mean),
            other => Err(format!("unknown aggregation `{other}`")),
        }
    }
}

/// Parses a beat annotation file: one decimal time per line, blank lines
/// and `#` comments ignored.
pub fn load_beats(text: &str) -> Result<BeatGrid, BeatError> {
    let mut beats: Vec<(usize, f64)> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let t: f64 = line.parse().map_err(|_| BeatError::ParseError {
            line: idx + 1,
            message: format!("bad beat time `{line}`"),
        })?;
        beats.push((idx + 1, t));
    }
    if beats.len() < 2 {
        return Err(BeatError::TooFewBeats(beats.len()));
    }
    if beats[0].1 < 0.0 {
        return Err(BeatError::NotMonotonic(beats[0].0));
    }
    for w in beats.windows(2) {
        if w[1].1 <= w[0].1 {
            return Err(BeatError::NotMonotonic(w[1].0));
        }
    }
    Ok(BeatGrid {
        beat_times: beats.into_iter().map(|(_, t)| t).collect(),
        source: BeatSource::Annotated,
        tempo_bpm: None,
    })
}

/// Writes a grid in the annotation format accepted by [`load_beats`].
pub fn format_beats(grid: &BeatGrid) -> String {
    let mut out = String::new();
    for t in &grid.beat_times {
        out.push_str(&format!("{t:?}\n"));
    }
    out
}

/// Fixed-grid beat estimation from an onset envelope.
///
/// Tempo is the autocorrelation argmax over lags in the 60-180 BPM range
/// (ties go to the slower tempo); phase is the grid offset that maximizes
/// the envelope sampled on the grid. The grid is clipped to
/// `[0, duration]`.
pub fn estimate_beats(onset: &FeatureMatrix, duration: f64) -> Result<BeatGrid, BeatError> {
    if onset.kind != FeatureKind::Onset {
        return Err(BeatError::WrongKind(format!("{:?}", onset.kind).to_lowercase()));
    }
    let n = onset.n_frames();
    if n < 4 {
        return Err(BeatError::TooFewFrames(n));
    }
    let env: Vec<f64> = onset.values.iter().map(|r| r[0]).collect();
    if env.iter().all(|v| *v == 0.0) {
        return Err(BeatError::NoBeats);
    }
    let dt = onset.frame_times[1] - onset.frame_times[0];

    // 60-180 BPM -> beat period between 1/3 s and 1 s
    let lag_lo = ((60.0 / 180.0) / dt).ceil() as usize;
    let lag_hi = (((60.0 / 60.0) / dt).floor() as usize).min(n - 1);
    if lag_lo < 1 || lag_lo > lag_hi {
        return Err(BeatError::TempoRangeEmpty);
    }

    let mut best_lag = lag_lo;
    let mut best_r = f64::NEG_INFINITY;
    for lag in lag_lo..=lag_hi {
        let r: f64 = (0..n - lag).map(|t| env[t] * env[t + lag]).sum();
        if r >= best_r {
            // >= so exact ties resolve to the longest lag (slowest tempo)
            best_r = r;
            best_lag = lag;
        }
    }

    let mut best_offset = 0;
    let mut best_score = f64::NEG_INFINITY;
    for offset in 0..best_lag {
        let score: f64 = (offset..n).step_by(best_lag).map(|t| env[t]).sum();
        if score > best_score {
            best_score = score;
            best_offset = offset;
        }
    }

    let period = best_lag as f64 * dt;
    let phase = best_offset as f64 * dt;
    let mut beat_times = Vec::new();
    let mut m = 0usize;
    loop {
        let t = phase + m as f64 * period;
        if t > duration {
            break;
        }
        beat_times.push(t);
        m += 1;
    }
    if beat_times.len() < 2 {
        return Err(BeatError::GridTooShort);
    }
    Ok(BeatGrid {
        beat_times,
        source: BeatSource::Estimated,
        tempo_bpm: Some(60.0 / period),
    })
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(|a, b| a.total_cmp(b));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        (values[n / 2 - 1] + values[n / 2]) / 2.0
    }
}

/// Aggregates frames into inter-beat intervals.
///
/// Output frame `i` combines all input frames with time in
/// `[beat_i, beat_{i+1})`; an empty interval copies the temporally
/// nearest frame (ties to the earlier one). Output times are the
/// interval start times.
pub fn beat_aggregate(
    features: &FeatureMatrix,
    grid: &BeatGrid,
    method: Aggregation,
) -> Result<FeatureMatrix, BeatError> {
    let times = &features.frame_times;
    let beats = &grid.beat_times;
    let overlap_lo = beats[0].max(times[0]);
    let overlap_hi = beats[beats.len() - 1].min(times[times.len() - 1]);
    if overlap_lo > overlap_hi {
        return Err(BeatError::NoOverlap);
    }

    let n_dims = features.n_dims();
    let mut out_values = Vec::with_capacity(beats.len() - 1);
    for w in beats.windows(2) {
        let (start, end) = (w[0], w[1]);
        let rows: Vec<usize> = (0..times.len())
            .filter(|&t| times[t] >= start && times[t] < end)
            .collect();
        let row = if rows.is_empty() {
            // distance from a frame time to the interval, as a set
            let dist = |t: f64| {
                if t < start {
                    start - t
                } else {
                    t - end
                }
            };
            let nearest = (0..times.len())
                .min_by(|&a, &b| dist(times[a]).total_cmp(&dist(times[b])))
                .expect("features are non-empty");
            features.values[nearest].clone()
        } else {
            (0..n_dims)
                .map(|d| {
                    let mut column: Vec<f64> = rows.iter().map(|&t| features.values[t][d]).collect();
                    match method {
                        Aggregation::Median => median(&mut column),
                        Aggregation::Mean => column.iter().sum::<f64>() / column.len() as f64,
                    }
                })
                .collect()
        };
        out_values.push(row);
    }

    Ok(FeatureMatrix::new(
        features.kind,
        beats[..beats.len() - 1].to_vec(),
        features.dim_labels.clone(),
        out_values,
    )
    .expect("aggregated output is rectangular"))
}
