//! Time-indexed feature matrices shared by extraction, beat alignment,
//! reduction, similarity and rendering.
//!
//! A [`FeatureMatrix`] serializes to CSV (first column `time`, remaining
//! columns headed by the dimension labels) and to JSON
//! (`{kind, frame_times, dim_labels, values}`).

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// What a feature matrix holds; drives precondition checks downstream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureKind {
    Spectrogram,
    Mfcc,
    Cqt,
    Chroma,
    Onset,
    Embedding,
}

impl FeatureKind {
    /// Guesses a kind from CSV column labels, for files round-tripped
    /// through the CSV form (which carries no kind field).
    pub fn infer_from_labels(labels: &[String]) -> FeatureKind {
        let starts = |prefix: &str| labels.iter().all(|l| l.starts_with(prefix));
        if labels.is_empty() {
            FeatureKind::Embedding
        } else if labels.len() == 1 && labels[0] == "onset" {
            FeatureKind::Onset
        } else if starts("hz:") {
            FeatureKind::Spectrogram
        } else if starts("mfcc:") {
            FeatureKind::Mfcc
        } else if labels.len() == 12 && starts("pc:") {
            FeatureKind::Chroma
        } else if labels
            .iter()
            .all(|l| crate::spectral::parse_note_label(l).is_some())
        {
            FeatureKind::Cqt
        } else {
            FeatureKind::Embedding
        }
    }
}

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("frame times must be strictly increasing")]
    NonMonotonicTimes,
    #[error("csv parse error at line {line}: {message}")]
    CsvParse { line: usize, message: String },
}

/// Frames-by-dimensions matrix of descriptor values with per-frame times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub kind: FeatureKind,
    pub frame_times: Vec<f64>,
    pub dim_labels: Vec<String>,
    /// `values[t][d]`: frame t, dimension d.
    pub values: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    /// Builds a matrix, checking the shape and time-axis invariants.
    pub fn new(
        kind: FeatureKind,
        frame_times: Vec<f64>,
        dim_labels: Vec<String>,
        values: Vec<Vec<f64>>,
    ) -> Result<Self, FeatureError> {
        if frame_times.len() != values.len() {
            return Err(FeatureError::ShapeMismatch(format!(
                "{} frame times for {} rows",
                frame_times.len(),
                values.len()
            )));
        }
        for (t, row) in values.iter().enumerate() {
            if row.len() != dim_labels.len() {
                return Err(FeatureError::ShapeMismatch(format!(
                    "row {t} has {} values for {} labels",
                    row.len(),
                    dim_labels.len()
                )));
            }
        }
        if frame_times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(FeatureError::NonMonotonicTimes);
        }
        Ok(FeatureMatrix {
            kind,
            frame_times,
            dim_labels,
            values,
        })
    }

    pub fn n_frames(&self) -> usize {
        self.values.len()
    }

    pub fn n_dims(&self) -> usize {
        self.dim_labels.len()
    }

    /// CSV form: header `time,<label0>,...`, one row per frame.
    /// Labels must not contain commas or newlines.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("time");
        for label in &self.dim_labels {
            out.push(',');
            out.push_str(label);
        }
        out.push('\n');
        for (time, row) in self.frame_times.iter().zip(self.values.iter()) {
            out.push_str(&format!("{time:?}"));
            for v in row {
                out.push(',');
                out.push_str(&format!("{v:?}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form written by [`Self::to_csv`]; the kind is
    /// re-inferred from the labels.
    pub fn from_csv(text: &str) -> Result<Self, FeatureError> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(FeatureError::CsvParse {
            line: 1,
            message: "empty input".into(),
        })?;
        let mut cols = header.split(',');
        let first = cols.next().unwrap_or("").trim();
        if first != "time" {
            return Err(FeatureError::CsvParse {
                line: 1,
                message: format!("expected first header column `time`, got `{first}`"),
            });
        }
        let dim_labels: Vec<String> = cols.map(|c| c.trim().to_string()).collect();
        let mut frame_times = Vec::new();
        let mut values = Vec::new();
        for (idx, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != dim_labels.len() + 1 {
                return Err(FeatureError::CsvParse {
                    line: idx + 1,
                    message: format!(
                        "expected {} fields, got {}",
                        dim_labels.len() + 1,
                        fields.len()
                    ),
                });
            }
            let mut parsed = Vec::with_capacity(fields.len());
            for f in &fields {
                let v: f64 = f.trim().parse().map_err(|_| FeatureError::CsvParse {
                    line: idx + 1,
                    message: format!("bad number `{f}`"),
                })?;
                parsed.push(v);
            }
            frame_times.push(parsed[0]);
            values.push(parsed[1..].to_vec());
        }
        let kind = FeatureKind::infer_from_labels(&dim_labels);
        FeatureMatrix::new(kind, frame_times, dim_labels, values)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("feature matrix serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> FeatureMatrix {
        FeatureMatrix::new(
            FeatureKind::Chroma,
            vec![0.0, 0.5, 1.0],
            (0..12).map(|c| format!("pc:{c}")).collect(),
            vec![vec![0.25; 12], vec![0.5; 12], vec![0.125; 12]],
        )
        .unwrap()
    }

    #[test]
    fn rejects_shape_and_time_violations() {
        assert!(matches!(
            FeatureMatrix::new(
                FeatureKind::Onset,
                vec![0.0, 1.0],
                vec!["onset".into()],
                vec![vec![0.0]],
            ),
            Err(FeatureError::ShapeMismatch(_))
        ));
        assert!(matches!(
            FeatureMatrix::new(
                FeatureKind::Onset,
                vec![0.0, 0.0],
                vec!["onset".into()],
                vec![vec![0.0], vec![1.0]],
            ),
            Err(FeatureError::NonMonotonicTimes)
        ));
    }

    #[test]
    fn csv_round_trip_preserves_matrix() {
        let m = sample();
        let back = FeatureMatrix::from_csv(&m.to_csv()).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn json_round_trip_preserves_matrix_and_kind() {
        let m = sample();
        let back = FeatureMatrix::from_json(&m.to_json()).unwrap();
        assert_eq!(m, back);
        assert_eq!(back.kind, FeatureKind::Chroma);
    }

    #[test]
    fn kind_inference_from_labels() {
        let pcs: Vec<String> = (0..12).map(|c| format!("pc:{c}")).collect();
        assert_eq!(FeatureKind::infer_from_labels(&pcs), FeatureKind::Chroma);
        let hz: Vec<String> = vec!["hz:0.0".into(), "hz:10.0".into()];
        assert_eq!(FeatureKind::infer_from_labels(&hz), FeatureKind::Spectrogram);
        let notes: Vec<String> = vec!["C1".into(), "C#1".into()];
        assert_eq!(FeatureKind::infer_from_labels(&notes), FeatureKind::Cqt);
        let other: Vec<String> = vec!["dim:0".into()];
        assert_eq!(
            FeatureKind::infer_from_labels(&other),
            FeatureKind::Embedding
        );
    }
}
