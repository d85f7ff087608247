//! Distance measures, self-similarity matrices, and correlation-matrix
//! validity checking.

use crate::features::FeatureMatrix;
use crate::linalg;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SimilarityError {
    #[error("vector lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("vectors must be non-empty")]
    EmptyVector,
    #[error("need at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("matrix is not square: row {row} has {len} entries for {n} rows")]
    NotSquare { row: usize, len: usize, n: usize },
    #[error("need at least 2 variables, got {0}")]
    TooFewVariables(usize),
}

/// Distance measure between descriptor vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Euclidean,
    Cosine,
    Correlation,
}

impl std::str::FromStr for Metric {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "euclidean" => Ok(Metric::Euclidean),
            "cosine" => Ok(Metric::Cosine),
            "correlation" => Ok(Metric::Correlation),
            other => Err(format!("unknown metric `{other}`")),
        }
    }
}

/// Pairwise distances between frames; symmetric with a zero diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub values: Vec<Vec<f64>>,
    pub metric: Metric,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.values.len()
    }

    /// Plain numeric CSV, one row per line.
    pub fn to_csv(&self) -> String {
        matrix_to_csv(&self.values)
    }

    /// Checks the type invariants: square, symmetric within 1e-12,
    /// zero diagonal, non-negative entries.
    pub fn validate(&self) -> Result<(), SimilarityError> {
        let n = self.values.len();
        for (i, row) in self.values.iter().enumerate() {
            if row.len() != n {
                return Err(SimilarityError::NotSquare {
                    row: i,
                    len: row.len(),
                    n,
                });
            }
        }
        for i in 0..n {
            debug_assert!(self.values[i][i] == 0.0);
            debug_assert!(self.values[i].iter().all(|v| *v >= 0.0));
            for j in (i + 1)..n {
                debug_assert!((self.values[i][j] - self.values[j][i]).abs() <= 1e-12);
            }
        }
        Ok(())
    }
}

/// Serializes any numeric matrix row-wise as comma-separated values.
pub fn matrix_to_csv(values: &[Vec<f64>]) -> String {
    let mut out = String::new();
    for row in values {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}

/// Parses a plain numeric CSV matrix (no header).
pub fn matrix_from_csv(text: &str) -> Result<Vec<Vec<f64>>, String> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for cell in line.split(',') {
            row.push(
                cell.trim()
                    .parse::<f64>()
                    .map_err(|_| format!("bad number `{cell}` at line {}", i + 1))?,
            );
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Distance between two equal-length vectors.
///
/// Euclidean is `sqrt(sum((x_i - y_i)^2))`; cosine is `1 - x.y/(|x||y|)`
/// with zero-vector similarity defined as 0; correlation is
/// `1 - pearson(x, y)` with zero-variance correlation defined as 0.
pub fn distance(x: &[f64], y: &[f64], metric: Metric) -> Result<f64, SimilarityError> {
    if x.is_empty() || y.is_empty() {
        return Err(SimilarityError::EmptyVector);
    }
    if x.len() != y.len() {
        return Err(SimilarityError::LengthMismatch(x.len(), y.len()));
    }
    Ok(match metric {
        Metric::Euclidean => x
            .iter()
            .zip(y.iter())
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt(),
        Metric::Cosine => {
            let dot: f64 = x.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
            let nx: f64 = x.iter().map(|a| a * a).sum::<f64>().sqrt();
            let ny: f64 = y.iter().map(|b| b * b).sum::<f64>().sqrt();
            let similarity = if nx == 0.0 || ny == 0.0 {
                0.0
            } else {
                dot / (nx * ny)
            };
            1.0 - similarity
        }
        Metric::Correlation => 1.0 - linalg::pearson(x, y),
    })
}

/// Distance between every pair of frames. The diagonal is identically 0
/// and the matrix is symmetric by construction.
pub fn self_similarity(
    features: &FeatureMatrix,
    metric: Metric,
) -> Result<DistanceMatrix, SimilarityError> {
    let n = features.n_frames();
    if n < 2 {
        return Err(SimilarityError::TooFewFrames(n));
    }
    let mut values = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let d = distance(&features.values[i], &features.values[j], metric)?;
            values[i][j] = d;
            values[j][i] = d;
        }
    }
    Ok(DistanceMatrix { values, metric })
}

/// Diagnostics for a claimed correlation matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ValidityReport {
    pub symmetric: bool,
    pub unit_diagonal: bool,
    pub entries_in_range: bool,
    pub min_eigenvalue: f64,
    /// `min_eigenvalue >= -tol`.
    pub psd: bool,
    /// `angles[i][j] = arccos(clamp(r_ij, -1, 1))`, radians.
    pub angles: Vec<Vec<f64>>,
    /// Ordered triples (i, j, k), i < j < k, whose angles break the
    /// triangle inequality `|a_ij - a_jk| <= a_ik <= a_ij + a_jk`.
    pub triangle_violations: Vec<(usize, usize, usize)>,
}

impl ValidityReport {
    /// Everything holds: shape checks, PSD, and no triangle violations.
    pub fn is_valid(&self) -> bool {
        self.symmetric
            && self.unit_diagonal
            && self.entries_in_range
            && self.psd
            && self.triangle_violations.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Checks whether `r` can be a correlation matrix: symmetry, unit
/// diagonal, range, positive semidefiniteness (minimum eigenvalue by
/// cyclic Jacobi), and the angle triangle inequality on every triple.
pub fn validate_correlation_matrix(
    r: &[Vec<f64>],
    tol: f64,
) -> Result<ValidityReport, SimilarityError> {
    let n = r.len();
    for (i, row) in r.iter().enumerate() {
        if row.len() != n {
            return Err(SimilarityError::NotSquare {
                row: i,
                len: row.len(),
                n,
            });
        }
    }
    if n < 2 {
        return Err(SimilarityError::TooFewVariables(n));
    }

    let mut symmetric = true;
    let mut unit_diagonal = true;
    let mut entries_in_range = true;
    for i in 0..n {
        if (r[i][i] - 1.0).abs() > tol {
            unit_diagonal = false;
        }
        for j in 0..n {
            if (r[i][j] - r[j][i]).abs() > tol {
                symmetric = false;
            }
            if r[i][j].abs() > 1.0 + tol {
                entries_in_range = false;
            }
        }
    }

    // eigenvalues of the symmetric part
    let sym: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| 0.5 * (r[i][j] + r[j][i])).collect())
        .collect();
    let (eigenvalues, _) = linalg::symmetric_eigen(&sym);
    let min_eigenvalue = eigenvalues.last().copied().unwrap_or(0.0);

    let angles: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| r[i][j].clamp(-1.0, 1.0).acos()).collect())
        .collect();

    let mut triangle_violations = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                let (aij, ajk, aik) = (angles[i][j], angles[j][k], angles[i][k]);
                if aik > aij + ajk + tol || aik < (aij - ajk).abs() - tol {
                    triangle_violations.push((i, j, k));
                }
            }
        }
    }

    Ok(ValidityReport {
        symmetric,
        unit_diagonal,
        entries_in_range,
        min_eigenvalue,
        psd: min_eigenvalue >= -tol,
        angles,
        triangle_violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::FeatureKind;

    fn matrix(values: Vec<Vec<f64>>) -> FeatureMatrix {
        let dims = values[0].len();
        FeatureMatrix::new(
            FeatureKind::Embedding,
            (0..values.len()).map(|i| i as f64).collect(),
            (0..dims).map(|d| format!("dim:{d}")).collect(),
            values,
        )
        .unwrap()
    }

    fn lcg(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed;
        move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64) / (1u64 << 53) as f64 - 0.5
        }
    }

    /// The worked pitch-profile example: reference triad at half volume,
    /// silence, and the same triad at full volume.
    fn profile_example() -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        let mut pr = vec![0.0; 12];
        let mut p2 = vec![0.0; 12];
        for c in [0usize, 4, 7] {
            pr[c] = 0.5;
            p2[c] = 1.0;
        }
        (pr, vec![0.0; 12], p2)
    }

    #[test]
    fn euclidean_cannot_tell_silence_from_louder_triad() {
        let (pr, p1, p2) = profile_example();
        let d1 = distance(&p1, &pr, Metric::Euclidean).unwrap();
        let d2 = distance(&p2, &pr, Metric::Euclidean).unwrap();
        assert!((d1 - d2).abs() < 1e-12);
        assert!((d1 - 0.75f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn correlation_ranks_louder_triad_closer() {
        let (pr, p1, p2) = profile_example();
        let d1 = distance(&p1, &pr, Metric::Correlation).unwrap();
        let d2 = distance(&p2, &pr, Metric::Correlation).unwrap();
        assert!((d1 - 1.0).abs() < 1e-12); // zero-variance convention
        assert!(d2.abs() < 1e-12);
        assert!(d2 < d1);
    }

    #[test]
    fn identity_distance_is_zero() {
        let x = vec![0.3, -0.7, 2.5, 0.0];
        for metric in [Metric::Euclidean, Metric::Cosine, Metric::Correlation] {
            assert!(distance(&x, &x, metric).unwrap().abs() < 1e-12);
        }
    }

    #[test]
    fn distances_are_symmetric_and_nonnegative() {
        let mut next = lcg(21);
        for _ in 0..10 {
            let x: Vec<f64> = (0..6).map(|_| next()).collect();
            let y: Vec<f64> = (0..6).map(|_| next()).collect();
            for metric in [Metric::Euclidean, Metric::Cosine, Metric::Correlation] {
                let dxy = distance(&x, &y, metric).unwrap();
                let dyx = distance(&y, &x, metric).unwrap();
                assert!((dxy - dyx).abs() < 1e-12);
                assert!(dxy >= 0.0);
            }
        }
    }

    #[test]
    fn euclidean_triangle_inequality_on_random_triples() {
        let mut next = lcg(31);
        for _ in 0..50 {
            let a: Vec<f64> = (0..5).map(|_| next()).collect();
            let b: Vec<f64> = (0..5).map(|_| next()).collect();
            let c: Vec<f64> = (0..5).map(|_| next()).collect();
            let ab = distance(&a, &b, Metric::Euclidean).unwrap();
            let bc = distance(&b, &c, Metric::Euclidean).unwrap();
            let ac = distance(&a, &c, Metric::Euclidean).unwrap();
            assert!(ac <= ab + bc + 1e-12);
        }
    }

    #[test]
    fn distance_errors() {
        assert!(matches!(
            distance(&[], &[], Metric::Euclidean),
            Err(SimilarityError::EmptyVector)
        ));
        assert!(matches!(
            distance(&[1.0], &[1.0, 2.0], Metric::Euclidean),
            Err(SimilarityError::LengthMismatch(1, 2))
        ));
    }

    #[test]
    fn ssm_symmetric_zero_diagonal() {
        let mut next = lcg(41);
        let m = matrix((0..8).map(|_| (0..3).map(|_| next()).collect()).collect());
        let ssm = self_similarity(&m, Metric::Cosine).unwrap();
        ssm.validate().unwrap();
        for i in 0..8 {
            assert_eq!(ssm.values[i][i], 0.0);
            for j in 0..8 {
                assert_eq!(ssm.values[i][j], ssm.values[j][i]);
            }
        }
    }

    #[test]
    fn ssm_identical_frames_have_zero_distance() {
        let m = matrix(vec![vec![1.0, 2.0], vec![0.5, 0.1], vec![1.0, 2.0]]);
        let ssm = self_similarity(&m, Metric::Euclidean).unwrap();
        assert_eq!(ssm.values[0][2], 0.0);
    }

    #[test]
    fn ssm_matches_double_loop_oracle() {
        let mut next = lcg(51);
        let values: Vec<Vec<f64>> = (0..10).map(|_| (0..4).map(|_| next()).collect()).collect();
        let m = matrix(values.clone());
        for metric in [Metric::Euclidean, Metric::Cosine, Metric::Correlation] {
            let ssm = self_similarity(&m, metric).unwrap();
            for i in 0..10 {
                for j in 0..10 {
                    let expect = if i == j {
                        0.0
                    } else {
                        distance(&values[i], &values[j], metric).unwrap()
                    };
                    assert!((ssm.values[i][j] - expect).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ssm_invariant_under_dimension_reordering() {
        let mut next = lcg(61);
        let values: Vec<Vec<f64>> = (0..6).map(|_| (0..5).map(|_| next()).collect()).collect();
        let reordered: Vec<Vec<f64>> = values
            .iter()
            .map(|r| vec![r[3], r[0], r[4], r[1], r[2]])
            .collect();
        for metric in [Metric::Euclidean, Metric::Cosine, Metric::Correlation] {
            let a = self_similarity(&matrix(values.clone()), metric).unwrap();
            let b = self_similarity(&matrix(reordered.clone()), metric).unwrap();
            for i in 0..6 {
                for j in 0..6 {
                    assert!((a.values[i][j] - b.values[i][j]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn ssm_rejects_single_frame() {
        let m = matrix(vec![vec![1.0]]);
        assert!(matches!(
            self_similarity(&m, Metric::Euclidean),
            Err(SimilarityError::TooFewFrames(1))
        ));
    }

    #[test]
    fn identity_matrix_is_valid() {
        let r = vec![
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ];
        let report = validate_correlation_matrix(&r, 1e-9).unwrap();
        assert!(report.is_valid());
        assert!((report.min_eigenvalue - 1.0).abs() < 1e-9);
        assert!(report.triangle_violations.is_empty());
    }

    #[test]
    fn infeasible_correlations_are_flagged() {
        let r: Vec<Vec<f64>> = vec![
            vec![1.0, 0.9, -0.9],
            vec![0.9, 1.0, 0.9],
            vec![-0.9, 0.9, 1.0],
        ];
        // determinant oracle for the 3x3 case
        let det = r[0][0] * (r[1][1] * r[2][2] - r[1][2] * r[2][1])
            - r[0][1] * (r[1][0] * r[2][2] - r[1][2] * r[2][0])
            + r[0][2] * (r[1][0] * r[2][1] - r[1][1] * r[2][0]);
        assert!((det + 2.888).abs() < 1e-9);

        let report = validate_correlation_matrix(&r, 1e-9).unwrap();
        assert!(report.symmetric && report.unit_diagonal && report.entries_in_range);
        assert!(!report.psd);
        assert!(report.min_eigenvalue < 0.0);
        assert_eq!(report.triangle_violations, vec![(0, 1, 2)]);

        // direct angle arithmetic: acos(.9) + acos(.9) < acos(-.9)
        let needed = (-0.9f64).acos();
        let available = 2.0 * 0.9f64.acos();
        assert!((available - 0.902).abs() < 1e-3);
        assert!((needed - 2.691).abs() < 1e-3);
        assert!(available < needed);
    }

    #[test]
    fn gram_matrices_of_unit_vectors_are_valid() {
        let mut next = lcg(71);
        for trial in 0..10 {
            let vecs: Vec<Vec<f64>> = (0..4)
                .map(|_| {
                    let v: Vec<f64> = (0..6).map(|_| next()).collect();
                    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| x / norm).collect()
                })
                .collect();
            let r: Vec<Vec<f64>> = (0..4)
                .map(|i| {
                    (0..4)
                        .map(|j| vecs[i].iter().zip(vecs[j].iter()).map(|(a, b)| a * b).sum())
                        .collect()
                })
                .collect();
            let report = validate_correlation_matrix(&r, 1e-9).unwrap();
            assert!(report.is_valid(), "trial {trial}: {report:?}");
        }
    }

    #[test]
    fn psd_random_gram_matrices_have_no_triangle_violations() {
        let mut next = lcg(81);
        for _ in 0..10 {
            // A^T A normalized to unit diagonal is PSD with entries in [-1,1]
            let a: Vec<Vec<f64>> = (0..5).map(|_| (0..3).map(|_| next()).collect()).collect();
            let mut g = vec![vec![0.0; 3]; 3];
            for i in 0..3 {
                for j in 0..3 {
                    g[i][j] = (0..5).map(|r| a[r][i] * a[r][j]).sum();
                }
            }
            let r: Vec<Vec<f64>> = (0..3)
                .map(|i| (0..3).map(|j| g[i][j] / (g[i][i] * g[j][j]).sqrt()).collect())
                .collect();
            let report = validate_correlation_matrix(&r, 1e-9).unwrap();
            assert!(report.psd);
            assert!(report.triangle_violations.is_empty());
        }
    }

    #[test]
    fn validate_rejects_non_square_and_tiny() {
        let bad = vec![vec![1.0, 0.5], vec![0.5]];
        assert!(matches!(
            validate_correlation_matrix(&bad, 1e-9),
            Err(SimilarityError::NotSquare { .. })
        ));
        let tiny = vec![vec![1.0]];
        assert!(matches!(
            validate_correlation_matrix(&tiny, 1e-9),
            Err(SimilarityError::TooFewVariables(1))
        ));
    }

    #[test]
    fn matrix_csv_round_trip() {
        let m = vec![vec![0.0, 1.5], vec![-2.25, 3.0]];
        let back = matrix_from_csv(&matrix_to_csv(&m)).unwrap();
        assert_eq!(m, back);
    }
}
