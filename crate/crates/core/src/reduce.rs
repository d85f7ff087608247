//! Dimensionality reduction (PCA via SVD, classical MDS, t-SNE) and the
//! exponential low-pass smoothing used for trajectory and color-sequence
//! views.

use crate::features::FeatureMatrix;
use crate::linalg;
use crate::similarity::DistanceMatrix;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ReduceError {
    #[error("need at least {need} points, got {got}")]
    TooFewPoints { need: usize, got: usize },
    #[error("k = {k} out of range 1..={max}")]
    KTooLarge { k: usize, max: usize },
    #[error("t-SNE embeds into 2 or 3 dimensions, not {0}")]
    UnsupportedDimension(usize),
    #[error("perplexity {perplexity} too large for {points} points (need points >= 3 * perplexity)")]
    PerplexityTooLarge { perplexity: f64, points: usize },
    #[error("perplexity must be at least 1")]
    BadPerplexity,
    #[error("distance matrix is not symmetric at ({0}, {1})")]
    NotSymmetric(usize, usize),
    #[error("distance matrix has a non-zero diagonal at {0}")]
    BadDiagonal(usize),
    #[error("smoothing factor must satisfy 0 < alpha <= 1, got {0}")]
    BadAlpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReduceMethod {
    Pca,
    Mds,
    Tsne,
}

/// Low-dimensional point configuration in input order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Embedding {
    pub method: ReduceMethod,
    /// `points[i]` is the embedded point for input row i.
    pub points: Vec<Vec<f64>>,
    /// Per-component variance, PCA only; non-negative, non-increasing.
    pub explained_variance: Option<Vec<f64>>,
    /// RNG seed, t-SNE only.
    pub seed: Option<u64>,
}

impl Embedding {
    pub fn n_points(&self) -> usize {
        self.points.len()
    }

    pub fn n_dims(&self) -> usize {
        self.points.first().map_or(0, |p| p.len())
    }

    /// CSV form: header `index,dim:0,...`, one row per point.
    pub fn to_csv(&self) -> String {
        let k = self.n_dims();
        let mut out = String::from("index");
        for d in 0..k {
            out.push_str(&format!(",dim:{d}"));
        }
        out.push('\n');
        for (i, p) in self.points.iter().enumerate() {
            out.push_str(&i.to_string());
            for v in p {
                out.push(',');
                out.push_str(&format!("{v:?}"));
            }
            out.push('\n');
        }
        out
    }

    /// Parses the CSV form written by [`Self::to_csv`]. Method metadata is
    /// not carried by CSV; the result reports the given method.
    pub fn from_csv(text: &str, method: ReduceMethod) -> Result<Self, String> {
        let mut lines = text.lines();
        let header = lines.next().ok_or("empty input")?;
        if !header.starts_with("index") {
            return Err(format!("expected header starting with `index`, got `{header}`"));
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let mut row = Vec::with_capacity(fields.len().saturating_sub(1));
            for f in &fields[1..] {
                row.push(
                    f.trim()
                        .parse::<f64>()
                        .map_err(|_| format!("bad number `{f}` at line {}", i + 2))?,
                );
            }
            points.push(row);
        }
        Ok(Embedding {
            method,
            points,
            explained_variance: None,
            seed: None,
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("embedding serializes")
    }
}

// ---------------------------------------------------------------------------
// PCA

/// PCA output: the embedding plus the loadings and the column means, so
/// callers can reconstruct or project new data.
#[derive(Debug, Clone)]
pub struct PcaSolution {
    pub embedding: Embedding,
    /// `components[j]` is the j-th loading vector (length = input dims).
    pub components: Vec<Vec<f64>>,
    pub column_means: Vec<f64>,
}

/// PCA keeping the loadings; see [`pca_project`].
pub fn pca(features: &FeatureMatrix, k: usize) -> Result<PcaSolution, ReduceError> {
    let n = features.n_frames();
    let d = features.n_dims();
    if n < 2 {
        return Err(ReduceError::TooFewPoints { need: 2, got: n });
    }
    if k == 0 || k > d {
        return Err(ReduceError::KTooLarge { k, max: d });
    }

    let mut centered = features.values.clone();
    let mut column_means = Vec::with_capacity(d);
    for col in 0..d {
        let mean: f64 = centered.iter().map(|r| r[col]).sum::<f64>() / n as f64;
        column_means.push(mean);
        for row in centered.iter_mut() {
            row[col] -= mean;
        }
    }

    let svd = linalg::thin_svd(&centered);
    let mut points: Vec<Vec<f64>> = (0..n).map(|i| svd.scores[i][..k].to_vec()).collect();
    let mut components: Vec<Vec<f64>> = svd.right[..k].to_vec();
    for (j, loading) in components.iter_mut().enumerate() {
        // sign convention: largest-magnitude loading positive
        let lead = loading
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if loading[lead] < 0.0 {
            for v in loading.iter_mut() {
                *v = -*v;
            }
            for p in points.iter_mut() {
                p[j] = -p[j];
            }
        }
    }
    let explained: Vec<f64> = svd.singular[..k]
        .iter()
        .map(|s| s * s / (n as f64 - 1.0))
        .collect();
    Ok(PcaSolution {
        embedding: Embedding {
            method: ReduceMethod::Pca,
            points,
            explained_variance: Some(explained),
            seed: None,
        },
        components,
        column_means,
    })
}

/// Projects frames onto the top-k right singular vectors of the
/// column-centered data matrix.
///
/// Component signs are fixed so each loading vector's largest-magnitude
/// entry is positive; explained variances are `sigma^2 / (n - 1)`.
pub fn pca_project(features: &FeatureMatrix, k: usize) -> Result<Embedding, ReduceError> {
    Ok(pca(features, k)?.embedding)
}

// ---------------------------------------------------------------------------
// Classical MDS

/// Classical MDS output: the embedding plus the full eigenvalue spectrum
/// of the double-centered matrix, so dropped (non-positive) axes can be
/// reported.
#[derive(Debug, Clone)]
pub struct MdsSolution {
    pub embedding: Embedding,
    /// All eigenvalues of the double-centered matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Requested axes that had no positive eigenvalue to back them.
    pub dropped_axes: usize,
}

/// Classical (Torgerson) multidimensional scaling.
///
/// Forms `B = -1/2 J D^2 J` and embeds with the top-k positive
/// eigenpairs; coordinates are `eigenvector * sqrt(eigenvalue)`.
pub fn classical_mds(distances: &DistanceMatrix, k: usize) -> Result<MdsSolution, ReduceError> {
    let d = &distances.values;
    let n = d.len();
    let scale = d
        .iter()
        .flat_map(|r| r.iter())
        .fold(0.0f64, |acc, v| acc.max(v.abs()));
    let tol = 1e-12 * scale.max(1.0);
    for i in 0..n {
        if d[i][i].abs() > tol {
            return Err(ReduceError::BadDiagonal(i));
        }
        for j in (i + 1)..n {
            if (d[i][j] - d[j][i]).abs() > tol {
                return Err(ReduceError::NotSymmetric(i, j));
            }
        }
    }

    // B = -1/2 * J * (D o D) * J, J = I - 11^T/n
    let sq: Vec<Vec<f64>> = d
        .iter()
        .map(|row| row.iter().map(|v| v * v).collect())
        .collect();
    let row_means: Vec<f64> = sq.iter().map(|r| r.iter().sum::<f64>() / n as f64).collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut b = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            b[i][j] = -0.5 * (sq[i][j] - row_means[i] - row_means[j] + grand);
        }
    }

    let (eigenvalues, eigenvectors) = linalg::symmetric_eigen(&b);
    let positive_tol = 1e-12 * eigenvalues.first().map_or(1.0, |v| v.abs()).max(1.0);
    let usable: Vec<usize> = (0..n)
        .filter(|&j| eigenvalues[j] > positive_tol)
        .take(k)
        .collect();
    let dropped = k.saturating_sub(usable.len());

    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            usable
                .iter()
                .map(|&j| eigenvectors[j][i] * eigenvalues[j].sqrt())
                .collect()
        })
        .collect();

    Ok(MdsSolution {
        embedding: Embedding {
            method: ReduceMethod::Mds,
            points,
            explained_variance: None,
            seed: None,
        },
        eigenvalues,
        dropped_axes: dropped,
    })
}

// ---------------------------------------------------------------------------
// t-SNE

/// Deterministic standard-normal stream: 64-bit LCG feeding Box-Muller.
struct NormalRng {
    state: u64,
    spare: Option<f64>,
}

impl NormalRng {
    fn new(seed: u64) -> Self {
        NormalRng {
            state: seed,
            spare: None,
        }
    }

    fn next_uniform(&mut self) -> f64 {
        self.state = self
            .state
            .wrapping_mul(6364136223846793005)
            .wrapping_add(1442695040888963407);
        // map the high 53 bits into (0, 1)
        ((self.state >> 11) as f64 + 0.5) / (1u64 << 53) as f64
    }

    fn next_normal(&mut self) -> f64 {
        if let Some(z) = self.spare.take() {
            return z;
        }
        let u1 = self.next_uniform();
        let u2 = self.next_uniform();
        let r = (-2.0 * u1.ln()).sqrt();
        let theta = 2.0 * std::f64::consts::PI * u2;
        self.spare = Some(r * theta.sin());
        r * theta.cos()
    }
}

fn squared_distances(points: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in (i + 1)..n {
            let s: f64 = points[i]
                .iter()
                .zip(points[j].iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum();
            d[i][j] = s;
            d[j][i] = s;
        }
    }
    d
}

/// Conditional affinities p_{j|i} with per-point precisions found by
/// bisection so each row's entropy matches `log2(perplexity)` within
/// 1e-4 bits (at most 50 bisections).
fn conditional_affinities(sq_dist: &[Vec<f64>], perplexity: f64) -> Vec<Vec<f64>> {
    let n = sq_dist.len();
    let target = perplexity.log2();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        let mut beta = 1.0f64;
        let mut beta_min = f64::NEG_INFINITY;
        let mut beta_max = f64::INFINITY;
        for _ in 0..50 {
            let mut sum = 0.0;
            for j in 0..n {
                p[i][j] = if i == j {
                    0.0
                } else {
                    (-beta * sq_dist[i][j]).exp()
                };
                sum += p[i][j];
            }
            let mut entropy_bits = 0.0;
            if sum > 0.0 {
                for j in 0..n {
                    p[i][j] /= sum;
                    if p[i][j] > 1e-300 {
                        entropy_bits -= p[i][j] * p[i][j].log2();
                    }
                }
            }
            let diff = entropy_bits - target;
            if diff.abs() <= 1e-4 {
                break;
            }
            if diff > 0.0 {
                // too flat: sharpen
                beta_min = beta;
                beta = if beta_max.is_infinite() {
                    beta * 2.0
                } else {
                    (beta + beta_max) / 2.0
                };
            } else {
                beta_max = beta;
                beta = if beta_min.is_infinite() {
                    beta / 2.0
                } else {
                    (beta + beta_min) / 2.0
                };
            }
        }
    }
    p
}

fn symmetrized_affinities(cond: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = cond.len();
    let mut p = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            p[i][j] = ((cond[i][j] + cond[j][i]) / (2.0 * n as f64)).max(1e-12);
        }
        p[i][i] = 0.0;
    }
    p
}

fn kl_divergence(p: &[Vec<f64>], y: &[Vec<f64>]) -> f64 {
    let n = p.len();
    let sq = squared_distances(y);
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z += 1.0 / (1.0 + sq[i][j]);
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let q = (1.0 / (1.0 + sq[i][j]) / z).max(1e-12);
            if p[i][j] > 0.0 {
                kl += p[i][j] * (p[i][j] / q).ln();
            }
        }
    }
    kl
}

// the KL fields back the optimizer's no-regression tests
#[cfg_attr(not(test), allow(dead_code))]
struct TsneTrace {
    embedding: Embedding,
    kl_after_exaggeration: Option<f64>,
    kl_final: f64,
}

fn tsne_impl(
    features: &FeatureMatrix,
    k: usize,
    perplexity: f64,
    seed: u64,
    iterations: usize,
) -> Result<TsneTrace, ReduceError> {
    let n = features.n_frames();
    if !(2..=3).contains(&k) {
        return Err(ReduceError::UnsupportedDimension(k));
    }
    if n < 4 {
        return Err(ReduceError::TooFewPoints { need: 4, got: n });
    }
    if perplexity < 1.0 {
        return Err(ReduceError::BadPerplexity);
    }
    if (n as f64) < 3.0 * perplexity {
        return Err(ReduceError::PerplexityTooLarge {
            perplexity,
            points: n,
        });
    }

    let sq = squared_distances(&features.values);
    let cond = conditional_affinities(&sq, perplexity);
    let p = symmetrized_affinities(&cond);

    const EXAGGERATION: f64 = 12.0;
    const EXAGGERATION_ITERS: usize = 250;
    const LEARNING_RATE: f64 = 200.0;

    let mut rng = NormalRng::new(seed);
    let mut y: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..k).map(|_| rng.next_normal() * 1e-4).collect())
        .collect();
    let mut velocity = vec![vec![0.0; k]; n];
    let mut kl_after_exaggeration = None;

    for iter in 0..iterations {
        if iter == EXAGGERATION_ITERS {
            kl_after_exaggeration = Some(kl_divergence(&p, &y));
        }
        let exaggerate = if iter < EXAGGERATION_ITERS {
            EXAGGERATION
        } else {
            1.0
        };
        let momentum = if iter < EXAGGERATION_ITERS { 0.5 } else { 0.8 };

        let sq_low = squared_distances(&y);
        let mut z = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    z += 1.0 / (1.0 + sq_low[i][j]);
                }
            }
        }

        for i in 0..n {
            let mut grad = vec![0.0; k];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let w = 1.0 / (1.0 + sq_low[i][j]);
                let q = (w / z).max(1e-12);
                let coeff = 4.0 * (exaggerate * p[i][j] - q) * w;
                for (g, (yi, yj)) in grad.iter_mut().zip(y[i].iter().zip(y[j].iter())) {
                    *g += coeff * (yi - yj);
                }
            }
            for d in 0..k {
                velocity[i][d] = momentum * velocity[i][d] - LEARNING_RATE * grad[d];
            }
        }
        for i in 0..n {
            for d in 0..k {
                y[i][d] += velocity[i][d];
            }
        }
    }

    let kl_final = kl_divergence(&p, &y);
    Ok(TsneTrace {
        embedding: Embedding {
            method: ReduceMethod::Tsne,
            points: y,
            explained_variance: None,
            seed: Some(seed),
        },
        kl_after_exaggeration,
        kl_final,
    })
}

/// t-SNE with the standard published defaults (early exaggeration 12 for
/// 250 iterations, learning rate 200, momentum 0.5 then 0.8). Fully
/// deterministic given the seed.
pub fn tsne(
    features: &FeatureMatrix,
    k: usize,
    perplexity: f64,
    seed: u64,
    iterations: usize,
) -> Result<Embedding, ReduceError> {
    Ok(tsne_impl(features, k, perplexity, seed, iterations)?.embedding)
}

// ---------------------------------------------------------------------------
// Low-pass smoothing

/// First-order exponential smoothing factor, in `(0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmoothingConfig {
    pub alpha: f64,
}

impl SmoothingConfig {
    pub fn new(alpha: f64) -> Result<Self, ReduceError> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(ReduceError::BadAlpha(alpha));
        }
        Ok(SmoothingConfig { alpha })
    }
}

/// `y_0 = x_0; y_t = alpha * x_t + (1 - alpha) * y_{t-1}`, per dimension.
/// Evaluated incrementally as `y_{t-1} + alpha * (x_t - y_{t-1})` so a
/// constant signal is an exact fixed point.
pub fn lpf_smooth(features: &FeatureMatrix, cfg: &SmoothingConfig) -> FeatureMatrix {
    let mut values = features.values.clone();
    for t in 1..values.len() {
        for d in 0..values[t].len() {
            let prev = values[t - 1][d];
            values[t][d] = prev + cfg.alpha * (values[t][d] - prev);
        }
    }
    FeatureMatrix {
        kind: features.kind,
        frame_times: features.frame_times.clone(),
        dim_labels: features.dim_labels.clone(),
        values,
    }
}
