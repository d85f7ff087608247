//! Small dense linear-algebra routines shared by the reduction and
//! similarity modules. Everything targets desk-scale matrices, so the
//! algorithms favour simplicity and testability over asymptotics.

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations.
///
/// Returns `(eigenvalues, eigenvectors)` sorted by descending eigenvalue;
/// `eigenvectors[j]` is the unit eigenvector paired with `eigenvalues[j]`.
/// The input must be square; only its symmetric part is meaningful.
pub(crate) fn symmetric_eigen(a: &[Vec<f64>]) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.len();
    if n == 0 {
        return (Vec::new(), Vec::new());
    }
    let mut m: Vec<Vec<f64>> = a.to_vec();
    // v[i][j] = component i of eigenvector j
    let mut v = vec![vec![0.0; n]; n];
    for (i, row) in v.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    let frob: f64 = m
        .iter()
        .flat_map(|r| r.iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    let tol = 1e-14 * frob.max(f64::MIN_POSITIVE);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[i][j] * m[i][j];
            }
        }
        if (2.0 * off).sqrt() <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[p][q];
                if apq == 0.0 {
                    continue;
                }
                let tau = (m[q][q] - m[p][p]) / (2.0 * apq);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                let app = m[p][p];
                let aqq = m[q][q];
                m[p][p] = app - t * apq;
                m[q][q] = aqq + t * apq;
                m[p][q] = 0.0;
                m[q][p] = 0.0;
                for i in 0..n {
                    if i != p && i != q {
                        let aip = m[i][p];
                        let aiq = m[i][q];
                        m[i][p] = c * aip - s * aiq;
                        m[p][i] = m[i][p];
                        m[i][q] = s * aip + c * aiq;
                        m[q][i] = m[i][q];
                    }
                }
                for row in v.iter_mut() {
                    let vip = row[p];
                    let viq = row[q];
                    row[p] = c * vip - s * viq;
                    row[q] = s * vip + c * viq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[j][j].total_cmp(&m[i][i]));
    let eigenvalues: Vec<f64> = order.iter().map(|&j| m[j][j]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&j| (0..n).map(|i| v[i][j]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

/// Thin SVD of an `n x d` matrix.
pub(crate) struct ThinSvd {
    /// Singular values, descending; length `min(n, d)`.
    pub singular: Vec<f64>,
    /// `right[j]` is the right singular vector for `singular[j]` (length d).
    pub right: Vec<Vec<f64>>,
    /// `scores[i]` is row i of `X * V`, length `min(n, d)`.
    pub scores: Vec<Vec<f64>>,
}

/// Computes a thin SVD of the data matrix by one-sided Jacobi rotations.
///
/// The rotations act on whichever side has fewer columns, so the cost is
/// `O(min(n,d)^2 * max(n,d))` per sweep.
pub(crate) fn thin_svd(x: &[Vec<f64>]) -> ThinSvd {
    let n = x.len();
    let d = if n == 0 { 0 } else { x[0].len() };
    if n == 0 || d == 0 {
        return ThinSvd {
            singular: Vec::new(),
            right: Vec::new(),
            scores: vec![Vec::new(); n],
        };
    }

    if d <= n {
        // Orthogonalize the d columns of X; X*V lands in the work columns.
        let mut cols: Vec<Vec<f64>> = (0..d).map(|j| x.iter().map(|r| r[j]).collect()).collect();
        let mut v: Vec<Vec<f64>> = (0..d)
            .map(|j| (0..d).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect(); // v[j] = column j of V
        jacobi_orthogonalize(&mut cols, &mut v);
        let (singular, cols, v) = sort_by_norm(cols, v);
        let scores: Vec<Vec<f64>> = (0..n).map(|i| cols.iter().map(|c| c[i]).collect()).collect();
        ThinSvd {
            singular,
            right: v,
            scores,
        }
    } else {
        // Work on the transpose: right singular vectors of X^T are the
        // left singular vectors of X, and X^T * U recovers V * Sigma.
        let mut cols: Vec<Vec<f64>> = x.to_vec(); // column j of X^T = row j of X
        let mut u: Vec<Vec<f64>> = (0..n)
            .map(|j| (0..n).map(|i| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        jacobi_orthogonalize(&mut cols, &mut u);
        let (singular, cols, u) = sort_by_norm(cols, u);
        let right: Vec<Vec<f64>> = cols
            .iter()
            .zip(singular.iter())
            .map(|(c, &s)| {
                if s > 0.0 {
                    c.iter().map(|x| x / s).collect()
                } else {
                    vec![0.0; d]
                }
            })
            .collect();
        // scores = U * Sigma
        let scores: Vec<Vec<f64>> = (0..n)
            .map(|i| u.iter().zip(singular.iter()).map(|(col, &s)| col[i] * s).collect())
            .collect();
        ThinSvd {
            singular,
            right,
            scores,
        }
    }
}

/// One-sided Jacobi: rotates column pairs of `cols` until mutually
/// orthogonal, accumulating the same rotations into `acc`.
fn jacobi_orthogonalize(cols: &mut [Vec<f64>], acc: &mut [Vec<f64>]) {
    let k = cols.len();
    for _sweep in 0..60 {
        let mut rotated = false;
        for p in 0..k {
            for q in (p + 1)..k {
                let mut alpha = 0.0;
                let mut beta = 0.0;
                let mut gamma = 0.0;
                for i in 0..cols[p].len() {
                    alpha += cols[p][i] * cols[p][i];
                    beta += cols[q][i] * cols[q][i];
                    gamma += cols[p][i] * cols[q][i];
                }
                if gamma.abs() <= 1e-15 * (alpha * beta).sqrt() || alpha == 0.0 || beta == 0.0 {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + (1.0 + zeta * zeta).sqrt())
                } else {
                    -1.0 / (-zeta + (1.0 + zeta * zeta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                for i in 0..cols[p].len() {
                    let cp = cols[p][i];
                    let cq = cols[q][i];
                    cols[p][i] = c * cp - s * cq;
                    cols[q][i] = s * cp + c * cq;
                }
                for i in 0..acc[p].len() {
                    let vp = acc[p][i];
                    let vq = acc[q][i];
                    acc[p][i] = c * vp - s * vq;
                    acc[q][i] = s * vp + c * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
}

fn sort_by_norm(
    cols: Vec<Vec<f64>>,
    acc: Vec<Vec<f64>>,
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let norms: Vec<f64> = cols
        .iter()
        .map(|c| c.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..cols.len()).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]));
    let singular: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let cols_sorted: Vec<Vec<f64>> = order.iter().map(|&j| cols[j].clone()).collect();
    let acc_sorted: Vec<Vec<f64>> = order.iter().map(|&j| acc[j].clone()).collect();
    (singular, cols_sorted, acc_sorted)
}

/// Pearson correlation coefficient; 0.0 when either input has zero variance.
pub(crate) fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in x.iter().zip(y.iter()) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 {
        return 0.0;
    }
    sxy / (sxx * syy).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lcg_stream(seed: u64) -> impl FnMut() -> f64 {
        let mut state = seed;
        move || {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            ((state >> 11) as f64 + 0.5) / (1u64 << 53) as f64 - 0.5
        }
    }

    #[test]
    fn jacobi_recovers_diagonal_eigenvalues() {
        let a = vec![
            vec![3.0, 0.0, 0.0],
            vec![0.0, -1.0, 0.0],
            vec![0.0, 0.0, 7.0],
        ];
        let (vals, _) = symmetric_eigen(&a);
        assert!((vals[0] - 7.0).abs() < 1e-12);
        assert!((vals[1] - 3.0).abs() < 1e-12);
        assert!((vals[2] + 1.0).abs() < 1e-12);
    }

    #[test]
    fn jacobi_satisfies_eigen_equation() {
        let mut next = lcg_stream(7);
        let n = 6;
        let mut a = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in i..n {
                let x = next();
                a[i][j] = x;
                a[j][i] = x;
            }
        }
        let (vals, vecs) = symmetric_eigen(&a);
        for (lambda, v) in vals.iter().zip(vecs.iter()) {
            for i in 0..n {
                let av: f64 = (0..n).map(|j| a[i][j] * v[j]).sum();
                assert!((av - lambda * v[i]).abs() < 1e-10);
            }
        }
        // trace is preserved
        let trace: f64 = (0..n).map(|i| a[i][i]).sum();
        assert!((vals.iter().sum::<f64>() - trace).abs() < 1e-10);
    }

    #[test]
    fn svd_reconstructs_matrix_both_orientations() {
        for (n, d) in [(8usize, 5usize), (5, 8)] {
            let mut next = lcg_stream((n * 100 + d) as u64);
            let x: Vec<Vec<f64>> = (0..n).map(|_| (0..d).map(|_| next()).collect()).collect();
            let svd = thin_svd(&x);
            let r = svd.singular.len();
            assert_eq!(r, n.min(d));
            // X ~= scores * V^T
            for i in 0..n {
                for j in 0..d {
                    let mut recon = 0.0;
                    for t in 0..r {
                        recon += svd.scores[i][t] * svd.right[t][j];
                    }
                    assert!((recon - x[i][j]).abs() < 1e-9, "({n},{d}) at ({i},{j})");
                }
            }
            // right singular vectors orthonormal
            for a in 0..r {
                for b in a..r {
                    let dot: f64 = (0..d).map(|j| svd.right[a][j] * svd.right[b][j]).sum();
                    let expect = if a == b { 1.0 } else { 0.0 };
                    if svd.singular[a] > 1e-12 && svd.singular[b] > 1e-12 {
                        assert!((dot - expect).abs() < 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn pearson_basics() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert!((pearson(&x, &y) - 1.0).abs() < 1e-12);
        let z = [3.0, 2.0, 1.0];
        assert!((pearson(&x, &z) + 1.0).abs() < 1e-12);
        let flat = [5.0, 5.0, 5.0];
        assert_eq!(pearson(&x, &flat), 0.0);
    }
}
