//! Dense linear algebra for small systems: least squares via Householder QR,
//! symmetric eigendecomposition via cyclic Jacobi rotations, and the
//! eigenvalue-thresholded pseudo-inverse built on it.
//!
//! Problem sizes here are tiny (design matrices with ≤ 6 columns, 36×36
//! covariance matrices), so clarity and determinism win over blocking or
//! pivoting sophistication.

use alloc::string::ToString;
use alloc::vec;
use alloc::vec::Vec;

// Needed when no crate in the graph links std; when one does (tests, the
// tools crate), std's inherent f64 methods shadow these exact-op methods,
// which is harmless, but the import then looks unused.
#[allow(unused_imports)]
use crate::math::F64Ext;
use crate::{Error, Result};

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        debug_assert!(rows.iter().all(|row| row.len() == c));
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            data.extend_from_slice(row);
        }
        Self {
            rows: r,
            cols: c,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        debug_assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                let row = &self.data[i * self.cols..(i + 1) * self.cols];
                row.iter().zip(v).map(|(a, b)| a * b).sum()
            })
            .collect()
    }
}

impl core::ops::Index<(usize, usize)> for Matrix {
    type Output = f64;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Matrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

/// Minimizes ‖A·x − b‖₂ by Householder QR with column-norm based rank check.
///
/// Errors with `Degenerate` when A has fewer rows than columns or is rank
/// deficient relative to its scale.
pub fn least_squares(a: &Matrix, b: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows, a.cols);
    debug_assert_eq!(b.len(), m);
    if m < n {
        return Err(Error::Degenerate(
            "least squares needs at least as many rows as unknowns".to_string(),
        ));
    }
    let mut r = a.clone();
    let mut qtb = b.to_vec();
    let scale = r
        .data
        .iter()
        .fold(0.0f64, |acc, &v| acc.max(v.abs()))
        .max(f64::MIN_POSITIVE);

    for k in 0..n {
        // Householder vector for column k below the diagonal.
        let mut norm = 0.0;
        for i in k..m {
            norm = crate::math::hypot(norm, r[(i, k)]);
        }
        if norm <= scale * 1e-12 * (m as f64) {
            return Err(Error::Degenerate(
                "rank-deficient design matrix in least squares".to_string(),
            ));
        }
        let alpha = if r[(k, k)] >= 0.0 { -norm } else { norm };
        let mut v = vec![0.0; m - k];
        v[0] = r[(k, k)] - alpha;
        for i in (k + 1)..m {
            v[i - k] = r[(i, k)];
        }
        let vnorm2: f64 = v.iter().map(|x| x * x).sum();
        if vnorm2 > 0.0 {
            // Reflect the remaining columns and the rhs.
            for j in k..n {
                let mut dot = 0.0;
                for i in k..m {
                    dot += v[i - k] * r[(i, j)];
                }
                let f = 2.0 * dot / vnorm2;
                for i in k..m {
                    r[(i, j)] -= f * v[i - k];
                }
            }
            let mut dot = 0.0;
            for i in k..m {
                dot += v[i - k] * qtb[i];
            }
            let f = 2.0 * dot / vnorm2;
            for i in k..m {
                qtb[i] -= f * v[i - k];
            }
        }
        r[(k, k)] = alpha;
    }

    // Back substitution on the upper-triangular factor.
    let mut x = vec![0.0; n];
    for k in (0..n).rev() {
        let mut acc = qtb[k];
        for j in (k + 1)..n {
            acc -= r[(k, j)] * x[j];
        }
        let d = r[(k, k)];
        if d.abs() <= scale * 1e-12 * (m as f64) {
            return Err(Error::Degenerate(
                "rank-deficient design matrix in least squares".to_string(),
            ));
        }
        x[k] = acc / d;
    }
    Ok(x)
}

/// Symmetric eigendecomposition by cyclic Jacobi rotations.
///
/// Returns (eigenvalues, eigenvectors-as-columns) with A ≈ V·diag(λ)·Vᵀ.
/// Input must be symmetric; only the upper triangle is read.
pub fn jacobi_eigh(a: &Matrix) -> (Vec<f64>, Matrix) {
    let n = a.rows;
    debug_assert_eq!(a.rows, a.cols);
    let mut m = a.clone();
    let mut v = Matrix::identity(n);

    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += m[(i, j)] * m[(i, j)];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + frobenius(&m)) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let app = m[(p, p)];
                let aqq = m[(q, q)];
                let theta = (aqq - app) / (2.0 * apq);
                // Stable tangent of the rotation angle.
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let mkp = m[(k, p)];
                    let mkq = m[(k, q)];
                    m[(k, p)] = c * mkp - s * mkq;
                    m[(k, q)] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let mpk = m[(p, k)];
                    let mqk = m[(q, k)];
                    m[(p, k)] = c * mpk - s * mqk;
                    m[(q, k)] = s * mpk + c * mqk;
                }
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
    }
    let eigvals: Vec<f64> = (0..n).map(|i| m[(i, i)]).collect();
    (eigvals, v)
}

fn frobenius(m: &Matrix) -> f64 {
    m.data.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix: eigenvalues with
/// |λ| ≤ n·ε·max|λ| are treated as zero. Serves as the rank-deficiency
/// fallback wherever a covariance must be inverted.
pub fn pinv_symmetric(a: &Matrix) -> Matrix {
    let n = a.rows;
    let (vals, vecs) = jacobi_eigh(a);
    let lmax = vals.iter().fold(0.0f64, |acc, &l| acc.max(l.abs()));
    let tol = lmax * (n as f64) * f64::EPSILON;
    let mut out = Matrix::zeros(n, n);
    for k in 0..n {
        if vals[k].abs() <= tol {
            continue;
        }
        let inv = 1.0 / vals[k];
        for i in 0..n {
            let vik = vecs[(i, k)];
            if vik == 0.0 {
                continue;
            }
            for j in 0..n {
                out[(i, j)] += inv * vik * vecs[(j, k)];
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_matrix(seed: u64, r: usize, c: usize) -> Matrix {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Matrix::zeros(r, c);
        for i in 0..r {
            for j in 0..c {
                m[(i, j)] = rng.random_range(-2.0..2.0);
            }
        }
        m
    }

    #[test]
    fn least_squares_recovers_exact_solution() {
        let a = random_matrix(11, 40, 6);
        let truth = [0.5, -1.25, 2.0, 0.0, 3.5, -0.75];
        let b = a.mul_vec(&truth);
        let x = least_squares(&a, &b).unwrap();
        for (xi, ti) in x.iter().zip(truth.iter()) {
            assert!((xi - ti).abs() < 1e-10, "{xi} vs {ti}");
        }
    }

    #[test]
    fn least_squares_matches_residual_orthogonality() {
        // At the minimum, the residual is orthogonal to every column of A.
        let a = random_matrix(12, 25, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let b: Vec<f64> = (0..25).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = least_squares(&a, &b).unwrap();
        let ax = a.mul_vec(&x);
        for j in 0..4 {
            let mut dot = 0.0;
            for i in 0..25 {
                dot += a[(i, j)] * (b[i] - ax[i]);
            }
            assert!(dot.abs() < 1e-9, "column {j} not orthogonal: {dot}");
        }
    }

    #[test]
    fn least_squares_flags_rank_deficiency() {
        let mut a = random_matrix(14, 20, 3);
        for i in 0..20 {
            a[(i, 2)] = 2.0 * a[(i, 0)] - a[(i, 1)];
        }
        let b = vec![1.0; 20];
        assert!(matches!(least_squares(&a, &b), Err(Error::Degenerate(_))));
    }

    #[test]
    fn jacobi_reconstructs_symmetric_matrix() {
        let raw = random_matrix(15, 8, 8);
        let mut sym = Matrix::zeros(8, 8);
        for i in 0..8 {
            for j in 0..8 {
                sym[(i, j)] = 0.5 * (raw[(i, j)] + raw[(j, i)]);
            }
        }
        let (vals, vecs) = jacobi_eigh(&sym);
        for i in 0..8 {
            for j in 0..8 {
                let mut acc = 0.0;
                for k in 0..8 {
                    acc += vecs[(i, k)] * vals[k] * vecs[(j, k)];
                }
                assert!((acc - sym[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pinv_satisfies_moore_penrose_on_singular_matrix() {
        // Rank-2 symmetric 4x4.
        let u = [
            [1.0, 0.5, -0.25, 0.0],
            [0.0, 1.0, 1.0, -0.5],
        ];
        let mut a = Matrix::zeros(4, 4);
        for i in 0..4 {
            for j in 0..4 {
                a[(i, j)] = 3.0 * u[0][i] * u[0][j] + 0.5 * u[1][i] * u[1][j];
            }
        }
        let p = pinv_symmetric(&a);
        // A·P·A == A.
        for i in 0..4 {
            for j in 0..4 {
                let mut apa = 0.0;
                for k in 0..4 {
                    for l in 0..4 {
                        apa += a[(i, k)] * p[(k, l)] * a[(l, j)];
                    }
                }
                assert!((apa - a[(i, j)]).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn pinv_of_invertible_matrix_is_inverse() {
        let mut a = Matrix::identity(3);
        a[(0, 0)] = 4.0;
        a[(1, 1)] = 2.0;
        a[(0, 1)] = 1.0;
        a[(1, 0)] = 1.0;
        let p = pinv_symmetric(&a);
        for i in 0..3 {
            for j in 0..3 {
                let mut ap = 0.0;
                for k in 0..3 {
                    ap += a[(i, k)] * p[(k, j)];
                }
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!((ap - expect).abs() < 1e-12);
            }
        }
    }
}
