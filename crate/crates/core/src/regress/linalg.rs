//! Dense least squares by Householder QR, and a small symmetric solver.

use crate::error::{Error, Result};

/// Column-major dense matrix.
#[derive(Debug, Clone)]
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

    pub fn from_columns(columns: &[Vec<f64>]) -> Self {
        let cols = columns.len();
        let rows = columns.first().map_or(0, Vec::len);
        let mut data = Vec::with_capacity(rows * cols);
        for c in columns {
            assert_eq!(c.len(), rows, "ragged columns");
            data.extend_from_slice(c);
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[c * self.rows + r]
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, v: f64) {
        self.data[c * self.rows + r] = v;
    }

    fn col_mut(&mut self, c: usize) -> &mut [f64] {
        &mut self.data[c * self.rows..(c + 1) * self.rows]
    }
}

/// Minimizes `||A b - y||` for a full-column-rank `A` (rows >= cols).
///
/// Rank deficiency is detected on the diagonal of `R`: a pivot smaller than
/// `1e-12` times the largest pivot (or exactly zero) yields `SingularSystem`.
pub fn lstsq(a: &Matrix, y: &[f64]) -> Result<Vec<f64>> {
    let (m, n) = (a.rows(), a.cols());
    if y.len() != m || m < n || n == 0 {
        return Err(Error::SingularSystem);
    }
    let mut r = a.clone();
    let mut rhs = y.to_vec();
    let mut diag = vec![0.0; n];

    for k in 0..n {
        let col = &r.col_mut(k)[k..];
        let norm = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::SingularSystem);
        }
        let alpha = if col[0] > 0.0 { -norm } else { norm };
        // Householder vector v = x - alpha e1, stored in place below the diagonal.
        let mut v: Vec<f64> = col.to_vec();
        v[0] -= alpha;
        let vnorm2: f64 = v.iter().map(|t| t * t).sum();
        diag[k] = alpha;
        if vnorm2 == 0.0 {
            continue;
        }
        for j in k..n {
            let cj = &mut r.col_mut(j)[k..];
            let dot: f64 = v.iter().zip(cj.iter()).map(|(a, b)| a * b).sum();
            let f = 2.0 * dot / vnorm2;
            for (c, vi) in cj.iter_mut().zip(&v) {
                *c -= f * vi;
            }
        }
        let tail = &mut rhs[k..];
        let dot: f64 = v.iter().zip(tail.iter()).map(|(a, b)| a * b).sum();
        let f = 2.0 * dot / vnorm2;
        for (c, vi) in tail.iter_mut().zip(&v) {
            *c -= f * vi;
        }
    }

    let largest = diag.iter().map(|d| d.abs()).fold(0.0, f64::max);
    if diag.iter().any(|d| d.abs() <= 1e-12 * largest) {
        return Err(Error::SingularSystem);
    }

    let mut beta = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = rhs[i];
        #[allow(clippy::needless_range_loop)]
        for j in i + 1..n {
            s -= r.get(i, j) * beta[j];
        }
        beta[i] = s / r.get(i, i);
    }
    Ok(beta)
}

/// Solves the small dense system `M x = b` by Gaussian elimination with
/// partial pivoting. `m` is row-major `n x n`.
pub fn solve_dense(mut m: Vec<f64>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    debug_assert_eq!(m.len(), n * n);
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| m[i * n + k].abs().total_cmp(&m[j * n + k].abs()))?;
        if m[p * n + k].abs() < 1e-300 {
            return None;
        }
        if p != k {
            for c in 0..n {
                m.swap(k * n + c, p * n + c);
            }
            b.swap(k, p);
        }
        for i in k + 1..n {
            let f = m[i * n + k] / m[k * n + k];
            if f != 0.0 {
                for c in k..n {
                    m[i * n + c] -= f * m[k * n + c];
                }
                b[i] -= f * b[k];
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = b[i];
        for c in i + 1..n {
            s -= m[i * n + c] * x[c];
        }
        x[i] = s / m[i * n + i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}
