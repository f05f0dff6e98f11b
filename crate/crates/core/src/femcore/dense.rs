//! Dense symmetric positive definite factorization for Schur complements and
//! element bubble blocks.

use crate::error::{Error, Result};

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [0.0; 8];
    let chunks = n / 8;
    for c in 0..chunks {
        let (x, y) = (&a[8 * c..8 * c + 8], &b[8 * c..8 * c + 8]);
        for k in 0..8 {
            acc[k] += x[k] * y[k];
        }
    }
    let mut s = (acc[0] + acc[4]) + (acc[1] + acc[5]) + ((acc[2] + acc[6]) + (acc[3] + acc[7]));
    for k in 8 * chunks..n {
        s += a[k] * b[k];
    }
    s
}

/// Row-major lower-triangular Cholesky factor.
#[derive(Clone, Debug)]
pub struct DenseCholesky {
    pub n: usize,
    l: Vec<f64>,
}

impl DenseCholesky {
    /// Factors the symmetric matrix whose lower triangle is stored row-major
    /// in `a` (`a[i * n + j]`, `j ≤ i`); the upper triangle is ignored.
    pub fn factor(mut a: Vec<f64>, n: usize) -> Result<Self> {
        if a.len() != n * n {
            return Err(Error::Dimension {
                expected: n * n,
                got: a.len(),
            });
        }
        for i in 0..n {
            let (done, rest) = a.split_at_mut(i * n);
            let row_i = &mut rest[..n];
            for j in 0..i {
                let row_j = &done[j * n..j * n + j + 1];
                let s = row_i[j] - dot(&row_i[..j], &row_j[..j]);
                row_i[j] = s / row_j[j];
            }
            let d = row_i[i] - dot(&row_i[..i], &row_i[..i]);
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::Singular(format!(
                    "dense pivot {i} of {n} is not positive ({d:e})"
                )));
            }
            row_i[i] = d.sqrt();
            row_i[i + 1..].fill(0.0);
        }
        Ok(Self { n, l: a })
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        let n = self.n;
        for i in 0..n {
            let row = &self.l[i * n..i * n + i];
            b[i] = (b[i] - dot(row, &b[..i])) / self.l[i * n + i];
        }
        for i in (0..n).rev() {
            let bi = b[i] / self.l[i * n + i];
            b[i] = bi;
            let row = &self.l[i * n..i * n + i];
            for (bj, lij) in b[..i].iter_mut().zip(row) {
                *bj -= lij * bi;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn hilbert_like_system() {
        let n = 9;
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                a[i * n + j] = 1.0 / (i + j + 1) as f64 + if i == j { 1.0 } else { 0.0 };
            }
        }
        let x: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let mut b: Vec<f64> = (0..n).map(|i| dot(&a[i * n..i * n + n], &x)).collect();
        let c = DenseCholesky::factor(a, n).unwrap();
        c.solve_in_place(&mut b);
        for i in 0..n {
            assert_relative_eq!(b[i], x[i], epsilon = 1e-13);
        }
    }
}
