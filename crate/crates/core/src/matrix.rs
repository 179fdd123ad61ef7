//! Dense row-major matrices with LU factorization.
//!
//! Everything in this crate works with matrices of size at most
//! `2d x 2d` for d <= 6 or so, where a plain partial-pivoting LU and an
//! explicitly formed inverse are both cheap and easy to audit. The
//! induced norm used throughout is the max-absolute-row-sum norm
//! `||B|| = max_i sum_j |b_ij|`.

use thiserror::Error;

/// LU factorization met a pivot that is zero to working precision.
#[derive(Debug, Clone, Error, PartialEq)]
#[error("singular matrix: pivot {pivot:.3e} at elimination step {step} (scale {scale:.3e})")]
pub struct SingularMatrix {
    pub step: usize,
    pub pivot: f64,
    pub scale: f64,
}

/// Dense real matrix, row-major storage.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "matrix dimensions must be positive");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, 1.0);
        }
        m
    }

    /// Build from a slice of rows; all rows must have equal length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        assert!(!rows.is_empty());
        let cols = rows[0].len();
        let mut m = Self::zeros(rows.len(), cols);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.len(), cols, "ragged rows");
            m.data[i * cols..(i + 1) * cols].copy_from_slice(r);
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn matmul(&self, other: &DenseMatrix) -> DenseMatrix {
        assert_eq!(self.cols, other.rows, "inner dimensions must agree");
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    /// Matrix-vector product.
    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j) * v[j]).sum())
            .collect()
    }

    /// Max absolute row sum norm.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| (0..self.cols).map(|j| self.get(i, j).abs()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Solve `A x = b` by LU with partial pivoting. `A` must be square.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>, SingularMatrix> {
        let lu = LuFactors::new(self)?;
        Ok(lu.solve(b))
    }

    /// Explicit inverse via LU; intended for the small matrices of this
    /// crate where transparency beats cleverness.
    pub fn inverse(&self) -> Result<DenseMatrix, SingularMatrix> {
        assert_eq!(self.rows, self.cols, "inverse needs a square matrix");
        let n = self.rows;
        let lu = LuFactors::new(self)?;
        let mut inv = DenseMatrix::zeros(n, n);
        let mut e = vec![0.0; n];
        for j in 0..n {
            e[j] = 1.0;
            let col = lu.solve(&e);
            for i in 0..n {
                inv.set(i, j, col[i]);
            }
            e[j] = 0.0;
        }
        Ok(inv)
    }

    /// `||A||_inf * ||A^-1||_inf`, or +inf when singular.
    pub fn condition_inf(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.inf_norm() * inv.inf_norm(),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Packed LU factors with the pivot permutation.
struct LuFactors {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl LuFactors {
    fn new(a: &DenseMatrix) -> Result<Self, SingularMatrix> {
        assert_eq!(a.rows, a.cols, "LU needs a square matrix");
        let n = a.rows;
        let mut lu = a.data.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let scale = a.data.iter().fold(0.0_f64, |m, &v| m.max(v.abs()));

        for k in 0..n {
            let mut p = k;
            let mut maxv = lu[k * n + k].abs();
            for i in (k + 1)..n {
                let v = lu[i * n + k].abs();
                if v > maxv {
                    maxv = v;
                    p = i;
                }
            }
            // relative pivot test: treat anything below ~eps * scale as zero
            if maxv <= 1e-14 * scale.max(1e-300) {
                return Err(SingularMatrix {
                    step: k,
                    pivot: maxv,
                    scale,
                });
            }
            if p != k {
                for j in 0..n {
                    lu.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            let pivot = lu[k * n + k];
            for i in (k + 1)..n {
                let f = lu[i * n + k] / pivot;
                lu[i * n + k] = f;
                for j in (k + 1)..n {
                    lu[i * n + j] -= f * lu[k * n + j];
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                x[i] -= self.lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                x[i] -= self.lu[i * n + j] * x[j];
            }
            x[i] /= self.lu[i * n + i];
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn inf_norm_examples() {
        assert_eq!(DenseMatrix::identity(4).inf_norm(), 1.0);
        let a = DenseMatrix::from_rows(&[vec![1.0, -1.0], vec![2.0, 3.0]]);
        assert_eq!(a.inf_norm(), 5.0);
        assert_eq!(DenseMatrix::zeros(3, 2).inf_norm(), 0.0);
    }

    #[test]
    fn solve_and_inverse_roundtrip() {
        let a = DenseMatrix::from_rows(&[
            vec![2.0, 1.0, 0.0],
            vec![1.0, 3.0, -1.0],
            vec![0.5, 0.0, 4.0],
        ]);
        let x = a.solve(&[1.0, 2.0, 3.0]).unwrap();
        let b = a.matvec(&x);
        for (bi, ei) in b.iter().zip([1.0, 2.0, 3.0]) {
            assert!((bi - ei).abs() < 1e-12);
        }
        let inv = a.inverse().unwrap();
        let prod = a.matmul(&inv);
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((prod.get(i, j) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn singular_is_reported() {
        let a = DenseMatrix::from_rows(&[vec![1.0, 2.0], vec![2.0, 4.0]]);
        assert!(a.solve(&[1.0, 1.0]).is_err());
        assert_eq!(a.condition_inf(), f64::INFINITY);
    }

    #[test]
    fn pivoting_handles_zero_leading_entry() {
        let a = DenseMatrix::from_rows(&[vec![0.0, 1.0], vec![1.0, 0.0]]);
        let x = a.solve(&[3.0, 7.0]).unwrap();
        assert!((x[0] - 7.0).abs() < 1e-15 && (x[1] - 3.0).abs() < 1e-15);
    }
}
