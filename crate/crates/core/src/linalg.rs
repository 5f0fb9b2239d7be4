//! Small dense complex matrices and LU factorization with partial pivoting.

use std::ops::{Index, IndexMut};

use thiserror::Error;

use crate::{c64, Complex};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    /// Pivot-ratio condition estimate exceeded the allowed bound (or a pivot was zero).
    #[error("matrix is singular to working precision (condition estimate {condition:e})")]
    Singular { condition: f64 },
    #[error("dimension mismatch: matrix is {n}x{n}, vector has {len} entries")]
    Dimension { n: usize, len: usize },
}

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CMatrix {
    n: usize,
    data: Vec<Complex>,
}

impl CMatrix {
    pub fn zeros(n: usize) -> Self {
        CMatrix { n, data: vec![c64(0.0, 0.0); n * n] }
    }

    pub fn from_rows(rows: Vec<Vec<Complex>>) -> Self {
        let n = rows.len();
        assert!(rows.iter().all(|r| r.len() == n), "matrix must be square");
        CMatrix { n, data: rows.into_iter().flatten().collect() }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn rows(&self) -> impl Iterator<Item = &[Complex]> {
        self.data.chunks(self.n.max(1))
    }

    pub fn mul_vec(&self, v: &[Complex]) -> Vec<Complex> {
        assert_eq!(v.len(), self.n);
        self.rows().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
    }

    /// Elementwise `self - other`.
    pub fn sub(&self, other: &CMatrix) -> CMatrix {
        assert_eq!(self.n, other.n);
        CMatrix { n: self.n, data: self.data.iter().zip(&other.data).map(|(a, b)| a - b).collect() }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = Complex;
    #[inline]
    fn index(&self, (i, j): (usize, usize)) -> &Complex {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    #[inline]
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex {
        &mut self.data[i * self.n + j]
    }
}

/// `P A = L U` with unit-diagonal `L` stored below the diagonal of `lu`.
#[derive(Debug, Clone)]
pub struct LuDecomposition {
    lu: CMatrix,
    perm: Vec<usize>,
    condition: f64,
}

impl LuDecomposition {
    /// Factorizes `a`, refusing when the ratio of the largest to smallest
    /// pivot magnitude exceeds `max_condition`.
    pub fn factor(a: &CMatrix, max_condition: f64) -> Result<Self, LinalgError> {
        let n = a.n;
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        let mut pmax = 0.0f64;
        let mut pmin = f64::INFINITY;
        for k in 0..n {
            let (p, mag) = (k..n).map(|i| (i, lu[(i, k)].norm())).fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
            if p != k {
                for j in 0..n {
                    lu.data.swap(k * n + j, p * n + j);
                }
                perm.swap(k, p);
            }
            pmax = pmax.max(mag);
            pmin = pmin.min(mag);
            if mag == 0.0 || !mag.is_finite() {
                return Err(LinalgError::Singular { condition: f64::INFINITY });
            }
            let pivot = lu[(k, k)];
            for i in k + 1..n {
                let l = lu[(i, k)] / pivot;
                lu[(i, k)] = l;
                if l != c64(0.0, 0.0) {
                    for j in k + 1..n {
                        let u = lu[(k, j)];
                        lu[(i, j)] -= l * u;
                    }
                }
            }
        }
        let condition = if n == 0 { 1.0 } else { pmax / pmin };
        if condition > max_condition {
            return Err(LinalgError::Singular { condition });
        }
        Ok(LuDecomposition { lu, perm, condition })
    }

    /// Pivot-magnitude ratio, the cheap condition estimate used for the singularity test.
    pub fn condition_estimate(&self) -> f64 {
        self.condition
    }

    pub fn solve(&self, b: &[Complex]) -> Result<Vec<Complex>, LinalgError> {
        let n = self.lu.n;
        if b.len() != n {
            return Err(LinalgError::Dimension { n, len: b.len() });
        }
        let mut x: Vec<Complex> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                let l = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= l * xj;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let u = self.lu[(i, j)];
                let xj = x[j];
                x[i] -= u * xj;
            }
            x[i] /= self.lu[(i, i)];
        }
        Ok(x)
    }
}
