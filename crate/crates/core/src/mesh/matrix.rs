//! Dense complex matrices and vectors small enough that a flat row-major
//! `Vec` is the right representation.

use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Square complex matrix, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferMatrix {
    n: usize,
    data: Vec<Complex64>,
}

impl TransferMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        Self { n, data }
    }

    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::contract("matrix rows must form a square array"));
        }
        Ok(Self { n, data: rows.iter().flatten().copied().collect() })
    }

    pub(crate) fn from_2x2(m: [[Complex64; 2]; 2]) -> Self {
        Self { n: 2, data: vec![m[0][0], m[0][1], m[1][0], m[1][1]] }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.data[row * self.n + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: Complex64) {
        self.data[row * self.n + col] = value;
    }

    pub fn adjoint(&self) -> Self {
        let n = self.n;
        let mut out = Self::identity(n);
        for i in 0..n {
            for j in 0..n {
                out.data[j * n + i] = self.data[i * n + j].conj();
            }
        }
        out
    }

    /// Max-norm of `U^dagger U - I`.
    pub fn unitarity_defect(&self) -> f64 {
        let g = &self.adjoint() * self;
        let mut worst: f64 = 0.0;
        for i in 0..self.n {
            for j in 0..self.n {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((g.get(i, j) - target).norm());
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.n, other.n, "matrix dimension mismatch");
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max)
    }

    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(v.len(), self.n, "vector length mismatch");
        (0..self.n).map(|i| (0..self.n).map(|j| self.get(i, j) * v[j]).sum()).collect()
    }

    pub fn column(&self, col: usize) -> Vec<Complex64> {
        (0..self.n).map(|i| self.get(i, col)).collect()
    }

    /// Left-multiplies rows `top` and `top + 1` by a 2x2 block, i.e. applies
    /// the block embedded in the identity: `U <- (I (+) B (+) I) U`.
    pub(crate) fn apply_block_rows(&mut self, top: usize, b: &[[Complex64; 2]; 2]) {
        let n = self.n;
        for col in 0..n {
            let a0 = self.data[top * n + col];
            let a1 = self.data[(top + 1) * n + col];
            self.data[top * n + col] = b[0][0] * a0 + b[0][1] * a1;
            self.data[(top + 1) * n + col] = b[1][0] * a0 + b[1][1] * a1;
        }
    }

    /// Row-major `(re, im)` pairs.
    pub fn to_pairs(&self) -> Vec<(f64, f64)> {
        self.data.iter().map(|z| (z.re, z.im)).collect()
    }

    pub fn from_pairs(n: usize, pairs: &[(f64, f64)]) -> Result<Self> {
        if pairs.len() != n * n {
            return Err(Error::contract(format!(
                "expected {} entries for a {n}x{n} matrix, got {}",
                n * n,
                pairs.len()
            )));
        }
        Ok(Self { n, data: pairs.iter().map(|&(re, im)| Complex64::new(re, im)).collect() })
    }
}

impl Mul for &TransferMatrix {
    type Output = TransferMatrix;

    fn mul(self, rhs: &TransferMatrix) -> TransferMatrix {
        assert_eq!(self.n, rhs.n, "matrix dimension mismatch");
        let n = self.n;
        let mut data = vec![Complex64::new(0.0, 0.0); n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                for j in 0..n {
                    data[i * n + j] += a * rhs.data[k * n + j];
                }
            }
        }
        TransferMatrix { n, data }
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixDoc {
    n: usize,
    entries: Vec<(f64, f64)>,
}

impl Serialize for TransferMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        MatrixDoc { n: self.n, entries: self.to_pairs() }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TransferMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let doc = MatrixDoc::deserialize(d)?;
        TransferMatrix::from_pairs(doc.n, &doc.entries).map_err(serde::de::Error::custom)
    }
}

/// Field amplitudes on `N >= 2` modes with finite, non-zero norm.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexVector(Vec<Complex64>);

impl ComplexVector {
    pub fn new(entries: Vec<Complex64>) -> Result<Self> {
        if entries.len() < 2 {
            return Err(Error::domain("a field vector needs at least two modes"));
        }
        let norm = entries.iter().map(|z| z.norm_sqr()).sum::<f64>();
        if !norm.is_finite() || norm <= 0.0 {
            return Err(Error::domain(format!(
                "field vector norm^2 must be finite and positive, got {norm}"
            )));
        }
        Ok(Self(entries))
    }

    /// Unit amplitude on `port`, zero elsewhere.
    pub fn basis(n: usize, port: usize) -> Result<Self> {
        if port >= n {
            return Err(Error::domain(format!("port {port} out of range for {n} modes")));
        }
        let mut v = vec![Complex64::new(0.0, 0.0); n];
        v[port] = Complex64::new(1.0, 0.0);
        Self::new(v)
    }

    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}
