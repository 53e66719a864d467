//! Minimal dense linear algebra on flat buffers: packed lower-triangular
//! Cholesky factors with row append, and triangular solves.

use alloc::vec;
use alloc::vec::Vec;

use crate::math::sqrt;

/// Lower-triangular factor stored row by row; row `i` holds `i + 1` entries.
#[derive(Debug, Clone, PartialEq, Default)]
pub(crate) struct PackedLower {
    n: usize,
    data: Vec<f64>,
}

#[inline]
fn row_start(i: usize) -> usize {
    i * (i + 1) / 2
}

impl PackedLower {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let s = row_start(i);
        &self.data[s..s + i + 1]
    }

    /// Solves `L z = b` in place.
    pub fn forward_in_place(&self, b: &mut [f64]) {
        debug_assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let mut acc = b[i];
            for j in 0..i {
                acc -= row[j] * b[j];
            }
            b[i] = acc / row[i];
        }
    }

    /// Solves `Lᵀ x = z` in place.
    pub fn backward_in_place(&self, z: &mut [f64]) {
        debug_assert_eq!(z.len(), self.n);
        for i in (0..self.n).rev() {
            let xi = z[i] / self.row(i)[i];
            z[i] = xi;
            let row = self.row(i);
            for j in 0..i {
                z[j] -= row[j] * xi;
            }
        }
    }

    /// Solves `L Lᵀ x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let mut x = b.to_vec();
        self.forward_in_place(&mut x);
        self.backward_in_place(&mut x);
        x
    }

    /// Appends one row given the cross terms against the existing rows and
    /// the new diagonal entry of the underlying matrix. Returns `false` and
    /// leaves the factor untouched if the new pivot is not positive.
    pub fn push_row(&mut self, cross: &[f64], diag: f64) -> bool {
        debug_assert_eq!(cross.len(), self.n);
        let mut l = cross.to_vec();
        self.forward_in_place(&mut l);
        let sq: f64 = l.iter().map(|v| v * v).sum();
        let pivot = diag - sq;
        if !(pivot > 0.0) || !pivot.is_finite() {
            return false;
        }
        self.data.extend_from_slice(&l);
        self.data.push(sqrt(pivot));
        self.n += 1;
        true
    }

    /// Factors a dense symmetric matrix (row-major, `n × n`) plus
    /// `jitter · I`. On failure returns the index of the offending pivot.
    pub fn factor(a: &[f64], n: usize, jitter: f64) -> Result<Self, usize> {
        debug_assert_eq!(a.len(), n * n);
        let mut out = PackedLower {
            n: 0,
            data: Vec::with_capacity(row_start(n)),
        };
        let mut cross = vec![0.0; n];
        for i in 0..n {
            cross[..i].copy_from_slice(&a[i * n..i * n + i]);
            if !out.push_row(&cross[..i], a[i * n + i] + jitter) {
                return Err(i);
            }
        }
        Ok(out)
    }

    /// `y = L v`.
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Dense row-major `L Lᵀ`.
    pub fn reconstruct(&self) -> Vec<f64> {
        let n = self.n;
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let ri = self.row(i);
                let rj = self.row(j);
                let v: f64 = ri[..=j].iter().zip(rj).map(|(a, b)| a * b).sum();
                out[i * n + j] = v;
                out[j * n + i] = v;
            }
        }
        out
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
