//! Symmetric rank-2 and rank-3 forms over covector coordinates.
//!
//! Entries are stored once per unordered index set; `get` accepts indices in
//! any order. Contractions are written with explicit index loops to mirror
//! the tensor notation.
#![allow(clippy::needless_range_loop)]

use crate::scalar::Real;

/// Symmetric bilinear form on `dim` coordinates (packed upper triangle).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor2<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SymTensor2<T> {
    pub fn zeros(dim: usize) -> Self {
        SymTensor2 { dim, data: vec![T::zero(); dim * (dim + 1) / 2] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, mut i: usize, mut j: usize) -> usize {
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        i * self.dim - i * (i + 1) / 2 + j
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> T {
        self.data[self.idx(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, value: T) {
        let k = self.idx(i, j);
        self.data[k] = value;
    }

    pub fn packed(&self) -> &[T] {
        &self.data
    }

    pub fn packed_mut(&mut self) -> &mut [T] {
        &mut self.data
    }

    /// Bilinear contraction `T(p, q)` over coordinate slices.
    pub fn apply(&self, p: &[T], q: &[T]) -> T {
        let d = self.dim;
        debug_assert_eq!(p.len(), d);
        let mut acc = T::zero();
        for i in 0..d {
            for j in 0..d {
                acc += self.get(i, j) * p[i] * q[j];
            }
        }
        acc
    }

    /// Partial contraction `T(p, ·)` as coordinates.
    pub fn contract1(&self, p: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut out = vec![T::zero(); d];
        for (j, o) in out.iter_mut().enumerate() {
            for i in 0..d {
                *o += self.get(i, j) * p[i];
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        SymTensor2 { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        SymTensor2 {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// Largest absolute entry.
    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }
}

/// Symmetric trilinear form on `dim` coordinates (one entry per `i <= j <= k`).
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensor3<T> {
    dim: usize,
    data: Vec<T>,
}

impl<T: Real> SymTensor3<T> {
    pub fn zeros(dim: usize) -> Self {
        SymTensor3 { dim, data: vec![T::zero(); dim * (dim + 1) * (dim + 2) / 6] }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    fn idx(&self, i: usize, j: usize, k: usize) -> usize {
        let (mut a, mut b, mut c) = (i, j, k);
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        if b > c {
            std::mem::swap(&mut b, &mut c);
        }
        if a > b {
            std::mem::swap(&mut a, &mut b);
        }
        let d = self.dim;
        // entries with first index < a, then the (b, c) triangle of size d - a
        let mut offset = 0usize;
        for t in 0..a {
            let m = d - t;
            offset += m * (m + 1) / 2;
        }
        let bb = b - a;
        let m = d - a;
        offset + bb * m - bb * (bb + 1) / 2 + bb + (c - b)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> T {
        self.data[self.idx(i, j, k)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, k: usize, value: T) {
        let idx = self.idx(i, j, k);
        self.data[idx] = value;
    }

    /// Trilinear contraction `T(p, q, r)` over coordinate slices.
    pub fn apply(&self, p: &[T], q: &[T], r: &[T]) -> T {
        let d = self.dim;
        let mut acc = T::zero();
        for i in 0..d {
            for j in 0..d {
                for k in 0..d {
                    acc += self.get(i, j, k) * p[i] * q[j] * r[k];
                }
            }
        }
        acc
    }

    /// Partial contraction `T(p, q, ·)` as coordinates.
    pub fn contract2(&self, p: &[T], q: &[T]) -> Vec<T> {
        let d = self.dim;
        let mut out = vec![T::zero(); d];
        for (k, o) in out.iter_mut().enumerate() {
            for i in 0..d {
                for j in 0..d {
                    *o += self.get(i, j, k) * p[i] * q[j];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: T) -> Self {
        SymTensor3 { dim: self.dim, data: self.data.iter().map(|&x| x * s).collect() }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.dim, other.dim);
        SymTensor3 {
            dim: self.dim,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| a - b).collect(),
        }
    }

    pub fn max_abs(&self) -> T {
        self.data.iter().fold(T::zero(), |m, &x| m.max(x.abs()))
    }

    pub fn packed_len(&self) -> usize {
        self.data.len()
    }

    pub fn packed(&self) -> &[T] {
        &self.data
    }

    pub fn packed_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
}
