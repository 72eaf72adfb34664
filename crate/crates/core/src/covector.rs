//! Covectors in the dual space, with the vertical (graph) axis at index 0.
//!
//! Coordinates are taken in the dual basis `{e0*, e1*, ..., en*}` of a graph
//! splitting: index 0 is the component along the height axis, indices `1..=n`
//! are the spatial components. The normal covector of a graph with spatial
//! gradient `Du` is `Du - e0*`, i.e. coordinates `(-1, u_1, ..., u_n)`.

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct Covector<T> {
    coords: Vec<T>,
}

impl<T: Real> Covector<T> {
    /// Covector from coordinates `(v_0, v_1, ..., v_n)`; `len = n + 1 >= 2`.
    pub fn from_coords(coords: Vec<T>) -> Self {
        assert!(coords.len() >= 2, "covector needs >= 2 coordinates");
        Covector { coords }
    }

    pub fn zero(spatial_dim: usize) -> Self {
        Covector { coords: vec![T::zero(); spatial_dim + 1] }
    }

    /// The k-th dual basis covector in n+1 coordinates.
    pub fn basis(spatial_dim: usize, k: usize) -> Self {
        let mut c = vec![T::zero(); spatial_dim + 1];
        c[k] = T::one();
        Covector { coords: c }
    }

    /// The downward vertical covector `-e0*`.
    pub fn downward(spatial_dim: usize) -> Self {
        let mut c = vec![T::zero(); spatial_dim + 1];
        c[0] = -T::one();
        Covector { coords: c }
    }

    /// Normal of a graph with spatial gradient `du`: coordinates `(-1, du...)`.
    pub fn graph_normal(du: &[T]) -> Self {
        let mut c = Vec::with_capacity(du.len() + 1);
        c.push(-T::one());
        c.extend_from_slice(du);
        Covector { coords: c }
    }

    /// Purely spatial covector: coordinates `(0, p_1, ..., p_n)`.
    pub fn spatial(p: &[T]) -> Self {
        let mut c = Vec::with_capacity(p.len() + 1);
        c.push(T::zero());
        c.extend_from_slice(p);
        Covector { coords: c }
    }

    pub fn coords(&self) -> &[T] {
        &self.coords
    }

    pub fn coords_mut(&mut self) -> &mut [T] {
        &mut self.coords
    }

    /// Spatial dimension n (one less than the coordinate count).
    pub fn spatial_dim(&self) -> usize {
        self.coords.len() - 1
    }

    pub fn vertical(&self) -> T {
        self.coords[0]
    }

    /// Euclidean dot product of coordinate vectors (plumbing, not the metric).
    pub fn dot(&self, other: &Self) -> T {
        debug_assert_eq!(self.coords.len(), other.coords.len());
        self.coords
            .iter()
            .zip(&other.coords)
            .fold(T::zero(), |acc, (&a, &b)| acc + a * b)
    }

    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }

    pub fn scale(&self, s: T) -> Self {
        Covector { coords: self.coords.iter().map(|&c| c * s).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        debug_assert_eq!(self.coords.len(), other.coords.len());
        Covector {
            coords: self.coords.iter().zip(&other.coords).map(|(&a, &b)| a + b).collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        debug_assert_eq!(self.coords.len(), other.coords.len());
        Covector {
            coords: self.coords.iter().zip(&other.coords).map(|(&a, &b)| a - b).collect(),
        }
    }

    /// `self + s * other`.
    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        debug_assert_eq!(self.coords.len(), other.coords.len());
        Covector {
            coords: self
                .coords
                .iter()
                .zip(&other.coords)
                .map(|(&a, &b)| a + s * b)
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn graph_normal_has_exact_minus_one_vertical() {
        let nu = Covector::graph_normal(&[0.5f64, -2.0]);
        assert_eq!(nu.coords(), &[-1.0, 0.5, -2.0]);
        assert_eq!(nu.spatial_dim(), 2);
    }

    #[test]
    fn basis_and_arithmetic() {
        let e1 = Covector::<f64>::basis(2, 1);
        let e2 = Covector::<f64>::basis(2, 2);
        let v = e1.add_scaled(3.0, &e2);
        assert_eq!(v.coords(), &[0.0, 1.0, 3.0]);
        assert_eq!(v.dot(&e2), 3.0);
    }
}
