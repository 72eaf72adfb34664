//! Seeded sampling helpers shared by the structure checker and the constant
//! searches.
//!
//! All draws happen in `f64` and are converted to the scalar type afterwards,
//! so sample streams agree across `f32`/`f64` instantiations. Per-index
//! substreams are derived with a splitmix step so that batch `i` of a search
//! is a pure function of `(seed, i)` — this keeps parallel reductions
//! bit-stable and makes sampled extrema monotone in the batch count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covector::Covector;
use crate::scalar::Real;

/// RNG for a derived substream.
pub(crate) fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix(seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15)))
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Standard normal via Box-Muller, independent of external distribution crates
/// so streams stay stable across dependency upgrades.
pub(crate) fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    loop {
        let u1: f64 = rng.gen();
        let u2: f64 = rng.gen();
        if u1 > f64::MIN_POSITIVE {
            return (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
        }
    }
}

/// Uniformly distributed unit covector in all n+1 coordinates.
pub(crate) fn unit_covector<T: Real, R: Rng>(rng: &mut R, coord_count: usize) -> Covector<T> {
    loop {
        let coords: Vec<f64> = (0..coord_count).map(|_| standard_normal(rng)).collect();
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return Covector::from_coords(coords.iter().map(|&c| T::of(c / norm)).collect());
        }
    }
}

/// Uniformly distributed unit vector of plain coordinates (any length >= 1).
pub(crate) fn unit_vector<T: Real, R: Rng>(rng: &mut R, len: usize) -> Vec<T> {
    loop {
        let coords: Vec<f64> = (0..len).map(|_| standard_normal(rng)).collect();
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return coords.iter().map(|&c| T::of(c / norm)).collect();
        }
    }
}

/// Uniformly distributed unit covector with zero vertical coordinate.
pub(crate) fn unit_spatial<T: Real, R: Rng>(rng: &mut R, spatial_dim: usize) -> Covector<T> {
    loop {
        let mut coords = vec![0.0f64; spatial_dim + 1];
        for c in coords.iter_mut().skip(1) {
            *c = standard_normal(rng);
        }
        let norm = coords.iter().map(|c| c * c).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return Covector::from_coords(coords.iter().map(|&c| T::of(c / norm)).collect());
        }
    }
}

/// Log-uniform scale in [1/2, 2], used to vary sample norms around 1.
pub(crate) fn moderate_scale<T: Real, R: Rng>(rng: &mut R) -> T {
    let u: f64 = rng.gen();
    T::of(2.0f64.powf(2.0 * u - 1.0))
}
