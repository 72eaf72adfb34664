//! Initial-data library for the flow runs: a gentle sine, a steep smoothed
//! sawtooth, a seeded random trigonometric polynomial with pinned sup-norm,
//! and a centered bump for interior-estimate runs.

use crate::sampling;
use crate::scalar::Real;
use crate::solver::GridSpec;

#[derive(Debug, Clone, PartialEq)]
pub enum InitialData<T> {
    /// `a sin(2 pi x / L)` (times `sin(2 pi y / L)` in 2-D).
    Sine { amplitude: T },
    /// Smoothed square-wave profile `a tanh(b sin(2 pi x / L)) / tanh(b)`;
    /// steepness `b` controls the transition slope (~ `2 pi a b / L`).
    Sawtooth { amplitude: T, steepness: T },
    /// Random trigonometric polynomial with modes up to `modes`, rescaled so
    /// the sampled sup-norm equals `amplitude` exactly.
    Trig { amplitude: T, modes: usize, seed: u64 },
    /// Gaussian bump of height `amplitude` and width `width` centered in the
    /// fundamental domain.
    Bump { amplitude: T, width: T },
}

impl<T: Real> InitialData<T> {
    /// Sample onto the grid. Deterministic (the trig family draws from a
    /// substream of its seed only).
    pub fn sample(&self, grid: &GridSpec<T>) -> Vec<T> {
        let cells = grid.cell_count();
        let length = grid.length;
        let tau = T::of(std::f64::consts::TAU);

        let mut pos = [T::zero(); 2];
        let mut u: Vec<T> = match self {
            InitialData::Sine { amplitude } => (0..cells)
                .map(|cell| {
                    grid.position(cell, &mut pos);
                    let mut v = (tau * pos[0] / length).sin();
                    if grid.n == 2 {
                        v *= (tau * pos[1] / length).sin();
                    }
                    *amplitude * v
                })
                .collect(),
            InitialData::Sawtooth { amplitude, steepness } => {
                let norm = steepness.tanh();
                (0..cells)
                    .map(|cell| {
                        grid.position(cell, &mut pos);
                        let mut v = (*steepness * (tau * pos[0] / length).sin()).tanh() / norm;
                        if grid.n == 2 {
                            v *= (*steepness * (tau * pos[1] / length).sin()).tanh() / norm;
                        }
                        *amplitude * v
                    })
                    .collect()
            }
            InitialData::Trig { amplitude, modes, seed } => {
                let modes = (*modes).max(1);
                let mut rng = sampling::substream(*seed, 0x1417);
                // coefficients decay like 1/|k|^2 to keep slopes moderate
                let mut terms: Vec<(f64, f64, f64, f64)> = Vec::new(); // (kx, ky, amp, phase)
                match grid.n {
                    1 => {
                        for k in 1..=modes {
                            let a = sampling::standard_normal(&mut rng) / (k * k) as f64;
                            let phase = sampling::standard_normal(&mut rng);
                            terms.push((k as f64, 0.0, a, phase));
                        }
                    }
                    _ => {
                        for kx in 0..=modes {
                            for ky in 0..=modes {
                                if kx == 0 && ky == 0 {
                                    continue;
                                }
                                let k2 = (kx * kx + ky * ky) as f64;
                                let a = sampling::standard_normal(&mut rng) / k2;
                                let phase = sampling::standard_normal(&mut rng);
                                terms.push((kx as f64, ky as f64, a, phase));
                            }
                        }
                    }
                }
                let mut raw: Vec<T> = (0..cells)
                    .map(|cell| {
                        grid.position(cell, &mut pos);
                        let x = pos[0].to_f64();
                        let y = if grid.n == 2 { pos[1].to_f64() } else { 0.0 };
                        let l = length.to_f64();
                        let v: f64 = terms
                            .iter()
                            .map(|&(kx, ky, a, phase)| {
                                a * (std::f64::consts::TAU * (kx * x + ky * y) / l + phase).sin()
                            })
                            .sum();
                        T::of(v)
                    })
                    .collect();
                let sup = raw.iter().fold(T::zero(), |m, v| m.max(v.abs()));
                if sup > T::zero() {
                    let scale = *amplitude / sup;
                    for v in raw.iter_mut() {
                        *v *= scale;
                    }
                }
                raw
            }
            InitialData::Bump { amplitude, width } => {
                let half = length / T::of(2.0);
                let w2 = *width * *width;
                (0..cells)
                    .map(|cell| {
                        grid.position(cell, &mut pos);
                        let dx = pos[0] - half;
                        let mut r2 = dx * dx;
                        if grid.n == 2 {
                            let dy = pos[1] - half;
                            r2 += dy * dy;
                        }
                        *amplitude * (-r2 / (T::of(2.0) * w2)).exp()
                    })
                    .collect()
            }
        };

        // guard against denormal noise in exactly-zero regions
        for v in u.iter_mut() {
            if v.abs() < T::of(1e-300) {
                *v = T::zero();
            }
        }
        u
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trig_data_is_deterministic_and_pinned_to_amplitude() {
        let grid = GridSpec::new(2, 32, std::f64::consts::TAU).unwrap();
        let data = InitialData::Trig { amplitude: 0.5f64, modes: 3, seed: 11 };
        let a = data.sample(&grid);
        let b = data.sample(&grid);
        assert_eq!(a, b);
        let sup = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!((sup - 0.5).abs() < 1e-14);
    }

    #[test]
    fn sawtooth_respects_height_bound() {
        let grid = GridSpec::new(1, 64, std::f64::consts::TAU).unwrap();
        let data = InitialData::Sawtooth { amplitude: 1.0f64, steepness: 4.0 };
        let u = data.sample(&grid);
        assert!(u.iter().all(|v| v.abs() <= 1.0 + 1e-15));
        let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(sup > 0.9);
    }
}
