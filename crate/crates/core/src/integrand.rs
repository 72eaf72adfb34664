//! Anisotropic area integrands `F: V* -> R` and their level-set geometry.
//!
//! An integrand is positive, convex, C^3 away from the origin and homogeneous
//! of degree one. Derivatives are analytic per family; the finite-difference
//! path in [`crate::fd`] exists only as an independent oracle. Built-in
//! families:
//!
//! - `euclidean`: `F(v) = |v|`;
//! - `ellipsoid(B)`: `F(v) = sqrt(v^T B v)` with `B` symmetric positive definite;
//! - `perturbed(delta)`: `F(v) = |v| + delta * (sum_i v_i^4) / |v|^3`, even in
//!   every coordinate;
//! - `odd_perturbed(delta)`: `F(v) = |v| + delta * v_0^3 / |v|^2`, which breaks
//!   the vertical symmetry condition and exists to exercise the checkers.

use crate::covector::Covector;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::tensor::{SymTensor2, SymTensor3};

/// Coordinates below this Euclidean norm are a domain error: the integrand is
/// only C^3 away from the origin.
pub const NEAR_ZERO_FLOOR: f64 = 1e-12;

/// Largest perturbation strength accepted by the checked constructors. Kept
/// small so that uniform convexity holds (checked by the structure suite, not
/// assumed).
pub const MAX_PERTURBATION: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
enum Family<T> {
    Euclidean,
    /// Row-major (n+1) x (n+1) SPD matrix.
    Ellipsoid { matrix: Vec<T> },
    Perturbed { delta: T },
    OddPerturbed { delta: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Integrand<T> {
    family: Family<T>,
    /// Spatial dimension n; covectors carry n + 1 coordinates.
    dim: usize,
}

impl<T: Real> Integrand<T> {
    pub fn euclidean(dim: usize) -> Self {
        assert!(dim >= 1);
        Integrand { family: Family::Euclidean, dim }
    }

    /// Ellipsoid integrand from a row-major (n+1)^2 matrix, which must be
    /// symmetric positive definite.
    pub fn ellipsoid(dim: usize, matrix: &[T]) -> Result<Self> {
        assert!(dim >= 1);
        let d = dim + 1;
        if matrix.len() != d * d {
            return Err(Error::IntegrandInvalid(format!(
                "ellipsoid matrix must have {} entries, got {}",
                d * d,
                matrix.len()
            )));
        }
        // symmetrize; reject if the input was visibly asymmetric
        let mut sym = vec![T::zero(); d * d];
        let mut max_entry = T::zero();
        let mut max_skew = T::zero();
        for i in 0..d {
            for j in 0..d {
                let a = matrix[i * d + j];
                let b = matrix[j * d + i];
                sym[i * d + j] = (a + b) / T::of(2.0);
                max_entry = max_entry.max(a.abs());
                max_skew = max_skew.max((a - b).abs());
            }
        }
        if max_skew > T::of(1e-9) * max_entry.max(T::one()) {
            return Err(Error::IntegrandInvalid(
                "ellipsoid matrix is not symmetric".to_string(),
            ));
        }
        if !cholesky_spd(&sym, d) {
            return Err(Error::IntegrandInvalid(
                "ellipsoid matrix is not positive definite".to_string(),
            ));
        }
        Ok(Integrand { family: Family::Ellipsoid { matrix: sym }, dim })
    }

    /// Even quartic perturbation of the Euclidean norm, `|delta| <= 0.1`.
    pub fn perturbed(dim: usize, delta: T) -> Result<Self> {
        assert!(dim >= 1);
        if delta.abs() > T::of(MAX_PERTURBATION) {
            return Err(Error::IntegrandInvalid(format!(
                "perturbation strength {delta} exceeds the convexity-safe limit {MAX_PERTURBATION}"
            )));
        }
        Ok(Integrand { family: Family::Perturbed { delta }, dim })
    }

    /// Quartic perturbation without the strength clamp. Convexity is not
    /// guaranteed; intended for stress tests that drive the Cartan tensor
    /// toward the admissibility thresholds.
    pub fn perturbed_unclamped(dim: usize, delta: T) -> Self {
        assert!(dim >= 1);
        Integrand { family: Family::Perturbed { delta }, dim }
    }

    /// Odd cubic perturbation in the vertical coordinate, `|delta| <= 0.1`.
    /// Violates the vertical symmetry condition by construction.
    pub fn odd_perturbed(dim: usize, delta: T) -> Result<Self> {
        assert!(dim >= 1);
        if delta.abs() > T::of(MAX_PERTURBATION) {
            return Err(Error::IntegrandInvalid(format!(
                "perturbation strength {delta} exceeds the convexity-safe limit {MAX_PERTURBATION}"
            )));
        }
        Ok(Integrand { family: Family::OddPerturbed { delta }, dim })
    }

    /// Spatial dimension n.
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of covector coordinates, n + 1.
    pub fn coord_count(&self) -> usize {
        self.dim + 1
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Euclidean => "euclidean",
            Family::Ellipsoid { .. } => "ellipsoid",
            Family::Perturbed { .. } => "perturbed",
            Family::OddPerturbed { .. } => "odd_perturbed",
        }
    }

    fn check_domain(&self, coords: &[T]) -> Result<()> {
        assert_eq!(coords.len(), self.coord_count(), "covector dimension mismatch");
        let norm = coords.iter().fold(T::zero(), |a, &c| a + c * c).sqrt();
        if norm < T::of(NEAR_ZERO_FLOOR) {
            return Err(Error::NearZeroCovector {
                norm: norm.to_f64(),
                floor: NEAR_ZERO_FLOOR,
            });
        }
        Ok(())
    }

    /// `F(v)`. Positive for nonzero `v`; errors at near-zero input.
    pub fn eval(&self, v: &Covector<T>) -> Result<T> {
        self.check_domain(v.coords())?;
        Ok(self.eval_raw(v.coords()))
    }

    fn eval_raw(&self, c: &[T]) -> T {
        let r2 = c.iter().fold(T::zero(), |a, &x| a + x * x);
        let r = r2.sqrt();
        match &self.family {
            Family::Euclidean => r,
            Family::Ellipsoid { matrix } => {
                let d = c.len();
                let mut q = T::zero();
                for i in 0..d {
                    let mut wi = T::zero();
                    for j in 0..d {
                        wi += matrix[i * d + j] * c[j];
                    }
                    q += wi * c[i];
                }
                q.sqrt()
            }
            Family::Perturbed { delta } => {
                let s = c.iter().fold(T::zero(), |a, &x| a + x * x * x * x);
                r + *delta * s / (r2 * r)
            }
            Family::OddPerturbed { delta } => {
                let v0 = c[0];
                r + *delta * v0 * v0 * v0 / r2
            }
        }
    }

    /// First derivative `DF|_v` as a covector (rank-1 form).
    pub fn d1(&self, v: &Covector<T>) -> Result<Covector<T>> {
        self.check_domain(v.coords())?;
        let c = v.coords();
        let d = c.len();
        let mut out = vec![T::zero(); d];
        match &self.family {
            Family::Euclidean => {
                let r = norm(c);
                for i in 0..d {
                    out[i] = c[i] / r;
                }
            }
            Family::Ellipsoid { matrix } => {
                let w = matvec(matrix, c);
                let f = dot(&w, c).sqrt();
                for i in 0..d {
                    out[i] = w[i] / f;
                }
            }
            Family::Perturbed { delta } => {
                radial_d1(c, T::one(), &mut out);
                let mut pert = vec![T::zero(); d];
                poly_times_power_d1(c, &Quartic, T::of(-3.0), &mut pert);
                for i in 0..d {
                    out[i] += *delta * pert[i];
                }
            }
            Family::OddPerturbed { delta } => {
                radial_d1(c, T::one(), &mut out);
                let mut pert = vec![T::zero(); d];
                poly_times_power_d1(c, &OddCubic, T::of(-2.0), &mut pert);
                for i in 0..d {
                    out[i] += *delta * pert[i];
                }
            }
        }
        Ok(Covector::from_coords(out))
    }

    /// Second derivative `D^2F|_v`, homogeneous of degree -1.
    pub fn d2(&self, v: &Covector<T>) -> Result<SymTensor2<T>> {
        self.check_domain(v.coords())?;
        let c = v.coords();
        let d = c.len();
        let mut out = SymTensor2::zeros(d);
        match &self.family {
            Family::Euclidean => {
                let r = norm(c);
                let r3 = r * r * r;
                for i in 0..d {
                    for j in i..d {
                        let kron = if i == j { T::one() } else { T::zero() };
                        out.set(i, j, kron / r - c[i] * c[j] / r3);
                    }
                }
            }
            Family::Ellipsoid { matrix } => {
                let w = matvec(matrix, c);
                let f = dot(&w, c).sqrt();
                let f3 = f * f * f;
                for i in 0..d {
                    for j in i..d {
                        out.set(i, j, matrix[i * d + j] / f - w[i] * w[j] / f3);
                    }
                }
            }
            Family::Perturbed { delta } => {
                radial_d2(c, T::one(), &mut out);
                let mut pert = SymTensor2::zeros(d);
                poly_times_power_d2(c, &Quartic, T::of(-3.0), &mut pert);
                add_scaled2(&mut out, *delta, &pert);
            }
            Family::OddPerturbed { delta } => {
                radial_d2(c, T::one(), &mut out);
                let mut pert = SymTensor2::zeros(d);
                poly_times_power_d2(c, &OddCubic, T::of(-2.0), &mut pert);
                add_scaled2(&mut out, *delta, &pert);
            }
        }
        Ok(out)
    }

    /// Third derivative `D^3F|_v`, homogeneous of degree -2.
    pub fn d3(&self, v: &Covector<T>) -> Result<SymTensor3<T>> {
        self.check_domain(v.coords())?;
        let c = v.coords();
        let d = c.len();
        let mut out = SymTensor3::zeros(d);
        match &self.family {
            Family::Euclidean => {
                radial_d3(c, T::one(), &mut out);
            }
            Family::Ellipsoid { matrix } => {
                let w = matvec(matrix, c);
                let f = dot(&w, c).sqrt();
                let f3 = f * f * f;
                let f5 = f3 * f * f;
                let three = T::of(3.0);
                for i in 0..d {
                    for j in i..d {
                        for k in j..d {
                            let bsym = matrix[i * d + j] * w[k]
                                + matrix[i * d + k] * w[j]
                                + matrix[j * d + k] * w[i];
                            out.set(i, j, k, -bsym / f3 + three * w[i] * w[j] * w[k] / f5);
                        }
                    }
                }
            }
            Family::Perturbed { delta } => {
                radial_d3(c, T::one(), &mut out);
                let mut pert = SymTensor3::zeros(d);
                poly_times_power_d3(c, &Quartic, T::of(-3.0), &mut pert);
                add_scaled3(&mut out, *delta, &pert);
            }
            Family::OddPerturbed { delta } => {
                radial_d3(c, T::one(), &mut out);
                let mut pert = SymTensor3::zeros(d);
                poly_times_power_d3(c, &OddCubic, T::of(-2.0), &mut pert);
                add_scaled3(&mut out, *delta, &pert);
            }
        }
        Ok(out)
    }

    /// Derivative of the requested order; convenience dispatcher used by tests.
    pub fn derivative(&self, v: &Covector<T>, order: u8) -> Result<DerivativeForm<T>> {
        match order {
            1 => Ok(DerivativeForm::Rank1(self.d1(v)?)),
            2 => Ok(DerivativeForm::Rank2(self.d2(v)?)),
            3 => Ok(DerivativeForm::Rank3(self.d3(v)?)),
            _ => Err(Error::precondition(format!("derivative order {order} not in 1..=3"))),
        }
    }

    /// Projection of `v` onto the tangent space of the level set through `nu`:
    /// `v - (DF|_nu(v) / F(nu)) nu`. Vanishes iff `v` is parallel to `nu`.
    pub fn hat(&self, nu: &Covector<T>, v: &Covector<T>) -> Result<Covector<T>> {
        let f = self.eval(nu)?;
        let df = self.d1(nu)?;
        let ratio = df.dot(v) / f;
        Ok(v.add_scaled(-ratio, nu))
    }

    /// Level-set metric `G_nu(p, q) = F(nu) D^2F|_nu(p, q)`. Symmetric,
    /// positive definite transverse to `nu`, degenerate along `nu`.
    pub fn metric_g(&self, nu: &Covector<T>, p: &Covector<T>, q: &Covector<T>) -> Result<T> {
        let f = self.eval(nu)?;
        let d2 = self.d2(nu)?;
        Ok(f * d2.apply(p.coords(), q.coords()))
    }

    /// Cartan tensor `Q_nu(p, q, r) = F(nu)^2 D^3F|_nu(p, q, r)`.
    pub fn cartan_q(
        &self,
        nu: &Covector<T>,
        p: &Covector<T>,
        q: &Covector<T>,
        r: &Covector<T>,
    ) -> Result<T> {
        let f = self.eval(nu)?;
        let d3 = self.d3(nu)?;
        Ok(f * f * d3.apply(p.coords(), q.coords(), r.coords()))
    }

    /// Directional derivative `D(F D^2F)|_nu(w, a, b)
    /// = DF|_nu(w) D^2F|_nu(a, b) + F(nu) D^3F|_nu(w, a, b)`.
    pub fn d_of_f_d2f(
        &self,
        nu: &Covector<T>,
        w: &Covector<T>,
        a: &Covector<T>,
        b: &Covector<T>,
    ) -> Result<T> {
        let f = self.eval(nu)?;
        let df = self.d1(nu)?;
        let d2 = self.d2(nu)?;
        let d3 = self.d3(nu)?;
        Ok(df.dot(w) * d2.apply(a.coords(), b.coords()) + f * d3.apply(w.coords(), a.coords(), b.coords()))
    }

    /// Directional derivative `D(F^2 D^2F)|_nu(w, a, b)`.
    pub fn d_of_f2_d2f(
        &self,
        nu: &Covector<T>,
        w: &Covector<T>,
        a: &Covector<T>,
        b: &Covector<T>,
    ) -> Result<T> {
        let f = self.eval(nu)?;
        let df = self.d1(nu)?;
        let d2 = self.d2(nu)?;
        let d3 = self.d3(nu)?;
        let two = T::of(2.0);
        Ok(two * f * df.dot(w) * d2.apply(a.coords(), b.coords())
            + f * f * d3.apply(w.coords(), a.coords(), b.coords()))
    }

    /// `F(Du - e0*)` for a spatial gradient, the quantity the estimates bound.
    /// The normal has vertical coordinate -1, so it is never near zero.
    pub fn eval_graph_normal(&self, du: &[T]) -> T {
        debug_assert_eq!(du.len(), self.dim);
        let mut buf = [T::zero(); 8];
        let c = &mut buf[..self.dim + 1];
        c[0] = -T::one();
        c[1..].copy_from_slice(du);
        self.eval_raw(c)
    }

    /// Flow coefficients `a^{ij} = F D^2F|_(Du - e0*)(dx^i, dx^j)` for spatial
    /// `i, j`, written packed (upper triangle, row-major) into `out`, which
    /// must have length n(n+1)/2. Allocation-free; this is the solver hot path.
    pub fn flow_coefficients(&self, du: &[T], out: &mut [T]) {
        let n = self.dim;
        debug_assert_eq!(du.len(), n);
        debug_assert_eq!(out.len(), n * (n + 1) / 2);
        let mut buf = [T::zero(); 8];
        let c = &mut buf[..n + 1];
        c[0] = -T::one();
        c[1..].copy_from_slice(du);

        match &self.family {
            Family::Euclidean => {
                // F D^2F = I - v v^T / |v|^2 restricted to spatial slots
                let r2 = c.iter().fold(T::zero(), |a, &x| a + x * x);
                let mut m = 0;
                for i in 1..=n {
                    for j in i..=n {
                        let kron = if i == j { T::one() } else { T::zero() };
                        out[m] = kron - c[i] * c[j] / r2;
                        m += 1;
                    }
                }
            }
            Family::Ellipsoid { matrix } => {
                let d = n + 1;
                let mut w = [T::zero(); 8];
                for i in 0..d {
                    let mut wi = T::zero();
                    for j in 0..d {
                        wi += matrix[i * d + j] * c[j];
                    }
                    w[i] = wi;
                }
                let f2 = dot(&w[..d], c);
                let mut m = 0;
                for i in 1..=n {
                    for j in i..=n {
                        out[m] = matrix[i * d + j] - w[i] * w[j] / f2;
                        m += 1;
                    }
                }
            }
            Family::Perturbed { delta } => {
                // F = r + d S r^-3 with S = sum v_i^4; all powers are odd
                // integer powers of 1/r, so the hot path stays on multiplies
                let r2 = c.iter().fold(T::zero(), |a, &x| a + x * x);
                let r = r2.sqrt();
                let inv = T::one() / r;
                let inv2 = inv * inv;
                let inv3 = inv2 * inv;
                let inv5 = inv3 * inv2;
                let inv7 = inv5 * inv2;
                let s = c.iter().fold(T::zero(), |a, &x| a + x * x * x * x);
                let f = r + *delta * s * inv3;
                let three = T::of(3.0);
                let twelve = T::of(12.0);
                let fifteen = T::of(15.0);
                let four = T::of(4.0);
                let mut m = 0;
                for i in 1..=n {
                    for j in i..=n {
                        let kron = if i == j { T::one() } else { T::zero() };
                        let base = kron * inv - c[i] * c[j] * inv3;
                        let vi3 = c[i] * c[i] * c[i];
                        let vj3 = c[j] * c[j] * c[j];
                        let pert = twelve * c[i] * c[i] * kron * inv3
                            - three * four * (vi3 * c[j] + vj3 * c[i]) * inv5
                            + s * (fifteen * c[i] * c[j] * inv7 - three * kron * inv5);
                        out[m] = f * (base + *delta * pert);
                        m += 1;
                    }
                }
            }
            Family::OddPerturbed { delta } => {
                // F = r + d v0^3 r^-2; the vertical polynomial has no spatial
                // gradient, so only the radial-power factors survive
                let r2 = c.iter().fold(T::zero(), |a, &x| a + x * x);
                let r = r2.sqrt();
                let inv = T::one() / r;
                let inv2 = inv * inv;
                let inv3 = inv2 * inv;
                let inv4 = inv2 * inv2;
                let inv6 = inv4 * inv2;
                let v0 = c[0];
                let p = v0 * v0 * v0;
                let f = r + *delta * p * inv2;
                let two = T::of(2.0);
                let eight = T::of(8.0);
                let mut m = 0;
                for i in 1..=n {
                    for j in i..=n {
                        let kron = if i == j { T::one() } else { T::zero() };
                        let base = kron * inv - c[i] * c[j] * inv3;
                        let pert = p * (eight * c[i] * c[j] * inv6 - two * kron * inv4);
                        out[m] = f * (base + *delta * pert);
                        m += 1;
                    }
                }
            }
        }
    }

}

/// Rank-tagged derivative value.
#[derive(Debug, Clone)]
pub enum DerivativeForm<T> {
    Rank1(Covector<T>),
    Rank2(SymTensor2<T>),
    Rank3(SymTensor3<T>),
}

// ---------------------------------------------------------------------------
// small dense helpers

fn norm<T: Real>(c: &[T]) -> T {
    c.iter().fold(T::zero(), |a, &x| a + x * x).sqrt()
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

fn matvec<T: Real>(m: &[T], v: &[T]) -> Vec<T> {
    let d = v.len();
    let mut out = vec![T::zero(); d];
    for i in 0..d {
        let mut acc = T::zero();
        for j in 0..d {
            acc += m[i * d + j] * v[j];
        }
        out[i] = acc;
    }
    out
}

/// In-place Cholesky feasibility test for a row-major symmetric matrix.
fn cholesky_spd<T: Real>(m: &[T], d: usize) -> bool {
    let mut a = m.to_vec();
    for k in 0..d {
        let mut diag = a[k * d + k];
        for t in 0..k {
            diag -= a[k * d + t] * a[k * d + t];
        }
        if diag <= T::zero() {
            return false;
        }
        let l = diag.sqrt();
        a[k * d + k] = l;
        for i in (k + 1)..d {
            let mut v = a[i * d + k];
            for t in 0..k {
                v -= a[i * d + t] * a[k * d + t];
            }
            a[i * d + k] = v / l;
        }
    }
    true
}

fn add_scaled2<T: Real>(out: &mut SymTensor2<T>, s: T, other: &SymTensor2<T>) {
    for (o, &p) in out.packed_mut().iter_mut().zip(other.packed()) {
        *o += s * p;
    }
}

fn add_scaled3<T: Real>(out: &mut SymTensor3<T>, s: T, other: &SymTensor3<T>) {
    for (o, &p) in out.packed_mut().iter_mut().zip(other.packed()) {
        *o += s * p;
    }
}

// ---------------------------------------------------------------------------
// radial powers r^a and polynomial-times-power products
//
// With r = |v| and t = r^a:
//   t_i   = a r^(a-2) v_i
//   t_ij  = a(a-2) r^(a-4) v_i v_j + a r^(a-2) delta_ij
//   t_ijk = a(a-2)(a-4) r^(a-6) v_i v_j v_k
//           + a(a-2) r^(a-4) (delta_ij v_k + delta_ik v_j + delta_jk v_i)
// The Euclidean norm is the case a = 1.

fn radial_d1<T: Real>(c: &[T], a: T, out: &mut [T]) {
    let r = norm(c);
    let coef = a * r.powf(a - T::of(2.0));
    for (o, &v) in out.iter_mut().zip(c) {
        *o = coef * v;
    }
}

fn radial_d2_entry<T: Real>(c: &[T], a: T, i: usize, j: usize) -> T {
    let r = norm(c);
    let c1 = a * (a - T::of(2.0)) * r.powf(a - T::of(4.0));
    let c2 = a * r.powf(a - T::of(2.0));
    let kron = if i == j { T::one() } else { T::zero() };
    c1 * c[i] * c[j] + c2 * kron
}

fn radial_d2<T: Real>(c: &[T], a: T, out: &mut SymTensor2<T>) {
    let d = c.len();
    for i in 0..d {
        for j in i..d {
            out.set(i, j, radial_d2_entry(c, a, i, j));
        }
    }
}

fn radial_d3<T: Real>(c: &[T], a: T, out: &mut SymTensor3<T>) {
    let d = c.len();
    let r = norm(c);
    let two = T::of(2.0);
    let four = T::of(4.0);
    let c1 = a * (a - two) * (a - four) * r.powf(a - T::of(6.0));
    let c2 = a * (a - two) * r.powf(a - four);
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                let kron_sym =
                    kron::<T>(i, j) * c[k] + kron::<T>(i, k) * c[j] + kron::<T>(j, k) * c[i];
                out.set(i, j, k, c1 * c[i] * c[j] * c[k] + c2 * kron_sym);
            }
        }
    }
}

fn kron<T: Real>(i: usize, j: usize) -> T {
    if i == j {
        T::one()
    } else {
        T::zero()
    }
}

/// Homogeneous polynomial with analytic derivatives up to third order.
trait Poly {
    fn value<T: Real>(&self, c: &[T]) -> T;
    fn grad<T: Real>(&self, c: &[T], i: usize) -> T;
    fn hess<T: Real>(&self, c: &[T], i: usize, j: usize) -> T;
    fn third<T: Real>(&self, c: &[T], i: usize, j: usize, k: usize) -> T;
}

/// `sum_i v_i^4`
struct Quartic;

impl Poly for Quartic {
    fn value<T: Real>(&self, c: &[T]) -> T {
        c.iter().fold(T::zero(), |a, &x| a + x * x * x * x)
    }
    fn grad<T: Real>(&self, c: &[T], i: usize) -> T {
        T::of(4.0) * c[i] * c[i] * c[i]
    }
    fn hess<T: Real>(&self, c: &[T], i: usize, j: usize) -> T {
        if i == j {
            T::of(12.0) * c[i] * c[i]
        } else {
            T::zero()
        }
    }
    fn third<T: Real>(&self, c: &[T], i: usize, j: usize, k: usize) -> T {
        if i == j && j == k {
            T::of(24.0) * c[i]
        } else {
            T::zero()
        }
    }
}

/// `v_0^3`
struct OddCubic;

impl Poly for OddCubic {
    fn value<T: Real>(&self, c: &[T]) -> T {
        c[0] * c[0] * c[0]
    }
    fn grad<T: Real>(&self, c: &[T], i: usize) -> T {
        if i == 0 {
            T::of(3.0) * c[0] * c[0]
        } else {
            T::zero()
        }
    }
    fn hess<T: Real>(&self, c: &[T], i: usize, j: usize) -> T {
        if i == 0 && j == 0 {
            T::of(6.0) * c[0]
        } else {
            T::zero()
        }
    }
    fn third<T: Real>(&self, _c: &[T], i: usize, j: usize, k: usize) -> T {
        if i == 0 && j == 0 && k == 0 {
            T::of(6.0)
        } else {
            T::zero()
        }
    }
}

// g = P(v) r^a via the Leibniz rule; the product is homogeneous of degree
// deg(P) + a, and the families use deg + a = 1.

fn poly_times_power_d1<T: Real, P: Poly>(c: &[T], p: &P, a: T, out: &mut [T]) {
    let r = norm(c);
    let t = r.powf(a);
    let t_coef = a * r.powf(a - T::of(2.0));
    let pv = p.value(c);
    for (i, o) in out.iter_mut().enumerate() {
        *o = p.grad(c, i) * t + pv * t_coef * c[i];
    }
}

fn poly_times_power_d2_entry<T: Real, P: Poly>(c: &[T], p: &P, a: T, i: usize, j: usize) -> T {
    let r = norm(c);
    let two = T::of(2.0);
    let t = r.powf(a);
    let t1 = a * r.powf(a - two);
    let t2a = a * (a - two) * r.powf(a - T::of(4.0));
    let pv = p.value(c);
    p.hess(c, i, j) * t
        + t1 * (p.grad(c, i) * c[j] + p.grad(c, j) * c[i])
        + pv * (t2a * c[i] * c[j] + t1 * kron::<T>(i, j))
}

fn poly_times_power_d2<T: Real, P: Poly>(c: &[T], p: &P, a: T, out: &mut SymTensor2<T>) {
    let d = c.len();
    for i in 0..d {
        for j in i..d {
            out.set(i, j, poly_times_power_d2_entry(c, p, a, i, j));
        }
    }
}

fn poly_times_power_d3<T: Real, P: Poly>(c: &[T], p: &P, a: T, out: &mut SymTensor3<T>) {
    let d = c.len();
    let r = norm(c);
    let two = T::of(2.0);
    let four = T::of(4.0);
    let t = r.powf(a);
    let t1 = a * r.powf(a - two);
    let t2a = a * (a - two) * r.powf(a - four);
    let t3a = a * (a - two) * (a - four) * r.powf(a - T::of(6.0));
    let pv = p.value(c);
    let t_ij = |i: usize, j: usize| t2a * c[i] * c[j] + t1 * kron::<T>(i, j);
    let t_ijk = |i: usize, j: usize, k: usize| {
        t3a * c[i] * c[j] * c[k]
            + t2a * (kron::<T>(i, j) * c[k] + kron::<T>(i, k) * c[j] + kron::<T>(j, k) * c[i])
    };
    for i in 0..d {
        for j in i..d {
            for k in j..d {
                let val = p.third(c, i, j, k) * t
                    + p.hess(c, i, j) * t1 * c[k]
                    + p.hess(c, i, k) * t1 * c[j]
                    + p.hess(c, j, k) * t1 * c[i]
                    + p.grad(c, i) * t_ij(j, k)
                    + p.grad(c, j) * t_ij(i, k)
                    + p.grad(c, k) * t_ij(i, j)
                    + pv * t_ijk(i, j, k);
                out.set(i, j, k, val);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flow_coefficients_agree_with_the_metric_assembly() {
        // the fused solver path must match F * D^2F entry by entry
        let families: Vec<Integrand<f64>> = vec![
            Integrand::euclidean(2),
            Integrand::ellipsoid(2, &[1.0, 0.0, 0.0, 0.0, 4.0, 0.0, 0.0, 0.0, 1.0]).unwrap(),
            Integrand::perturbed(2, 0.05).unwrap(),
            Integrand::odd_perturbed(2, 0.05).unwrap(),
        ];
        for f in &families {
            for du in [[0.0, 0.0], [1.0, -2.0], [4.0, 0.3], [-0.7, -0.7]] {
                let mut coeff = [0.0f64; 3];
                f.flow_coefficients(&du, &mut coeff);
                let nu = Covector::graph_normal(&du);
                let fv = f.eval(&nu).unwrap();
                let d2 = f.d2(&nu).unwrap();
                let expected = [
                    fv * d2.get(1, 1),
                    fv * d2.get(1, 2),
                    fv * d2.get(2, 2),
                ];
                for (a, b) in coeff.iter().zip(&expected) {
                    assert!(
                        (a - b).abs() <= 1e-12 * b.abs().max(1.0),
                        "{}: {a} vs {b} at du = {du:?}",
                        f.family_name()
                    );
                }
            }
        }
    }

    #[test]
    fn ellipsoid_rejects_bad_matrices() {
        // wrong size
        assert!(Integrand::<f64>::ellipsoid(2, &[1.0, 0.0, 0.0, 1.0]).is_err());
        // asymmetric
        assert!(Integrand::<f64>::ellipsoid(1, &[1.0, 0.5, -0.5, 1.0]).is_err());
        // not positive definite
        assert!(Integrand::<f64>::ellipsoid(1, &[1.0, 2.0, 2.0, 1.0]).is_err());
    }

    #[test]
    fn perturbation_strength_is_clamped() {
        assert!(Integrand::<f64>::perturbed(2, 0.2).is_err());
        assert!(Integrand::<f64>::odd_perturbed(2, -0.11).is_err());
        // the unclamped constructor exists for stress tests
        let _ = Integrand::<f64>::perturbed_unclamped(2, 0.3);
    }
}
