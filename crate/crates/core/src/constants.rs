//! Barrier constants extracted from an integrand by constrained extremization
//! over its level sets, and per-theorem parameter assembly.
//!
//! Each search samples seeded directions and scans the scale parameter along
//! each ray on a tangent-compactified grid. The analytic limit values of the
//! scans (the potential extrema) are always appended as explicit candidates,
//! and constraint boundaries are located by bisection, so closed-form cases
//! are reproduced to root-finding accuracy rather than grid accuracy. Sampled
//! infima can only decrease and suprema only increase as the direction budget
//! grows, because batch `i` draws from a substream that depends on `(seed, i)`
//! alone; the same property makes the parallel min/max reductions bit-stable
//! for any worker count.

use rayon::prelude::*;
use serde::Serialize;

use crate::covector::Covector;
use crate::error::{Error, Result};
use crate::integrand::Integrand;
use crate::linalg::orthonormalize_in_form;
use crate::sampling;
use crate::scalar::Real;
use crate::structure::require_symmetry;

const STREAM_C1: u64 = 0xC1A0;
const STREAM_AP: u64 = 0xA9_0000;
const STREAM_TRACE: u64 = 0x77AC_0000;
const STREAM_C2: u64 = 0xC2_0000;
const STREAM_SEPS: u64 = 0x5E9_0000;

/// Discretization budget for the sampled extrema.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SearchBudget {
    /// Number of sampled directions.
    pub direction_samples: usize,
    /// Points per scale scan (also the probe count of inner sphere searches).
    pub s_grid: usize,
    /// Truncation of unbounded scale ranges; analytic limit values are always
    /// appended separately.
    pub s_max: f64,
    /// Multiplier for the polish iterations applied to each scan.
    pub refine_iters: usize,
    pub seed: u64,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            direction_samples: 256,
            s_grid: 64,
            s_max: 1e4,
            refine_iters: 2,
            seed: 0,
        }
    }
}

impl SearchBudget {
    pub fn validate(&self) -> Result<()> {
        if self.direction_samples == 0 || self.s_grid < 2 || self.refine_iters == 0 {
            return Err(Error::precondition(
                "search budget counts must be >= 1 (s_grid >= 2)",
            ));
        }
        if self.s_max <= 1.0 {
            return Err(Error::precondition("s_max must exceed 1"));
        }
        Ok(())
    }

    fn golden_iters(&self) -> usize {
        self.refine_iters * 20
    }
}

/// Assembled constants of one gradient-estimate theorem.
#[derive(Debug, Clone, Serialize)]
pub struct BarrierParams<T> {
    /// Heat coefficient of the barrier kernel.
    pub a: T,
    /// Height bound `|u| <= M`.
    pub m: T,
    /// Barrier exponent, > 1.
    pub q: T,
    /// Flat floor of the bound (`P` for the third-derivative route, `S` for
    /// the symmetry route).
    pub floor: T,
    /// Verification horizon.
    pub t_prime: T,
    /// Sampled Cartan-tensor constant entering the assembly (0 when unused).
    pub c1: T,
    /// Set when the floor is a sampled threshold estimate rather than a
    /// closed-form quantity.
    pub floor_is_sampled_estimate: bool,
    pub interior: Option<InteriorParams<T>>,
}

/// Extra parameters of the space-time interior estimate.
#[derive(Debug, Clone, Serialize)]
pub struct InteriorParams<T> {
    /// Initial ball radius.
    pub radius: T,
    /// Ball shrink rate; the ball at time t has squared radius R^2 - 2kt.
    pub k: T,
    /// Localizer exponent, > 1.
    pub r: T,
    pub mu1: T,
    pub mu2: T,
    /// Sampled cross-term constant entering the exponent assembly.
    pub c2: T,
}

impl<T: Real> BarrierParams<T> {
    /// Check the structural invariants; `f_down` is `F(-e0*)`.
    pub fn validate(&self, f_down: T) -> Result<()> {
        if !(self.a > T::zero()) {
            return Err(Error::precondition("heat coefficient A must be positive"));
        }
        if !(self.q > T::one()) {
            return Err(Error::precondition(format!("q = {} must exceed 1", self.q)));
        }
        if !(self.floor > f_down) {
            return Err(Error::precondition(format!(
                "floor {} must exceed F(-e0*) = {}",
                self.floor, f_down
            )));
        }
        if !(self.t_prime > T::zero()) {
            return Err(Error::precondition("t_prime must be positive"));
        }
        if let Some(ref interior) = self.interior {
            if !(interior.r > T::one()) {
                return Err(Error::precondition("localizer exponent r must exceed 1"));
            }
            if !(interior.k > T::zero()) {
                return Err(Error::precondition("shrink rate k must be positive"));
            }
            for mu in [interior.mu1, interior.mu2] {
                if !(mu > T::zero() && mu < T::one()) {
                    return Err(Error::precondition("mu1, mu2 must lie in (0, 1)"));
                }
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// scale grids and 1-D search helpers

/// Tangent-compactified grid over `[lo, s_max]`.
fn scale_grid<T: Real>(lo: f64, s_max: f64, points: usize) -> Vec<T> {
    let theta_lo = lo.atan();
    let theta_hi = s_max.atan();
    (0..points)
        .map(|i| {
            let t = theta_lo + (theta_hi - theta_lo) * (i as f64) / ((points - 1) as f64);
            T::of(t.tan())
        })
        .collect()
}

/// Golden-section minimum of `f` on `[a, b]`; polish only, the grid scan
/// remains the source of global candidates.
fn golden_min<T: Real>(mut a: T, mut b: T, iters: usize, f: impl Fn(T) -> T) -> (T, T) {
    let inv_phi = T::of(0.618_033_988_749_894_8);
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..iters {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    if fc < fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

fn golden_max<T: Real>(a: T, b: T, iters: usize, f: impl Fn(T) -> T) -> (T, T) {
    let (x, neg) = golden_min(a, b, iters, |s| -f(s));
    (x, -neg)
}

/// Smallest `s` in `[lo, hi]` with `f(s) >= target`, given `f(lo) < target <=
/// f(hi)` and a single upward crossing (convexity along rays guarantees this).
fn bisect_crossing<T: Real>(mut lo: T, mut hi: T, target: T, f: impl Fn(T) -> T) -> T {
    for _ in 0..80 {
        let mid = (lo + hi) / T::of(2.0);
        if f(mid) >= target {
            hi = mid;
        } else {
            lo = mid;
        }
        if (hi - lo) <= T::of(1e-15) * hi.max(T::one()) {
            break;
        }
    }
    hi
}

// ---------------------------------------------------------------------------
// C1: smallest constant bounding the Cartan tensor by G-norms

/// Sampled supremum of `|Q_nu(p, q, r)| / sqrt(G(p,p) G(q,q) G(r,r))` over the
/// unit level set and level-set tangent directions.
///
/// In a G-orthonormal tangent frame the quotient is the injective norm of the
/// symmetric trilinear form Q, which is attained on the diagonal `p = q = r`;
/// each sampled base point contributes the supremum of `|Q(x, x, x)|` over
/// unit frame vectors, estimated by seeded probes polished with shifted
/// symmetric power iterations.
pub fn estimate_c1<T: Real>(f: &Integrand<T>, budget: &SearchBudget) -> Result<T> {
    budget.validate()?;
    let n = f.dim();
    let d = f.coord_count();

    let per_direction = |idx: usize| -> Result<T> {
        let mut rng = sampling::substream(budget.seed, STREAM_C1 ^ (idx as u64));
        let dir = sampling::unit_covector::<T, _>(&mut rng, d);
        let fv = f.eval(&dir)?;
        let nu = dir.scale(T::one() / fv); // F(nu) = 1

        // G-orthonormal tangent frame at nu
        let fnu = f.eval(&nu)?;
        let d2 = f.d2(&nu)?;
        let hatted: Vec<Covector<T>> = (0..d)
            .map(|k| f.hat(&nu, &Covector::basis(n, k)))
            .collect::<Result<_>>()?;
        let frame =
            orthonormalize_in_form(&hatted, |a, b| fnu * d2.apply(a.coords(), b.coords()), n)
            .ok_or_else(|| {
                Error::IntegrandInvalid(
                    "level-set metric degenerated on the tangent space".into(),
                )
            })?;

        // Q in the frame: an n-dimensional symmetric form with G = identity
        let d3 = f.d3(&nu)?;
        let q_scale = fnu * fnu;
        let mut q = crate::tensor::SymTensor3::zeros(n);
        for i in 0..n {
            for j in i..n {
                for k in j..n {
                    q.set(
                        i,
                        j,
                        k,
                        q_scale
                            * d3.apply(
                                frame[i].coords(),
                                frame[j].coords(),
                                frame[k].coords(),
                            ),
                    );
                }
            }
        }

        let fro = q.packed().iter().fold(T::zero(), |acc, &v| acc + v * v).sqrt();
        if fro <= T::of(1e-30) {
            return Ok(T::zero());
        }
        let shift = T::of(2.0) * fro;
        let probes = budget.s_grid.max(8);
        let mut best = T::zero();
        for _ in 0..probes {
            let mut x = sampling::unit_vector::<T, _>(&mut rng, n);
            if q.apply(&x, &x, &x) < T::zero() {
                for c in x.iter_mut() {
                    *c = -*c;
                }
            }
            for _ in 0..=budget.refine_iters * 10 {
                best = best.max(q.apply(&x, &x, &x).abs());
                let y = q.contract2(&x, &x);
                let z: Vec<T> = y.iter().zip(&x).map(|(&yi, &xi)| yi + shift * xi).collect();
                let znorm = z.iter().fold(T::zero(), |a, &zi| a + zi * zi).sqrt();
                if znorm <= T::of(1e-30) {
                    break;
                }
                x = z.iter().map(|&zi| zi / znorm).collect();
            }
        }
        Ok(best)
    };

    (0..budget.direction_samples)
        .into_par_iter()
        .map(per_direction)
        .try_reduce(|| T::zero(), |a, b| Ok(a.max(b)))
}

// ---------------------------------------------------------------------------
// A_P: uniform lower bound on G(p, p) over steep normals

/// Largest sampled constant with `G|_(p - e0*)(p, p) >= A_P` whenever
/// `F(p - e0*) >= P` for spatial p.
///
/// Rays are parametrized through the level set `Sigma_P1` with
/// `P1 = P - F(-e0*)` (which covers the admissible set by the triangle
/// inequality) and scanned over `s in [1, s_max]` filtered by the actual
/// constraint `F(sp - e0*) >= P`. The constraint boundary is located by
/// bisection and the `s -> infinity` limit `G|_p(e0*, e0*)` is an explicit
/// candidate.
pub fn compute_a_p<T: Real>(f: &Integrand<T>, p_floor: T, budget: &SearchBudget) -> Result<T> {
    budget.validate()?;
    let n = f.dim();
    let f_down = f.eval(&Covector::downward(n))?;
    if !(p_floor > f_down) {
        return Err(Error::precondition(format!(
            "threshold P = {p_floor} must exceed F(-e0*) = {f_down}"
        )));
    }
    let p1 = p_floor - f_down;
    let e0 = Covector::basis(n, 0);
    let down = Covector::downward(n);

    let per_direction = |idx: usize| -> Result<T> {
        let mut rng = sampling::substream(budget.seed, STREAM_AP ^ (idx as u64));
        let dir = sampling::unit_spatial::<T, _>(&mut rng, n);
        let p = dir.scale(p1 / f.eval(&dir)?); // on Sigma_P1, spatial

        let value_at = |s: T| -> T {
            let sp = p.scale(s);
            let nu = sp.add(&down);
            f.metric_g(&nu, &sp, &sp).expect("graph normal is never near zero")
        };
        let level_at =
            |s: T| -> T { f.eval(&p.scale(s).add(&down)).expect("graph normal is never near zero") };

        // s -> infinity limit: G|_p(e0*, e0*) (the base point is degree-zero)
        let mut best = f.metric_g(&p, &e0, &e0)?;

        // admissible grid points
        let grid = scale_grid::<T>(1.0, budget.s_max, budget.s_grid);
        for &s in &grid {
            if level_at(s) >= p_floor {
                best = best.min(value_at(s));
            }
        }

        // constraint boundary F(sp - e0*) = P, a potential minimizer
        let s_star = if level_at(T::one()) >= p_floor {
            Some(T::one())
        } else {
            let mut hi = T::one();
            let mut found = None;
            for _ in 0..60 {
                let next = hi * T::of(2.0);
                if level_at(next) >= p_floor {
                    found = Some(bisect_crossing(hi, next, p_floor, level_at));
                    break;
                }
                hi = next;
            }
            found
        };
        if let Some(s0) = s_star {
            best = best.min(value_at(s0));
            let hi = T::of(budget.s_max).min(s0 * T::of(64.0));
            if hi > s0 {
                let (_, polished) = golden_min(s0, hi, budget.golden_iters(), value_at);
                best = best.min(polished);
            }
        }

        Ok(best)
    };

    let result = (0..budget.direction_samples)
        .into_par_iter()
        .map(per_direction)
        .try_reduce(|| T::infinity(), |a, b| Ok(a.min(b)))?;

    if !(result > T::zero() && result.is_finite()) {
        return Err(Error::IntegrandInvalid(format!(
            "lower metric bound A_P degenerated to {result}"
        )));
    }
    Ok(result)
}

// ---------------------------------------------------------------------------
// trace bounds (k', k)

/// Sampled (inf, sup) over spatial p of `sum_i G|_(p - e0*)(dx^i, dx^i)`,
/// including the `s = 0` point and the `s -> infinity` limit of each ray.
pub fn compute_trace_bounds<T: Real>(f: &Integrand<T>, budget: &SearchBudget) -> Result<(T, T)> {
    budget.validate()?;
    let n = f.dim();
    if n <= 1 {
        return Err(Error::precondition("trace bounds require spatial dimension n > 1"));
    }
    let down = Covector::downward(n);
    let basis: Vec<Covector<T>> = (1..=n).map(|k| Covector::basis(n, k)).collect();

    let trace_at = |nu: &Covector<T>| -> Result<T> {
        let fv = f.eval(nu)?;
        let d2 = f.d2(nu)?;
        let mut acc = T::zero();
        for e in &basis {
            acc += fv * d2.apply(e.coords(), e.coords());
        }
        Ok(acc)
    };

    let per_direction = |idx: usize| -> Result<(T, T)> {
        let mut rng = sampling::substream(budget.seed, STREAM_TRACE ^ (idx as u64));
        let dir = sampling::unit_spatial::<T, _>(&mut rng, n);

        let value_at =
            |s: T| -> T { trace_at(&dir.scale(s).add(&down)).expect("graph normal is never near zero") };

        // s = 0 evaluates directly at -e0*; the s -> infinity limit is the
        // degree-zero evaluation at the direction itself.
        let mut lo = value_at(T::zero()).min(trace_at(&dir)?);
        let mut hi = value_at(T::zero()).max(trace_at(&dir)?);

        let grid = scale_grid::<T>(0.0, budget.s_max, budget.s_grid);
        let mut min_s = T::zero();
        let mut max_s = T::zero();
        let mut min_v = T::infinity();
        let mut max_v = T::neg_infinity();
        for &s in &grid {
            let v = value_at(s);
            if v < min_v {
                min_v = v;
                min_s = s;
            }
            if v > max_v {
                max_v = v;
                max_s = s;
            }
        }
        lo = lo.min(min_v);
        hi = hi.max(max_v);

        let smax = T::of(budget.s_max);
        let (_, polished_min) = golden_min(
            (min_s - T::one()).max(T::zero()),
            (min_s + T::one()).min(smax),
            budget.golden_iters(),
            value_at,
        );
        let (_, polished_max) = golden_max(
            (max_s - T::one()).max(T::zero()),
            (max_s + T::one()).min(smax),
            budget.golden_iters(),
            value_at,
        );
        Ok((lo.min(polished_min), hi.max(polished_max)))
    };

    let (k_lo, k_hi) = (0..budget.direction_samples)
        .into_par_iter()
        .map(per_direction)
        .try_reduce(
            || (T::infinity(), T::neg_infinity()),
            |a, b| Ok((a.0.min(b.0), a.1.max(b.1))),
        )?;

    if !(k_lo > T::zero() && k_hi.is_finite()) {
        return Err(Error::IntegrandInvalid(format!(
            "trace bounds degenerated: ({k_lo}, {k_hi})"
        )));
    }
    Ok((k_lo, k_hi))
}

// ---------------------------------------------------------------------------
// C2: cross-term bound for symmetric integrands

/// Sampled supremum of `F(sp - e0*) G|_(sp - e0*)(sp, q) / F(q)` over spatial
/// unit-level p and q and `s in [0, infinity)`, with the analytic limit
/// `-D(F^2 D^2F)|_p(e0*, e0*, q) / F(q)` appended. Requires the symmetry
/// condition. `q = +-p` are always included alongside the random q.
pub fn compute_c2<T: Real>(f: &Integrand<T>, budget: &SearchBudget) -> Result<T> {
    budget.validate()?;
    require_symmetry(f, budget.seed)?;
    let n = f.dim();
    let down = Covector::downward(n);
    let e0 = Covector::basis(n, 0);

    let per_direction = |idx: usize| -> Result<T> {
        let mut rng = sampling::substream(budget.seed, STREAM_C2 ^ (idx as u64));
        let p_dir = sampling::unit_spatial::<T, _>(&mut rng, n);
        let p = p_dir.scale(T::one() / f.eval(&p_dir)?); // on Sigma_1
        let q_dir = sampling::unit_spatial::<T, _>(&mut rng, n);
        let q_rand = q_dir.scale(T::one() / f.eval(&q_dir)?);
        let p_neg = p.scale(-T::one());

        let mut best = T::zero();
        for q in [&q_rand, &p, &p_neg] {
            let fq = f.eval(q)?;
            let value_at = |s: T| -> T {
                let sp = p.scale(s);
                let nu = sp.add(&down);
                let fnu = f.eval(&nu).expect("graph normal is never near zero");
                let g = f.metric_g(&nu, &sp, q).expect("graph normal is never near zero");
                fnu * g / fq
            };
            // s -> infinity limit from the third-derivative expression
            best = best.max(-f.d_of_f2_d2f(&p, &e0, &e0, q)? / fq);

            let grid = scale_grid::<T>(0.0, budget.s_max, budget.s_grid);
            let mut max_s = T::zero();
            let mut max_v = T::neg_infinity();
            for &s in &grid {
                let v = value_at(s);
                if v > max_v {
                    max_v = v;
                    max_s = s;
                }
            }
            best = best.max(max_v);
            let smax = T::of(budget.s_max);
            let (_, polished) = golden_max(
                (max_s - T::one()).max(T::zero()),
                (max_s + T::one()).min(smax),
                budget.golden_iters(),
                value_at,
            );
            best = best.max(polished);
        }
        Ok(best)
    };

    let sup = (0..budget.direction_samples)
        .into_par_iter()
        .map(per_direction)
        .try_reduce(|| T::zero(), |a, b| Ok(a.max(b)))?;
    Ok(sup.max(T::zero()))
}

// ---------------------------------------------------------------------------
// S_eps: steepness threshold for the symmetry route

/// Smallest sampled threshold `S` such that every sampled spatial p with
/// `F(p - e0*) >= S` satisfies
/// `|F D(F D^2F)|_(p - e0*)(p, q_hat, q_hat)| <= eps sqrt(G(p,p)) G(q,q)`
/// for all sampled unit-level q (with `q = p` always included). The returned
/// value carries a 1.25 safety factor and is floored at `1.25 F(-e0*)`; it is
/// a sampled estimate, not a certificate.
///
/// Errors with the best lower bound when the inequality still fails near the
/// top of the scanned range, i.e. the threshold did not stabilize within
/// `s_max`.
pub fn compute_s_eps<T: Real>(f: &Integrand<T>, eps: T, budget: &SearchBudget) -> Result<T> {
    budget.validate()?;
    if !(eps > T::zero()) {
        return Err(Error::precondition("eps must be positive"));
    }
    require_symmetry(f, budget.seed)?;
    let n = f.dim();
    let down = Covector::downward(n);
    let f_down = f.eval(&down)?;

    // per direction: (largest violating level, violation near the scan top?)
    let per_direction = |idx: usize| -> Result<(T, bool)> {
        let mut rng = sampling::substream(budget.seed, STREAM_SEPS ^ (idx as u64));
        let p_dir = sampling::unit_spatial::<T, _>(&mut rng, n);
        let q_dir = sampling::unit_spatial::<T, _>(&mut rng, n);
        let q_rand = q_dir.scale(T::one() / f.eval(&q_dir)?);
        let p_unit = p_dir.scale(T::one() / f.eval(&p_dir)?);

        let grid = scale_grid::<T>(0.0, budget.s_max, budget.s_grid);
        // a violation this close to the truncation means the threshold did
        // not stabilize within the scanned range
        let tail_scale = T::of(budget.s_max / 2.0);

        let mut worst_level = T::zero();
        let mut tail_violation = false;
        for q in [&q_rand, &p_unit] {
            for &s in grid.iter() {
                if s <= T::zero() {
                    continue; // p = 0: both sides vanish
                }
                let sp = p_dir.scale(s);
                let nu = sp.add(&down);
                let q_hat = f.hat(&nu, q)?;
                let lhs = (f.eval(&nu)? * f.d_of_f_d2f(&nu, &sp, &q_hat, &q_hat)?).abs();
                let g_pp = f.metric_g(&nu, &sp, &sp)?;
                let g_qq = f.metric_g(&nu, q, q)?;
                let rhs = eps * g_pp.max(T::zero()).sqrt() * g_qq;
                if lhs > rhs {
                    worst_level = worst_level.max(f.eval(&nu)?);
                    if s >= tail_scale {
                        tail_violation = true;
                    }
                }
            }
        }
        Ok((worst_level, tail_violation))
    };

    let (worst, tail) = (0..budget.direction_samples)
        .into_par_iter()
        .map(per_direction)
        .try_reduce(|| (T::zero(), false), |a, b| Ok((a.0.max(b.0), a.1 || b.1)))?;

    if tail {
        return Err(Error::UnresolvedConstant {
            what: format!(
                "steepness threshold for eps = {eps}: the inequality still fails at the top of the scanned range"
            ),
            best_lower_bound: worst.to_f64(),
        });
    }
    Ok(T::of(1.25) * worst.max(f_down))
}

// ---------------------------------------------------------------------------
// theorem parameter assembly

/// Which gradient estimate to assemble parameters for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Theorem {
    /// Periodic estimate under the third-derivative smallness condition.
    PeriodicSmallCartan,
    /// Periodic estimate under the vertical symmetry condition.
    PeriodicSymmetric,
    /// Space-time interior estimate (both conditions, n > 1).
    Interior,
}

impl Theorem {
    pub fn from_id(id: u8) -> Result<Self> {
        match id {
            1 => Ok(Theorem::PeriodicSmallCartan),
            2 => Ok(Theorem::PeriodicSymmetric),
            3 => Ok(Theorem::Interior),
            _ => Err(Error::precondition(format!("theorem id {id} not in 1..=3"))),
        }
    }

    pub fn id(self) -> u8 {
        match self {
            Theorem::PeriodicSmallCartan => 1,
            Theorem::PeriodicSymmetric => 2,
            Theorem::Interior => 3,
        }
    }
}

/// Geometry of the interior estimate.
#[derive(Debug, Clone, Copy)]
pub struct InteriorGeometry<T> {
    pub radius: T,
}

/// The exponent formulas degenerate in the isotropic limit (the theorems
/// require q > 1 and 0 < mu < 1 strictly), so the assembly clamps.
pub const Q_MIN: f64 = 1.01;
pub const MU_MIN: f64 = 0.05;

/// Assemble the barrier parameters of one theorem for height bound `m`.
pub fn theorem_params<T: Real>(
    f: &Integrand<T>,
    m: T,
    theorem: Theorem,
    geometry: Option<InteriorGeometry<T>>,
    budget: &SearchBudget,
) -> Result<BarrierParams<T>> {
    if !(m > T::zero()) {
        return Err(Error::precondition("height bound M must be positive"));
    }
    let n = f.dim();
    let sqrt_n = T::of_usize(n).sqrt();
    let f_down = f.eval(&Covector::downward(n))?;
    let two = T::of(2.0);
    let four = T::of(4.0);

    let params = match theorem {
        Theorem::PeriodicSmallCartan => {
            let c1 = estimate_c1(f, budget)?;
            if !(c1 * c1 < four / sqrt_n) {
                return Err(Error::hypothesis(format!(
                    "third-derivative smallness: need C1^2 < 4/sqrt(n), got C1 = {c1} with n = {n}"
                )));
            }
            let eps = c1 * c1 * sqrt_n / four;
            let q = (T::one() / (T::one() - eps)).max(T::of(Q_MIN));
            let floor = two * f_down;
            let a = compute_a_p(f, floor, budget)?;
            BarrierParams {
                a,
                m,
                q,
                floor,
                t_prime: m * m / (two * a),
                c1,
                floor_is_sampled_estimate: false,
                interior: None,
            }
        }
        Theorem::PeriodicSymmetric => {
            let eps = (two / T::of_usize(n)).sqrt();
            let floor = compute_s_eps(f, eps, budget)?;
            let a = compute_a_p(f, floor, budget)?;
            BarrierParams {
                a,
                m,
                q: two,
                floor,
                t_prime: m * m / (two * a),
                c1: T::zero(),
                floor_is_sampled_estimate: true,
                interior: None,
            }
        }
        Theorem::Interior => {
            if n <= 1 {
                return Err(Error::hypothesis(
                    "interior estimate requires spatial dimension n > 1",
                ));
            }
            let geometry = geometry
                .ok_or_else(|| Error::precondition("interior estimate requires a ball radius"))?;
            let radius = geometry.radius;
            if !(radius > T::zero()) {
                return Err(Error::precondition("ball radius must be positive"));
            }
            require_symmetry(f, budget.seed)?;
            let c1 = estimate_c1(f, budget)?;
            if !(c1 * c1 < two / sqrt_n) {
                return Err(Error::hypothesis(format!(
                    "third-derivative smallness: need C1^2 < 2/sqrt(n), got C1 = {c1} with n = {n}"
                )));
            }
            let mu = (c1 * c1 * sqrt_n / two).max(T::of(MU_MIN));
            let r = T::one() / (T::one() - mu);
            let (_, k_hi) = compute_trace_bounds(f, budget)?;
            let c2 = compute_c2(f, budget)?;
            let floor = two * f_down;
            let a = compute_a_p(f, floor, budget)?;

            // horizon: kernel convex in u and bounded by one up to t_prime
            let t_star = m * m / (two * a);
            let t_prime = t_star.min(kernel_unit_time(a, m, t_star));

            // exponent large enough that the localizer cross term stays
            // dominated on (0, t_prime]; both normalizations of the kernel
            // slope bound are taken, the larger exponent is always admissible
            let growth = two * c1 * c2 * r * radius.powf(two * r - T::one()) * t_prime;
            let q_spec = (T::one() / (T::one() - mu)) * (T::one() + growth / (a * a * m));
            let q_kernel = (T::one() / (T::one() - mu)) * (T::one() + two * growth / m);
            let q_small = T::one() / (T::one() - c1 * c1 * sqrt_n / four);
            let q = q_small.max(q_spec).max(q_kernel).max(T::of(Q_MIN));

            BarrierParams {
                a,
                m,
                q,
                floor,
                t_prime,
                c1,
                floor_is_sampled_estimate: false,
                interior: Some(InteriorParams { radius, k: k_hi, r, mu1: mu, mu2: mu, c2 }),
            }
        }
    };

    params.validate(f_down)?;
    Ok(params)
}

/// Largest `t <= t_star` with `t^(-1/2) exp(-M^2 / (4At)) <= 1`. The kernel
/// peak value is increasing on `(0, t_star]`, `t_star = M^2 / (2A)`, so a
/// bisection on that bracket suffices; returns `t_star` when the kernel stays
/// below one throughout.
fn kernel_unit_time<T: Real>(a: T, m: T, t_star: T) -> T {
    let four = T::of(4.0);
    let g = |t: T| -> T { (-(m * m) / (four * a * t)).exp() / t.sqrt() };
    if g(t_star) <= T::one() {
        return t_star;
    }
    let mut lo = t_star * T::of(1e-12);
    let mut hi = t_star;
    for _ in 0..200 {
        let mid = (lo + hi) / T::of(2.0);
        if g(mid) <= T::one() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}
