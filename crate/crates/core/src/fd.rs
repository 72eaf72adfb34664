//! Finite-difference derivative oracle.
//!
//! Central differences with one Richardson extrapolation step (steps `h` and
//! `h/2`). The oracle goes exclusively through [`Integrand::eval`]; it never
//! touches the analytic derivative path it is used to check.

use crate::covector::Covector;
use crate::error::Result;
use crate::integrand::{DerivativeForm, Integrand};
use crate::scalar::Real;
use crate::tensor::{SymTensor2, SymTensor3};

/// Default relative step: `h = 1e-3 * |v|`.
pub const DEFAULT_REL_STEP: f64 = 1e-3;

fn eval_at<T: Real>(f: &Integrand<T>, base: &[T], deltas: &[(usize, T)]) -> T {
    let mut c = base.to_vec();
    for &(i, d) in deltas {
        c[i] += d;
    }
    f.eval(&Covector::from_coords(c)).expect("oracle stencil point left the domain")
}

/// First partial by the central rule at steps `h` and `h/2`, Richardson-combined.
pub fn first_partial<T: Real>(f: &Integrand<T>, v: &[T], i: usize, h: T) -> T {
    let two = T::of(2.0);
    let d = |step: T| (eval_at(f, v, &[(i, step)]) - eval_at(f, v, &[(i, -step)])) / (two * step);
    richardson(d(h), d(h / two))
}

/// Second partial: central in each index, applied twice, Richardson-combined.
pub fn second_partial<T: Real>(f: &Integrand<T>, v: &[T], i: usize, j: usize, h: T) -> T {
    let two = T::of(2.0);
    let d = |step: T| {
        let pp = eval_at(f, v, &[(i, step), (j, step)]);
        let pm = eval_at(f, v, &[(i, step), (j, -step)]);
        let mp = eval_at(f, v, &[(i, -step), (j, step)]);
        let mm = eval_at(f, v, &[(i, -step), (j, -step)]);
        (pp - pm - mp + mm) / (two * step * two * step)
    };
    richardson(d(h), d(h / two))
}

/// Third partial: the centered difference operator applied once per index
/// (repeated indices compose correctly), Richardson-combined.
pub fn third_partial<T: Real>(
    f: &Integrand<T>,
    v: &[T],
    i: usize,
    j: usize,
    k: usize,
    h: T,
) -> T {
    let two = T::of(2.0);
    let d = |step: T| {
        let mut acc = T::zero();
        for (si, wi) in [(step, T::one()), (-step, -T::one())] {
            for (sj, wj) in [(step, T::one()), (-step, -T::one())] {
                for (sk, wk) in [(step, T::one()), (-step, -T::one())] {
                    acc += wi * wj * wk * eval_at(f, v, &[(i, si), (j, sj), (k, sk)]);
                }
            }
        }
        acc / ((two * step) * (two * step) * (two * step))
    };
    richardson(d(h), d(h / two))
}

/// Combine approximations at steps `h` and `h/2` of an O(h^2) rule.
fn richardson<T: Real>(coarse: T, fine: T) -> T {
    (T::of(4.0) * fine - coarse) / T::of(3.0)
}

/// Finite-difference approximation of `derivative(f, v, order)` with the
/// default step `1e-3 |v|`.
pub fn fd_oracle<T: Real>(f: &Integrand<T>, v: &Covector<T>, order: u8) -> Result<DerivativeForm<T>> {
    fd_oracle_with_step(f, v, order, T::of(DEFAULT_REL_STEP) * v.norm())
}

pub fn fd_oracle_with_step<T: Real>(
    f: &Integrand<T>,
    v: &Covector<T>,
    order: u8,
    h: T,
) -> Result<DerivativeForm<T>> {
    f.eval(v)?; // surface domain errors before stencil evaluation
    let c = v.coords();
    let d = c.len();
    match order {
        1 => {
            let mut out = vec![T::zero(); d];
            for (i, o) in out.iter_mut().enumerate() {
                *o = first_partial(f, c, i, h);
            }
            Ok(DerivativeForm::Rank1(Covector::from_coords(out)))
        }
        2 => {
            let mut out = SymTensor2::zeros(d);
            for i in 0..d {
                for j in i..d {
                    out.set(i, j, second_partial(f, c, i, j, h));
                }
            }
            Ok(DerivativeForm::Rank2(out))
        }
        3 => {
            let mut out = SymTensor3::zeros(d);
            for i in 0..d {
                for j in i..d {
                    for k in j..d {
                        out.set(i, j, k, third_partial(f, c, i, j, k, h));
                    }
                }
            }
            Ok(DerivativeForm::Rank3(out))
        }
        _ => Err(crate::error::Error::precondition(format!(
            "derivative order {order} not in 1..=3"
        ))),
    }
}
