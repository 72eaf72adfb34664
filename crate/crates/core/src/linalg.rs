//! Small dense symmetric linear algebra used by the level-set geometry:
//! Jacobi eigenvalues and Gram-Schmidt in an arbitrary bilinear form. The
//! matrices here are (n+1) x (n+1) with n the spatial dimension, so a simple
//! cyclic Jacobi sweep is entirely adequate.

use crate::covector::Covector;
use crate::scalar::Real;

/// Eigenvalues of a dense symmetric matrix (row-major `d * d`), ascending.
pub(crate) fn symmetric_eigenvalues<T: Real>(matrix: &[T], d: usize) -> Vec<T> {
    let mut a = matrix.to_vec();
    let max_sweeps = 64;
    for _ in 0..max_sweeps {
        let mut off = T::zero();
        for p in 0..d {
            for q in (p + 1)..d {
                off += a[p * d + q] * a[p * d + q];
            }
        }
        let scale = (0..d).fold(T::zero(), |m, i| m.max(a[i * d + i].abs())).max(T::one());
        if off.sqrt() <= T::of(1e-14) * scale {
            break;
        }
        for p in 0..d {
            for q in (p + 1)..d {
                let apq = a[p * d + q];
                if apq == T::zero() {
                    continue;
                }
                let app = a[p * d + p];
                let aqq = a[q * d + q];
                let theta = (aqq - app) / (T::of(2.0) * apq);
                // stable tangent of the rotation angle
                let t = {
                    let sign = if theta >= T::zero() { T::one() } else { -T::one() };
                    sign / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..d {
                    let akp = a[k * d + p];
                    let akq = a[k * d + q];
                    a[k * d + p] = c * akp - s * akq;
                    a[k * d + q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let apk = a[p * d + k];
                    let aqk = a[q * d + k];
                    a[p * d + k] = c * apk - s * aqk;
                    a[q * d + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut eigs: Vec<T> = (0..d).map(|i| a[i * d + i]).collect();
    eigs.sort_by(|x, y| x.partial_cmp(y).unwrap());
    eigs
}

/// Gram-Schmidt of `vectors` under the bilinear form `form`, dropping
/// near-dependent vectors. Returns vectors with `form(e_i, e_j) = delta_ij`.
/// `form` must be positive definite on the span for this to succeed; returns
/// `None` if fewer than `want` independent vectors survive.
pub(crate) fn orthonormalize_in_form<T: Real>(
    vectors: &[Covector<T>],
    form: impl Fn(&Covector<T>, &Covector<T>) -> T,
    want: usize,
) -> Option<Vec<Covector<T>>> {
    let mut basis: Vec<Covector<T>> = Vec::with_capacity(want);
    for v in vectors {
        let mut w = v.clone();
        for e in &basis {
            let c = form(&w, e);
            w = w.add_scaled(-c, e);
        }
        // residual norm relative to the original vector's form-norm
        let orig = form(v, v).abs().max(T::of(1e-30));
        let nn = form(&w, &w);
        if nn > T::of(1e-20) && nn / orig > T::of(1e-12) {
            let inv = T::one() / nn.sqrt();
            basis.push(w.scale(inv));
            if basis.len() == want {
                return Some(basis);
            }
        }
    }
    None
}
