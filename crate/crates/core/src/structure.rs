//! Structural checks on an integrand: homogeneity, the radial derivative
//! identities, tangent-space positive definiteness of the level-set metric,
//! and the vertical symmetry condition with its derived identities.

use serde::Serialize;

use crate::covector::Covector;
use crate::error::{Error, Result};
use crate::integrand::Integrand;
use crate::linalg::{orthonormalize_in_form, symmetric_eigenvalues};
use crate::sampling;
use crate::scalar::Real;

/// Sampled residuals and pass flags for one integrand.
///
/// A check passes iff its residual is at most `tol`; the positive-definiteness
/// check passes iff the smallest sampled tangent eigenvalue is positive. The
/// report is deterministic for a fixed seed.
#[derive(Debug, Clone, Serialize)]
pub struct StructureReport<T> {
    pub family: String,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    pub tol: T,
    /// max over samples and scales of |F(s v) - s F(v)| / F(v)
    pub homogeneity_err: T,
    /// max |DF|_v(v) - F(v)| / F(v)
    pub euler1_err: T,
    /// max |D2F|_v(v, basis)|, scale-normalized
    pub euler2_err: T,
    /// max |D(F D2F)|_v(v, basis, basis)|, scale-normalized
    pub euler3_err: T,
    /// smallest eigenvalue of G on the level-set tangent space over samples
    pub min_tangent_eigenvalue: T,
    /// max |F(p + e0*) - F(p - e0*)| over spatial p
    pub symmetry_err: T,
    /// max residual of the four identities implied by symmetry + homogeneity
    /// (vertical first/second/third derivatives at spatial points)
    pub symmetry_derived_err: T,
    pub homogeneity_pass: bool,
    pub euler1_pass: bool,
    pub euler2_pass: bool,
    pub euler3_pass: bool,
    pub positive_definite_pass: bool,
    pub symmetry_pass: bool,
    pub symmetry_derived_pass: bool,
}

impl<T: Real> StructureReport<T> {
    pub fn all_pass(&self) -> bool {
        self.homogeneity_pass
            && self.euler1_pass
            && self.euler2_pass
            && self.euler3_pass
            && self.positive_definite_pass
            && self.symmetry_pass
            && self.symmetry_derived_pass
    }

    /// The checks every theorem needs, regardless of symmetry.
    pub fn core_pass(&self) -> bool {
        self.homogeneity_pass
            && self.euler1_pass
            && self.euler2_pass
            && self.euler3_pass
            && self.positive_definite_pass
    }
}

/// Evaluate all structural residuals at `samples` seeded points.
pub fn check_structure<T: Real>(
    f: &Integrand<T>,
    samples: usize,
    seed: u64,
    tol: T,
) -> Result<StructureReport<T>> {
    if samples == 0 {
        return Err(Error::precondition("structure check needs at least one sample"));
    }
    let n = f.dim();
    let d = f.coord_count();
    let mut rng = sampling::substream(seed, 0);

    let mut homogeneity_err = T::zero();
    let mut euler1_err = T::zero();
    let mut euler2_err = T::zero();
    let mut euler3_err = T::zero();
    let mut min_eig = T::infinity();
    let mut symmetry_err = T::zero();
    let mut derived_err = T::zero();

    let basis: Vec<Covector<T>> = (0..d).map(|k| Covector::basis(n, k)).collect();

    for _ in 0..samples {
        let dir = sampling::unit_covector::<T, _>(&mut rng, d);
        let nu = dir.scale(sampling::moderate_scale::<T, _>(&mut rng));
        let fv = f.eval(&nu)?;

        // degree-one homogeneity at a few fixed scales
        for &lambda in &[0.5, 2.0, 10.0] {
            let l = T::of(lambda);
            let scaled = f.eval(&nu.scale(l))?;
            homogeneity_err = homogeneity_err.max((scaled - l * fv).abs() / fv);
        }

        // radial derivative identities
        let df = f.d1(&nu)?;
        euler1_err = euler1_err.max((df.dot(&nu) - fv).abs() / fv);

        let d2 = f.d2(&nu)?;
        let d2_scale = d2.max_abs().max(T::of(1e-30));
        let radial2 = d2.contract1(nu.coords());
        for &c in &radial2 {
            euler2_err = euler2_err.max(c.abs() / (d2_scale * nu.norm()));
        }

        // D(F D2F)|_nu(nu, a, b) = 0 for all a, b
        let d3 = f.d3(&nu)?;
        let d3_scale = (fv * d3.max_abs()).max(T::of(1e-30));
        for a in &basis {
            for b in &basis {
                let val = df.dot(&nu) * d2.apply(a.coords(), b.coords())
                    + fv * d3.apply(nu.coords(), a.coords(), b.coords());
                euler3_err = euler3_err.max(val.abs() / (d3_scale * nu.norm()));
            }
        }

        // positive definiteness of G on the tangent space at nu
        let hatted: Vec<Covector<T>> = basis
            .iter()
            .map(|e| f.hat(&nu, e))
            .collect::<Result<_>>()?;
        let tangent = orthonormalize_in_form(
            &hatted,
            |a, b| a.dot(b), // euclidean frame; eigenvalues then measure G itself
            n,
        )
        .ok_or_else(|| {
            Error::IntegrandInvalid("tangent space of the level set degenerated".into())
        })?;
        let mut gram = vec![T::zero(); n * n];
        for (i, a) in tangent.iter().enumerate() {
            for (j, b) in tangent.iter().enumerate() {
                gram[i * n + j] = fv * d2.apply(a.coords(), b.coords());
            }
        }
        let eigs = symmetric_eigenvalues(&gram, n);
        min_eig = min_eig.min(eigs[0]);

        // vertical symmetry and its derived identities, at spatial points
        let p = sampling::unit_spatial::<T, _>(&mut rng, n)
            .scale(sampling::moderate_scale::<T, _>(&mut rng));
        let e0 = Covector::basis(n, 0);
        let plus = f.eval(&p.add(&e0))?;
        let minus = f.eval(&p.sub(&e0))?;
        symmetry_err = symmetry_err.max((plus - minus).abs() / plus.abs().max(T::one()));

        let fp = f.eval(&p)?;
        let dfp = f.d1(&p)?;
        let d2p = f.d2(&p)?;
        let d3p = f.d3(&p)?;
        let s2 = d2p.max_abs().max(T::of(1e-30));
        let s3 = d3p.max_abs().max(T::of(1e-30));
        let _ = fp;
        derived_err = derived_err.max(dfp.coords()[0].abs());
        for j in 1..d {
            derived_err = derived_err.max(d2p.get(0, j).abs() / s2);
            for k in 1..d {
                derived_err = derived_err.max(d3p.get(0, j, k).abs() / s3);
            }
        }
        derived_err = derived_err.max(d3p.get(0, 0, 0).abs() / s3);
    }

    Ok(StructureReport {
        family: f.family_name().to_string(),
        dim: n,
        samples,
        seed,
        tol,
        homogeneity_err,
        euler1_err,
        euler2_err,
        euler3_err,
        min_tangent_eigenvalue: min_eig,
        symmetry_err,
        symmetry_derived_err: derived_err,
        homogeneity_pass: homogeneity_err <= tol,
        euler1_pass: euler1_err <= tol,
        euler2_pass: euler2_err <= tol,
        euler3_pass: euler3_err <= tol,
        positive_definite_pass: min_eig > T::zero(),
        symmetry_pass: symmetry_err <= tol,
        symmetry_derived_pass: derived_err <= tol,
    })
}

/// Cheap sampled residual of the vertical symmetry condition, used as a
/// precondition probe by the constant searches.
pub fn symmetry_residual<T: Real>(f: &Integrand<T>, samples: usize, seed: u64) -> Result<T> {
    let mut rng = sampling::substream(seed, 1);
    let n = f.dim();
    let e0 = Covector::basis(n, 0);
    let mut worst = T::zero();
    for _ in 0..samples {
        let p = sampling::unit_spatial::<T, _>(&mut rng, n)
            .scale(sampling::moderate_scale::<T, _>(&mut rng));
        let plus = f.eval(&p.add(&e0))?;
        let minus = f.eval(&p.sub(&e0))?;
        worst = worst.max((plus - minus).abs() / plus.abs().max(T::one()));
    }
    Ok(worst)
}

/// Error if `f` visibly violates the vertical symmetry condition.
pub fn require_symmetry<T: Real>(f: &Integrand<T>, seed: u64) -> Result<()> {
    let resid = symmetry_residual(f, 64, seed)?;
    if resid > T::of(1e-8) {
        return Err(Error::hypothesis(format!(
            "symmetry condition (F even in the vertical coordinate) fails with residual {:e}",
            resid.to_f64()
        )));
    }
    Ok(())
}
