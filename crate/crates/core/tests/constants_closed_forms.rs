//! Closed-form checks for the sampled constants (the Euclidean integrand has
//! exact values for all of them), plus budget-monotonicity and the theorem
//! parameter assembly.

use anisoflow::constants::{
    compute_a_p, compute_c2, compute_s_eps, compute_trace_bounds, estimate_c1, theorem_params,
    InteriorGeometry, SearchBudget, Theorem, MU_MIN, Q_MIN,
};
use anisoflow::covector::Covector;
use anisoflow::integrand::Integrand;
use anisoflow::Error;

fn budget(direction_samples: usize) -> SearchBudget {
    SearchBudget { direction_samples, ..SearchBudget::default() }
}

// --- C1 -----------------------------------------------------------------

#[test]
fn euclidean_c1_is_zero() {
    let f = Integrand::<f64>::euclidean(2);
    let c1 = estimate_c1(&f, &budget(128)).unwrap();
    assert!(c1 <= 1e-6, "C1 = {c1}");
}

#[test]
fn identity_ellipsoid_c1_is_zero() {
    let f = Integrand::<f64>::ellipsoid(2, &[
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0,
    ])
    .unwrap();
    let c1 = estimate_c1(&f, &budget(128)).unwrap();
    assert!(c1 <= 1e-6, "C1 = {c1}");
}

#[test]
fn c1_decreases_with_the_perturbation_strength() {
    let b = budget(96);
    let mut last = f64::INFINITY;
    for delta in [0.05, 0.025, 0.0125] {
        let f = Integrand::<f64>::perturbed(2, delta).unwrap();
        let c1 = estimate_c1(&f, &b).unwrap();
        assert!(c1 > 0.0 && c1 < last, "C1({delta}) = {c1}, previous {last}");
        last = c1;
    }
}

#[test]
fn c1_estimate_is_monotone_in_the_direction_budget() {
    let f = Integrand::<f64>::perturbed(2, 0.05).unwrap();
    let small = estimate_c1(&f, &budget(32)).unwrap();
    let large = estimate_c1(&f, &budget(128)).unwrap();
    assert!(large >= small);
}

// --- A_P ----------------------------------------------------------------

#[test]
fn euclidean_a_p_matches_the_closed_form() {
    // G|_(p - e0*)(p, p) = |p|^2 / (1 + |p|^2) under F(p - e0*) >= P gives
    // A_P = (P^2 - 1) / P^2
    let f = Integrand::<f64>::euclidean(2);
    let b = budget(64);
    for p in [1.5, 2.0, 5.0] {
        let a = compute_a_p(&f, p, &b).unwrap();
        let expected = (p * p - 1.0) / (p * p);
        assert!((a - expected).abs() < 1e-6, "A_{p} = {a}, expected {expected}");
    }
}

#[test]
fn euclidean_a_p_approaches_one_from_below() {
    let f = Integrand::<f64>::euclidean(2);
    let b = budget(32);
    let a_small = compute_a_p(&f, 5.0, &b).unwrap();
    let a_large = compute_a_p(&f, 100.0, &b).unwrap();
    assert!(a_small < a_large && a_large < 1.0);
    assert!(a_large > 0.999);
}

#[test]
fn a_p_below_the_downward_value_is_a_precondition_error() {
    let f = Integrand::<f64>::euclidean(2);
    assert!(matches!(
        compute_a_p(&f, 0.99, &budget(8)),
        Err(Error::Precondition(_))
    ));
}

#[test]
fn a_p_is_a_certified_lower_bound_at_fresh_sample_points() {
    // For the Euclidean family the sampled value is the true infimum, so any
    // admissible (p, s) must sit above it.
    let f = Integrand::<f64>::euclidean(2);
    let p_floor = 2.0;
    let a = compute_a_p(&f, p_floor, &budget(64)).unwrap();
    let down = Covector::<f64>::downward(2);
    for k in 0..200 {
        let angle = 0.031 * k as f64;
        let scale = 1.0 + 0.11 * k as f64;
        let p = Covector::spatial(&[scale * angle.cos(), scale * angle.sin()]);
        let nu = p.add(&down);
        if f.eval(&nu).unwrap() >= p_floor {
            let g = f.metric_g(&nu, &p, &p).unwrap();
            assert!(g >= a - 1e-9, "certificate violated: G = {g} < A = {a}");
        }
    }
}

#[test]
fn a_p_is_monotone_under_budget_refinement() {
    let f = Integrand::<f64>::perturbed(2, 0.05).unwrap();
    let coarse = compute_a_p(&f, 2.2, &budget(32)).unwrap();
    let fine = compute_a_p(&f, 2.2, &budget(128)).unwrap();
    assert!(fine <= coarse, "infimum increased under refinement: {coarse} -> {fine}");
}

// --- trace bounds ---------------------------------------------------------

#[test]
fn euclidean_trace_bounds_bracket_n_minus_one_and_n() {
    let f2 = Integrand::<f64>::euclidean(2);
    let (lo, hi) = compute_trace_bounds(&f2, &budget(64)).unwrap();
    assert!((lo - 1.0).abs() < 1e-3, "k_lo = {lo}");
    assert!((hi - 2.0).abs() < 1e-3, "k_hi = {hi}");

    let f3 = Integrand::<f64>::euclidean(3);
    let (lo, hi) = compute_trace_bounds(&f3, &budget(64)).unwrap();
    assert!((lo - 2.0).abs() < 1e-3, "k_lo = {lo}");
    assert!((hi - 3.0).abs() < 1e-3, "k_hi = {hi}");
}

#[test]
fn identity_ellipsoid_trace_bounds_equal_the_euclidean_ones() {
    let f = Integrand::<f64>::ellipsoid(2, &[
        1.0, 0.0, 0.0, //
        0.0, 1.0, 0.0, //
        0.0, 0.0, 1.0,
    ])
    .unwrap();
    let (lo, hi) = compute_trace_bounds(&f, &budget(64)).unwrap();
    assert!((lo - 1.0).abs() < 1e-3);
    assert!((hi - 2.0).abs() < 1e-3);
}

#[test]
fn trace_bounds_require_more_than_one_spatial_dimension() {
    let f = Integrand::<f64>::euclidean(1);
    assert!(matches!(
        compute_trace_bounds(&f, &budget(8)),
        Err(Error::Precondition(_))
    ));
}

// --- C2 -------------------------------------------------------------------

#[test]
fn euclidean_c2_is_one() {
    let f = Integrand::<f64>::euclidean(2);
    let c2 = compute_c2(&f, &budget(64)).unwrap();
    assert!((c2 - 1.0).abs() < 1e-3, "C2 = {c2}");
}

#[test]
fn perturbed_c2_is_stable_under_budget_doubling() {
    let f = Integrand::<f64>::perturbed(2, 0.05).unwrap();
    let a = compute_c2(&f, &budget(128)).unwrap();
    let b = compute_c2(&f, &budget(256)).unwrap();
    assert!(a.is_finite() && a > 0.0);
    assert!((b - a).abs() <= 0.01 * a.abs(), "C2 moved from {a} to {b}");
}

#[test]
fn c2_requires_the_symmetry_condition() {
    let f = Integrand::<f64>::odd_perturbed(2, 0.05).unwrap();
    assert!(matches!(
        compute_c2(&f, &budget(16)),
        Err(Error::HypothesisNotMet { .. })
    ));
}

#[test]
fn c2_zero_slot_vanishes_at_s_zero() {
    // at s = 0 the first slot is the zero covector, so the ratio vanishes
    let f = Integrand::<f64>::perturbed(2, 0.05).unwrap();
    let down = Covector::<f64>::downward(2);
    let q = Covector::spatial(&[0.0, 1.0]);
    let zero = Covector::<f64>::zero(2);
    let g = f.metric_g(&down, &zero, &q).unwrap();
    assert_eq!(g, 0.0);
}

// --- S_eps ------------------------------------------------------------------

#[test]
fn euclidean_s_eps_is_finite_and_stable_under_refinement() {
    let f = Integrand::<f64>::euclidean(2);
    let s1 = compute_s_eps(&f, 0.1, &budget(64)).unwrap();
    let s2 = compute_s_eps(&f, 0.1, &budget(256)).unwrap();
    assert!(s1.is_finite() && s1 > 0.0);
    assert!((s2 - s1).abs() <= 0.1 * s1, "S moved from {s1} to {s2}");
}

#[test]
fn shrinking_eps_cannot_shrink_the_threshold() {
    let f = Integrand::<f64>::perturbed(2, 0.05).unwrap();
    let b = budget(64);
    let s_eps = compute_s_eps(&f, 0.4, &b).unwrap();
    let s_half = compute_s_eps(&f, 0.2, &b).unwrap();
    assert!(s_half >= s_eps);
}

#[test]
fn s_eps_spot_check_beyond_twice_the_threshold() {
    // all sampled (p, q) with F(p - e0*) >= 2S satisfy the inequality
    let n = 2;
    let eps = (2.0f64 / n as f64).sqrt();
    let f = Integrand::<f64>::perturbed(n, 0.05).unwrap();
    let s = compute_s_eps(&f, eps, &budget(64)).unwrap();
    assert!(s.is_finite());
    let down = Covector::<f64>::downward(n);
    for k in 0..60 {
        let angle = 0.1 + 0.05 * k as f64;
        let dir = Covector::spatial(&[angle.cos(), angle.sin()]);
        // scale until the level clears 2S
        let mut scale = 1.0;
        while f.eval(&dir.scale(scale).add(&down)).unwrap() < 2.0 * s {
            scale *= 1.5;
        }
        let p = dir.scale(scale);
        let nu = p.add(&down);
        let q = Covector::spatial(&[(2.0 * angle).cos(), (2.0 * angle).sin()]);
        let q_hat = f.hat(&nu, &q).unwrap();
        let lhs = (f.eval(&nu).unwrap() * f.d_of_f_d2f(&nu, &p, &q_hat, &q_hat).unwrap()).abs();
        let rhs = eps
            * f.metric_g(&nu, &p, &p).unwrap().sqrt()
            * f.metric_g(&nu, &q, &q).unwrap();
        assert!(lhs <= rhs, "inequality fails at level {}", f.eval(&nu).unwrap());
    }
}

#[test]
fn s_eps_requires_the_symmetry_condition() {
    let f = Integrand::<f64>::odd_perturbed(2, 0.05).unwrap();
    assert!(matches!(
        compute_s_eps(&f, 0.5, &budget(16)),
        Err(Error::HypothesisNotMet { .. })
    ));
}

// --- theorem parameter assembly ---------------------------------------------

#[test]
fn small_cartan_params_for_the_euclidean_family() {
    // C1 = 0 degenerates q to 1, clamped to Q_MIN; the floor is 2 F(-e0*) = 2
    // and A is the closed form at P = 2.
    let f = Integrand::<f64>::euclidean(2);
    let params =
        theorem_params(&f, 1.0, Theorem::PeriodicSmallCartan, None, &budget(64)).unwrap();
    assert_eq!(params.q, Q_MIN);
    assert_eq!(params.floor, 2.0);
    assert!((params.a - 0.75).abs() < 1e-6);
    assert!((params.t_prime - 1.0 / (2.0 * params.a)).abs() < 1e-12);
    assert!(!params.floor_is_sampled_estimate);
}

#[test]
fn symmetric_route_uses_exponent_two_exactly() {
    let f = Integrand::<f64>::perturbed(2, 0.05).unwrap();
    let params =
        theorem_params(&f, 1.0, Theorem::PeriodicSymmetric, None, &budget(64)).unwrap();
    assert_eq!(params.q, 2.0);
    assert!(params.floor_is_sampled_estimate);
    assert!(params.floor > f.eval(&Covector::downward(2)).unwrap());
}

#[test]
fn interior_params_for_the_euclidean_family() {
    let f = Integrand::<f64>::euclidean(2);
    let params = theorem_params(
        &f,
        1.0,
        Theorem::Interior,
        Some(InteriorGeometry { radius: 1.5 }),
        &budget(64),
    )
    .unwrap();
    let interior = params.interior.as_ref().unwrap();
    // C1 = 0 degenerates mu to 0, clamped; r = 1 / (1 - mu)
    assert_eq!(interior.mu1, MU_MIN);
    assert_eq!(interior.mu2, MU_MIN);
    assert!((interior.r - 1.0 / (1.0 - MU_MIN)).abs() < 1e-12);
    assert!((interior.k - 2.0).abs() < 1e-3); // trace supremum is n
    assert!(params.q >= 1.0 / (1.0 - MU_MIN) - 1e-12);
    assert!(params.t_prime > 0.0 && params.t_prime <= 1.0 / (2.0 * params.a));
}

#[test]
fn interior_estimate_needs_n_greater_than_one() {
    let f = Integrand::<f64>::euclidean(1);
    assert!(matches!(
        theorem_params(&f, 1.0, Theorem::Interior, Some(InteriorGeometry { radius: 1.0 }), &budget(8)),
        Err(Error::HypothesisNotMet { .. })
    ));
}

#[test]
fn symmetric_route_rejects_the_odd_family() {
    let f = Integrand::<f64>::odd_perturbed(2, 0.05).unwrap();
    let err =
        theorem_params(&f, 1.0, Theorem::PeriodicSymmetric, None, &budget(16)).unwrap_err();
    match err {
        Error::HypothesisNotMet { condition } => {
            assert!(condition.contains("symmetry"), "message: {condition}");
        }
        other => panic!("unexpected error {other:?}"),
    }
}

#[test]
fn oversized_cartan_tensor_rejects_the_interior_route() {
    // drive the quartic perturbation close to the convexity edge, where the
    // Cartan quotient blows up while the metric stays (barely) definite
    let mut delta = 0.12;
    let b = budget(96);
    let threshold = (2.0f64 / 2.0f64.sqrt()).sqrt(); // C1 bound for n = 2
    loop {
        let f = Integrand::<f64>::perturbed_unclamped(2, delta);
        match estimate_c1(&f, &b) {
            Ok(c1) if c1 >= threshold => {
                let err = theorem_params(
                    &f,
                    1.0,
                    Theorem::Interior,
                    Some(InteriorGeometry { radius: 1.0 }),
                    &b,
                )
                .unwrap_err();
                assert!(matches!(err, Error::HypothesisNotMet { .. }), "{err:?}");
                return;
            }
            Ok(_) => {
                delta += 0.02;
                assert!(delta < 0.5, "no admissible delta found before losing convexity");
            }
            Err(Error::IntegrandInvalid(_)) => {
                panic!("metric degenerated before the Cartan bound was exceeded");
            }
            Err(other) => panic!("unexpected error {other:?}"),
        }
    }
}
