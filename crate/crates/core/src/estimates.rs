//! Barrier functions and bound verification along trajectories.
//!
//! The comparison kernel is `Phi(u, t) = t^(-1/2) exp(-(u -+ 2M)^2 / (4At))`,
//! which satisfies the heat equation `Phi_t = A Phi''` exactly; the theorem
//! bounds are inverse powers of it floored by a constant:
//!
//! - periodic, small Cartan tensor:  `max{ t^(q/2) exp(q (|u|-2M)^2 / (4At)), P }`
//! - periodic, symmetric integrand:  the same with `q = 2` and floor `S`
//! - interior: the growing term additionally carries the localizer power
//!   `(R^2 - 2kt - |x|^2)^(-r)` and only cells inside the shrinking ball count.
//!
//! Verification evaluates `F(Du - e0*)` per cell per snapshot against the
//! bound and reports the worst margin; `Z = value - bound` is the comparison
//! quantity whose maximum stays non-positive when the estimate holds.

use serde::Serialize;

use crate::constants::{estimate_c1, BarrierParams, SearchBudget, Theorem};
use crate::error::{Error, Result};
use crate::integrand::Integrand;
use crate::scalar::Real;
use crate::solver::{differentials, GridSpec, Trajectory};
use crate::structure::require_symmetry;

/// Which height wall the kernel is anchored to: `Minus` uses `u - 2M`,
/// `Plus` uses `u + 2M`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WallSign {
    Minus,
    Plus,
}

/// Heat kernel barrier `Phi(u, t) = t^(-1/2) exp(-(u -+ 2M)^2 / (4At))`.
pub fn phi_heat<T: Real>(u: T, t: T, a: T, m: T, sign: WallSign) -> Result<T> {
    if !(t > T::zero()) {
        return Err(Error::precondition("barrier kernel needs t > 0"));
    }
    if !(a > T::zero()) {
        return Err(Error::precondition("barrier kernel needs A > 0"));
    }
    let two = T::of(2.0);
    let four = T::of(4.0);
    let shifted = match sign {
        WallSign::Minus => u - two * m,
        WallSign::Plus => u + two * m,
    };
    Ok((-(shifted * shifted) / (four * a * t)).exp() / t.sqrt())
}

/// Right-hand side of the gradient estimate at height `u`, time `t` and (for
/// the interior estimate) position `x` relative to the ball center. Returns
/// `None` when the point lies outside the shrinking ball.
pub fn bound<T: Real>(
    theorem: Theorem,
    params: &BarrierParams<T>,
    u: T,
    t: T,
    x: Option<&[T]>,
) -> Result<Option<T>> {
    if !(t > T::zero() && t <= params.t_prime) {
        return Err(Error::precondition(format!(
            "bound evaluated at t = {t} outside (0, T'] with T' = {}",
            params.t_prime
        )));
    }
    let two = T::of(2.0);
    let four = T::of(4.0);
    let gap = u.abs() - two * params.m;
    let exponent = params.q * gap * gap / (four * params.a * t);
    let growing = t.powf(params.q / two) * exponent.exp();
    let value = match theorem {
        Theorem::PeriodicSmallCartan | Theorem::PeriodicSymmetric => growing,
        Theorem::Interior => {
            let interior = params
                .interior
                .as_ref()
                .ok_or_else(|| Error::precondition("interior bound needs interior params"))?;
            let x = x.ok_or_else(|| {
                Error::precondition("interior bound needs the cell position")
            })?;
            let r2 = x.iter().fold(T::zero(), |acc, &c| acc + c * c);
            let eta = interior.radius * interior.radius - two * interior.k * t - r2;
            if eta <= T::zero() {
                return Ok(None);
            }
            growing * eta.powf(-interior.r)
        }
    };
    Ok(Some(value.max(params.floor)))
}

/// One verified snapshot: the worst (smallest-margin) cell.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateRow<T> {
    pub t: T,
    /// Linear index of the worst cell.
    pub cell: usize,
    /// `F(Du - e0*)` at the worst cell.
    pub value: T,
    pub bound: T,
    /// `bound - value`; the snapshot diagnostic `max Z` is its negation.
    pub margin: T,
    /// Cells that entered the comparison (all of them, or the in-ball subset).
    pub cells_evaluated: usize,
}

/// Margin report of one trajectory against one theorem bound.
#[derive(Debug, Clone, Serialize)]
pub struct EstimateReport<T> {
    pub theorem: u8,
    pub params: BarrierParams<T>,
    pub rows: Vec<EstimateRow<T>>,
    pub min_margin: Option<T>,
    pub violated: bool,
    /// Verification starts at the first snapshot past this time (discrete
    /// initial layers pollute the t -> 0 limit, where the bound is infinite
    /// anyway).
    pub start_time: T,
}

/// Cells whose center lies strictly inside the ball of squared radius
/// `radius_sq` around the grid center.
pub fn ball_cells<T: Real>(grid: &GridSpec<T>, radius_sq: T) -> Vec<usize> {
    let half = grid.length / T::of(2.0);
    let mut pos = [T::zero(); 2];
    (0..grid.cell_count())
        .filter(|&cell| {
            grid.position(cell, &mut pos);
            let mut r2 = T::zero();
            for &p in pos.iter().take(grid.n) {
                let d = p - half;
                r2 += d * d;
            }
            r2 < radius_sq
        })
        .collect()
}

fn spot_check_hypotheses<T: Real>(
    f: &Integrand<T>,
    theorem: Theorem,
    params: &BarrierParams<T>,
) -> Result<()> {
    let needs_symmetry = matches!(theorem, Theorem::PeriodicSymmetric | Theorem::Interior);
    if needs_symmetry {
        require_symmetry(f, 0)?;
    }
    let c1_cap = match theorem {
        Theorem::PeriodicSmallCartan => Some(T::of(4.0)),
        Theorem::Interior => Some(T::of(2.0)),
        Theorem::PeriodicSymmetric => None,
    };
    if let Some(cap) = c1_cap {
        // a cheap sampled estimate is a lower bound of the true constant, so
        // exceeding the cap here is a sound rejection
        let probe = SearchBudget { direction_samples: 32, s_grid: 16, refine_iters: 1, ..SearchBudget::default() };
        let c1 = estimate_c1(f, &probe)?;
        let sqrt_n = T::of_usize(f.dim()).sqrt();
        if c1 * c1 >= cap / sqrt_n {
            return Err(Error::hypothesis(format!(
                "third-derivative smallness: sampled C1 = {c1} already violates C1^2 < {}/sqrt(n)",
                cap
            )));
        }
    }
    if theorem == Theorem::Interior && params.interior.is_none() {
        return Err(Error::precondition("interior verification needs interior params"));
    }
    Ok(())
}

/// Compare `F(Du - e0*)` against the theorem bound at every snapshot with
/// `10 dt0 <= t <= T'` and report margins.
pub fn verify<T: Real>(
    traj: &Trajectory<T>,
    f: &Integrand<T>,
    theorem: Theorem,
    params: &BarrierParams<T>,
    grid: &GridSpec<T>,
) -> Result<EstimateReport<T>> {
    spot_check_hypotheses(f, theorem, params)?;
    let sup_u = traj.sup_abs_u();
    if params.m < sup_u * (T::one() - T::of(1e-12)) {
        return Err(Error::precondition(format!(
            "height bound M = {} is below the trajectory sup |u| = {sup_u}",
            params.m
        )));
    }
    if let Some(first) = traj.snapshots.first() {
        if first.state.u.len() != grid.cell_count() {
            return Err(Error::precondition(
                "trajectory and grid disagree on the cell count",
            ));
        }
    }

    let start_time = T::of(10.0) * traj.dt0;
    let half = grid.length / T::of(2.0);
    let mut rows = Vec::new();

    for snap in &traj.snapshots {
        let t = snap.state.t;
        if !(t >= start_time && t > T::zero() && t <= params.t_prime) {
            continue;
        }
        let diffs = differentials(&snap.state, grid);
        let mut worst: Option<EstimateRow<T>> = None;
        let mut evaluated = 0usize;
        let mut pos = [T::zero(); 2];
        for cell in 0..grid.cell_count() {
            let x_rel: Option<Vec<T>> = match theorem {
                Theorem::Interior => {
                    grid.position(cell, &mut pos);
                    Some(pos.iter().take(grid.n).map(|&p| p - half).collect())
                }
                _ => None,
            };
            let u = snap.state.u[cell];
            let b = bound(theorem, params, u, t, x_rel.as_deref())?;
            let Some(b) = b else { continue }; // outside the shrinking ball
            evaluated += 1;
            let value = f.eval_graph_normal(diffs.du_at(cell));
            let margin = b - value;
            let replace = worst.as_ref().map(|w| margin < w.margin).unwrap_or(true);
            if replace {
                worst = Some(EstimateRow { t, cell, value, bound: b, margin, cells_evaluated: 0 });
            }
        }
        if let Some(mut row) = worst {
            row.cells_evaluated = evaluated;
            rows.push(row);
        }
    }

    let min_margin = rows
        .iter()
        .map(|r| r.margin)
        .fold(None, |acc: Option<T>, m| Some(acc.map_or(m, |a| a.min(m))));
    let violated = min_margin.map(|m| m < T::zero()).unwrap_or(false);
    Ok(EstimateReport {
        theorem: theorem.id(),
        params: params.clone(),
        rows,
        min_margin,
        violated,
        start_time,
    })
}

// Verification re-derives `F(Du - e0*)` from the snapshots with the same
// stencil the solver used, so reports are a pure function of the trajectory.
