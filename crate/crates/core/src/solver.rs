//! Explicit finite-difference scheme for the graph flow
//! `u_t = F D^2F|_(Du - e0*)(dx^i, dx^j) u_ij` on periodic grids, n in {1, 2}.
//!
//! Spatial derivatives are second-order central differences with periodic
//! wraparound; the mixed derivative uses the symmetric 4-point cross stencil.
//! Time stepping is explicit Euler with a per-step CFL restriction
//! `dt <= h^2 / (2 (sum_i a^ii + sum_{i != j} |a^ij|))` maximized over cells,
//! scaled by a safety factor. Updates are double-buffered: each step reads the
//! previous field and writes a fresh one.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrand::Integrand;
use crate::scalar::Real;

/// Periodic grid: `cells` points per axis over a period of `length`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec<T> {
    /// Spatial dimension (1 or 2).
    pub n: usize,
    /// Grid points per axis.
    pub cells: usize,
    /// Period per axis.
    pub length: T,
}

impl<T: Real> GridSpec<T> {
    pub fn new(n: usize, cells: usize, length: T) -> Result<Self> {
        if !(n == 1 || n == 2) {
            return Err(Error::precondition("solver supports spatial dimension 1 or 2"));
        }
        if cells < 8 {
            return Err(Error::precondition("grid needs at least 8 cells per axis"));
        }
        if !(length > T::zero()) {
            return Err(Error::precondition("grid period must be positive"));
        }
        Ok(GridSpec { n, cells, length })
    }

    pub fn spacing(&self) -> T {
        self.length / T::of_usize(self.cells)
    }

    pub fn cell_count(&self) -> usize {
        match self.n {
            1 => self.cells,
            _ => self.cells * self.cells,
        }
    }

    /// Physical coordinates of a cell (row-major in 2-D: `cell = iy * cells + ix`).
    pub fn position(&self, cell: usize, out: &mut [T]) {
        let h = self.spacing();
        match self.n {
            1 => out[0] = T::of_usize(cell) * h,
            _ => {
                out[0] = T::of_usize(cell % self.cells) * h;
                out[1] = T::of_usize(cell / self.cells) * h;
            }
        }
    }
}

/// Height field sample at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct GraphState<T> {
    pub u: Vec<T>,
    pub t: T,
}

impl<T: Real> GraphState<T> {
    pub fn new(u: Vec<T>, t: T, grid: &GridSpec<T>) -> Result<Self> {
        if u.len() != grid.cell_count() {
            return Err(Error::precondition(format!(
                "field length {} does not match the grid ({} cells)",
                u.len(),
                grid.cell_count()
            )));
        }
        if let Some(&bad) = u.iter().find(|v| !v.is_finite()) {
            return Err(Error::precondition(format!("field contains non-finite value {bad}")));
        }
        if !(t >= T::zero()) {
            return Err(Error::precondition("time must be non-negative"));
        }
        Ok(GraphState { u, t })
    }
}

/// Per-snapshot scalars streamed alongside the trajectory.
#[derive(Debug, Clone, serde::Serialize)]
pub struct Diagnostics<T> {
    pub max_u: T,
    pub min_u: T,
    /// max over cells of F(Du - e0*)
    pub max_f: T,
    /// time step in effect when the snapshot was taken
    pub dt: T,
}

#[derive(Debug, Clone)]
pub struct Snapshot<T> {
    pub state: GraphState<T>,
    pub diagnostics: Diagnostics<T>,
}

/// Ordered snapshots of one flow run; times strictly increase and the first
/// snapshot is the initial state.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub snapshots: Vec<Snapshot<T>>,
    /// First accepted time step (verification windows are expressed in it).
    pub dt0: T,
}

impl<T: Real> Trajectory<T> {
    /// Largest |u| over all snapshots.
    pub fn sup_abs_u(&self) -> T {
        self.snapshots.iter().fold(T::zero(), |m, s| {
            m.max(s.diagnostics.max_u.abs()).max(s.diagnostics.min_u.abs())
        })
    }
}

/// Time-stepping controls.
#[derive(Debug, Clone)]
pub struct FlowSettings<T> {
    pub t_end: T,
    /// Fraction of the CFL limit actually taken, in (0, 1].
    pub cfl_safety: T,
    /// Snapshot cadence in steps (the initial and final states are always kept).
    pub sample_every: usize,
}

impl<T: Real> FlowSettings<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.t_end >= T::zero()) {
            return Err(Error::precondition("t_end must be non-negative"));
        }
        if !(self.cfl_safety > T::zero() && self.cfl_safety <= T::one()) {
            return Err(Error::precondition("cfl_safety must lie in (0, 1]"));
        }
        if self.sample_every == 0 {
            return Err(Error::precondition("sample_every must be >= 1"));
        }
        Ok(())
    }
}

/// Per-cell first and second differences: `du` holds n entries per cell,
/// `d2u` holds the packed upper triangle (n(n+1)/2 entries) per cell.
#[derive(Debug, Clone)]
pub struct DifferentialField<T> {
    pub n: usize,
    pub du: Vec<T>,
    pub d2u: Vec<T>,
}

impl<T: Real> DifferentialField<T> {
    pub fn du_at(&self, cell: usize) -> &[T] {
        &self.du[cell * self.n..(cell + 1) * self.n]
    }

    pub fn d2u_at(&self, cell: usize) -> &[T] {
        let w = self.n * (self.n + 1) / 2;
        &self.d2u[cell * w..(cell + 1) * w]
    }
}

#[inline]
fn wrap_add(i: usize, c: usize) -> usize {
    let j = i + 1;
    if j == c {
        0
    } else {
        j
    }
}

#[inline]
fn wrap_sub(i: usize, c: usize) -> usize {
    if i == 0 {
        c - 1
    } else {
        i - 1
    }
}

#[inline]
fn stencil_1d<T: Real>(u: &[T], i: usize, c: usize, h: T) -> (T, T) {
    let e = u[wrap_add(i, c)];
    let w = u[wrap_sub(i, c)];
    let two = T::of(2.0);
    ((e - w) / (two * h), (e - two * u[i] + w) / (h * h))
}

#[inline]
#[allow(clippy::too_many_arguments)]
fn stencil_2d<T: Real>(u: &[T], ix: usize, iy: usize, c: usize, h: T) -> ([T; 2], [T; 3]) {
    let xe = wrap_add(ix, c);
    let xw = wrap_sub(ix, c);
    let yn = wrap_add(iy, c);
    let ys = wrap_sub(iy, c);
    let row = iy * c;
    let rown = yn * c;
    let rows = ys * c;
    let two = T::of(2.0);
    let four = T::of(4.0);
    let uc = u[row + ix];
    let ue = u[row + xe];
    let uw = u[row + xw];
    let un = u[rown + ix];
    let us = u[rows + ix];
    let une = u[rown + xe];
    let unw = u[rown + xw];
    let use_ = u[rows + xe];
    let usw = u[rows + xw];
    let h2 = h * h;
    let du = [(ue - uw) / (two * h), (un - us) / (two * h)];
    let d2 = [
        (ue - two * uc + uw) / h2,
        (une - use_ - unw + usw) / (four * h2),
        (un - two * uc + us) / h2,
    ];
    (du, d2)
}

/// Central differences of the field with periodic wraparound. The associated
/// normal covector of cell `c` is `graph_normal(du_at(c))`, whose vertical
/// coordinate is exactly -1.
pub fn differentials<T: Real>(state: &GraphState<T>, grid: &GridSpec<T>) -> DifferentialField<T> {
    let c = grid.cells;
    let h = grid.spacing();
    let n = grid.n;
    let cells = grid.cell_count();
    let mut du = vec![T::zero(); cells * n];
    let mut d2u = vec![T::zero(); cells * n * (n + 1) / 2];
    match n {
        1 => {
            for i in 0..cells {
                let (dx, dxx) = stencil_1d(&state.u, i, c, h);
                du[i] = dx;
                d2u[i] = dxx;
            }
        }
        _ => {
            for cell in 0..cells {
                let (g, hmat) = stencil_2d(&state.u, cell % c, cell / c, c, h);
                du[cell * 2..cell * 2 + 2].copy_from_slice(&g);
                d2u[cell * 3..cell * 3 + 3].copy_from_slice(&hmat);
            }
        }
    }
    DifferentialField { n, du, d2u }
}

/// Flow coefficients for every cell (packed like `d2u`) and the largest CFL
/// denominator `sum_i a^ii + sum_{i != j} |a^ij|` over cells.
fn coefficients<T: Real>(
    f: &Integrand<T>,
    state: &GraphState<T>,
    grid: &GridSpec<T>,
    coeffs: &mut [T],
) -> T {
    let c = grid.cells;
    let h = grid.spacing();
    let n = grid.n;
    let w = n * (n + 1) / 2;
    match n {
        1 => coeffs
            .par_chunks_mut(w)
            .enumerate()
            .map(|(i, out)| {
                let (dx, _) = stencil_1d(&state.u, i, c, h);
                f.flow_coefficients(&[dx], out);
                out[0]
            })
            .reduce(T::zero, |a, b| a.max(b)),
        _ => coeffs
            .par_chunks_mut(w)
            .enumerate()
            .map(|(cell, out)| {
                let (g, _) = stencil_2d(&state.u, cell % c, cell / c, c, h);
                f.flow_coefficients(&g, out);
                let two = T::of(2.0);
                out[0] + out[2] + two * out[1].abs()
            })
            .reduce(T::zero, |a, b| a.max(b)),
    }
}

/// Largest stable explicit step for the current state.
pub fn cfl_limit<T: Real>(f: &Integrand<T>, state: &GraphState<T>, grid: &GridSpec<T>) -> T {
    let mut coeffs = vec![T::zero(); grid.cell_count() * grid.n * (grid.n + 1) / 2];
    let denom = coefficients(f, state, grid, &mut coeffs);
    let h = grid.spacing();
    h * h / (T::of(2.0) * denom.max(T::of(1e-300)))
}

fn advance<T: Real>(
    state: &GraphState<T>,
    grid: &GridSpec<T>,
    coeffs: &[T],
    dt: T,
    next: &mut [T],
) {
    let c = grid.cells;
    let h = grid.spacing();
    match grid.n {
        1 => {
            next.par_iter_mut().enumerate().for_each(|(i, out)| {
                let (_, dxx) = stencil_1d(&state.u, i, c, h);
                *out = state.u[i] + dt * coeffs[i] * dxx;
            });
        }
        _ => {
            next.par_iter_mut().enumerate().for_each(|(cell, out)| {
                let (_, d2) = stencil_2d(&state.u, cell % c, cell / c, c, h);
                let a = &coeffs[cell * 3..cell * 3 + 3];
                let two = T::of(2.0);
                *out = state.u[cell] + dt * (a[0] * d2[0] + two * a[1] * d2[1] + a[2] * d2[2]);
            });
        }
    }
}

/// One explicit Euler step. Rejects `dt` above the CFL limit, carrying the
/// admissible step in the error.
pub fn step<T: Real>(
    state: &GraphState<T>,
    f: &Integrand<T>,
    grid: &GridSpec<T>,
    dt: T,
) -> Result<GraphState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::precondition("dt must be positive"));
    }
    let mut coeffs = vec![T::zero(); grid.cell_count() * grid.n * (grid.n + 1) / 2];
    let denom = coefficients(f, state, grid, &mut coeffs);
    let h = grid.spacing();
    let limit = h * h / (T::of(2.0) * denom.max(T::of(1e-300)));
    if dt > limit * (T::one() + T::of(1e-12)) {
        return Err(Error::StepRejected { dt: dt.to_f64(), admissible_dt: limit.to_f64() });
    }
    let mut next = vec![T::zero(); state.u.len()];
    advance(state, grid, &coeffs, dt, &mut next);
    GraphState::new(next, state.t + dt, grid)
}

fn snapshot<T: Real>(f: &Integrand<T>, grid: &GridSpec<T>, state: &GraphState<T>, dt: T) -> Snapshot<T> {
    let c = grid.cells;
    let h = grid.spacing();
    let (max_u, min_u, max_f) = (0..state.u.len())
        .into_par_iter()
        .map(|cell| {
            let v = state.u[cell];
            let fval = match grid.n {
                1 => {
                    let (dx, _) = stencil_1d(&state.u, cell, c, h);
                    f.eval_graph_normal(&[dx])
                }
                _ => {
                    let (g, _) = stencil_2d(&state.u, cell % c, cell / c, c, h);
                    f.eval_graph_normal(&g)
                }
            };
            (v, v, fval)
        })
        .reduce(
            || (T::neg_infinity(), T::infinity(), T::neg_infinity()),
            |a, b| (a.0.max(b.0), a.1.min(b.1), a.2.max(b.2)),
        );
    Snapshot {
        state: state.clone(),
        diagnostics: Diagnostics { max_u, min_u, max_f, dt },
    }
}

/// Evolve the initial state to `t_end` with per-step adaptive `dt`, collecting
/// snapshots every `sample_every` steps plus the initial and final states.
pub fn run<T: Real>(
    f: &Integrand<T>,
    grid: &GridSpec<T>,
    initial: GraphState<T>,
    settings: &FlowSettings<T>,
) -> Result<Trajectory<T>> {
    settings.validate()?;
    if initial.t != T::zero() {
        return Err(Error::precondition("flow runs start at t = 0"));
    }
    let w = grid.n * (grid.n + 1) / 2;
    let mut coeffs = vec![T::zero(); grid.cell_count() * w];
    let mut state = initial;
    let mut next = vec![T::zero(); state.u.len()];
    let h = grid.spacing();
    let two = T::of(2.0);

    let mut snapshots = Vec::new();
    let mut dt0 = T::zero();
    let mut steps: usize = 0;

    loop {
        let remaining = settings.t_end - state.t;
        if remaining <= T::zero() {
            break;
        }
        let denom = coefficients(f, &state, grid, &mut coeffs);
        let limit = h * h / (two * denom.max(T::of(1e-300)));
        let dt = (settings.cfl_safety * limit).min(remaining);
        if steps == 0 {
            dt0 = dt;
            snapshots.push(snapshot(f, grid, &state, dt));
        }

        advance(&state, grid, &coeffs, dt, &mut next);
        std::mem::swap(&mut state.u, &mut next);
        state.t += dt;
        steps += 1;

        if state.u.iter().any(|v| !v.is_finite()) {
            return Err(Error::BlowUp { t: state.t.to_f64() });
        }
        let done = settings.t_end - state.t <= T::zero();
        if steps.is_multiple_of(settings.sample_every) || done {
            snapshots.push(snapshot(f, grid, &state, dt));
            if done {
                break;
            }
        }
    }

    if snapshots.is_empty() {
        // t_end = 0: a single snapshot of the initial state
        snapshots.push(snapshot(f, grid, &state, T::zero()));
    }
    Ok(Trajectory { snapshots, dt0 })
}
