//! Diagnostics computed from states and step reports: the kinetic measure
//! released by a collapse, cumulative dissipation budgets, the flux error of
//! near-equilibrium columns and their measure-valued representation.
//! Recorders wrap these as [`StepObserver`]s.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::equilibrium::{default_deviation_tol, deviation_parts, project_column, project_column_into};
use crate::error::{invalid, KineticError};
use crate::flux::FluxModel;
use crate::grid::GridSpec;
use crate::scheme::{max_deviation, StepContext, StepObserver, StepReport};
use crate::state::{column_mass_units, KineticState};
use crate::Result;

/// Kinetic measure of one collapse event, `m` at every v-edge of every column.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureField {
    pub n_x: usize,
    pub n_v: usize,
    /// `m[i * (n_v + 1) + k]` at edge `k` of column `i`.
    pub m: Vec<f64>,
    /// Smallest value over all edges (admissibility: ≥ 0).
    pub min_edge: f64,
    /// Largest `|m|` at the top edge (zero because collapse preserves `u`).
    pub top_edge: f64,
    /// `Σ |m| dv dx`.
    pub total_variation: f64,
}

impl MeasureField {
    pub fn column(&self, i: usize) -> &[f64] {
        &self.m[i * (self.n_v + 1)..(i + 1) * (self.n_v + 1)]
    }
}

/// `m_{ik} = Σ_{j<k} (post - pre)_{ij} dv`, so that the collapse jump equals
/// `∂_v m`. For a sign-compatible column collapsing to equilibrium every
/// partial sum is nonnegative.
pub fn reconstruct_m(pre: &KineticState, post: &KineticState) -> Result<MeasureField> {
    let grid = pre.grid();
    if !grid.same_as(post.grid()) {
        return Err(KineticError::GridMismatch);
    }
    let (n_x, n_v) = (grid.n_x(), grid.n_v());
    let dv = grid.dv();
    let mut m = Vec::with_capacity(n_x * (n_v + 1));
    let mut min_edge = f64::INFINITY;
    let mut top_edge: f64 = 0.0;
    let mut tv = 0.0;
    for (a, b) in pre.columns().zip(post.columns()) {
        let mut acc = 0.0;
        m.push(0.0);
        for (&fa, &fb) in a.iter().zip(b) {
            acc += fb - fa;
            let mk = acc * dv;
            m.push(mk);
            min_edge = min_edge.min(mk);
            tv += mk.abs();
        }
        top_edge = top_edge.max((acc * dv).abs());
    }
    Ok(MeasureField {
        n_x,
        n_v,
        m,
        min_edge: min_edge.min(0.0),
        top_edge,
        total_variation: tv * dv * grid.dx(),
    })
}

/// Cumulative dissipation over a set of steps.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Budgets {
    /// `Σ w1_drop`: transport cost of the collapses.
    pub est1: f64,
    /// `Σ equilibrium_entropy` over collapsed columns.
    pub est2: f64,
    /// `Σ collapsed_measure`.
    pub est3: f64,
}

impl Budgets {
    fn add_report(&mut self, r: &StepReport) {
        self.est1 += r.w1_drop;
        self.est2 += r.equilibrium_entropy;
        self.est3 += r.collapsed_measure;
    }
}

/// Budgets over reports with `t` in `[t0, t1)` (all reports for `None`).
pub fn entropy_budgets(reports: &[StepReport], window: Option<(f64, f64)>) -> Budgets {
    let mut b = Budgets::default();
    for r in reports {
        if window.is_none_or(|(t0, t1)| r.t >= t0 && r.t < t1) {
            b.add_report(r);
        }
    }
    b
}

/// Budgets restricted to a space–time window `[x0, x1) × [t0, t1)`, which the
/// step reports cannot provide because they aggregate over all of x.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowBudget {
    pub x: (f64, f64),
    pub t: (f64, f64),
    pub budgets: Budgets,
}

impl WindowBudget {
    pub fn new(x: (f64, f64), t: (f64, f64)) -> Self {
        Self {
            x,
            t,
            budgets: Budgets::default(),
        }
    }
}

impl StepObserver for WindowBudget {
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        let tt = ctx.state.t;
        if !(tt >= self.t.0 && tt < self.t.1) {
            return Ok(());
        }
        let grid = ctx.state.grid();
        for e in ctx.events {
            let x = grid.x_center(e.i);
            if x >= self.x.0 && x < self.x.1 {
                self.budgets.est1 += e.w1;
                self.budgets.est2 += e.equilibrium_entropy;
                self.budgets.est3 += grid.dx();
            }
        }
        Ok(())
    }
}

/// Per-column relative entropy and entropy-flux defects for `η = v²/2`:
/// `∫v(f-Π)dv / η(u)` and `∫v A'(v)(f-Π)dv / η(u)`, with the discrete
/// `η(u) = ∫vΠ dv` so that the first field equals `D`.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxErrorField {
    /// `NaN` in skipped cells.
    pub entropy: Vec<f64>,
    pub entropy_flux: Vec<f64>,
    pub max_entropy: f64,
    pub max_entropy_flux: f64,
    /// Cells with `|u|` below the floor.
    pub skipped: usize,
}

/// Floor on `|u|` relative to the velocity range, below which the ratios are 0/0.
pub const LOW_U_FLOOR: f64 = 1e-6;

pub fn flux_error_field(state: &KineticState, flux: &FluxModel) -> Result<FluxErrorField> {
    let grid = state.grid();
    if flux.n_v() != grid.n_v() {
        return Err(KineticError::GridMismatch);
    }
    let m = grid.v_min().abs().max(grid.v_max().abs());
    let floor = LOW_U_FLOOR * m;
    let dv = grid.dv();
    let mut pi = vec![0.0; grid.n_v()];
    let mut out = FluxErrorField {
        entropy: Vec::with_capacity(grid.n_x()),
        entropy_flux: Vec::with_capacity(grid.n_x()),
        max_entropy: 0.0,
        max_entropy_flux: 0.0,
        skipped: 0,
    };
    for col in state.columns() {
        let u = column_mass_units(col) * dv;
        if u.abs() < floor {
            out.entropy.push(f64::NAN);
            out.entropy_flux.push(f64::NAN);
            out.skipped += 1;
            continue;
        }
        project_column_into(grid, col, &mut pi);
        let (mut e, mut q, mut eta) = (0.0, 0.0, 0.0);
        for (j, ((&f, &p), &a)) in col.iter().zip(&pi).zip(flux.speeds()).enumerate() {
            let v = grid.v_center(j);
            e += v * (f - p);
            q += v * a * (f - p);
            eta += v * p;
        }
        let (e, q) = (e / eta, q / eta);
        out.max_entropy = out.max_entropy.max(e.abs());
        out.max_entropy_flux = out.max_entropy_flux.max(q.abs());
        out.entropy.push(e);
        out.entropy_flux.push(q);
    }
    Ok(out)
}

/// `f - Π ≈ f_min = α₀ + α₁ A'` in the least-squares sense on `[0, M]`, and
/// the mass of the measure `-f_min' dv + f_min(M) δ_M` it generates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MVRepresentation {
    pub u: f64,
    pub alpha: [f64; 2],
    pub fmin_at_m: f64,
    pub mass_m: f64,
    pub gram: [[f64; 2]; 2],
    pub rhs: [f64; 2],
    /// `|G α - b|₁`.
    pub residual: f64,
}

pub fn mv_representation(
    grid: &GridSpec,
    col: &[f64],
    flux: &FluxModel,
    m_bound: f64,
) -> Result<MVRepresentation> {
    if col.len() != grid.n_v() || flux.n_v() != grid.n_v() {
        return Err(KineticError::GridMismatch);
    }
    if !(m_bound > 0.0) {
        return Err(invalid("M", "support bound must be positive"));
    }
    let z = grid.zero_edge();
    let dv = grid.dv();
    let top = z + ((m_bound / dv) - 1e-9).ceil() as usize;
    if top > grid.n_v() {
        return Err(invalid("M", "support bound exceeds the velocity grid"));
    }
    if let Some(j) = col.iter().enumerate().position(|(j, &f)| (j < z || j >= top) && f != 0.0) {
        return Err(invalid(
            "column",
            alloc::format!("value {} at v = {} outside [0, M]", col[j], grid.v_center(j)),
        ));
    }
    let pi = project_column(grid, col);
    let speeds = flux.speeds();
    let (mut a01, mut a11, mut b1) = (0.0, 0.0, 0.0);
    for j in z..top {
        let a = speeds[j];
        a01 += a;
        a11 += a * a;
        b1 += a * (col[j] - pi[j]);
    }
    let a00 = (top - z) as f64 * dv;
    let (a01, a11, b1) = (a01 * dv, a11 * dv, b1 * dv);
    // Index-order sums of a column and of its projection agree bit-for-bit.
    let b0 = (column_mass_units(col) - column_mass_units(&pi)) * dv;
    let det = a00 * a11 - a01 * a01;
    if !(det.abs() > 1e-12 * a00 * a11) {
        return Err(KineticError::SingularGram(det));
    }
    let alpha0 = (a11 * b0 - a01 * b1) / det;
    let alpha1 = (a00 * b1 - a01 * b0) / det;
    let residual = (a00 * alpha0 + a01 * alpha1 - b0).abs() + (a01 * alpha0 + a11 * alpha1 - b1).abs();
    // Total variation of A' on [0, M] through the sampled centers.
    let mut tv = 0.0;
    let mut prev = flux.speed_at(0.0);
    for &a in &speeds[z..top] {
        tv += (a - prev).abs();
        prev = a;
    }
    let a_m = flux.speed_at(m_bound);
    tv += (a_m - prev).abs();
    let fmin_at_m = alpha0 + alpha1 * a_m;
    Ok(MVRepresentation {
        u: column_mass_units(col) * dv,
        alpha: [alpha0, alpha1],
        fmin_at_m,
        mass_m: alpha1.abs() * tv + fmin_at_m.abs(),
        gram: [[a00, a01], [a01, a11]],
        rhs: [b0, b1],
        residual,
    })
}

/// Keeps full states at requested times, snapped to the nearest step.
#[derive(Debug, Clone, Default)]
pub struct SnapshotRecorder {
    steps: Vec<usize>,
    pub snapshots: Vec<KineticState>,
}

impl SnapshotRecorder {
    pub fn at_times(times: &[f64], step_size: f64) -> Self {
        let mut steps: Vec<usize> = times
            .iter()
            .map(|&t| (t / step_size).round().max(0.0) as usize)
            .collect();
        steps.sort_unstable();
        steps.dedup();
        Self {
            steps,
            snapshots: Vec::new(),
        }
    }
}

impl StepObserver for SnapshotRecorder {
    fn start(&mut self, initial: &KineticState, _flux: &FluxModel) -> Result<()> {
        if self.steps.first() == Some(&0) {
            self.snapshots.push(initial.clone());
        }
        Ok(())
    }
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        if self.steps.binary_search(&ctx.step).is_ok() {
            self.snapshots.push(ctx.state.clone());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasureSummary {
    pub t: f64,
    pub min_edge: f64,
    pub top_edge: f64,
    pub total_variation: f64,
}

/// Summarizes [`reconstruct_m`] for every step that changed at least one column.
#[derive(Debug, Clone, Default)]
pub struct MeasureRecorder {
    pub events: Vec<MeasureSummary>,
}

impl StepObserver for MeasureRecorder {
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        if ctx.report.collapsed_cells == 0 {
            return Ok(());
        }
        let field = reconstruct_m(ctx.transported, ctx.state)?;
        self.events.push(MeasureSummary {
            t: ctx.state.t,
            min_edge: field.min_edge,
            top_edge: field.top_edge,
            total_variation: field.total_variation,
        });
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FluxErrorSample {
    pub t: f64,
    pub max_entropy: f64,
    pub max_entropy_flux: f64,
    pub skipped: usize,
    /// Largest `mass_m` over columns (0 unless a support bound was given).
    pub max_mass_m: f64,
    /// Largest `|b₀|` over columns.
    pub max_b0: f64,
}

/// Samples the flux-error field (and optionally the measure-valued
/// representation) every `stride` steps from `t_start` on.
#[derive(Debug, Clone)]
pub struct FluxErrorRecorder {
    pub t_start: f64,
    pub stride: usize,
    /// Support bound `M` for [`mv_representation`]; `None` skips it.
    pub support: Option<f64>,
    pub samples: Vec<FluxErrorSample>,
}

impl FluxErrorRecorder {
    pub fn new(t_start: f64, stride: usize, support: Option<f64>) -> Self {
        Self {
            t_start,
            stride: stride.max(1),
            support,
            samples: Vec::new(),
        }
    }

    pub fn time_max(&self) -> FluxErrorSample {
        let mut out = FluxErrorSample {
            t: f64::NAN,
            max_entropy: 0.0,
            max_entropy_flux: 0.0,
            skipped: 0,
            max_mass_m: 0.0,
            max_b0: 0.0,
        };
        for s in &self.samples {
            out.max_entropy = out.max_entropy.max(s.max_entropy);
            out.max_entropy_flux = out.max_entropy_flux.max(s.max_entropy_flux);
            out.skipped = out.skipped.max(s.skipped);
            out.max_mass_m = out.max_mass_m.max(s.max_mass_m);
            out.max_b0 = out.max_b0.max(s.max_b0);
        }
        out
    }
}

impl StepObserver for FluxErrorRecorder {
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        if ctx.state.t < self.t_start || !ctx.step.is_multiple_of(self.stride) {
            return Ok(());
        }
        let field = flux_error_field(ctx.state, ctx.flux)?;
        let (mut max_mass_m, mut max_b0) = (0.0, 0.0);
        if let Some(m) = self.support {
            let grid = ctx.state.grid();
            for col in ctx.state.columns() {
                let mv = mv_representation(grid, col, ctx.flux, m)?;
                max_mass_m = f64::max(max_mass_m, mv.mass_m);
                max_b0 = f64::max(max_b0, mv.rhs[0].abs());
            }
        }
        self.samples.push(FluxErrorSample {
            t: ctx.state.t,
            max_entropy: field.max_entropy,
            max_entropy_flux: field.max_entropy_flux,
            skipped: field.skipped,
            max_mass_m,
            max_b0,
        });
        Ok(())
    }
}

/// Largest `D` over columns before the first step and after every step.
#[derive(Debug, Clone, Default)]
pub struct DeviationRecorder {
    pub initial: f64,
    pub series: Vec<(f64, f64)>,
}

impl StepObserver for DeviationRecorder {
    fn start(&mut self, initial: &KineticState, _flux: &FluxModel) -> Result<()> {
        self.initial = max_deviation(initial)?;
        Ok(())
    }
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()> {
        self.series.push((ctx.state.t, ctx.report.max_deviation));
        Ok(())
    }
}

/// Per-column deviation of a state, `0` where the equilibrium has no entropy.
pub fn deviation_field(state: &KineticState) -> Result<Vec<f64>> {
    let grid = state.grid();
    let tol = default_deviation_tol(grid);
    let mut pi = vec![0.0; grid.n_v()];
    state
        .columns()
        .enumerate()
        .map(|(i, col)| {
            project_column_into(grid, col, &mut pi);
            deviation_parts(grid, col, &pi, tol)
                .map(|p| p.value)
                .map_err(|numerator| KineticError::NegativeDeviation { i, numerator, tol })
        })
        .collect()
}
