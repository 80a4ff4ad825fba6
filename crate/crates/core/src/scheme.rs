//! Time steppers: classic transport–collapse, thresholded transport–collapse
//! and thresholded BGK relaxation, plus the run loop that drives them.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::equilibrium::{default_deviation_tol, deviation_parts, project_column_into};
use crate::error::{invalid, KineticError};
use crate::flux::FluxModel;
use crate::grid::{Boundary, GridSpec};
use crate::ot::w1_columns;
use crate::state::KineticState;
use crate::transport::{advect_with, ShiftPlan};
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SchemeKind {
    Classic,
    Thresholded,
    Bgk,
}

impl SchemeKind {
    pub fn name(self) -> &'static str {
        match self {
            SchemeKind::Classic => "classic",
            SchemeKind::Thresholded => "thresholded",
            SchemeKind::Bgk => "bgk",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: SchemeKind,
    pub epsilon: f64,
    /// Collapse interval for the discrete schemes, relaxation time for BGK.
    pub h: f64,
    /// Transport substep. Equal to `h` for the discrete schemes.
    pub dt: f64,
    pub t_final: f64,
    /// Slack allowed on the sign-compatibility check after each step.
    pub clamp_tol: f64,
}

pub const DEFAULT_CLAMP_TOL: f64 = 1e-12;

impl SchemeConfig {
    pub fn classic(h: f64, t_final: f64) -> Self {
        Self {
            scheme: SchemeKind::Classic,
            epsilon: 0.0,
            h,
            dt: h,
            t_final,
            clamp_tol: DEFAULT_CLAMP_TOL,
        }
    }

    pub fn thresholded(epsilon: f64, h: f64, t_final: f64) -> Self {
        Self {
            scheme: SchemeKind::Thresholded,
            epsilon,
            ..Self::classic(h, t_final)
        }
    }

    pub fn bgk(epsilon: f64, h: f64, dt: f64, t_final: f64) -> Self {
        Self {
            scheme: SchemeKind::Bgk,
            epsilon,
            dt,
            ..Self::classic(h, t_final)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon >= 0.0) {
            return Err(invalid("epsilon", format!("must be >= 0, got {}", self.epsilon)));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(invalid("h", format!("must be positive and finite, got {}", self.h)));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(invalid("dt", format!("must be positive and finite, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(invalid("t_final", format!("must be >= 0 and finite, got {}", self.t_final)));
        }
        if !(self.clamp_tol >= 0.0) {
            return Err(invalid("clamp_tol", format!("must be >= 0, got {}", self.clamp_tol)));
        }
        if self.scheme != SchemeKind::Bgk && self.dt != self.h {
            return Err(invalid("dt", "discrete schemes step by h; leave dt unset or equal to h"));
        }
        if self.scheme == SchemeKind::Bgk && self.dt > self.h {
            log::warn!(
                "bgk substep dt = {} exceeds relaxation time h = {}; splitting error is O(dt/h)",
                self.dt,
                self.h
            );
        }
        Ok(())
    }

    pub fn step_size(&self) -> f64 {
        match self.scheme {
            SchemeKind::Bgk => self.dt,
            _ => self.h,
        }
    }

    /// Number of steps to reach `t_final`, rounding a near-integer ratio
    /// instead of taking an extra step.
    pub fn n_steps(&self) -> usize {
        let r = self.t_final / self.step_size();
        let n = r.round();
        if (r - n).abs() <= 1e-9 * r.max(1.0) {
            n as usize
        } else {
            r.ceil() as usize
        }
    }
}

/// Aggregates for one step over the columns that were collapsed (or relaxed).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepReport {
    pub t: f64,
    pub collapsed_cells: usize,
    /// `collapsed_cells · dx`.
    pub collapsed_measure: f64,
    /// `Σ (∫v f dv - ∫v f_new dv) dx` over changed columns.
    pub entropy_drop: f64,
    /// `Σ W1(f, f_new) dx` over changed columns.
    pub w1_drop: f64,
    /// `Σ ∫v Π dv dx` over changed columns.
    pub equilibrium_entropy: f64,
    /// Largest `D` over all columns after the step.
    pub max_deviation: f64,
}

/// What happened to one column during the collapse half of a step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColumnEvent {
    pub i: usize,
    pub deviation_before: f64,
    pub deviation_after: f64,
    /// Fraction of `f - Π` kept: 0 for a full collapse.
    pub sigma: f64,
    pub entropy_drop: f64,
    pub w1: f64,
    pub equilibrium_entropy: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Rule {
    All,
    Threshold(f64),
    Relax { epsilon: f64, decay: f64 },
}

fn collapse_rule(kind: SchemeKind, epsilon: f64, dt: f64, h: f64) -> Rule {
    match kind {
        SchemeKind::Classic => Rule::All,
        // At ε = 0 every column collapses, including zero-mass columns whose
        // D vanishes by convention, so the scheme coincides with classic.
        SchemeKind::Thresholded if epsilon == 0.0 => Rule::All,
        SchemeKind::Thresholded => Rule::Threshold(epsilon),
        SchemeKind::Bgk => Rule::Relax {
            epsilon,
            decay: (-dt / h).exp(),
        },
    }
}

/// Applies the collapse/relaxation rule to every column of `state` in place.
fn collapse(state: &mut KineticState, rule: Rule) -> Result<(StepReport, Vec<ColumnEvent>)> {
    let grid = *state.grid();
    let tol = default_deviation_tol(&grid);
    let dx = grid.dx();
    let mut pi = vec![0.0; grid.n_v()];
    let mut before = vec![0.0; grid.n_v()];
    let mut report = StepReport {
        t: state.t,
        ..StepReport::default()
    };
    let mut events = Vec::new();
    for i in 0..grid.n_x() {
        let col = state.column_mut(i);
        project_column_into(&grid, col, &mut pi);
        let parts = deviation_parts(&grid, col, &pi, tol)
            .map_err(|numerator| KineticError::NegativeDeviation { i, numerator, tol })?;
        let d = parts.value;
        let sigma = match rule {
            Rule::All => 0.0,
            Rule::Threshold(eps) if d > eps => 0.0,
            Rule::Relax { epsilon, decay } if d > epsilon => decay.max(epsilon / d),
            _ => {
                report.max_deviation = report.max_deviation.max(d);
                continue;
            }
        };
        before.copy_from_slice(col);
        if sigma == 0.0 {
            col.copy_from_slice(&pi);
        } else {
            for (f, &p) in col.iter_mut().zip(&pi) {
                *f = p + sigma * (*f - p);
            }
        }
        let w1 = w1_columns(&grid, &before, col);
        let (entropy_drop, d_after) = if sigma == 0.0 {
            (parts.excess, 0.0)
        } else {
            // Relaxation keeps u, hence Π, so the new excess is σ times the old.
            let after = deviation_parts(&grid, col, &pi, tol)
                .map_err(|numerator| KineticError::NegativeDeviation { i, numerator, tol })?;
            (parts.excess - after.excess, after.value)
        };
        report.max_deviation = report.max_deviation.max(d_after);
        report.collapsed_cells += 1;
        report.entropy_drop += entropy_drop * dx;
        report.w1_drop += w1 * dx;
        report.equilibrium_entropy += parts.equilibrium_entropy * dx;
        events.push(ColumnEvent {
            i,
            deviation_before: d,
            deviation_after: d_after,
            sigma,
            entropy_drop: entropy_drop * dx,
            w1: w1 * dx,
            equilibrium_entropy: parts.equilibrium_entropy * dx,
        });
    }
    report.collapsed_measure = report.collapsed_cells as f64 * dx;
    Ok((report, events))
}

fn step_with_rule(
    state: &KineticState,
    flux: &FluxModel,
    dt: f64,
    rule: Rule,
) -> Result<(KineticState, StepReport)> {
    let plan = ShiftPlan::new(state.grid(), flux, dt)?;
    let mut next = advect_with(state, &plan, dt);
    let (report, _) = collapse(&mut next, rule)?;
    Ok((next, report))
}

/// Advect by `h`, then project every column to equilibrium.
pub fn step_classic(state: &KineticState, flux: &FluxModel, h: f64) -> Result<(KineticState, StepReport)> {
    step_with_rule(state, flux, h, Rule::All)
}

/// Advect by `h`, then collapse the columns with `D > ε`.
pub fn step_thresholded(
    state: &KineticState,
    flux: &FluxModel,
    h: f64,
    epsilon: f64,
) -> Result<(KineticState, StepReport)> {
    if !(epsilon >= 0.0) {
        return Err(invalid("epsilon", format!("must be >= 0, got {epsilon}")));
    }
    step_with_rule(state, flux, h, collapse_rule(SchemeKind::Thresholded, epsilon, h, h))
}

/// Advect by `dt`, then relax columns with `D > ε` by the exact solution of
/// `∂_t f = (Π - f)/h` over `dt`, stopping at `D = ε` if that comes first.
pub fn step_bgk(
    state: &KineticState,
    flux: &FluxModel,
    dt: f64,
    h: f64,
    epsilon: f64,
) -> Result<(KineticState, StepReport)> {
    if !(h > 0.0) {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    if !(epsilon >= 0.0) {
        return Err(invalid("epsilon", format!("must be >= 0, got {epsilon}")));
    }
    step_with_rule(state, flux, dt, collapse_rule(SchemeKind::Bgk, epsilon, dt, h))
}

/// Everything an observer may look at after a step.
pub struct StepContext<'a> {
    pub step: usize,
    pub flux: &'a FluxModel,
    /// State after transport, before collapse.
    pub transported: &'a KineticState,
    /// State after collapse.
    pub state: &'a KineticState,
    pub report: &'a StepReport,
    pub events: &'a [ColumnEvent],
}

/// Diagnostic hook. Observers read the states; they never modify them.
pub trait StepObserver {
    fn start(&mut self, _initial: &KineticState, _flux: &FluxModel) -> Result<()> {
        Ok(())
    }
    fn observe(&mut self, ctx: &StepContext<'_>) -> Result<()>;
}

/// Global kinetic entropy around one step's collapse half.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropySample {
    pub t: f64,
    pub transported: f64,
    pub collapsed: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DiagnosticsLedger {
    pub reports: Vec<StepReport>,
    pub initial_entropy: f64,
    pub entropy_series: Vec<EntropySample>,
    pub initial_mass: f64,
    pub mass_series: Vec<f64>,
    /// Largest `|mass - initial_mass|` seen.
    pub mass_drift: f64,
    /// Largest `D` of the initial state.
    pub initial_max_deviation: f64,
}

/// Drift allowed after `steps` periodic steps: `1e-10 · scale` per 1000
/// steps, where `scale = max(|mass|, ∫∫|f|)` keeps zero-mass data meaningful.
pub fn mass_drift_tolerance(initial: &KineticState, steps: usize) -> f64 {
    let scale = initial.mass().abs().max(initial.absolute_mass());
    1e-10 * scale * (steps as f64 / 1000.0).max(1.0)
}

pub fn max_deviation(state: &KineticState) -> Result<f64> {
    let grid = state.grid();
    let tol = default_deviation_tol(grid);
    let mut pi = vec![0.0; grid.n_v()];
    let mut d: f64 = 0.0;
    for (i, col) in state.columns().enumerate() {
        project_column_into(grid, col, &mut pi);
        let parts = deviation_parts(grid, col, &pi, tol)
            .map_err(|numerator| KineticError::NegativeDeviation { i, numerator, tol })?;
        d = d.max(parts.value);
    }
    Ok(d)
}

/// Steps `initial` to `config.t_final`, calling every observer after each
/// step. Aborts on a sign violation, and in periodic mode on mass drift.
pub fn run(
    config: &SchemeConfig,
    flux: &FluxModel,
    initial: KineticState,
    observers: &mut [&mut dyn StepObserver],
) -> Result<(KineticState, DiagnosticsLedger)> {
    config.validate()?;
    let grid: GridSpec = *initial.grid();
    if flux.n_v() != grid.n_v() {
        return Err(KineticError::GridMismatch);
    }
    initial.check_sign_compatibility(config.clamp_tol)?;
    let n_steps = config.n_steps();
    let dt = config.step_size();
    let plan = ShiftPlan::new(&grid, flux, dt)?;
    let rule = collapse_rule(config.scheme, config.epsilon, dt, config.h);
    let drift_tol = mass_drift_tolerance(&initial, n_steps);
    let mut ledger = DiagnosticsLedger {
        initial_mass: initial.mass(),
        initial_entropy: initial.kinetic_entropy(),
        initial_max_deviation: max_deviation(&initial)?,
        ..DiagnosticsLedger::default()
    };
    ledger.mass_series.push(ledger.initial_mass);
    for obs in observers.iter_mut() {
        obs.start(&initial, flux)?;
    }
    let t0 = initial.t;
    let mut state = initial;
    for step in 0..n_steps {
        let mut transported = advect_with(&state, &plan, dt);
        // Recompute t from the step count so long runs do not accumulate error.
        transported.t = t0 + (step + 1) as f64 * dt;
        let entropy_transported = transported.kinetic_entropy();
        let mut next = transported.clone();
        let (report, events) = collapse(&mut next, rule)?;
        next.check_sign_compatibility(config.clamp_tol)?;
        let mass = next.mass();
        let drift = (mass - ledger.initial_mass).abs();
        ledger.mass_drift = ledger.mass_drift.max(drift);
        if grid.boundary() == Boundary::Periodic && drift > drift_tol {
            return Err(KineticError::MassDrift {
                drift,
                tol: drift_tol,
                steps: step + 1,
            });
        }
        ledger.mass_series.push(mass);
        ledger.entropy_series.push(EntropySample {
            t: next.t,
            transported: entropy_transported,
            collapsed: next.kinetic_entropy(),
        });
        let ctx = StepContext {
            step: step + 1,
            flux,
            transported: &transported,
            state: &next,
            report: &report,
            events: &events,
        };
        for obs in observers.iter_mut() {
            obs.observe(&ctx)?;
        }
        ledger.reports.push(report);
        state = next;
    }
    Ok((state, ledger))
}
