//! Reference solutions: exact convex-flux Riemann solutions, the Burgers
//! stripe data whose thresholded evolution leaks mass through a stationary
//! shock, and the self-similar limit of that evolution.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{invalid, KineticError};
use crate::flux::FluxModel;
use crate::grid::GridSpec;
use crate::state::KineticState;
use crate::Result;

const GAUSS4_NODES: [f64; 4] = [
    -0.861_136_311_594_052_6,
    -0.339_981_043_584_856_3,
    0.339_981_043_584_856_3,
    0.861_136_311_594_052_6,
];
const GAUSS4_WEIGHTS: [f64; 4] = [
    0.347_854_845_137_453_9,
    0.652_145_154_862_546_1,
    0.652_145_154_862_546_1,
    0.347_854_845_137_453_9,
];

/// Average of `f` over `[a, b]` by 4-point Gauss–Legendre.
pub fn gauss4_average(f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let mut acc = 0.0;
    for (x, w) in GAUSS4_NODES.iter().zip(GAUSS4_WEIGHTS) {
        acc += w * f(mid + half * x);
    }
    0.5 * acc
}

/// Average over `[a, b]`, with Gauss-4 applied separately on each piece
/// between the given breakpoints.
pub fn piecewise_average(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    if !(b > a) {
        return f(a);
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    pts.sort_by(|x, y| x.total_cmp(y));
    let mut acc = 0.0;
    let mut lo = a;
    for hi in pts.into_iter().chain(core::iter::once(b)) {
        if hi > lo {
            acc += gauss4_average(&f, lo, hi) * (hi - lo);
            lo = hi;
        }
    }
    acc / (b - a)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RiemannProblem {
    pub u_left: f64,
    pub u_right: f64,
    pub x0: f64,
    flux: FluxModel,
}

impl RiemannProblem {
    pub fn new(u_left: f64, u_right: f64, x0: f64, flux: FluxModel) -> Result<Self> {
        if !flux.is_convex() {
            return Err(KineticError::NonConvexFlux(flux.name().into()));
        }
        if !(u_left.is_finite() && u_right.is_finite() && x0.is_finite()) {
            return Err(invalid("riemann", "states and interface must be finite"));
        }
        Ok(Self {
            u_left,
            u_right,
            x0,
            flux,
        })
    }

    pub fn flux(&self) -> &FluxModel {
        &self.flux
    }

    /// Rankine–Hugoniot speed; `None` for rarefaction data.
    pub fn shock_speed(&self) -> Option<f64> {
        let (l, r) = (self.u_left, self.u_right);
        if l > r {
            Some((self.flux.flux_at(l) - self.flux.flux_at(r)) / (l - r))
        } else {
            None
        }
    }

    /// Positions where the solution at time `t` has a jump or a kink.
    pub fn wave_positions(&self, t: f64) -> Vec<f64> {
        match self.shock_speed() {
            Some(s) => alloc::vec![self.x0 + s * t],
            None if self.u_left == self.u_right => Vec::new(),
            None => alloc::vec![
                self.x0 + self.flux.speed_at(self.u_left) * t,
                self.x0 + self.flux.speed_at(self.u_right) * t,
            ],
        }
    }

    /// Exact cell averages at time `t >= 0` on the x-cells of `grid`; at
    /// `t = 0` these are the averages of the initial step.
    pub fn cell_averages(&self, grid: &GridSpec, t: f64) -> Result<Vec<f64>> {
        if t == 0.0 {
            return Ok((0..grid.n_x())
                .map(|i| {
                    let frac = ((self.x0 - grid.x_edge(i)) / grid.dx()).clamp(0.0, 1.0);
                    frac * self.u_left + (1.0 - frac) * self.u_right
                })
                .collect());
        }
        let breaks = self.wave_positions(t);
        let mut out = Vec::with_capacity(grid.n_x());
        for i in 0..grid.n_x() {
            let (a, b) = (grid.x_edge(i), grid.x_edge(i + 1));
            // Validate t once through the pointwise evaluator.
            riemann_exact(self, 0.5 * (a + b), t)?;
            let avg = piecewise_average(|x| riemann_exact(self, x, t).unwrap_or(f64::NAN), a, b, &breaks);
            out.push(avg);
        }
        Ok(out)
    }
}

/// Entropy solution of the Riemann problem at `(x, t)`, `t > 0`.
pub fn riemann_exact(problem: &RiemannProblem, x: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    let (l, r) = (problem.u_left, problem.u_right);
    if let Some(s) = problem.shock_speed() {
        return Ok(if x - problem.x0 < s * t { l } else { r });
    }
    if l == r {
        return Ok(l);
    }
    let xi = (x - problem.x0) / t;
    let flux = &problem.flux;
    if xi <= flux.speed_at(l) {
        return Ok(l);
    }
    if xi >= flux.speed_at(r) {
        return Ok(r);
    }
    let u = flux
        .inverse_speed(xi)
        .ok_or_else(|| KineticError::InvalidFlux(format!("cannot invert A' at {xi}")))?;
    Ok(u.clamp(l, r))
}

/// Area of the positive stripe wedge `{v ∈ [1-δ, 1], 0 ≤ x ≤ (v - (1-δ)) h}`.
pub fn wedge_mass(h: f64, delta: f64) -> f64 {
    0.5 * delta * delta * h
}

/// Burgers stripe data around the stationary shock `u₀ = sign(-x)`:
/// `f = 1` for `v ∈ [0, 1]`, `x ≤ max(0, (v - (1-δ)) h)`, and `f = -1` for
/// `v ∈ [-1, 0]`, `x ≥ min(0, (v + (1-δ)) h)`. Cell averages are exact.
pub fn stripe_initial_state(grid: &GridSpec, h: f64, delta: f64) -> Result<KineticState> {
    if !(h > 0.0) {
        return Err(invalid("h", format!("must be positive, got {h}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
    }
    if grid.v_min() > -1.0 || grid.v_max() < 1.0 {
        return Err(invalid("grid", "velocity range must cover [-1, 1]"));
    }
    if grid.dx() > 0.25 * delta * h {
        log::warn!(
            "dx = {} under-resolves the stripe width delta*h = {}",
            grid.dx(),
            delta * h
        );
    }
    let c = 1.0 - delta;
    let mut s = KineticState::zeros(*grid);
    for i in 0..grid.n_x() {
        let (xl, xr) = (grid.x_edge(i), grid.x_edge(i + 1));
        let dx = xr - xl;
        let col = s.column_mut(i);
        for (j, value) in col.iter_mut().enumerate() {
            let (a, b) = (grid.v_edge(j), grid.v_edge(j + 1));
            if a >= 0.0 {
                // Covered x-length: clamp(g(v) - xl, 0, dx), g = max(0, (v - c) h).
                let covered = |v: f64| ((v - c).max(0.0) * h - xl).clamp(0.0, dx);
                let breaks = [c, c + xl / h, c + xr / h];
                *value = exact_linear_average(covered, a, b.min(1.0), &breaks) * (b.min(1.0) - a).max(0.0)
                    / (b - a)
                    / dx;
            } else {
                // Covered x-length: clamp(xr - g(v), 0, dx), g = min(0, (v + c) h).
                let covered = |v: f64| (xr - (v + c).min(0.0) * h).clamp(0.0, dx);
                let breaks = [-c, xl / h - c, xr / h - c];
                let lo = a.max(-1.0);
                *value = -exact_linear_average(covered, lo, b, &breaks) * (b - lo).max(0.0) / (b - a) / dx;
            }
        }
    }
    Ok(s)
}

// Average of a continuous piecewise-linear function whose kinks lie in
// `breaks`, by the trapezoid rule on each linear piece.
fn exact_linear_average(f: impl Fn(f64) -> f64, a: f64, b: f64, breaks: &[f64]) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let mut pts: Vec<f64> = breaks.iter().copied().filter(|&p| p > a && p < b).collect();
    pts.sort_by(|x, y| x.total_cmp(y));
    let mut acc = 0.0;
    let mut lo = a;
    for hi in pts.into_iter().chain(core::iter::once(b)) {
        acc += 0.5 * (f(lo) + f(hi)) * (hi - lo);
        lo = hi;
    }
    acc / (b - a)
}

/// Self-similar limit of the thresholded scheme on stripe data with width `δ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelfSimilarLimit {
    delta: f64,
}

impl SelfSimilarLimit {
    pub fn new(delta: f64) -> Result<Self> {
        if !(delta > 0.0 && delta < 1.0) {
            return Err(invalid("delta", format!("must lie in (0, 1), got {delta}")));
        }
        Ok(Self { delta })
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    /// Weight of the leaked positive mass at speed `v ∈ [1-δ, 1]`.
    pub fn weight(&self, v: f64) -> f64 {
        let c = 1.0 - self.delta;
        (v - c) / (2.0 * v - c)
    }

    /// `f(ξ, v)` for `ξ = x/t`. The `ξ < 0` side is the mirror image
    /// `f(ξ, v) = -f(-ξ, -v)`.
    pub fn density(&self, xi: f64, v: f64) -> f64 {
        if xi < 0.0 {
            return -self.density_right(-xi, -v);
        }
        self.density_right(xi, v)
    }

    fn density_right(&self, xi: f64, v: f64) -> f64 {
        let c = 1.0 - self.delta;
        let base = if (-1.0..0.0).contains(&v) { -1.0 } else { 0.0 };
        if xi >= 1.0 {
            return base;
        }
        let lo = if xi > c { xi } else { c };
        if v >= lo && v <= 1.0 {
            base + self.weight(v)
        } else {
            base
        }
    }

    /// `u(ξ) = ∫ f(ξ, v) dv`.
    pub fn u(&self, xi: f64) -> f64 {
        if xi < 0.0 {
            return -self.u(-xi);
        }
        if xi >= 1.0 {
            return -1.0;
        }
        let lo = xi.max(1.0 - self.delta);
        -1.0 + adaptive_simpson(&|v| self.weight(v), lo, 1.0, 1e-14, 40)
    }

    /// Cell averages in v of the limit column at `ξ`, Gauss-4 per cell.
    pub fn column_averages(&self, grid: &GridSpec, xi: f64) -> Vec<f64> {
        let c = 1.0 - self.delta;
        let breaks = [-1.0, 0.0, 1.0, c, -c, xi, -xi];
        (0..grid.n_v())
            .map(|j| piecewise_average(|v| self.density(xi, v), grid.v_edge(j), grid.v_edge(j + 1), &breaks))
            .collect()
    }
}

pub fn limit_density(delta: f64, x: f64, t: f64, v: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(invalid("t", format!("must be positive, got {t}")));
    }
    Ok(SelfSimilarLimit::new(delta)?.density(x / t, v))
}

pub fn limit_u(delta: f64, xi: f64) -> Result<f64> {
    Ok(SelfSimilarLimit::new(delta)?.u(xi))
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    if !(b > a) {
        return 0.0;
    }
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a), f(m), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}
