use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::error::KineticError;
use crate::grid::GridSpec;
use crate::Result;

/// Flux `A(v)` tabulated at velocity edges and its derivative `A'(v)` at
/// velocity centers.
#[derive(Debug, Clone, PartialEq)]
pub struct FluxModel {
    name: String,
    speeds: Vec<f64>,
    edges: Vec<f64>,
    edge_v: Vec<f64>,
    center_v: Vec<f64>,
    convex: bool,
}

impl FluxModel {
    /// `A(v) = v²/2`, `A'(v) = v`.
    pub fn burgers(grid: &GridSpec) -> Self {
        Self::from_fn(grid, "burgers", |v| 0.5 * v * v, |v| v)
    }

    /// Linear transport `A(v) = c v`.
    pub fn linear(grid: &GridSpec, c: f64) -> Self {
        Self::from_fn(grid, "linear", move |v| c * v, move |_| c)
    }

    /// Builds the tables from an analytic flux and its derivative. Convexity
    /// is read off the sampled speeds (strictly increasing means convex).
    pub fn from_fn(
        grid: &GridSpec,
        name: &str,
        flux: impl Fn(f64) -> f64,
        speed: impl Fn(f64) -> f64,
    ) -> Self {
        let edge_v: Vec<f64> = (0..=grid.n_v()).map(|k| grid.v_edge(k)).collect();
        let center_v: Vec<f64> = grid.v_centers().collect();
        let edges = edge_v.iter().map(|&v| flux(v)).collect();
        let speeds: Vec<f64> = center_v.iter().map(|&v| speed(v)).collect();
        let convex = strictly_increasing(&speeds);
        Self {
            name: name.into(),
            speeds,
            edges,
            edge_v,
            center_v,
            convex,
        }
    }

    /// Flux from `(v, A(v))` samples sorted by `v`, linearly interpolated to
    /// the velocity edges. Speeds are the cell difference quotients, so the
    /// midpoint consistency between the two tables holds exactly.
    pub fn from_table(grid: &GridSpec, name: &str, samples: &[(f64, f64)]) -> Result<Self> {
        if samples.len() < 2 {
            return Err(KineticError::InvalidFlux("table needs at least two samples".into()));
        }
        if samples.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(KineticError::InvalidFlux(
                "table velocities must be strictly increasing".into(),
            ));
        }
        if samples.iter().any(|&(v, a)| !(v.is_finite() && a.is_finite())) {
            return Err(KineticError::InvalidFlux("table contains non-finite values".into()));
        }
        let (lo, hi) = (samples[0].0, samples[samples.len() - 1].0);
        let tol = 1e-12 * (1.0 + grid.v_max().abs().max(grid.v_min().abs()));
        if lo > grid.v_min() + tol || hi < grid.v_max() - tol {
            return Err(KineticError::InvalidFlux(format!(
                "table covers [{lo}, {hi}] but the grid needs [{}, {}]",
                grid.v_min(),
                grid.v_max()
            )));
        }
        let edge_v: Vec<f64> = (0..=grid.n_v()).map(|k| grid.v_edge(k)).collect();
        let center_v: Vec<f64> = grid.v_centers().collect();
        let edges: Vec<f64> = edge_v.iter().map(|&v| interpolate(samples, v)).collect();
        let dv = grid.dv();
        let speeds: Vec<f64> = edges.windows(2).map(|w| (w[1] - w[0]) / dv).collect();
        let convex = strictly_increasing(&speeds);
        Ok(Self {
            name: name.into(),
            speeds,
            edges,
            edge_v,
            center_v,
            convex,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// `A'(v_j)` at velocity-cell centers.
    pub fn speeds(&self) -> &[f64] {
        &self.speeds
    }

    /// `A` at velocity-cell edges.
    pub fn edge_values(&self) -> &[f64] {
        &self.edges
    }

    pub fn is_convex(&self) -> bool {
        self.convex
    }

    pub fn n_v(&self) -> usize {
        self.speeds.len()
    }

    /// `max_j |A(e_{j+1}) - A(e_j) - A'(v_j) dv|`.
    pub fn consistency_residual(&self) -> f64 {
        let dv = self.edge_v[1] - self.edge_v[0];
        self.edges
            .windows(2)
            .zip(&self.speeds)
            .map(|(w, &a)| (w[1] - w[0] - a * dv).abs())
            .fold(0.0, f64::max)
    }

    /// `A'(u)` by piecewise-linear interpolation of the center values,
    /// extended linearly beyond the outermost centers.
    pub fn speed_at(&self, u: f64) -> f64 {
        let c = &self.center_v;
        let a = &self.speeds;
        let n = c.len();
        let k = match c.iter().position(|&v| v > u) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => n - 2,
        }
        .min(n - 2);
        let w = (u - c[k]) / (c[k + 1] - c[k]);
        a[k] + w * (a[k + 1] - a[k])
    }

    /// `A(u)`: the tabulated edge value below `u` plus the trapezoidal integral
    /// of the interpolated speed. Exact for quadratic fluxes.
    pub fn flux_at(&self, u: f64) -> f64 {
        let e = &self.edge_v;
        let n = e.len();
        let k = match e.iter().position(|&v| v > u) {
            Some(0) => 0,
            Some(k) => k - 1,
            None => n - 1,
        };
        let base = e[k];
        // Integrate the piecewise-linear speed over [base, u], splitting at
        // the cell center where the interpolant has its kink.
        let mut acc = 0.0;
        let mut lo = base.min(u);
        let hi = base.max(u);
        let sign = if u >= base { 1.0 } else { -1.0 };
        for &c in self.center_v.iter() {
            if c > lo && c < hi {
                acc += 0.5 * (self.speed_at(lo) + self.speed_at(c)) * (c - lo);
                lo = c;
            }
        }
        acc += 0.5 * (self.speed_at(lo) + self.speed_at(hi)) * (hi - lo);
        self.edges[k] + sign * acc
    }

    /// Inverse of the (monotone) interpolated speed by bisection over the
    /// tabulated velocity range; `None` if `xi` is out of range or the flux is
    /// not convex.
    pub fn inverse_speed(&self, xi: f64) -> Option<f64> {
        if !self.convex {
            return None;
        }
        let (mut lo, mut hi) = (self.edge_v[0], self.edge_v[self.edge_v.len() - 1]);
        let (slo, shi) = (self.speed_at(lo), self.speed_at(hi));
        if xi < slo || xi > shi {
            return None;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.speed_at(mid) < xi {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Some(0.5 * (lo + hi))
    }
}

fn strictly_increasing(xs: &[f64]) -> bool {
    xs.windows(2).all(|w| w[1] > w[0])
}

fn interpolate(samples: &[(f64, f64)], v: f64) -> f64 {
    let k = match samples.iter().position(|&(s, _)| s > v) {
        Some(0) => 0,
        Some(k) => k - 1,
        None => samples.len() - 2,
    }
    .min(samples.len() - 2);
    let (v0, a0) = samples[k];
    let (v1, a1) = samples[k + 1];
    a0 + (v - v0) / (v1 - v0) * (a1 - a0)
}

/// Worst level-set occupancy found by [`check_nondegeneracy`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NondegeneracyReport {
    /// Largest fraction of v-cells in `[-M, M]` with `|σ A'(v) - ξ| < tol`.
    pub max_fraction: f64,
    pub sigma: f64,
    pub xi: f64,
    /// Number of v-cells whose center lies in `[-M, M]`.
    pub cells: usize,
}

/// Numerical version of the non-degeneracy condition: for `σ = ±1` and `ξ`
/// ranging over the sampled values of `σ A'` (plus a uniform sweep of that
/// range), count the velocity cells in `[-M, M]` lying within `tol` of the
/// level set `{σ A'(v) = ξ}`.
pub fn check_nondegeneracy(
    flux: &FluxModel,
    grid: &GridSpec,
    m: f64,
    tol: f64,
) -> Result<NondegeneracyReport> {
    if !(m > 0.0) {
        return Err(crate::error::invalid("M", "must be positive"));
    }
    let inside: Vec<f64> = grid
        .v_centers()
        .zip(flux.speeds())
        .filter(|(v, _)| v.abs() <= m)
        .map(|(_, &a)| a)
        .collect();
    if inside.is_empty() {
        return Err(crate::error::invalid("M", "no velocity cells inside [-M, M]"));
    }
    let n = inside.len();
    let mut best = NondegeneracyReport {
        max_fraction: 0.0,
        sigma: 1.0,
        xi: 0.0,
        cells: n,
    };
    let lo = inside.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = inside.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    const SWEEP: usize = 256;
    for sigma in [-1.0, 1.0] {
        let sweep = (0..=SWEEP).map(|k| sigma * (lo + (hi - lo) * k as f64 / SWEEP as f64));
        for xi in inside.iter().map(|&a| sigma * a).chain(sweep) {
            let count = inside
                .iter()
                .filter(|&&a| (sigma * a - xi).abs() < tol)
                .count();
            let fraction = count as f64 / n as f64;
            if fraction > best.max_fraction {
                best = NondegeneracyReport {
                    max_fraction: fraction,
                    sigma,
                    xi,
                    cells: n,
                };
            }
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn grid(n_half: usize) -> GridSpec {
        GridSpec::symmetric(0.0, 1.0, 1, 1.0, n_half, Boundary::Periodic).unwrap()
    }

    #[test]
    fn burgers_tables_are_consistent() {
        let g = grid(50);
        let f = FluxModel::burgers(&g);
        assert!(f.is_convex());
        // Midpoint rule is exact for the linear speed v.
        assert!(f.consistency_residual() < 1e-15);
        assert!((f.flux_at(0.37) - 0.5 * 0.37 * 0.37).abs() < 1e-15);
        assert!((f.flux_at(-0.91) - 0.5 * 0.91 * 0.91).abs() < 1e-15);
        assert!((f.speed_at(0.123) - 0.123).abs() < 1e-15);
        assert!((f.inverse_speed(-0.4).unwrap() + 0.4).abs() < 1e-12);
    }

    #[test]
    fn table_flux_matches_analytic() {
        let g = grid(20);
        let samples: Vec<(f64, f64)> = (0..=400)
            .map(|k| {
                let v = -1.0 + 2.0 * k as f64 / 400.0;
                (v, v * v * v * v / 4.0)
            })
            .collect();
        let t = FluxModel::from_table(&g, "quartic", &samples).unwrap();
        assert!(t.is_convex());
        assert!(t.consistency_residual() < 1e-15);
        let exact = FluxModel::from_fn(&g, "quartic", |v| v.powi(4) / 4.0, |v| v.powi(3));
        for (a, b) in t.speeds().iter().zip(exact.speeds()) {
            assert!((a - b).abs() < 1e-3);
        }
    }

    #[test]
    fn short_table_is_rejected() {
        let g = grid(10);
        assert!(FluxModel::from_table(&g, "t", &[(-0.5, 0.0), (0.5, 1.0)]).is_err());
        assert!(FluxModel::from_table(&g, "t", &[(1.0, 0.0), (-1.0, 1.0)]).is_err());
    }

    #[test]
    fn linear_flux_is_not_convex() {
        let g = grid(10);
        let f = FluxModel::linear(&g, 0.7);
        assert!(!f.is_convex());
        assert!(f.inverse_speed(0.7).is_none());
    }

    #[test]
    fn burgers_is_nondegenerate() {
        let g = grid(100);
        let f = FluxModel::burgers(&g);
        let m = 1.0;
        let tol = g.dv();
        let r = check_nondegeneracy(&f, &g, m, tol).unwrap();
        // A window of width 2 tol around a level holds at most 2 tol/dv + 1
        // equally spaced centers.
        let bound = (2.0 * tol / g.dv() + 1.0) / r.cells as f64;
        assert!(r.max_fraction <= bound + 1e-12, "{r:?}");
    }

    #[test]
    fn linear_flux_is_fully_degenerate() {
        let g = grid(100);
        let f = FluxModel::linear(&g, 0.3);
        let r = check_nondegeneracy(&f, &g, 1.0, g.dv()).unwrap();
        assert_eq!(r.max_fraction, 1.0);
        assert!((r.xi.abs() - 0.3).abs() < 1e-15);
    }

    #[test]
    fn cubic_speed_degeneracy_vanishes_with_tol() {
        // A'(v) = v³ is flat at 0, so a tolerance band around ξ = 0 catches
        // about 2 tol^(1/3) of the interval; it still tends to zero.
        let g = grid(2000);
        let f = FluxModel::from_fn(&g, "cubic", |v| v.powi(4) / 4.0, |v| v.powi(3));
        let fractions: Vec<f64> = [1e-3, 1e-5, 1e-7]
            .iter()
            .map(|&tol| check_nondegeneracy(&f, &g, 1.0, tol).unwrap().max_fraction)
            .collect();
        assert!(fractions[0] > fractions[1] && fractions[1] > fractions[2]);
        assert!(fractions[2] < 0.01);
        // Direct count oracle at tol = 1e-3: |v| < 0.1 is 10% of [-1, 1].
        assert!((fractions[0] - 0.1).abs() < 2.0 * g.dv());
    }

    #[test]
    fn nondegeneracy_rejects_bad_m() {
        let g = grid(10);
        let f = FluxModel::burgers(&g);
        assert!(check_nondegeneracy(&f, &g, 0.0, 0.1).is_err());
    }
}
