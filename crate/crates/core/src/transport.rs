//! Free streaming `f(x, t + dt, v) = f(x - dt A'(v), t, v)` by a conservative
//! piecewise-constant remap of each velocity row.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::error::invalid;
use crate::flux::FluxModel;
use crate::grid::{Boundary, GridSpec};
use crate::state::KineticState;
use crate::Result;

/// Shifts closer than this to an integer number of cells are snapped, so that
/// integer-CFL runs move every row exactly.
pub const INTEGER_SNAP: f64 = 1e-9;

/// Per-row shift `A'(v_j) dt / dx = k_j + θ_j` with `θ_j ∈ [0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPlan {
    pub offsets: Vec<isize>,
    pub fractions: Vec<f64>,
    pub boundary: Boundary,
}

impl ShiftPlan {
    pub fn new(grid: &GridSpec, flux: &FluxModel, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid("dt", alloc::format!("must be positive and finite, got {dt}")));
        }
        if flux.n_v() != grid.n_v() {
            return Err(crate::KineticError::GridMismatch);
        }
        let mut offsets = Vec::with_capacity(grid.n_v());
        let mut fractions = Vec::with_capacity(grid.n_v());
        for &a in flux.speeds() {
            let s = a * dt / grid.dx();
            let mut k = s.floor();
            let mut theta = s - k;
            if theta < INTEGER_SNAP {
                theta = 0.0;
            } else if theta > 1.0 - INTEGER_SNAP {
                k += 1.0;
                theta = 0.0;
            }
            offsets.push(k as isize);
            fractions.push(theta);
        }
        Ok(Self {
            offsets,
            fractions,
            boundary: grid.boundary(),
        })
    }

    /// True when every row moves by a whole number of cells.
    pub fn is_integer(&self) -> bool {
        self.fractions.iter().all(|&t| t == 0.0)
    }
}

/// Moves each velocity row by its shift. Periodic rows wrap; outflow rows read
/// ghost cells that repeat the boundary value.
pub fn advect(state: &KineticState, flux: &FluxModel, dt: f64) -> Result<KineticState> {
    let plan = ShiftPlan::new(state.grid(), flux, dt)?;
    Ok(advect_with(state, &plan, dt))
}

pub fn advect_with(state: &KineticState, plan: &ShiftPlan, dt: f64) -> KineticState {
    let grid = *state.grid();
    let (n_x, n_v) = (grid.n_x(), grid.n_v());
    let mut out = KineticState::zeros(grid);
    out.t = state.t + dt;
    let mut row = vec![0.0; n_x];
    let src = state.values();
    let dst = out.values_mut();
    let n = n_x as isize;
    let index = |i: isize| -> usize {
        match plan.boundary {
            Boundary::Periodic => i.rem_euclid(n) as usize,
            Boundary::Outflow => i.clamp(0, n - 1) as usize,
        }
    };
    for j in 0..n_v {
        for (i, r) in row.iter_mut().enumerate() {
            *r = src[i * n_v + j];
        }
        let k = plan.offsets[j];
        let theta = plan.fractions[j];
        for i in 0..n_x {
            let near = row[index(i as isize - k)];
            dst[i * n_v + j] = if theta == 0.0 {
                near
            } else {
                (1.0 - theta) * near + theta * row[index(i as isize - k - 1)]
            };
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(boundary: Boundary) -> GridSpec {
        GridSpec::symmetric(0.0, 1.0, 40, 1.0, 4, boundary).unwrap()
    }

    fn bumpy(g: GridSpec) -> KineticState {
        let mut s = KineticState::zeros(g);
        for i in 0..g.n_x() {
            for j in 0..g.n_v() {
                let x = g.x_center(i);
                let base = 0.5 + 0.4 * (6.0 * x + j as f64).sin();
                let sign = if j >= g.zero_edge() { 1.0 } else { -1.0 };
                s.set(i, j, sign * base);
            }
        }
        s
    }

    #[test]
    fn rejects_nonpositive_dt() {
        let g = grid(Boundary::Periodic);
        let f = FluxModel::burgers(&g);
        let s = KineticState::zeros(g);
        assert!(advect(&s, &f, 0.0).is_err());
        assert!(advect(&s, &f, -1.0).is_err());
    }

    #[test]
    fn constant_rows_are_unchanged() {
        for b in [Boundary::Periodic, Boundary::Outflow] {
            let g = grid(b);
            let f = FluxModel::burgers(&g);
            let mut s = KineticState::zeros(g);
            for i in 0..g.n_x() {
                for j in 0..g.n_v() {
                    s.set(i, j, if j >= g.zero_edge() { 0.3 } else { -0.6 });
                }
            }
            let out = advect(&s, &f, 0.0173).unwrap();
            for (a, b) in out.values().iter().zip(s.values()) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn integer_shift_is_exact() {
        // Row v = 0.625 with dt = dx / 0.625 moves exactly one cell.
        let g = grid(Boundary::Periodic);
        let f = FluxModel::burgers(&g);
        let j = g.zero_edge() + 2;
        assert_eq!(g.v_center(j), 0.625);
        let s = bumpy(g);
        let dt = g.dx() / 0.625;
        let plan = ShiftPlan::new(&g, &f, dt).unwrap();
        assert_eq!((plan.offsets[j], plan.fractions[j]), (1, 0.0));
        let out = advect_with(&s, &plan, dt);
        for i in 0..g.n_x() {
            let from = (i + g.n_x() - 1) % g.n_x();
            assert_eq!(out.get(i, j), s.get(from, j));
        }
    }

    #[test]
    fn periodic_rows_conserve_mass() {
        let g = grid(Boundary::Periodic);
        let f = FluxModel::burgers(&g);
        let s = bumpy(g);
        let out = advect(&s, &f, 0.0371).unwrap();
        for j in 0..g.n_v() {
            let before: f64 = (0..g.n_x()).map(|i| s.get(i, j)).sum();
            let after: f64 = (0..g.n_x()).map(|i| out.get(i, j)).sum();
            assert!((before - after).abs() < 1e-13);
        }
    }

    #[test]
    fn front_moves_at_row_speed() {
        // f = 1_{x<0} 1_[0,1](v) on an outflow grid. After n steps of dt the
        // half-height crossing of row j sits at v_j t.
        let g = GridSpec::symmetric(-1.0, 1.0, 400, 1.0, 10, Boundary::Outflow).unwrap();
        let f = FluxModel::burgers(&g);
        let mut s = KineticState::zeros(g);
        for i in 0..g.n_x() {
            if g.x_center(i) < 0.0 {
                for j in g.zero_edge()..g.n_v() {
                    s.set(i, j, 1.0);
                }
            }
        }
        let dt = 0.0123;
        let steps = 40;
        for _ in 0..steps {
            s = advect(&s, &f, dt).unwrap();
        }
        let t = dt * steps as f64;
        for j in g.zero_edge()..g.n_v() {
            let v = g.v_center(j);
            let crossing = (0..g.n_x())
                .find(|&i| s.get(i, j) < 0.5)
                .map(|i| g.x_edge(i))
                .unwrap();
            let smear = (steps as f64).sqrt() * g.dx();
            assert!(
                (crossing - v * t).abs() <= g.dx() + smear,
                "row {v}: front {crossing} vs {}",
                v * t
            );
        }
    }

    #[test]
    fn outflow_extends_edge_values() {
        let g = grid(Boundary::Outflow);
        let f = FluxModel::burgers(&g);
        let s = bumpy(g);
        let out = advect(&s, &f, 0.05).unwrap();
        // Right-moving rows take the left boundary value at the inflow end.
        let j = g.n_v() - 1;
        assert_eq!(out.get(0, j), s.get(0, j));
    }
}
