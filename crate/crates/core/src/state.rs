use alloc::vec;
use alloc::vec::Vec;

use crate::equilibrium::fill_equilibrium;
use crate::error::KineticError;
use crate::flux::FluxModel;
use crate::grid::GridSpec;
use crate::Result;

/// Cell averages of the kinetic density `f(x, t, v)` at one time.
///
/// Storage is column-major in the physical sense: the `n_v` velocity values of
/// x-cell `i` are contiguous, since projection and deviation work per column.
#[derive(Debug, Clone, PartialEq)]
pub struct KineticState {
    grid: GridSpec,
    pub t: f64,
    f: Vec<f64>,
}

impl KineticState {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            t: 0.0,
            f: vec![0.0; grid.len()],
        }
    }

    pub fn from_values(grid: GridSpec, t: f64, f: Vec<f64>) -> Result<Self> {
        if f.len() != grid.len() {
            return Err(KineticError::InvalidGrid(alloc::format!(
                "expected {} values, got {}",
                grid.len(),
                f.len()
            )));
        }
        Ok(Self { grid, t, f })
    }

    /// Equilibrium state whose column `i` is the mass-exact indicator of `[0, u[i]]`.
    pub fn equilibrium(grid: GridSpec, u: &[f64]) -> Result<Self> {
        if u.len() != grid.n_x() {
            return Err(KineticError::InvalidGrid(alloc::format!(
                "expected {} moments, got {}",
                grid.n_x(),
                u.len()
            )));
        }
        let lo = grid.v_edge(0);
        let hi = grid.v_edge(grid.n_v());
        let mut state = Self::zeros(grid);
        for (i, &ui) in u.iter().enumerate() {
            if !(ui >= lo && ui <= hi) {
                return Err(crate::error::invalid(
                    "u",
                    alloc::format!("u = {ui} at x-cell {i} outside velocity range [{lo}, {hi}]"),
                ));
            }
            fill_equilibrium(&grid, ui / grid.dv(), state.column_mut(i));
        }
        Ok(state)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.f
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.f
    }

    pub fn column(&self, i: usize) -> &[f64] {
        let n_v = self.grid.n_v();
        &self.f[i * n_v..(i + 1) * n_v]
    }

    pub fn column_mut(&mut self, i: usize) -> &mut [f64] {
        let n_v = self.grid.n_v();
        &mut self.f[i * n_v..(i + 1) * n_v]
    }

    pub fn columns(&self) -> core::slice::ChunksExact<'_, f64> {
        self.f.chunks_exact(self.grid.n_v())
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.f[i * self.grid.n_v() + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        let n_v = self.grid.n_v();
        self.f[i * n_v + j] = value;
    }

    /// Checks `f ∈ [0, 1]` for `v > 0` and `f ∈ [-1, 0]` for `v < 0`, up to `tol`.
    pub fn check_sign_compatibility(&self, tol: f64) -> Result<()> {
        let z = self.grid.zero_edge();
        for (i, col) in self.columns().enumerate() {
            if let Some(j) = sign_violation(col, z, tol) {
                return Err(KineticError::SignViolation {
                    i,
                    j,
                    value: col[j],
                });
            }
        }
        Ok(())
    }

    /// Largest `|v|` over cells carrying a nonzero value (0 for the zero state).
    pub fn velocity_support(&self) -> f64 {
        let mut m: f64 = 0.0;
        for col in self.columns() {
            for (j, &fj) in col.iter().enumerate() {
                if fj != 0.0 {
                    let outer = if j >= self.grid.zero_edge() {
                        self.grid.v_edge(j + 1)
                    } else {
                        -self.grid.v_edge(j)
                    };
                    m = m.max(outer);
                }
            }
        }
        m
    }

    /// Total mass `Σ_i Σ_j f_ij dv dx`, accumulated column by column.
    pub fn mass(&self) -> f64 {
        let dv = self.grid.dv();
        let mut total = 0.0;
        for col in self.columns() {
            total += column_mass_units(col) * dv;
        }
        total * self.grid.dx()
    }

    /// Global kinetic entropy `Σ_i Σ_j v_j f_ij dv dx` for `η(v) = v²/2`.
    pub fn kinetic_entropy(&self) -> f64 {
        let mut total = 0.0;
        for col in self.columns() {
            total += first_moment(&self.grid, col);
        }
        total * self.grid.dx()
    }

    /// Sum of `|f|` over all cells times the cell area.
    pub fn absolute_mass(&self) -> f64 {
        let mut total = 0.0;
        for col in self.columns() {
            total += col.iter().fold(0.0, |acc, &v| acc + v.abs());
        }
        total * self.grid.dv() * self.grid.dx()
    }
}

pub(crate) fn sign_violation(col: &[f64], zero_edge: usize, tol: f64) -> Option<usize> {
    col.iter().enumerate().position(|(j, &v)| {
        if j >= zero_edge {
            !(v >= -tol && v <= 1.0 + tol)
        } else {
            !(v >= -1.0 - tol && v <= tol)
        }
    })
}

/// Column mass in units of `dv`, summed in index order.
pub fn column_mass_units(col: &[f64]) -> f64 {
    col.iter().fold(0.0, |acc, &v| acc + v)
}

/// `Σ_j v_j f_j dv` for one column.
pub fn first_moment(grid: &GridSpec, col: &[f64]) -> f64 {
    weighted_moment(grid, col, |v| v)
}

/// `Σ_j w(v_j) f_j dv` for one column, summed in index order.
pub fn weighted_moment(grid: &GridSpec, col: &[f64], w: impl Fn(f64) -> f64) -> f64 {
    let mut acc = 0.0;
    for (j, &fj) in col.iter().enumerate() {
        acc += w(grid.v_center(j)) * fj;
    }
    acc * grid.dv()
}

/// Per-x-cell velocity moments of a state.
#[derive(Debug, Clone, PartialEq)]
pub struct Moments {
    /// `u_i = Σ_j f_ij dv`.
    pub u: Vec<f64>,
    /// `Σ_j A'(v_j) f_ij dv`, the flux carried by the column; present when a
    /// flux model was supplied.
    pub flux_moment: Option<Vec<f64>>,
    /// `Σ_j v_j f_ij dv`.
    pub entropy_moment: Vec<f64>,
}

pub fn moments(state: &KineticState, flux: Option<&FluxModel>) -> Moments {
    let grid = state.grid();
    let dv = grid.dv();
    let u = state.columns().map(|c| column_mass_units(c) * dv).collect();
    let entropy_moment = state.columns().map(|c| first_moment(grid, c)).collect();
    let flux_moment = flux.map(|fl| {
        state
            .columns()
            .map(|c| {
                let mut acc = 0.0;
                for (fj, aj) in c.iter().zip(fl.speeds()) {
                    acc += aj * fj;
                }
                acc * dv
            })
            .collect()
    });
    Moments {
        u,
        flux_moment,
        entropy_moment,
    }
}
