//! Equilibrium projection and the deviation functional.

use alloc::vec;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::error::KineticError;
use crate::grid::GridSpec;
use crate::state::{column_mass_units, KineticState};
use crate::Result;

/// Default tolerance on a negative entropy-excess numerator, `1e-12 · n_v`.
pub fn default_deviation_tol(grid: &GridSpec) -> f64 {
    1e-12 * grid.n_v() as f64
}

/// Writes the equilibrium column of mass `m` (in units of `dv`) into `out`.
///
/// Whole cells are filled outward from `v = 0` and the remainder goes into a
/// single fractional cell, so the index-order sum of `out` equals `m`
/// bit-for-bit. A remainder of exactly zero leaves the next cell at 0.
pub(crate) fn fill_equilibrium(grid: &GridSpec, m: f64, out: &mut [f64]) {
    out.iter_mut().for_each(|v| *v = 0.0);
    let z = grid.zero_edge();
    let n_v = grid.n_v();
    if m > 0.0 {
        let whole = m.floor();
        let n = whole as usize;
        let frac = m - whole;
        let room = n_v - z;
        if n < room {
            out[z..z + n].iter_mut().for_each(|v| *v = 1.0);
            out[z + n] = frac;
        } else {
            // Only reachable through clamp-tolerance overshoot at the top cell.
            out[z..].iter_mut().for_each(|v| *v = 1.0);
            out[n_v - 1] += m - room as f64;
        }
    } else if m < 0.0 {
        let mm = -m;
        let whole = mm.floor();
        let n = whole as usize;
        let frac = mm - whole;
        if n < z {
            out[z - n..z].iter_mut().for_each(|v| *v = -1.0);
            out[z - n - 1] = -frac;
        } else {
            out[..z].iter_mut().for_each(|v| *v = -1.0);
            out[0] -= mm - z as f64;
        }
    }
}

/// Equilibrium projection of one column: same mass, signed indicator shape.
pub fn project_column(grid: &GridSpec, col: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; col.len()];
    project_column_into(grid, col, &mut out);
    out
}

pub fn project_column_into(grid: &GridSpec, col: &[f64], out: &mut [f64]) {
    fill_equilibrium(grid, column_mass_units(col), out);
}

/// Equilibrium density at x-cell `i`: cell averages of `1_[0,u]` (or
/// `-1_[u,0]`) with the column's mass `u_i`.
pub fn project_equilibrium(state: &KineticState, i: usize) -> Vec<f64> {
    project_column(state.grid(), state.column(i))
}

/// Numerator and denominator of `D` for one column.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeviationParts {
    /// `Σ v_j (f_j - Π_j) dv`, the entropy released by collapsing the column.
    pub excess: f64,
    /// `Σ v_j Π_j dv`, the discrete entropy of the equilibrium.
    pub equilibrium_entropy: f64,
    /// `excess / equilibrium_entropy`, or 0 when the denominator vanishes.
    pub value: f64,
}

/// `D` for a column with its projection already computed.
pub fn deviation_parts(
    grid: &GridSpec,
    col: &[f64],
    projected: &[f64],
    tol: f64,
) -> core::result::Result<DeviationParts, f64> {
    let mut excess = 0.0;
    let mut eq = 0.0;
    for (j, (&f, &p)) in col.iter().zip(projected).enumerate() {
        let v = grid.v_center(j);
        excess += v * (f - p);
        eq += v * p;
    }
    let dv = grid.dv();
    let mut excess = excess * dv;
    let eq = eq * dv;
    if excess < 0.0 {
        if excess < -tol {
            return Err(excess);
        }
        excess = 0.0;
    }
    let value = if eq == 0.0 { 0.0 } else { excess / eq };
    Ok(DeviationParts {
        excess,
        equilibrium_entropy: eq,
        value,
    })
}

/// `D(f) = ∫ v (f - Π_f) dv / ∫ v Π_f dv` at x-cell `i` (0 when `Π_f = 0`).
///
/// Small negative numerators (above `-1e-12 · n_v`) are rounding and clamp to
/// zero; anything below signals a broken sign structure and is an error.
pub fn deviation(state: &KineticState, i: usize) -> Result<f64> {
    let grid = state.grid();
    let col = state.column(i);
    let pi = project_column(grid, col);
    let tol = default_deviation_tol(grid);
    deviation_parts(grid, col, &pi, tol)
        .map(|p| p.value)
        .map_err(|numerator| KineticError::NegativeDeviation { i, numerator, tol })
}

/// Critical overlap `a* = sqrt(2 / (2 + ε))` for columns of the form
/// `-1_[-1,0] + 1_[a,1]`, whose deviation is `2(1 - a²)/a²`. Columns with
/// `a < a*` collapse.
pub fn collapse_threshold(epsilon: f64) -> f64 {
    (2.0 / (2.0 + epsilon)).sqrt()
}

/// Stripe width `δ(ε) = 1 - a*`, evaluated without cancellation.
pub fn stripe_width(epsilon: f64) -> f64 {
    let a = collapse_threshold(epsilon);
    (epsilon / (2.0 + epsilon)) / (1.0 + a)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Boundary;

    fn grid() -> GridSpec {
        GridSpec::symmetric(0.0, 1.0, 1, 1.0, 200, Boundary::Periodic).unwrap()
    }

    /// Column of cell averages of `Σ sign · 1_[a,b]`, exact for edge-aligned or
    /// partially covered cells.
    fn indicator_column(g: &GridSpec, parts: &[(f64, f64, f64)]) -> Vec<f64> {
        (0..g.n_v())
            .map(|j| {
                let (lo, hi) = (g.v_edge(j), g.v_edge(j + 1));
                parts
                    .iter()
                    .map(|&(s, a, b)| {
                        let cover = (hi.min(b) - lo.max(a)).max(0.0) / g.dv();
                        // Edge-aligned endpoints should give exact 0 or 1.
                        let r = cover.round();
                        s * if (cover - r).abs() < 1e-9 { r } else { cover }
                    })
                    .sum()
            })
            .collect()
    }

    fn state_with(g: GridSpec, col: &[f64]) -> KineticState {
        KineticState::from_values(g, 0.0, col.to_vec()).unwrap()
    }

    #[test]
    fn equilibrium_is_a_fixed_point() {
        let g = grid();
        let col = indicator_column(&g, &[(1.0, 0.0, 0.5)]);
        let s = state_with(g, &col);
        assert_eq!(project_equilibrium(&s, 0), col);
    }

    #[test]
    fn mixed_column_with_positive_mass() {
        // ∫ f dv = 1 - 0.5 = 0.5.
        let g = grid();
        let col = indicator_column(&g, &[(1.0, 0.0, 1.0), (-1.0, -0.5, 0.0)]);
        let s = state_with(g, &col);
        let expected = indicator_column(&g, &[(1.0, 0.0, 0.5)]);
        let got = project_equilibrium(&s, 0);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn mixed_column_with_negative_mass() {
        // ∫ f dv = -1 + 0.5 = -0.5.
        let g = grid();
        let col = indicator_column(&g, &[(-1.0, -1.0, 0.0), (1.0, 0.5, 1.0)]);
        let s = state_with(g, &col);
        let expected = indicator_column(&g, &[(-1.0, -0.5, 0.0)]);
        let got = project_equilibrium(&s, 0);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_mass_projects_to_zero() {
        let g = grid();
        let col = indicator_column(&g, &[(1.0, 0.5, 1.0), (-1.0, -1.0, -0.5)]);
        let s = state_with(g, &col);
        assert!(project_equilibrium(&s, 0).iter().all(|&v| v == 0.0));
        // Π = 0 makes D zero by convention.
        assert_eq!(deviation(&s, 0).unwrap(), 0.0);
    }

    #[test]
    fn fractional_cell_carries_the_remainder() {
        let g = grid();
        let mut col = vec![0.0; g.n_v()];
        col[g.zero_edge() + 3] = 0.37;
        let pi = project_column(&g, &col);
        assert_eq!(pi[g.zero_edge()], 0.37);
        assert_eq!(column_mass_units(&pi), 0.37);
    }

    #[test]
    fn projection_is_idempotent_bitwise() {
        let g = grid();
        let col: Vec<f64> = (0..g.n_v())
            .map(|j| {
                let v = g.v_center(j);
                if v > 0.0 {
                    (3.1 * v).sin().abs()
                } else {
                    -(7.0 * v).cos().abs() * 0.3
                }
            })
            .collect();
        let once = project_column(&g, &col);
        let twice = project_column(&g, &once);
        assert_eq!(once, twice);
    }

    #[test]
    fn deviation_of_equilibrium_is_zero() {
        let g = grid();
        let col = indicator_column(&g, &[(-1.0, -0.73, 0.0)]);
        assert_eq!(deviation(&state_with(g, &col), 0).unwrap(), 0.0);
    }

    #[test]
    fn deviation_of_stripe_family() {
        // f = -1_[-1,0] + 1_[a,1]: ∫vf = 1/2 + (1-a²)/2, Π = -1_[-a,0] with
        // ∫vΠ = a²/2, so D = 2(1-a²)/a² = 6 at a = 1/2.
        let g = grid();
        let col = indicator_column(&g, &[(-1.0, -1.0, 0.0), (1.0, 0.5, 1.0)]);
        let d = deviation(&state_with(g, &col), 0).unwrap();
        assert!((d - 6.0).abs() < 1e-12, "D = {d}");
    }

    #[test]
    fn negative_excess_is_an_error() {
        // A column that is "more concentrated" than any equilibrium cannot
        // arise from a sign-compatible state; a wrong-sign value fakes it.
        let g = grid();
        let mut col = vec![0.0; g.n_v()];
        col[g.zero_edge()] = 1.0;
        col[g.zero_edge() + 10] = -0.5;
        let s = state_with(g, &col);
        assert!(matches!(
            deviation(&s, 0),
            Err(KineticError::NegativeDeviation { .. })
        ));
    }

    #[test]
    fn threshold_limits_and_values() {
        assert!((collapse_threshold(1e-12) - 1.0).abs() < 1e-12);
        assert!(stripe_width(1e-12) < 1e-12);
        // Frozen from an mpmath root solve of 2(1-a²)/a² = 0.1.
        assert!((collapse_threshold(0.1) - 0.975_900_072_948_533_2).abs() < 1e-15);
        assert!((stripe_width(0.1) - 0.024_099_927_051_466_82).abs() < 1e-15);
        // Taylor: δ = ε/4 + O(ε²).
        let ratio = stripe_width(1e-3) / 1e-3;
        assert!((ratio - 0.249_906_289_045_417_8).abs() < 1e-12);
    }

    #[test]
    fn threshold_matches_bisection_on_deviation() {
        // Bisection on D(a) evaluated on the grid for the stripe family; the
        // discrete D differs from the closed form only through the fractional
        // cell of Π, so a fine grid pins a* to a few dv.
        let g = GridSpec::symmetric(0.0, 1.0, 1, 1.0, 4000, Boundary::Periodic).unwrap();
        let eps = 0.1;
        let d_of = |a: f64| {
            let col = indicator_column(&g, &[(-1.0, -1.0, 0.0), (1.0, a, 1.0)]);
            deviation(&state_with(g, &col), 0).unwrap()
        };
        let (mut lo, mut hi) = (0.5, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if d_of(mid) > eps {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((lo - collapse_threshold(eps)).abs() < 2.0 * g.dv(), "{lo}");
    }
}
