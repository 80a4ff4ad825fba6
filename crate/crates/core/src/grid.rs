use alloc::format;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::error::KineticError;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Boundary {
    /// Indices wrap around; per-row mass is conserved exactly.
    Periodic,
    /// Ghost cells repeat the nearest boundary value (zero-gradient extension).
    Outflow,
}

/// Uniform tensor grid in `(x, v)` with cell-centered unknowns.
///
/// `v = 0` is always a cell edge, so each velocity cell lies entirely on one
/// side of zero and sign compatibility can be checked cell by cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    x_min: f64,
    x_max: f64,
    n_x: usize,
    v_min: f64,
    v_max: f64,
    n_v: usize,
    boundary: Boundary,
    dx: f64,
    dv: f64,
    zero_edge: usize,
}

impl GridSpec {
    pub fn new(
        x_min: f64,
        x_max: f64,
        n_x: usize,
        v_min: f64,
        v_max: f64,
        n_v: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_min < x_max) {
            return Err(KineticError::InvalidGrid(format!(
                "need finite x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if !(v_min.is_finite() && v_max.is_finite() && v_min < v_max) {
            return Err(KineticError::InvalidGrid(format!(
                "need finite v_min < v_max, got [{v_min}, {v_max}]"
            )));
        }
        if n_x < 1 {
            return Err(KineticError::InvalidGrid("n_x must be at least 1".into()));
        }
        if n_v < 2 {
            return Err(KineticError::InvalidGrid("n_v must be at least 2".into()));
        }
        let dx = (x_max - x_min) / n_x as f64;
        let dv = (v_max - v_min) / n_v as f64;
        if !(dx > 0.0 && dv > 0.0) {
            return Err(KineticError::InvalidGrid("cell widths must be positive".into()));
        }
        if v_min > 0.0 || v_max < 0.0 {
            return Err(KineticError::InvalidGrid(format!(
                "velocity range [{v_min}, {v_max}] must contain v = 0"
            )));
        }
        let k = -v_min / dv;
        let zero_edge = k.round();
        if (k - zero_edge).abs() > 1e-9 * (1.0 + k) {
            return Err(KineticError::InvalidGrid(format!(
                "v = 0 is not a cell edge (it falls at {k} cells from v_min)"
            )));
        }
        Ok(Self {
            x_min,
            x_max,
            n_x,
            v_min,
            v_max,
            n_v,
            boundary,
            dx,
            dv,
            zero_edge: zero_edge as usize,
        })
    }

    /// Grid with velocities `[-v_max, v_max]` split into `2 * n_half` cells.
    pub fn symmetric(
        x_min: f64,
        x_max: f64,
        n_x: usize,
        v_max: f64,
        n_half: usize,
        boundary: Boundary,
    ) -> Result<Self> {
        Self::new(x_min, x_max, n_x, -v_max, v_max, 2 * n_half, boundary)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }
    pub fn x_max(&self) -> f64 {
        self.x_max
    }
    pub fn n_x(&self) -> usize {
        self.n_x
    }
    pub fn v_min(&self) -> f64 {
        self.v_min
    }
    pub fn v_max(&self) -> f64 {
        self.v_max
    }
    pub fn n_v(&self) -> usize {
        self.n_v
    }
    pub fn boundary(&self) -> Boundary {
        self.boundary
    }
    pub fn dx(&self) -> f64 {
        self.dx
    }
    pub fn dv(&self) -> f64 {
        self.dv
    }

    /// Index of the first velocity cell with `v >= 0`.
    pub fn zero_edge(&self) -> usize {
        self.zero_edge
    }

    pub fn x_center(&self, i: usize) -> f64 {
        self.x_min + (i as f64 + 0.5) * self.dx
    }

    pub fn x_edge(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    // Measured from the zero edge so that centers are exactly antisymmetric.
    pub fn v_center(&self, j: usize) -> f64 {
        (j as f64 - self.zero_edge as f64 + 0.5) * self.dv
    }

    pub fn v_edge(&self, k: usize) -> f64 {
        (k as f64 - self.zero_edge as f64) * self.dv
    }

    pub fn len(&self) -> usize {
        self.n_x * self.n_v
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn v_centers(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_v).map(move |j| self.v_center(j))
    }

    /// Index of the x-cell containing `x`, if inside the domain.
    pub fn x_index(&self, x: f64) -> Option<usize> {
        if !(x >= self.x_min && x <= self.x_max) {
            return None;
        }
        let i = ((x - self.x_min) / self.dx).floor() as usize;
        Some(i.min(self.n_x - 1))
    }

    /// Index of the v-cell containing `v`, if inside the velocity range.
    pub fn v_index(&self, v: f64) -> Option<usize> {
        if !(v >= self.v_min && v <= self.v_max) {
            return None;
        }
        let j = ((v - self.v_min) / self.dv).floor() as usize;
        Some(j.min(self.n_v - 1))
    }

    /// True when two grids describe the same discretization.
    pub fn same_as(&self, other: &GridSpec) -> bool {
        self == other
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_zero_inside_a_cell() {
        let err = GridSpec::new(0.0, 1.0, 10, -1.0, 1.0, 3, Boundary::Periodic).unwrap_err();
        assert!(matches!(err, KineticError::InvalidGrid(_)));
    }

    #[test]
    fn rejects_degenerate_ranges() {
        assert!(GridSpec::new(1.0, 1.0, 10, -1.0, 1.0, 4, Boundary::Periodic).is_err());
        assert!(GridSpec::new(0.0, 1.0, 0, -1.0, 1.0, 4, Boundary::Periodic).is_err());
        assert!(GridSpec::new(0.0, 1.0, 4, -1.0, 1.0, 1, Boundary::Periodic).is_err());
        assert!(GridSpec::new(0.0, 1.0, 4, 0.5, 1.0, 4, Boundary::Periodic).is_err());
    }

    #[test]
    fn one_sided_velocity_range_is_allowed() {
        let g = GridSpec::new(0.0, 1.0, 4, 0.0, 2.0, 8, Boundary::Outflow).unwrap();
        assert_eq!(g.zero_edge(), 0);
        assert_eq!(g.v_center(0), 0.125);
    }

    #[test]
    fn centers_are_antisymmetric() {
        let g = GridSpec::symmetric(-1.0, 1.0, 8, 1.0, 50, Boundary::Periodic).unwrap();
        assert_eq!(g.zero_edge(), 50);
        for j in 0..50 {
            assert_eq!(g.v_center(49 - j), -g.v_center(50 + j));
        }
        assert_eq!(g.v_edge(50), 0.0);
    }

    #[test]
    fn index_lookup() {
        let g = GridSpec::symmetric(-1.0, 1.0, 4, 1.0, 2, Boundary::Periodic).unwrap();
        assert_eq!(g.x_index(-1.0), Some(0));
        assert_eq!(g.x_index(1.0), Some(3));
        assert_eq!(g.x_index(0.1), Some(2));
        assert_eq!(g.x_index(1.5), None);
        assert_eq!(g.v_index(-0.1), Some(1));
        assert_eq!(g.v_index(0.0), Some(2));
    }
}
