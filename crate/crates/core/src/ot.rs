//! One-dimensional optimal transport between kinetic columns.
//!
//! On a half line every pair of equal-mass densities is joined by the
//! monotone rearrangement `τ = F⁻¹ ∘ F₀`. Columns of a sign-compatible state
//! split into a `v ≥ 0` branch and a reflected `v ≤ 0` branch, each handled
//! by the same half-line machinery.

use alloc::format;
use alloc::vec::Vec;

#[allow(unused_imports)] // shadowed by inherent methods whenever std is linked
use num_traits::Float;

use crate::equilibrium::project_column;
use crate::error::KineticError;
use crate::grid::GridSpec;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Positive,
    /// `v ≤ 0`, reflected by `v ↦ -v` with the sign of `f` flipped.
    Negative,
}

/// Nonnegative piecewise-constant density on `[0, n dv]`; cell `k` covers
/// `[k dv, (k + 1) dv]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HalfLineDensity {
    pub dv: f64,
    pub values: Vec<f64>,
}

impl HalfLineDensity {
    pub fn new(dv: f64, values: Vec<f64>) -> Result<Self> {
        if let Some(k) = values.iter().position(|&v| !(v >= 0.0)) {
            return Err(KineticError::SignViolation {
                i: 0,
                j: k,
                value: values[k],
            });
        }
        Ok(Self { dv, values })
    }

    /// One branch of a column. Fails if the column has the wrong sign on that
    /// branch or carries mass on the other one (beyond `tol`).
    pub fn from_column(grid: &GridSpec, col: &[f64], branch: Branch, tol: f64) -> Result<Self> {
        let z = grid.zero_edge();
        let (own, other): (Vec<f64>, &[f64]) = match branch {
            Branch::Positive => (col[z..].to_vec(), &col[..z]),
            Branch::Negative => (col[..z].iter().rev().map(|&v| -v).collect(), &col[z..]),
        };
        if let Some(j) = other.iter().position(|&v| v.abs() > tol) {
            return Err(KineticError::SignViolation {
                i: 0,
                j,
                value: other[j],
            });
        }
        if let Some(k) = own.iter().position(|&v| v < -tol) {
            return Err(KineticError::SignViolation {
                i: 0,
                j: k,
                value: own[k],
            });
        }
        Ok(Self {
            dv: grid.dv(),
            values: own.into_iter().map(|v| v.max(0.0)).collect(),
        })
    }

    /// Both branches of a column, without requiring it to be one-signed.
    pub fn split(grid: &GridSpec, col: &[f64]) -> (Self, Self) {
        let z = grid.zero_edge();
        let pos = col[z..].iter().map(|&v| v.max(0.0)).collect();
        let neg = col[..z].iter().rev().map(|&v| (-v).max(0.0)).collect();
        (
            Self {
                dv: grid.dv(),
                values: pos,
            },
            Self {
                dv: grid.dv(),
                values: neg,
            },
        )
    }

    pub fn mass(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a + v) * self.dv
    }

    /// `F(k dv) = ∫₀^{k dv} f` at every cell edge.
    pub fn cdf(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.values.len() + 1);
        let mut acc = 0.0;
        out.push(0.0);
        for &v in &self.values {
            acc += v * self.dv;
            out.push(acc);
        }
        out
    }

    /// Generalized inverse `inf { v : F(v) > q }` of the piecewise-linear CDF.
    /// Levels at or above the total mass map to the top of the support.
    pub fn quantile(&self, cdf: &[f64], q: f64) -> f64 {
        for (k, &fk) in self.values.iter().enumerate() {
            if cdf[k + 1] > q && fk > 0.0 {
                let local = ((q - cdf[k]) / fk).max(0.0);
                return (k as f64 * self.dv + local).min((k + 1) as f64 * self.dv);
            }
        }
        let top = self.values.iter().rposition(|&v| v > 0.0).map_or(0, |k| k + 1);
        top as f64 * self.dv
    }

    /// `Σ_k f_k ∫_{cell k} v^p dv`, exact for the piecewise-constant density.
    pub fn power_moment(&self, p: i32) -> f64 {
        let q = p + 1;
        let mut acc = 0.0;
        for (k, &fk) in self.values.iter().enumerate() {
            let lo = k as f64 * self.dv;
            let hi = lo + self.dv;
            acc += fk * (hi.powi(q) - lo.powi(q)) / q as f64;
        }
        acc
    }
}

/// `F(v) = ∫₀^v f` at all `n_v + 1` grid edges for a column supported in
/// `v ≥ 0` with nonnegative values (edges below zero get 0).
pub fn cdf(grid: &GridSpec, col: &[f64]) -> Result<Vec<f64>> {
    let half = HalfLineDensity::from_column(grid, col, Branch::Positive, 0.0)?;
    let mut out = alloc::vec![0.0; grid.zero_edge()];
    out.extend(half.cdf());
    Ok(out)
}

/// Monotone rearrangement between two half-line densities of equal mass,
/// sampled at `n` mid-quantile nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotoneMap {
    /// `F₀⁻¹(q_k)`: quantile nodes of the source.
    pub source_nodes: Vec<f64>,
    /// `τ(source_nodes[k]) = F⁻¹(q_k)`.
    pub tau: Vec<f64>,
    /// Mass carried by each node.
    pub weight: f64,
    /// `Σ_k |τ_k - s_k| weight ≈ ∫ |τ(v) - v| f₀ dv`.
    pub w1: f64,
}

impl MonotoneMap {
    /// `Σ_k φ(τ_k) weight ≈ ∫ φ(τ(v)) f₀ dv`.
    pub fn pushforward(&self, phi: impl Fn(f64) -> f64) -> f64 {
        self.tau.iter().map(|&t| phi(t)).sum::<f64>() * self.weight
    }

    pub fn is_monotone(&self) -> bool {
        self.tau.windows(2).all(|w| w[1] >= w[0])
    }
}

/// Relative mass tolerance for [`monotone_map`].
pub const MASS_TOL: f64 = 1e-10;

pub fn monotone_map(source: &HalfLineDensity, target: &HalfLineDensity) -> Result<MonotoneMap> {
    let m0 = source.mass();
    let m1 = target.mass();
    if (m0 - m1).abs() > MASS_TOL * m0.abs().max(m1.abs()).max(1.0) {
        return Err(KineticError::MassMismatch {
            source_mass: m0,
            target_mass: m1,
        });
    }
    let n = source.values.len().max(target.values.len()).max(1);
    let f0 = source.cdf();
    let f1 = target.cdf();
    let weight = m0 / n as f64;
    let mut source_nodes = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    let mut w1 = 0.0;
    if m0 > 0.0 {
        let scale = m1 / m0;
        for k in 0..n {
            let q = (k as f64 + 0.5) * weight;
            let s = source.quantile(&f0, q);
            let t = target.quantile(&f1, q * scale);
            w1 += (t - s).abs();
            source_nodes.push(s);
            tau.push(t);
        }
    }
    Ok(MonotoneMap {
        source_nodes,
        tau,
        weight,
        w1: w1 * weight,
    })
}

/// `∫ |F_a - F_b| dv` with cumulative sums taken from `v_min`: the
/// Wasserstein-1 (Kantorovich–Rubinstein) distance between two columns of
/// equal total mass. Exact for piecewise-constant columns.
pub fn w1_columns(grid: &GridSpec, a: &[f64], b: &[f64]) -> f64 {
    let dv = grid.dv();
    let mut diff_lo: f64 = 0.0;
    let mut total = 0.0;
    for (&fa, &fb) in a.iter().zip(b) {
        let diff_hi = diff_lo + (fa - fb) * dv;
        total += abs_linear_integral(diff_lo, diff_hi) * dv;
        diff_lo = diff_hi;
    }
    total
}

// ∫₀¹ |d0 + (d1 - d0) s| ds
fn abs_linear_integral(d0: f64, d1: f64) -> f64 {
    if (d0 >= 0.0) == (d1 >= 0.0) || d0 == 0.0 || d1 == 0.0 {
        0.5 * (d0.abs() + d1.abs())
    } else {
        0.5 * (d0 * d0 + d1 * d1) / (d0 - d1).abs()
    }
}

/// W1 distance from a column to its equilibrium projection.
pub fn w1_to_equilibrium(grid: &GridSpec, col: &[f64]) -> f64 {
    let pi = project_column(grid, col);
    w1_columns(grid, col, &pi)
}

/// A convex entropy `η` with a (sub)derivative.
pub trait ConvexEntropy {
    fn value(&self, v: f64) -> f64;
    fn derivative(&self, v: f64) -> f64;
}

/// `η(v) = v²/2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Quadratic;

impl ConvexEntropy for Quadratic {
    fn value(&self, v: f64) -> f64 {
        0.5 * v * v
    }
    fn derivative(&self, v: f64) -> f64 {
        v
    }
}

/// `η(v) = |v - c|` (Kružkov entropy), with subgradient 0 at the kink.
#[derive(Debug, Clone, Copy)]
pub struct Kink(pub f64);

impl ConvexEntropy for Kink {
    fn value(&self, v: f64) -> f64 {
        (v - self.0).abs()
    }
    fn derivative(&self, v: f64) -> f64 {
        if v > self.0 {
            1.0
        } else if v < self.0 {
            -1.0
        } else {
            0.0
        }
    }
}

/// `η(v) = e^v`.
#[derive(Debug, Clone, Copy, Default)]
pub struct Exponential;

impl ConvexEntropy for Exponential {
    fn value(&self, v: f64) -> f64 {
        v.exp()
    }
    fn derivative(&self, v: f64) -> f64 {
        v.exp()
    }
}

/// Convex piecewise-linear `η` with `η(0) = 0`: slope `slopes[0]` left of
/// `knots[0]`, `slopes[k]` between `knots[k-1]` and `knots[k]`, and so on.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<f64>,
    slopes: Vec<f64>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<f64>, slopes: Vec<f64>) -> Result<Self> {
        if slopes.len() != knots.len() + 1 {
            return Err(crate::error::invalid("slopes", "need exactly one more slope than knots"));
        }
        if knots.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(crate::error::invalid("knots", "must be strictly increasing"));
        }
        if slopes.windows(2).any(|w| !(w[0] <= w[1])) {
            return Err(crate::error::invalid("slopes", "must be nondecreasing for convexity"));
        }
        Ok(Self { knots, slopes })
    }

    fn segment(&self, v: f64) -> usize {
        self.knots.iter().position(|&k| v < k).unwrap_or(self.knots.len())
    }

    // ∫₀^v η' as a sum over the segments crossed.
    fn integral_from_zero(&self, v: f64) -> f64 {
        let (lo, hi, sign) = if v >= 0.0 { (0.0, v, 1.0) } else { (v, 0.0, -1.0) };
        let mut acc = 0.0;
        let mut left = lo;
        for (s, &slope) in self.slopes.iter().enumerate() {
            let right = if s < self.knots.len() { self.knots[s].min(hi) } else { hi };
            if right > left {
                acc += slope * (right - left);
                left = right;
            }
            if left >= hi {
                break;
            }
        }
        sign * acc
    }
}

impl ConvexEntropy for PiecewiseLinear {
    fn value(&self, v: f64) -> f64 {
        self.integral_from_zero(v)
    }
    fn derivative(&self, v: f64) -> f64 {
        self.slopes[self.segment(v)]
    }
}

/// `Σ_j η'(v_j) (f_j - Π_j) dv`, nonnegative for sign-compatible columns.
pub fn entropy_gap(grid: &GridSpec, col: &[f64], eta: &dyn ConvexEntropy) -> f64 {
    let pi = project_column(grid, col);
    let mut acc = 0.0;
    for (j, (&f, &p)) in col.iter().zip(&pi).enumerate() {
        acc += eta.derivative(grid.v_center(j)) * (f - p);
    }
    acc * grid.dv()
}

/// Both sides of the set-convexity inequality
/// `∫ η' 1_{Int(0, |A1| - |A2|)} ≤ ∫ η' (1_{A1} - 1_{A2})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvexityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the inequality for interval lists `a1 ⊂ [0, ∞)` and
/// `a2 ⊂ (-∞, 0]`; `1_{Int(0, s)}` is the signed indicator of the interval
/// between 0 and `s` (negative when `s < 0`).
/// Each integral of `η'` over an interval is `η(b) - η(a)`.
pub fn check_convexity_lemma(
    a1: &[(f64, f64)],
    a2: &[(f64, f64)],
    eta: &dyn ConvexEntropy,
    tol: f64,
) -> Result<ConvexityCheck> {
    validate_intervals(a1, 0.0, f64::INFINITY, "A1")?;
    validate_intervals(a2, f64::NEG_INFINITY, 0.0, "A2")?;
    let len = |set: &[(f64, f64)]| set.iter().map(|&(a, b)| b - a).sum::<f64>();
    let integral = |set: &[(f64, f64)]| {
        set.iter()
            .map(|&(a, b)| eta.value(b) - eta.value(a))
            .sum::<f64>()
    };
    // The equilibrium with the same mass: 1_[0,s] for s > 0, -1_[s,0] for
    // s < 0. Either way its η'-integral is η(s) - η(0).
    let s = len(a1) - len(a2);
    let lhs = eta.value(s) - eta.value(0.0);
    let rhs = integral(a1) - integral(a2);
    Ok(ConvexityCheck {
        lhs,
        rhs,
        holds: lhs <= rhs + tol,
    })
}

fn validate_intervals(set: &[(f64, f64)], lo: f64, hi: f64, name: &str) -> Result<()> {
    let mut prev = f64::NEG_INFINITY;
    for &(a, b) in set {
        if !(a.is_finite() && b.is_finite()) {
            return Err(KineticError::MalformedIntervals(format!("{name}: unbounded interval")));
        }
        if a > b {
            return Err(KineticError::MalformedIntervals(format!("{name}: [{a}, {b}] is reversed")));
        }
        if a < lo || b > hi {
            return Err(KineticError::MalformedIntervals(format!(
                "{name}: [{a}, {b}] leaves [{lo}, {hi}]"
            )));
        }
        if a < prev {
            return Err(KineticError::MalformedIntervals(format!(
                "{name}: intervals overlap or are unsorted at [{a}, {b}]"
            )));
        }
        prev = b;
    }
    Ok(())
}
