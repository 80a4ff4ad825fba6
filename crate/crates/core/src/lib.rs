//! Kinetic transport–collapse and thresholded BGK schemes for one-dimensional
//! scalar conservation laws `u_t + A(u)_x = 0`.
//!
//! The solution is carried as a kinetic density `f(x, v)` on a tensor grid of
//! cell averages. Equilibria are signed indicators of `[0, u]`; the schemes
//! alternate exact free streaming at speed `A'(v)` with a collapse (or a
//! relaxation) back toward equilibrium, applied only where the normalized
//! entropy excess `D(f)` is above a threshold `epsilon`.
//!
//! The crate is `no_std` and only needs `alloc`. File formats and the command
//! line driver live in the companion `ktc` crate.

#![no_std]
// `!(x > 0.0)` style checks are intentional: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod diagnostics;
pub mod equilibrium;
pub mod error;
pub mod flux;
pub mod grid;
pub mod oracles;
pub mod ot;
pub mod scheme;
pub mod state;
pub mod transport;

pub use equilibrium::{collapse_threshold, deviation, project_equilibrium};
pub use error::KineticError;
pub use flux::FluxModel;
pub use grid::{Boundary, GridSpec};
pub use scheme::{run, DiagnosticsLedger, SchemeConfig, SchemeKind, StepReport};
pub use state::{moments, KineticState, Moments};
pub use transport::{advect, ShiftPlan};

pub type Result<T> = core::result::Result<T, KineticError>;
