use alloc::string::String;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum KineticError {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid flux model: {0}")]
    InvalidFlux(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("grid mismatch between states")]
    GridMismatch,

    #[error("sign compatibility violated at x-cell {i}, v-cell {j}: f = {value}")]
    SignViolation { i: usize, j: usize, value: f64 },

    #[error("negative entropy excess {numerator} at x-cell {i} (tolerance {tol})")]
    NegativeDeviation { i: usize, numerator: f64, tol: f64 },

    #[error("mass drift {drift} exceeds tolerance {tol} after {steps} steps")]
    MassDrift { drift: f64, tol: f64, steps: usize },

    #[error("masses differ: {source_mass} vs {target_mass}")]
    MassMismatch { source_mass: f64, target_mass: f64 },

    #[error("malformed interval list: {0}")]
    MalformedIntervals(String),

    #[error("singular Gram matrix (determinant {0})")]
    SingularGram(f64),

    #[error("flux `{0}` is not convex")]
    NonConvexFlux(String),
}

impl KineticError {
    /// True for errors raised by a runtime invariant check rather than bad input.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            KineticError::SignViolation { .. }
                | KineticError::NegativeDeviation { .. }
                | KineticError::MassDrift { .. }
        )
    }
}

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> KineticError {
    KineticError::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
