//! Closed-form oracles, rate sensitivities, and sweep experiments.

mod sensitivity;
mod sweep;
mod symmetric;

pub use sensitivity::{sensitivity_lob, sensitivity_vwap, SensitivityDetail, SensitivityReport};
pub use sweep::{rate_sweep, SweepRow};
pub use symmetric::{
    region_boundaries, slope_window, symmetric_solve, Region, SymmetricScenario, SymmetricSolution,
    SYMMETRIC_INTERCEPT,
};

use std::error::Error;
use std::fmt;

use crate::model::Mechanism;

#[derive(Debug, Clone)]
pub enum AnalyticsError {
    /// Parameters outside the admissible window of the symmetric family.
    ParameterWindow {
        detail: String,
    },
    /// The report was produced under a different pricing mechanism.
    MechanismMismatch {
        expected: Mechanism,
        got: Mechanism,
    },
    /// Two response branches coincide at the solution; the analytic
    /// derivative does not exist and a one-sided or finite-difference
    /// treatment is required.
    RegimeTie {
        bank: String,
        detail: String,
    },
    SingularSystem {
        detail: String,
    },
}

impl fmt::Display for AnalyticsError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ParameterWindow { detail } => write!(f, "parameter window violated: {detail}"),
            Self::MechanismMismatch { expected, got } => {
                write!(f, "report was produced under {got}, expected {expected}")
            }
            Self::RegimeTie { bank, detail } => {
                write!(
                    f,
                    "regime tie at bank '{bank}': {detail}; use a finite-difference fallback"
                )
            }
            Self::SingularSystem { detail } => write!(f, "singular sensitivity system: {detail}"),
        }
    }
}

impl Error for AnalyticsError {}
