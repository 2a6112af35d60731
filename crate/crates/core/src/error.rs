use thiserror::Error;

/// Errors raised by the model, the dissipation routes and the oracles.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CasimirError {
    #[error("parameter `{name}` = {value} outside its domain: {domain}")]
    Domain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("invalid level system: {0}")]
    InvalidSystem(String),

    #[error("Boltzmann tail weight {tail:e} of discarded levels exceeds tolerance {tolerance:e} ({levels} levels per oscillator)")]
    TruncationTail {
        levels: usize,
        tail: f64,
        tolerance: f64,
    },

    #[error("truncation sensitivity: {levels} levels gives {coarse:e}, {levels_plus_two} levels gives {fine:e} (relative change {relative:e})")]
    TruncationSensitivity {
        levels: usize,
        levels_plus_two: usize,
        coarse: f64,
        fine: f64,
        relative: f64,
    },

    #[error("quadrature did not converge: estimate {estimate:e}, residual {residual:e} after {intervals} intervals")]
    Quadrature {
        estimate: f64,
        residual: f64,
        intervals: usize,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("step size underflow at t = {t} (h = {step:e})")]
    StepUnderflow { t: f64, step: f64 },

    #[error("norm drift {drift:e} exceeds {limit:e} after {steps} steps (budget {budget})")]
    NormDrift {
        drift: f64,
        limit: f64,
        steps: usize,
        budget: usize,
    },

    #[error("step budget {budget} exhausted at t = {t}")]
    StepBudget { budget: usize, t: f64 },

    #[error("lambda-squared scaling did not converge: {table:?}")]
    ScalingNonConvergence { table: Vec<(f64, f64)> },
}

pub type Result<T> = std::result::Result<T, CasimirError>;

pub(crate) fn positive(name: &'static str, value: f64) -> Result<f64> {
    if value.is_finite() && value > 0.0 {
        Ok(value)
    } else {
        Err(CasimirError::Domain {
            name,
            value,
            domain: "finite and > 0",
        })
    }
}
