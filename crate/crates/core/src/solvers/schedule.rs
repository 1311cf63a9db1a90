use std::fmt;

use crate::error::{Error, Result};

/// Step sizes τ_r (or DR relaxation parameters) indexed by iteration r.
#[derive(Debug, Clone, PartialEq)]
pub enum StepSchedule {
    /// τ_r = τ₀/(r + 1), which lies in ℓ² ∖ ℓ¹.
    Harmonic(f64),
    Constant(f64),
    /// Explicit values; the last one repeats once the list is exhausted.
    Custom(Vec<f64>),
}

/// Whether schedule requirements of the convergence theorems are enforced.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum GuaranteeMode {
    /// Reject schedules that void the theorems.
    Strict,
    /// Accept them with a logged warning.
    #[default]
    BestEffort,
}

impl StepSchedule {
    pub fn at(&self, r: usize) -> f64 {
        match self {
            StepSchedule::Harmonic(t0) => t0 / (r as f64 + 1.0),
            StepSchedule::Constant(t) => *t,
            StepSchedule::Custom(v) => v[r.min(v.len() - 1)],
        }
    }

    fn check_values(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t.is_finite();
        let valid = match self {
            StepSchedule::Harmonic(t) | StepSchedule::Constant(t) => ok(*t),
            StepSchedule::Custom(v) => !v.is_empty() && v.iter().all(|&t| ok(t)),
        };
        if valid {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "step sizes must be positive and finite: {self}"
            )))
        }
    }

    /// Step sizes for the subgradient method and CPPA must be in ℓ² ∖ ℓ¹.
    /// Only the harmonic schedule qualifies; other schedules are rejected in
    /// strict mode and produce a warning otherwise.
    pub fn validate_steps(&self, mode: GuaranteeMode) -> Result<Option<String>> {
        self.check_values()?;
        if matches!(self, StepSchedule::Harmonic(_)) {
            return Ok(None);
        }
        let msg = format!("step schedule {self} is not in l2 \\ l1; convergence guarantees lapse");
        match mode {
            GuaranteeMode::Strict => Err(Error::invalid(msg)),
            GuaranteeMode::BestEffort => {
                log::warn!("{msg}");
                Ok(Some(msg))
            }
        }
    }

    /// DR relaxation parameters need Σ τ_r(1 − τ_r) = ∞, which holds when
    /// the tail of the schedule stays in (0, 1) without being summable.
    pub fn validate_relaxation(&self, mode: GuaranteeMode) -> Result<Option<String>> {
        self.check_values()?;
        let ok = match self {
            StepSchedule::Constant(t) => *t < 1.0,
            // τ₀/(r+1) eventually lies in (0, 1) and its sum diverges
            StepSchedule::Harmonic(_) => true,
            StepSchedule::Custom(v) => *v.last().expect("checked non-empty") < 1.0,
        };
        if ok {
            return Ok(None);
        }
        let msg = format!("relaxation {self} violates sum tau(1 - tau) = inf");
        match mode {
            GuaranteeMode::Strict => Err(Error::invalid(msg)),
            GuaranteeMode::BestEffort => {
                log::warn!("{msg}");
                Ok(Some(msg))
            }
        }
    }
}

impl fmt::Display for StepSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StepSchedule::Harmonic(t) => write!(f, "harmonic({t})"),
            StepSchedule::Constant(t) => write!(f, "constant({t})"),
            StepSchedule::Custom(v) => write!(f, "custom({} values)", v.len()),
        }
    }
}
