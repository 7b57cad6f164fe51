use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A probability, guaranteed to lie in `[0, 1]`.
#[derive(Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Probability(f64);

impl Probability {
    /// Validates `value` and wraps it.
    pub fn new(value: f64) -> Result<Self> {
        if value.is_finite() && (0.0..=1.0).contains(&value) {
            Ok(Probability(value))
        } else {
            Err(Error::domain(format!(
                "probability must lie in [0, 1], got {value}"
            )))
        }
    }

    /// Wraps an internally computed value, clamping floating-point overshoot.
    pub(crate) fn clamped(value: f64) -> Self {
        debug_assert!(value.is_finite(), "probability must be finite: {value}");
        Probability(value.clamp(0.0, 1.0))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Debug for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Probability({})", self.0)
    }
}
