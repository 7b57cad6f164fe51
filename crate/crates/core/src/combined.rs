//! The combined procedure: run the misspecification (MS) test first, then
//! either the model-constrained (MC) main test when the MS test passes or
//! the assumption-unconstrained (AU) main test when it rejects.
//!
//! Shipped composition: Shapiro-Wilk on pooled residuals as MS test, Welch's
//! t as MC test, Wilcoxon-Mann-Whitney as AU test. Any kernel triple with the
//! same signatures can be substituted.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::kernels::{
    pooled_residuals, shapiro_wilk, welch_t_test, wmw_test, TestOutcome, TwoSampleData,
};
use crate::prob::Probability;

/// Levels of the MS test and of the main tests.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProcedureConfig {
    /// Level of the misspecification test.
    pub alpha_ms: Probability,
    /// Level of both main tests.
    pub alpha: Probability,
}

impl Default for ProcedureConfig {
    fn default() -> Self {
        ProcedureConfig {
            alpha_ms: Probability::new(0.05).expect("valid default"),
            alpha: Probability::new(0.05).expect("valid default"),
        }
    }
}

/// Which main test the procedure ran.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// MS test passed: the model-constrained test decided.
    Mc,
    /// MS test rejected: the assumption-unconstrained test decided.
    Au,
}

/// Full record of one combined-procedure run.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct CombinedOutcome {
    pub ms: TestOutcome,
    pub branch: Branch,
    pub main: TestOutcome,
}

impl CombinedOutcome {
    /// The procedure's overall rejection decision.
    pub fn reject(&self) -> bool {
        self.main.reject
    }
}

/// A kernel triple forming a combined procedure. The MS kernel sees the
/// pooled group-centered residuals, the main kernels see the raw two-sample
/// data.
#[derive(Clone, Copy)]
pub struct Composition {
    pub ms: fn(&[f64], Probability) -> Result<TestOutcome>,
    pub mc: fn(&TwoSampleData, Probability) -> Result<TestOutcome>,
    pub au: fn(&TwoSampleData, Probability) -> Result<TestOutcome>,
}

impl Default for Composition {
    fn default() -> Self {
        Composition {
            ms: shapiro_wilk,
            mc: welch_t_test,
            au: |data, level| Ok(wmw_test(data, level)),
        }
    }
}

/// Runs the shipped Shapiro-Wilk / Welch / WMW combined procedure.
pub fn run_combined(data: &TwoSampleData, config: &ProcedureConfig) -> Result<CombinedOutcome> {
    run_combined_with(&Composition::default(), data, config)
}

/// Runs a combined procedure with an arbitrary kernel triple.
pub fn run_combined_with(
    composition: &Composition,
    data: &TwoSampleData,
    config: &ProcedureConfig,
) -> Result<CombinedOutcome> {
    let ms = (composition.ms)(&pooled_residuals(data), config.alpha_ms)?;
    let (branch, main) = if ms.reject {
        (Branch::Au, (composition.au)(data, config.alpha)?)
    } else {
        (Branch::Mc, (composition.mc)(data, config.alpha)?)
    };
    Ok(CombinedOutcome { ms, branch, main })
}
