//! Replicated-scenario Monte Carlo engine.
//!
//! Every replicate draws one dataset and evaluates all four procedures on it
//! (paired comparison). Tallies are plain counts merged by addition, so the
//! result is identical for any worker count given the same master seed.

// Weight validation uses negated comparisons so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};

use crate::combined::ProcedureConfig;
use crate::dist::DistributionSpec;
use crate::error::{Error, Result};
use crate::kernels::{
    permutation_mean_test, pooled_residuals, shapiro_wilk, welch_t_test, wmw_test, TwoSampleData,
};
use crate::prob::Probability;
use crate::rng::{Lane, RngStream};
use crate::special::ln_gamma;

/// Whether a scenario realizes the main null or the main alternative.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Hypothesis {
    Null,
    Alt,
}

impl Hypothesis {
    pub fn as_str(&self) -> &'static str {
        match self {
            Hypothesis::Null => "null",
            Hypothesis::Alt => "alt",
        }
    }
}

/// One simulated scenario: a distribution pair, sample sizes, and replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub id: String,
    /// Distribution family label used to pair null/alt rows in text tables.
    pub label: String,
    pub hypothesis: Hypothesis,
    pub dist1: DistributionSpec,
    pub dist2: DistributionSpec,
    pub n1: usize,
    pub n2: usize,
    pub replicates: u64,
    pub master_seed: u64,
    pub procedure: ProcedureConfig,
    pub permutation_b: u32,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        self.dist1.validate()?;
        self.dist2.validate()?;
        if self.n1 < 3 || self.n2 < 3 {
            return Err(Error::domain(format!(
                "scenario {}: sample sizes must be at least 3, got {} and {}",
                self.id, self.n1, self.n2
            )));
        }
        if self.n1 + self.n2 > 5000 {
            return Err(Error::domain(format!(
                "scenario {}: pooled residuals exceed the Shapiro-Wilk limit of 5000",
                self.id
            )));
        }
        if self.replicates == 0 {
            return Err(Error::domain(format!(
                "scenario {}: replicates must be at least 1",
                self.id
            )));
        }
        if self.permutation_b == 0 {
            return Err(Error::domain(format!(
                "scenario {}: permutation_b must be at least 1",
                self.id
            )));
        }
        Ok(())
    }
}

/// An estimated rate with its Monte Carlo standard error
/// `sqrt(r * (1 - r) / n)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    pub rate: f64,
    pub std_error: f64,
}

impl RateEstimate {
    pub fn from_counts(hits: u64, n: u64) -> Self {
        let rate = hits as f64 / n as f64;
        RateEstimate {
            rate,
            std_error: (rate * (1.0 - rate) / n as f64).sqrt(),
        }
    }
}

/// Estimated rejection rates of the four procedures for one scenario.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario_id: String,
    pub label: String,
    pub hypothesis: Hypothesis,
    pub master_seed: u64,
    pub replicates_used: u64,
    pub degenerate: u64,
    pub welch: RateEstimate,
    pub wmw: RateEstimate,
    pub combined: RateEstimate,
    pub permutation: RateEstimate,
    pub ms_rejection: RateEstimate,
    /// Combined-procedure rejection rate among replicates whose MS test
    /// passed; absent when no replicate passed.
    pub combined_given_ms_pass: Option<RateEstimate>,
    /// Same, among replicates whose MS test rejected.
    pub combined_given_ms_reject: Option<RateEstimate>,
}

// Per-replicate counts; merged by addition, so any reduction order works.
#[derive(Clone, Copy, Default)]
pub(crate) struct Tally {
    pub used: u64,
    pub degenerate: u64,
    pub welch: u64,
    pub wmw: u64,
    pub permutation: u64,
    pub ms: u64,
    // Joint counts of main-test rejection and MS outcome.
    pub welch_and_ms_reject: u64,
    pub welch_and_ms_pass: u64,
    pub wmw_and_ms_reject: u64,
    pub wmw_and_ms_pass: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.used += other.used;
        self.degenerate += other.degenerate;
        self.welch += other.welch;
        self.wmw += other.wmw;
        self.permutation += other.permutation;
        self.ms += other.ms;
        self.welch_and_ms_reject += other.welch_and_ms_reject;
        self.welch_and_ms_pass += other.welch_and_ms_pass;
        self.wmw_and_ms_reject += other.wmw_and_ms_reject;
        self.wmw_and_ms_pass += other.wmw_and_ms_pass;
        self
    }

    /// Combined-procedure rejections: AU decision on MS rejection, MC
    /// decision on MS pass.
    pub fn combined(&self) -> u64 {
        self.wmw_and_ms_reject + self.welch_and_ms_pass
    }
}

fn eval_replicate(config: &ScenarioConfig, replicate: u64) -> Tally {
    let mut data_stream = RngStream::derive(config.master_seed, &config.id, replicate, Lane::Data);
    let x = config.dist1.sample(config.n1, &mut data_stream);
    let y = config.dist2.sample(config.n2, &mut data_stream);
    let data = match TwoSampleData::new(x, y) {
        Ok(d) => d,
        Err(_) => {
            return Tally {
                degenerate: 1,
                ..Tally::default()
            }
        }
    };
    let welch = welch_t_test(&data, config.procedure.alpha);
    let ms = shapiro_wilk(&pooled_residuals(&data), config.procedure.alpha_ms);
    let (welch, ms) = match (welch, ms) {
        (Ok(w), Ok(m)) => (w, m),
        _ => {
            return Tally {
                degenerate: 1,
                ..Tally::default()
            }
        }
    };
    let wmw = wmw_test(&data, config.procedure.alpha);
    let mut perm_stream =
        RngStream::derive(config.master_seed, &config.id, replicate, Lane::Permutation);
    let perm = permutation_mean_test(
        &data,
        config.procedure.alpha,
        config.permutation_b,
        &mut perm_stream,
    );

    Tally {
        used: 1,
        degenerate: 0,
        welch: welch.reject as u64,
        wmw: wmw.reject as u64,
        permutation: perm.reject as u64,
        ms: ms.reject as u64,
        welch_and_ms_reject: (welch.reject && ms.reject) as u64,
        welch_and_ms_pass: (welch.reject && !ms.reject) as u64,
        wmw_and_ms_reject: (wmw.reject && ms.reject) as u64,
        wmw_and_ms_pass: (wmw.reject && !ms.reject) as u64,
    }
}

pub(crate) fn scenario_tally(config: &ScenarioConfig) -> Result<Tally> {
    config.validate()?;
    let tally = fold_replicates(config.replicates, |r| eval_replicate(config, r));
    // More than 0.1% degenerate replicates invalidates the run.
    if tally.degenerate * 1000 > config.replicates {
        return Err(Error::DegenerateThreshold {
            degenerate: tally.degenerate,
            replicates: config.replicates,
        });
    }
    Ok(tally)
}

#[cfg(feature = "parallel")]
fn fold_replicates<F>(replicates: u64, eval: F) -> Tally
where
    F: Fn(u64) -> Tally + Sync + Send,
{
    use rayon::prelude::*;
    (0..replicates)
        .into_par_iter()
        .fold(Tally::default, |acc, r| acc.merge(eval(r)))
        .reduce(Tally::default, Tally::merge)
}

#[cfg(not(feature = "parallel"))]
fn fold_replicates<F>(replicates: u64, eval: F) -> Tally
where
    F: Fn(u64) -> Tally + Sync + Send,
{
    (0..replicates).fold(Tally::default(), |acc, r| acc.merge(eval(r)))
}

/// Runs one scenario: per replicate, draw a dataset from the configured
/// distribution pair and evaluate Welch, WMW, the combined procedure and the
/// permutation test on it.
///
/// Fails with [`Error::DegenerateThreshold`] when more than 0.1% of the
/// replicates produce degenerate data.
pub fn simulate_scenario(config: &ScenarioConfig) -> Result<ScenarioResult> {
    let tally = scenario_tally(config)?;
    let n = tally.used;
    if n == 0 {
        return Err(Error::DegenerateData(format!(
            "scenario {}: no usable replicates",
            config.id
        )));
    }
    let ms_reject_n = tally.ms;
    let ms_pass_n = n - tally.ms;
    Ok(ScenarioResult {
        scenario_id: config.id.clone(),
        label: config.label.clone(),
        hypothesis: config.hypothesis,
        master_seed: config.master_seed,
        replicates_used: n,
        degenerate: tally.degenerate,
        welch: RateEstimate::from_counts(tally.welch, n),
        wmw: RateEstimate::from_counts(tally.wmw, n),
        combined: RateEstimate::from_counts(tally.combined(), n),
        permutation: RateEstimate::from_counts(tally.permutation, n),
        ms_rejection: RateEstimate::from_counts(tally.ms, n),
        combined_given_ms_pass: (ms_pass_n > 0)
            .then(|| RateEstimate::from_counts(tally.welch_and_ms_pass, ms_pass_n)),
        combined_given_ms_reject: (ms_reject_n > 0)
            .then(|| RateEstimate::from_counts(tally.wmw_and_ms_reject, ms_reject_n)),
    })
}

/// Tail side for [`binomial_level_test`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailSide {
    Greater,
    Less,
}

/// One-sided exact binomial test of an observed rejection count against a
/// nominal rate `p0`.
///
/// `Greater` returns `P(X >= rejections)`, `Less` returns
/// `P(X <= rejections)` for `X ~ Binomial(n, p0)`. The tail is an exact sum
/// evaluated by a multiplicative recurrence, so no normal approximation is
/// involved at any `n`.
pub fn binomial_level_test(
    rejections: u64,
    n: u64,
    p0: Probability,
    side: TailSide,
) -> Probability {
    assert!(rejections <= n, "rejections must not exceed n");
    let p = p0.value();
    if p == 0.0 {
        return Probability::clamped(match side {
            TailSide::Greater => {
                if rejections == 0 {
                    1.0
                } else {
                    0.0
                }
            }
            TailSide::Less => 1.0,
        });
    }
    if p == 1.0 {
        return Probability::clamped(match side {
            TailSide::Greater => 1.0,
            TailSide::Less => {
                if rejections == n {
                    1.0
                } else {
                    0.0
                }
            }
        });
    }
    let k = rejections;
    match side {
        TailSide::Greater => {
            if k == 0 {
                return Probability::clamped(1.0);
            }
            // Sum pmf upward from k; terms shrink geometrically past the mode.
            let mut term = ln_pmf(k, n, p).exp();
            let mut acc = term;
            let ratio = p / (1.0 - p);
            let mut j = k;
            while j < n {
                term *= (n - j) as f64 / (j + 1) as f64 * ratio;
                acc += term;
                j += 1;
                if term < acc * 1e-18 {
                    break;
                }
            }
            Probability::clamped(acc)
        }
        TailSide::Less => {
            if k == n {
                return Probability::clamped(1.0);
            }
            let mut term = ln_pmf(k, n, p).exp();
            let mut acc = term;
            let ratio = (1.0 - p) / p;
            let mut j = k;
            while j > 0 {
                term *= j as f64 / (n - j + 1) as f64 * ratio;
                acc += term;
                j -= 1;
                if term < acc * 1e-18 {
                    break;
                }
            }
            Probability::clamped(acc)
        }
    }
}

fn ln_pmf(k: u64, n: u64, p: f64) -> f64 {
    let (k, n) = (k as f64, n as f64);
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
        + k * p.ln()
        + (n - k) * (1.0 - p).ln()
}

/// Per-procedure rates of a weighted scenario combination.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexCombination {
    pub welch: RateEstimate,
    pub wmw: RateEstimate,
    pub combined: RateEstimate,
    pub permutation: RateEstimate,
}

/// Weighted average of per-procedure rejection rates over several scenarios.
///
/// Weights must be nonnegative and sum to 1 within 1e-12. Standard errors
/// propagate as `sqrt(sum w^2 se^2)`.
pub fn convex_combination(parts: &[(&ScenarioResult, f64)]) -> Result<ConvexCombination> {
    if parts.is_empty() {
        return Err(Error::domain("convex combination of nothing".to_string()));
    }
    if parts.iter().any(|(_, w)| !(*w >= 0.0)) {
        return Err(Error::domain("weights must be nonnegative".to_string()));
    }
    let sum: f64 = parts.iter().map(|(_, w)| w).sum();
    if (sum - 1.0).abs() > 1e-12 {
        return Err(Error::domain(format!(
            "weights must sum to 1 within 1e-12, got {sum}"
        )));
    }
    let mix = |pick: &dyn Fn(&ScenarioResult) -> RateEstimate| -> RateEstimate {
        let rate = parts.iter().map(|(r, w)| w * pick(r).rate).sum::<f64>();
        let var = parts
            .iter()
            .map(|(r, w)| {
                let se = pick(r).std_error;
                w * w * se * se
            })
            .sum::<f64>();
        RateEstimate {
            rate,
            std_error: var.sqrt(),
        }
    };
    Ok(ConvexCombination {
        welch: mix(&|r| r.welch),
        wmw: mix(&|r| r.wmw),
        combined: mix(&|r| r.combined),
        permutation: mix(&|r| r.permutation),
    })
}
