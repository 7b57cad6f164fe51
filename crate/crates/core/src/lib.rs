//! combitest: a simulation laboratory for two-stage ("combined") test
//! procedures, where a misspecification pretest decides between a
//! model-constrained main test and an assumption-unconstrained one.
//!
//! The crate provides:
//! - reproducible data-generating distributions ([`dist`]),
//! - the four test kernels ([`kernels`]) and the combined procedure
//!   ([`combined`]),
//! - a replicated-scenario Monte Carlo engine with per-replicate random
//!   substreams ([`engine`]),
//! - the mixture experiment and its analytic power identities ([`mixture`],
//!   [`lemma`]),
//! - config parsing, table emission and SVG power curves ([`config`],
//!   [`table`], [`svg`]).

pub mod combined;
pub mod config;
pub mod dist;
pub mod engine;
pub mod error;
pub mod kernels;
pub mod lemma;
pub mod mixture;
pub mod prob;
pub mod rng;
pub mod special;
pub mod svg;
pub mod table;

pub use combined::{run_combined, Branch, CombinedOutcome, ProcedureConfig};
pub use dist::{skew_normal_params, DistributionSpec, SkewNormalParams};
pub use engine::{
    binomial_level_test, convex_combination, simulate_scenario, Hypothesis, RateEstimate,
    ScenarioConfig, ScenarioResult, TailSide,
};
pub use error::{Error, Result};
pub use kernels::{
    permutation_mean_test, pooled_residuals, shapiro_wilk, welch_t_test, wmw_test, TestMethod,
    TestOutcome, TwoSampleData,
};
pub use lemma::{
    analytic_au_power, analytic_combined_power, analytic_mc_power, lambda_star, lemma_gain,
    verify_lemma, LemmaInputs, LemmaReport,
};
pub use mixture::{simulate_mixture, MixtureSpec, MixtureSweep};
pub use prob::Probability;
pub use rng::{Lane, RngStream};
