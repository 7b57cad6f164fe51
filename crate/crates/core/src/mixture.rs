//! The lambda-mixture experiment: per replicate, one Bernoulli(lambda) draw
//! selects the assumption-fulfilling arm P_theta or the violating arm Q for
//! the whole dataset, and the MC, AU and combined procedures are evaluated
//! on it. Also hosts the independence diagnostics between the MS decision
//! and the main-test decisions.

use serde::{Deserialize, Serialize};

use crate::combined::ProcedureConfig;
use crate::dist::DistributionSpec;
use crate::engine::{RateEstimate, ScenarioConfig};
use crate::error::{Error, Result};
use crate::kernels::{pooled_residuals, shapiro_wilk, welch_t_test, wmw_test, TwoSampleData};
use crate::lemma::{
    analytic_au_power, analytic_combined_power, analytic_mc_power, lambda_star, lemma_gain,
    LemmaInputs,
};
use crate::rng::{Lane, RngStream};

/// The three reject flags of one replicate.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Decisions {
    pub ms: bool,
    pub mc: bool,
    pub au: bool,
}

impl Decisions {
    /// The combined procedure's decision: AU on MS rejection, MC otherwise.
    pub fn combined(&self) -> bool {
        if self.ms {
            self.au
        } else {
            self.mc
        }
    }
}

/// Anything that can produce (MS, MC, AU) decisions for a replicate.
///
/// Implemented by the real kernel triple and by synthetic Bernoulli decision
/// generators; the latter make the independence assumption hold by
/// construction.
pub trait DecisionSource: Sync {
    fn decisions(&self, master_seed: u64, scope: &str, replicate: u64) -> Result<Decisions>;
}

/// Real kernels: draw a dataset, run Shapiro-Wilk on pooled residuals, Welch
/// and WMW on the groups.
#[derive(Clone, Debug)]
pub struct KernelSource {
    pub dist1: DistributionSpec,
    pub dist2: DistributionSpec,
    pub n1: usize,
    pub n2: usize,
    pub procedure: ProcedureConfig,
}

impl DecisionSource for KernelSource {
    fn decisions(&self, master_seed: u64, scope: &str, replicate: u64) -> Result<Decisions> {
        let mut stream = RngStream::derive(master_seed, scope, replicate, Lane::Data);
        let x = self.dist1.sample(self.n1, &mut stream);
        let y = self.dist2.sample(self.n2, &mut stream);
        let data = TwoSampleData::new(x, y)?;
        let ms = shapiro_wilk(&pooled_residuals(&data), self.procedure.alpha_ms)?;
        let mc = welch_t_test(&data, self.procedure.alpha)?;
        let au = wmw_test(&data, self.procedure.alpha);
        Ok(Decisions {
            ms: ms.reject,
            mc: mc.reject,
            au: au.reject,
        })
    }
}

/// Synthetic generator drawing the three reject flags as independent
/// Bernoulli variables with fixed rates.
#[derive(Clone, Copy, Debug)]
pub struct BernoulliSource {
    pub p_ms: f64,
    pub p_mc: f64,
    pub p_au: f64,
}

impl DecisionSource for BernoulliSource {
    fn decisions(&self, master_seed: u64, scope: &str, replicate: u64) -> Result<Decisions> {
        let mut stream = RngStream::derive(master_seed, scope, replicate, Lane::Aux);
        Ok(Decisions {
            ms: stream.next_bool(self.p_ms),
            mc: stream.next_bool(self.p_mc),
            au: stream.next_bool(self.p_au),
        })
    }
}

/// One arm of the mixture: a distribution pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureArm {
    pub label: String,
    pub dist1: DistributionSpec,
    pub dist2: DistributionSpec,
}

/// Configuration of a lambda sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSpec {
    pub id: String,
    /// Arm fulfilling the MC test's model assumptions.
    pub p_theta: MixtureArm,
    /// Arm violating them.
    pub q: MixtureArm,
    pub n1: usize,
    pub n2: usize,
    /// Strictly increasing grid over [0, 1]; must contain 0 and 1.
    pub lambda_grid: Vec<f64>,
    /// Replicates per lambda value.
    pub replicates: u64,
    pub master_seed: u64,
    pub procedure: ProcedureConfig,
}

impl MixtureSpec {
    pub fn validate(&self) -> Result<()> {
        self.p_theta.dist1.validate()?;
        self.p_theta.dist2.validate()?;
        self.q.dist1.validate()?;
        self.q.dist2.validate()?;
        if self.n1 < 3 || self.n2 < 3 {
            return Err(Error::domain(format!(
                "mixture {}: sample sizes must be at least 3",
                self.id
            )));
        }
        if self.n1 + self.n2 > 5000 {
            return Err(Error::domain(format!(
                "mixture {}: pooled residuals exceed the Shapiro-Wilk limit of 5000",
                self.id
            )));
        }
        if self.replicates == 0 {
            return Err(Error::domain(format!(
                "mixture {}: replicates must be at least 1",
                self.id
            )));
        }
        validate_lambda_grid(&self.id, &self.lambda_grid)
    }
}

pub(crate) fn validate_lambda_grid(id: &str, grid: &[f64]) -> Result<()> {
    if grid.len() < 2 {
        return Err(Error::domain(format!(
            "mixture {id}: lambda grid needs at least the endpoints 0 and 1"
        )));
    }
    if !grid.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::domain(format!(
            "mixture {id}: lambda grid must be strictly increasing"
        )));
    }
    if grid[0] != 0.0 || *grid.last().unwrap() != 1.0 {
        return Err(Error::domain(format!(
            "mixture {id}: lambda grid must contain the endpoints 0 and 1"
        )));
    }
    Ok(())
}

/// Simulated and analytic power at one lambda grid point.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixturePoint {
    pub lambda: f64,
    pub mc: RateEstimate,
    pub au: RateEstimate,
    pub combined: RateEstimate,
    pub ms_rate: RateEstimate,
    pub analytic_mc: f64,
    pub analytic_au: f64,
    pub analytic_combined: f64,
}

/// Full lambda sweep with endpoint-derived analytic overlays.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureSweep {
    pub id: String,
    pub replicates_per_lambda: u64,
    pub master_seed: u64,
    pub points: Vec<MixturePoint>,
    /// Rate model estimated from the lambda = 1 and lambda = 0 endpoints.
    pub endpoint_inputs: LemmaInputs,
    /// Crossing point of the endpoint-derived MC/AU lines, when assumptions
    /// (I) and (II) hold on the estimates.
    pub lambda_star: Option<f64>,
    /// Predicted combined-power excess at the crossing point, when (I)-(III)
    /// hold on the estimates.
    pub gain: Option<f64>,
}

#[derive(Clone, Copy, Default)]
struct MixTally {
    mc: u64,
    au: u64,
    combined: u64,
    ms: u64,
    used: u64,
    degenerate: u64,
}

impl MixTally {
    fn merge(mut self, o: MixTally) -> MixTally {
        self.mc += o.mc;
        self.au += o.au;
        self.combined += o.combined;
        self.ms += o.ms;
        self.used += o.used;
        self.degenerate += o.degenerate;
        self
    }
}

/// Runs a lambda sweep over two arbitrary decision sources.
///
/// `lambda = 1` draws every dataset from `theta`, `lambda = 0` from `q`; in
/// between one Bernoulli(lambda) draw per replicate picks the arm for the
/// whole dataset.
pub fn sweep_decision_sources(
    theta: &dyn DecisionSource,
    q: &dyn DecisionSource,
    lambda_grid: &[f64],
    replicates: u64,
    master_seed: u64,
    scope: &str,
) -> Result<Vec<(f64, MixtureArmRates)>> {
    let mut out = Vec::with_capacity(lambda_grid.len());
    for (k, &lambda) in lambda_grid.iter().enumerate() {
        let point_scope = format!("{scope}/lambda{k}");
        let tally = fold_mixture(replicates, |r| {
            let mut select = RngStream::derive(master_seed, &point_scope, r, Lane::ArmSelect);
            let arm: &dyn DecisionSource = if select.next_bool(lambda) { theta } else { q };
            match arm.decisions(master_seed, &point_scope, r) {
                Ok(d) => Ok(MixTally {
                    mc: d.mc as u64,
                    au: d.au as u64,
                    combined: d.combined() as u64,
                    ms: d.ms as u64,
                    used: 1,
                    degenerate: 0,
                }),
                Err(Error::DegenerateData(_)) => Ok(MixTally {
                    degenerate: 1,
                    ..MixTally::default()
                }),
                Err(e) => Err(e),
            }
        })?;
        if tally.degenerate * 1000 > replicates {
            return Err(Error::DegenerateThreshold {
                degenerate: tally.degenerate,
                replicates,
            });
        }
        out.push((
            lambda,
            MixtureArmRates {
                mc: RateEstimate::from_counts(tally.mc, tally.used),
                au: RateEstimate::from_counts(tally.au, tally.used),
                combined: RateEstimate::from_counts(tally.combined, tally.used),
                ms: RateEstimate::from_counts(tally.ms, tally.used),
            },
        ));
    }
    Ok(out)
}

/// Rejection rates of the three procedures plus the MS test at one lambda.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MixtureArmRates {
    pub mc: RateEstimate,
    pub au: RateEstimate,
    pub combined: RateEstimate,
    pub ms: RateEstimate,
}

#[cfg(feature = "parallel")]
fn fold_mixture<F>(replicates: u64, eval: F) -> Result<MixTally>
where
    F: Fn(u64) -> Result<MixTally> + Sync + Send,
{
    use rayon::prelude::*;
    (0..replicates)
        .into_par_iter()
        .map(eval)
        .try_reduce(MixTally::default, |a, b| Ok(a.merge(b)))
}

#[cfg(not(feature = "parallel"))]
fn fold_mixture<F>(replicates: u64, eval: F) -> Result<MixTally>
where
    F: Fn(u64) -> Result<MixTally> + Sync + Send,
{
    let mut acc = MixTally::default();
    for r in 0..replicates {
        acc = acc.merge(eval(r)?);
    }
    Ok(acc)
}

/// Runs the real-kernel mixture sweep described by `spec`.
pub fn simulate_mixture(spec: &MixtureSpec) -> Result<MixtureSweep> {
    spec.validate()?;
    let theta = KernelSource {
        dist1: spec.p_theta.dist1,
        dist2: spec.p_theta.dist2,
        n1: spec.n1,
        n2: spec.n2,
        procedure: spec.procedure,
    };
    let q = KernelSource {
        dist1: spec.q.dist1,
        dist2: spec.q.dist2,
        n1: spec.n1,
        n2: spec.n2,
        procedure: spec.procedure,
    };
    let raw = sweep_decision_sources(
        &theta,
        &q,
        &spec.lambda_grid,
        spec.replicates,
        spec.master_seed,
        &spec.id,
    )?;
    Ok(assemble_sweep(
        &spec.id,
        spec.replicates,
        spec.master_seed,
        raw,
    ))
}

/// Builds a [`MixtureSweep`] from raw per-lambda rates: derives the endpoint
/// rate model and attaches analytic overlays.
pub fn assemble_sweep(
    id: &str,
    replicates: u64,
    master_seed: u64,
    raw: Vec<(f64, MixtureArmRates)>,
) -> MixtureSweep {
    let at_one = raw.last().expect("validated grid").1;
    let at_zero = raw.first().expect("validated grid").1;
    let endpoint_inputs = LemmaInputs {
        p_mc_theta: at_one.mc.rate,
        p_au_theta: at_one.au.rate,
        p_mc_q: at_zero.mc.rate,
        p_au_q: at_zero.au.rate,
        alpha_ms: at_one.ms.rate,
        alpha_ms_star: at_zero.ms.rate,
    };
    let points = raw
        .into_iter()
        .map(|(lambda, rates)| MixturePoint {
            lambda,
            mc: rates.mc,
            au: rates.au,
            combined: rates.combined,
            ms_rate: rates.ms,
            analytic_mc: analytic_mc_power(&endpoint_inputs, lambda),
            analytic_au: analytic_au_power(&endpoint_inputs, lambda),
            analytic_combined: analytic_combined_power(&endpoint_inputs, lambda),
        })
        .collect();
    MixtureSweep {
        id: id.to_string(),
        replicates_per_lambda: replicates,
        master_seed,
        points,
        lambda_star: lambda_star(&endpoint_inputs).ok(),
        gain: lemma_gain(&endpoint_inputs).ok(),
        endpoint_inputs,
    }
}

/// A conditional-rate gap `|P(reject | MS rejects) - P(reject | MS passes)|`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConditionalGap {
    pub gap: f64,
    pub std_error: f64,
}

/// Gap estimates for one distribution (one decision source).
///
/// A gap is `None` ("undetermined") when either MS branch received fewer
/// than 100 replicates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ArmDiagnostics {
    pub ms_reject_replicates: u64,
    pub ms_pass_replicates: u64,
    pub mc: Option<ConditionalGap>,
    pub au: Option<ConditionalGap>,
}

/// The four conditional-rate gaps of the independence relaxation: MC and AU
/// under both P_theta and Q.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IndependenceDiagnostics {
    pub theta: ArmDiagnostics,
    pub q: ArmDiagnostics,
    /// Largest of the four gaps; `None` while any gap is undetermined.
    pub delta_max: Option<f64>,
}

const MIN_BRANCH_REPLICATES: u64 = 100;

#[derive(Clone, Copy, Default)]
struct JointTally {
    ms_reject: u64,
    ms_pass: u64,
    mc_and_reject: u64,
    mc_and_pass: u64,
    au_and_reject: u64,
    au_and_pass: u64,
    degenerate: u64,
}

impl JointTally {
    fn merge(mut self, o: JointTally) -> JointTally {
        self.ms_reject += o.ms_reject;
        self.ms_pass += o.ms_pass;
        self.mc_and_reject += o.mc_and_reject;
        self.mc_and_pass += o.mc_and_pass;
        self.au_and_reject += o.au_and_reject;
        self.au_and_pass += o.au_and_pass;
        self.degenerate += o.degenerate;
        self
    }
}

/// Estimates the MC and AU conditional-rate gaps for one decision source.
pub fn decision_diagnostics(
    source: &dyn DecisionSource,
    replicates: u64,
    master_seed: u64,
    scope: &str,
) -> Result<ArmDiagnostics> {
    let tally = fold_joint(replicates, |r| {
        match source.decisions(master_seed, scope, r) {
            Ok(d) => Ok(JointTally {
                ms_reject: d.ms as u64,
                ms_pass: !d.ms as u64,
                mc_and_reject: (d.mc && d.ms) as u64,
                mc_and_pass: (d.mc && !d.ms) as u64,
                au_and_reject: (d.au && d.ms) as u64,
                au_and_pass: (d.au && !d.ms) as u64,
                degenerate: 0,
            }),
            Err(Error::DegenerateData(_)) => Ok(JointTally {
                degenerate: 1,
                ..JointTally::default()
            }),
            Err(e) => Err(e),
        }
    })?;
    if tally.degenerate * 1000 > replicates {
        return Err(Error::DegenerateThreshold {
            degenerate: tally.degenerate,
            replicates,
        });
    }
    let gap = |hits_reject: u64, hits_pass: u64| -> Option<ConditionalGap> {
        if tally.ms_reject < MIN_BRANCH_REPLICATES || tally.ms_pass < MIN_BRANCH_REPLICATES {
            return None;
        }
        let a = RateEstimate::from_counts(hits_reject, tally.ms_reject);
        let b = RateEstimate::from_counts(hits_pass, tally.ms_pass);
        Some(ConditionalGap {
            gap: (a.rate - b.rate).abs(),
            std_error: (a.std_error * a.std_error + b.std_error * b.std_error).sqrt(),
        })
    };
    Ok(ArmDiagnostics {
        ms_reject_replicates: tally.ms_reject,
        ms_pass_replicates: tally.ms_pass,
        mc: gap(tally.mc_and_reject, tally.mc_and_pass),
        au: gap(tally.au_and_reject, tally.au_and_pass),
    })
}

#[cfg(feature = "parallel")]
fn fold_joint<F>(replicates: u64, eval: F) -> Result<JointTally>
where
    F: Fn(u64) -> Result<JointTally> + Sync + Send,
{
    use rayon::prelude::*;
    (0..replicates)
        .into_par_iter()
        .map(eval)
        .try_reduce(JointTally::default, |a, b| Ok(a.merge(b)))
}

#[cfg(not(feature = "parallel"))]
fn fold_joint<F>(replicates: u64, eval: F) -> Result<JointTally>
where
    F: Fn(u64) -> Result<JointTally> + Sync + Send,
{
    let mut acc = JointTally::default();
    for r in 0..replicates {
        acc = acc.merge(eval(r)?);
    }
    Ok(acc)
}

/// Estimates the MC and AU conditional-rate gaps for one simulated scenario.
pub fn scenario_diagnostics(config: &ScenarioConfig) -> Result<ArmDiagnostics> {
    let source = KernelSource {
        dist1: config.dist1,
        dist2: config.dist2,
        n1: config.n1,
        n2: config.n2,
        procedure: config.procedure,
    };
    decision_diagnostics(
        &source,
        config.replicates,
        config.master_seed,
        &format!("{}/diag", config.id),
    )
}

/// Estimates all four gaps of the independence relaxation from a P_theta
/// scenario and a Q scenario.
pub fn independence_diagnostics(
    theta: &ScenarioConfig,
    q: &ScenarioConfig,
) -> Result<IndependenceDiagnostics> {
    theta.validate()?;
    q.validate()?;
    let theta_diag = scenario_diagnostics(theta)?;
    let q_diag = scenario_diagnostics(q)?;
    let delta_max = match (&theta_diag.mc, &theta_diag.au, &q_diag.mc, &q_diag.au) {
        (Some(a), Some(b), Some(c), Some(d)) => Some(a.gap.max(b.gap).max(c.gap).max(d.gap)),
        _ => None,
    };
    Ok(IndependenceDiagnostics {
        theta: theta_diag,
        q: q_diag,
        delta_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::prob::Probability;

    fn small_grid() -> Vec<f64> {
        vec![0.0, 0.5, 1.0]
    }

    fn synthetic_pair() -> (BernoulliSource, BernoulliSource) {
        (
            BernoulliSource {
                p_ms: 0.05,
                p_mc: 0.92,
                p_au: 0.90,
            },
            BernoulliSource {
                p_ms: 0.85,
                p_mc: 0.59,
                p_au: 0.74,
            },
        )
    }

    #[test]
    fn grid_validation() {
        assert!(validate_lambda_grid("g", &[0.0, 0.5, 1.0]).is_ok());
        assert!(validate_lambda_grid("g", &[0.0]).is_err());
        assert!(validate_lambda_grid("g", &[0.0, 0.5, 0.5, 1.0]).is_err());
        assert!(validate_lambda_grid("g", &[0.1, 0.5, 1.0]).is_err());
        assert!(validate_lambda_grid("g", &[0.0, 0.5, 0.9]).is_err());
    }

    #[test]
    fn boundary_lambdas_use_single_arm() {
        let (theta, q) = synthetic_pair();
        let raw = sweep_decision_sources(&theta, &q, &small_grid(), 4000, 99, "bernoulli-bounds")
            .unwrap();
        let at_zero = raw[0].1;
        let at_one = raw[2].1;
        // 5 sigma bands around the configured rates.
        let band = |p: f64, n: f64| 5.0 * (p * (1.0 - p) / n).sqrt();
        assert!((at_one.mc.rate - 0.92).abs() < band(0.92, 4000.0));
        assert!((at_one.ms.rate - 0.05).abs() < band(0.05, 4000.0));
        assert!((at_zero.au.rate - 0.74).abs() < band(0.74, 4000.0));
        assert!((at_zero.ms.rate - 0.85).abs() < band(0.85, 4000.0));
    }

    #[test]
    fn synthetic_sweep_matches_analytic_curves() {
        let (theta, q) = synthetic_pair();
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let raw = sweep_decision_sources(&theta, &q, &grid, 5000, 7, "bernoulli-sweep").unwrap();
        let inputs = LemmaInputs {
            p_mc_theta: 0.92,
            p_au_theta: 0.90,
            p_mc_q: 0.59,
            p_au_q: 0.74,
            alpha_ms: 0.05,
            alpha_ms_star: 0.85,
        };
        for (lambda, rates) in raw {
            let expect = analytic_combined_power(&inputs, lambda);
            assert!(
                (rates.combined.rate - expect).abs() <= 4.0 * rates.combined.std_error.max(1e-3),
                "lambda={lambda}: combined {} vs analytic {expect}",
                rates.combined.rate
            );
        }
    }

    #[test]
    fn sweep_is_deterministic() {
        let (theta, q) = synthetic_pair();
        let a = sweep_decision_sources(&theta, &q, &small_grid(), 500, 3, "det").unwrap();
        let b = sweep_decision_sources(&theta, &q, &small_grid(), 500, 3, "det").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn assembled_sweep_carries_endpoint_model() {
        let (theta, q) = synthetic_pair();
        let grid: Vec<f64> = vec![0.0, 0.25, 0.5, 0.75, 1.0];
        let raw = sweep_decision_sources(&theta, &q, &grid, 8000, 41, "asm").unwrap();
        let sweep = assemble_sweep("asm", 8000, 41, raw);
        assert_eq!(sweep.points.len(), 5);
        let ls = sweep.lambda_star.expect("assumptions hold on estimates");
        // True crossing is 0.15/0.17 = 0.882; estimates stay nearby.
        assert!((ls - 0.882).abs() < 0.06, "lambda* = {ls}");
        assert!(sweep.gain.unwrap() > 0.0);
        // Analytic overlay interpolates the endpoints exactly.
        let p0 = &sweep.points[0];
        assert!((p0.analytic_mc - p0.mc.rate).abs() < 1e-15);
        let p4 = &sweep.points[4];
        assert!((p4.analytic_au - p4.au.rate).abs() < 1e-15);
    }

    #[test]
    fn independent_flags_show_no_gap() {
        let source = BernoulliSource {
            p_ms: 0.3,
            p_mc: 0.6,
            p_au: 0.5,
        };
        let diag = decision_diagnostics(&source, 20_000, 5, "indep").unwrap();
        let mc = diag.mc.unwrap();
        let au = diag.au.unwrap();
        assert!(
            mc.gap <= 3.0 * mc.std_error,
            "mc gap {} se {}",
            mc.gap,
            mc.std_error
        );
        assert!(
            au.gap <= 3.0 * au.std_error,
            "au gap {} se {}",
            au.gap,
            au.std_error
        );
    }

    #[test]
    fn perfectly_linked_flags_show_full_gap() {
        struct Linked;
        impl DecisionSource for Linked {
            fn decisions(
                &self,
                master_seed: u64,
                scope: &str,
                replicate: u64,
            ) -> Result<Decisions> {
                let mut stream = RngStream::derive(master_seed, scope, replicate, Lane::Aux);
                let ms = stream.next_bool(0.4);
                Ok(Decisions {
                    ms,
                    mc: ms,
                    au: stream.next_bool(0.5),
                })
            }
        }
        let diag = decision_diagnostics(&Linked, 5_000, 17, "linked").unwrap();
        assert_eq!(diag.mc.unwrap().gap, 1.0);
        assert!(diag.au.unwrap().gap < 0.1);
    }

    #[test]
    fn undetermined_gap_when_branch_starves() {
        let source = BernoulliSource {
            p_ms: 0.001,
            p_mc: 0.5,
            p_au: 0.5,
        };
        let diag = decision_diagnostics(&source, 2_000, 2, "starved").unwrap();
        assert!(diag.mc.is_none());
        assert!(diag.au.is_none());
        assert!(diag.ms_reject_replicates < 100);
    }

    #[test]
    fn real_kernel_scenario_diagnostics_report() {
        let config = ScenarioConfig {
            id: "diag-normal".to_string(),
            label: "normal".to_string(),
            hypothesis: crate::engine::Hypothesis::Null,
            dist1: DistributionSpec::Normal {
                mu: 1.0,
                sigma: 1.0,
            },
            dist2: DistributionSpec::Normal {
                mu: 1.0,
                sigma: 1.0,
            },
            n1: 20,
            n2: 30,
            replicates: 4000,
            master_seed: 12,
            procedure: ProcedureConfig::default(),
            permutation_b: 99,
        };
        let diag = scenario_diagnostics(&config).unwrap();
        // At alpha_ms = 0.05 and 4000 replicates, both branches are populated.
        assert!(diag.ms_reject_replicates >= 100);
        let mc = diag.mc.unwrap();
        assert!(mc.std_error > 0.0);
        assert!(mc.gap <= 1.0);
    }

    #[test]
    fn mixture_spec_validation() {
        let arm = MixtureArm {
            label: "normal".to_string(),
            dist1: DistributionSpec::Normal {
                mu: 1.0,
                sigma: 1.0,
            },
            dist2: DistributionSpec::Normal {
                mu: 2.0,
                sigma: 1.0,
            },
        };
        let mut spec = MixtureSpec {
            id: "m".to_string(),
            p_theta: arm.clone(),
            q: arm,
            n1: 20,
            n2: 30,
            lambda_grid: vec![0.0, 1.0],
            replicates: 10,
            master_seed: 1,
            procedure: ProcedureConfig::default(),
        };
        assert!(spec.validate().is_ok());
        spec.lambda_grid = vec![0.0, 0.4];
        assert!(spec.validate().is_err());
        spec.lambda_grid = vec![0.0, 1.0];
        spec.n1 = 2;
        assert!(spec.validate().is_err());
        spec.n1 = 3000;
        spec.n2 = 3000;
        assert!(spec.validate().is_err(), "pooled sample above the SW limit");
    }

    #[test]
    fn degenerate_arms_fail_the_sweep() {
        let flat = MixtureArm {
            label: "flat".to_string(),
            dist1: DistributionSpec::Normal {
                mu: 1.0,
                sigma: 1e-308,
            },
            dist2: DistributionSpec::Normal {
                mu: 1.0,
                sigma: 1e-308,
            },
        };
        let spec = MixtureSpec {
            id: "degen".to_string(),
            p_theta: flat.clone(),
            q: flat,
            n1: 5,
            n2: 5,
            lambda_grid: vec![0.0, 1.0],
            replicates: 40,
            master_seed: 4,
            procedure: ProcedureConfig::default(),
        };
        assert!(matches!(
            simulate_mixture(&spec),
            Err(Error::DegenerateThreshold { .. })
        ));
    }

    #[test]
    fn real_mixture_smoke() {
        let spec = MixtureSpec {
            id: "smoke".to_string(),
            p_theta: MixtureArm {
                label: "normal".to_string(),
                dist1: DistributionSpec::Normal {
                    mu: 1.0,
                    sigma: 1.0,
                },
                dist2: DistributionSpec::Normal {
                    mu: 2.0,
                    sigma: 1.0,
                },
            },
            q: MixtureArm {
                label: "t3".to_string(),
                dist1: DistributionSpec::ShiftedT { mu: 1.0, df: 3.0 },
                dist2: DistributionSpec::ShiftedT { mu: 2.0, df: 3.0 },
            },
            n1: 20,
            n2: 30,
            lambda_grid: vec![0.0, 0.5, 1.0],
            replicates: 800,
            master_seed: 2026,
            procedure: ProcedureConfig::default(),
        };
        let sweep = simulate_mixture(&spec).unwrap();
        assert_eq!(sweep.points.len(), 3);
        // Under the normal arm the MC test has high power at these settings.
        assert!(sweep.endpoint_inputs.p_mc_theta > 0.8);
        // The violating arm trips the MS test far more often.
        assert!(sweep.endpoint_inputs.alpha_ms_star > sweep.endpoint_inputs.alpha_ms);
        let _ = Probability::new(sweep.points[1].combined.rate).unwrap();
    }
}
