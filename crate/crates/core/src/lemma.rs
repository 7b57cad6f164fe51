//! Analytic power identities for the two-distribution mixture model.
//!
//! Datasets come from an assumption-fulfilling distribution P_theta with
//! probability lambda and from a violating distribution Q otherwise. Given
//! the six rejection rates below, the power of every procedure is linear in
//! lambda; the MC and AU lines cross at `lambda_star`, and when the main
//! decisions are independent of the MS decision the combined procedure beats
//! both lines there by exactly `lemma_gain`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six rejection rates driving the mixture power model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaInputs {
    /// MC main-test power under P_theta.
    pub p_mc_theta: f64,
    /// AU main-test power under P_theta.
    pub p_au_theta: f64,
    /// MC main-test power under Q.
    pub p_mc_q: f64,
    /// AU main-test power under Q.
    pub p_au_q: f64,
    /// MS rejection rate under P_theta.
    pub alpha_ms: f64,
    /// MS rejection rate under Q.
    pub alpha_ms_star: f64,
}

impl LemmaInputs {
    /// MC power advantage under P_theta.
    pub fn delta_theta(&self) -> f64 {
        self.p_mc_theta - self.p_au_theta
    }

    /// AU power advantage under Q.
    pub fn delta_q(&self) -> f64 {
        self.p_au_q - self.p_mc_q
    }

    pub fn validate_rates(&self) -> Result<()> {
        let rates = [
            ("p_mc_theta", self.p_mc_theta),
            ("p_au_theta", self.p_au_theta),
            ("p_mc_q", self.p_mc_q),
            ("p_au_q", self.p_au_q),
            ("alpha_ms", self.alpha_ms),
            ("alpha_ms_star", self.alpha_ms_star),
        ];
        for (name, v) in rates {
            if !(0.0..=1.0).contains(&v) || !v.is_finite() {
                return Err(Error::domain(format!("{name} must lie in [0, 1], got {v}")));
            }
        }
        Ok(())
    }

    /// Checks assumptions (I) MC better under P_theta, (II) AU better under
    /// Q, (III) the MS test rejects Q more often than P_theta.
    pub fn check_assumptions(&self) -> Vec<AssumptionCheck> {
        vec![
            AssumptionCheck {
                assumption: "I",
                description: format!(
                    "MC power exceeds AU power under P_theta (delta_theta = {:.6})",
                    self.delta_theta()
                ),
                holds: self.delta_theta() > 0.0,
            },
            AssumptionCheck {
                assumption: "II",
                description: format!(
                    "AU power exceeds MC power under Q (delta_q = {:.6})",
                    self.delta_q()
                ),
                holds: self.delta_q() > 0.0,
            },
            AssumptionCheck {
                assumption: "III",
                description: format!(
                    "MS test rejects Q more often than P_theta ({:.6} > {:.6})",
                    self.alpha_ms_star, self.alpha_ms
                ),
                holds: self.alpha_ms_star > self.alpha_ms,
            },
        ]
    }

    fn require(&self, assumptions: &[&'static str]) -> Result<()> {
        self.validate_rates()?;
        for check in self.check_assumptions() {
            if assumptions.contains(&check.assumption) && !check.holds {
                return Err(Error::AssumptionViolated {
                    assumption: check.assumption,
                    detail: check.description,
                });
            }
        }
        Ok(())
    }
}

/// Outcome of checking one of the assumptions (I)-(III).
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AssumptionCheck {
    pub assumption: &'static str,
    pub description: String,
    pub holds: bool,
}

/// Mixing weight at which the MC and AU power lines cross:
/// `delta_q / (delta_theta + delta_q)`. Requires assumptions (I) and (II).
pub fn lambda_star(inputs: &LemmaInputs) -> Result<f64> {
    inputs.require(&["I", "II"])?;
    Ok(inputs.delta_q() / (inputs.delta_theta() + inputs.delta_q()))
}

/// Power excess of the combined procedure over both main tests at the
/// crossing point, under MS/main independence:
/// `(delta_theta * delta_q / (delta_theta + delta_q)) * (alpha_ms_star - alpha_ms)`.
/// Requires assumptions (I)-(III).
pub fn lemma_gain(inputs: &LemmaInputs) -> Result<f64> {
    inputs.require(&["I", "II", "III"])?;
    let dt = inputs.delta_theta();
    let dq = inputs.delta_q();
    Ok(dt * dq / (dt + dq) * (inputs.alpha_ms_star - inputs.alpha_ms))
}

/// Power of the unconditional MC test under the lambda-mixture.
pub fn analytic_mc_power(inputs: &LemmaInputs, lambda: f64) -> f64 {
    lambda * inputs.p_mc_theta + (1.0 - lambda) * inputs.p_mc_q
}

/// Power of the unconditional AU test under the lambda-mixture.
pub fn analytic_au_power(inputs: &LemmaInputs, lambda: f64) -> f64 {
    lambda * inputs.p_au_theta + (1.0 - lambda) * inputs.p_au_q
}

/// Power of the combined procedure under the lambda-mixture, assuming the
/// main decisions are independent of the MS decision within each arm.
pub fn analytic_combined_power(inputs: &LemmaInputs, lambda: f64) -> f64 {
    let theta_arm =
        inputs.alpha_ms * inputs.p_au_theta + (1.0 - inputs.alpha_ms) * inputs.p_mc_theta;
    let q_arm = inputs.alpha_ms_star * inputs.p_au_q + (1.0 - inputs.alpha_ms_star) * inputs.p_mc_q;
    lambda * theta_arm + (1.0 - lambda) * q_arm
}

/// One grid point of the analytic power curves.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaCurvePoint {
    pub lambda: f64,
    pub mc: f64,
    pub au: f64,
    pub combined: f64,
}

/// Report of the full analytic verification.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LemmaReport {
    pub inputs: LemmaInputs,
    pub checks: Vec<AssumptionCheck>,
    pub assumptions_hold: bool,
    pub lambda_star: Option<f64>,
    pub gain: Option<f64>,
    /// Analytic curves on the requested grid.
    pub curve: Vec<LemmaCurvePoint>,
    /// Closed interval of lambda values where the combined curve strictly
    /// exceeds both main-test curves.
    pub superior_interval: Option<(f64, f64)>,
    /// `combined(lambda_star) - max(mc, au)(lambda_star) - gain`; zero up to
    /// rounding when the assumptions hold.
    pub identity_residual: Option<f64>,
}

/// Checks assumptions (I)-(III), computes the crossing point, the gain, and
/// the analytic curves on `grid`; never fails, violations are reported.
pub fn verify_lemma(inputs: &LemmaInputs, grid: &[f64]) -> LemmaReport {
    let checks = inputs.check_assumptions();
    let assumptions_hold = inputs.validate_rates().is_ok() && checks.iter().all(|c| c.holds);
    let curve = grid
        .iter()
        .map(|&lambda| LemmaCurvePoint {
            lambda,
            mc: analytic_mc_power(inputs, lambda),
            au: analytic_au_power(inputs, lambda),
            combined: analytic_combined_power(inputs, lambda),
        })
        .collect();
    let (ls, gain, superior_interval, identity_residual) = if assumptions_hold {
        let ls = lambda_star(inputs).expect("assumptions checked");
        let gain = lemma_gain(inputs).expect("assumptions checked");
        let at_star = analytic_combined_power(inputs, ls);
        let main_max = analytic_mc_power(inputs, ls).max(analytic_au_power(inputs, ls));
        (
            Some(ls),
            Some(gain),
            superior_interval(inputs),
            Some(at_star - main_max - gain),
        )
    } else {
        (None, None, None, None)
    };
    LemmaReport {
        inputs: *inputs,
        checks,
        assumptions_hold,
        lambda_star: ls,
        gain,
        curve,
        superior_interval,
        identity_residual,
    }
}

// Interval where the combined line exceeds both main lines. All three curves
// are linear in lambda, so the interval bounds are the roots of two linear
// functions clipped to [0, 1].
fn superior_interval(inputs: &LemmaInputs) -> Option<(f64, f64)> {
    let over_mc =
        |lambda: f64| analytic_combined_power(inputs, lambda) - analytic_mc_power(inputs, lambda);
    let over_au =
        |lambda: f64| analytic_combined_power(inputs, lambda) - analytic_au_power(inputs, lambda);
    let (lo_mc, hi_mc) = positive_span(over_mc(0.0), over_mc(1.0))?;
    let (lo_au, hi_au) = positive_span(over_au(0.0), over_au(1.0))?;
    let lo = lo_mc.max(lo_au);
    let hi = hi_mc.min(hi_au);
    (lo < hi).then_some((lo, hi))
}

// Subinterval of [0, 1] where the line through (0, f0) and (1, f1) is > 0.
fn positive_span(f0: f64, f1: f64) -> Option<(f64, f64)> {
    if f0 > 0.0 && f1 > 0.0 {
        Some((0.0, 1.0))
    } else if f0 > 0.0 {
        Some((0.0, (f0 / (f0 - f1)).min(1.0)))
    } else if f1 > 0.0 {
        Some(((-f0 / (f1 - f0)).max(0.0), 1.0))
    } else {
        None
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table_inputs() -> LemmaInputs {
        // Powers implied by the published two-sample study: normal arm for
        // P_theta, t3 arm for Q, with a measured-scale MS separation.
        LemmaInputs {
            p_mc_theta: 0.9215,
            p_au_theta: 0.9076,
            p_mc_q: 0.5873,
            p_au_q: 0.7415,
            alpha_ms: 0.05,
            alpha_ms_star: 0.93,
        }
    }

    #[test]
    fn lambda_star_symmetric_and_arithmetic_cases() {
        let sym = LemmaInputs {
            p_mc_theta: 0.8,
            p_au_theta: 0.6,
            p_mc_q: 0.6,
            p_au_q: 0.8,
            alpha_ms: 0.05,
            alpha_ms_star: 0.9,
        };
        assert_eq!(lambda_star(&sym).unwrap(), 0.5);

        let skewed = LemmaInputs {
            p_mc_theta: 0.9,
            p_au_theta: 0.7, // delta_theta = 0.2
            p_mc_q: 0.5,
            p_au_q: 0.6, // delta_q = 0.1
            alpha_ms: 0.05,
            alpha_ms_star: 0.9,
        };
        assert!((lambda_star(&skewed).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn lambda_star_from_published_rates() {
        // delta_theta = .0139, delta_q = .1542.
        let ls = lambda_star(&table_inputs()).unwrap();
        assert!((ls - 0.917_311).abs() < 1e-6, "lambda* = {ls}");
    }

    #[test]
    fn assumption_violations_are_named() {
        let mut bad = table_inputs();
        bad.p_mc_theta = 0.5; // delta_theta < 0
        match lambda_star(&bad) {
            Err(Error::AssumptionViolated { assumption, .. }) => assert_eq!(assumption, "I"),
            other => panic!("expected assumption violation, got {other:?}"),
        }
        let mut bad = table_inputs();
        bad.alpha_ms_star = 0.05; // (III) fails for the gain only
        assert!(lambda_star(&bad).is_ok());
        match lemma_gain(&bad) {
            Err(Error::AssumptionViolated { assumption, .. }) => assert_eq!(assumption, "III"),
            other => panic!("expected assumption violation, got {other:?}"),
        }
    }

    #[test]
    fn gain_closed_forms() {
        let inputs = LemmaInputs {
            p_mc_theta: 0.9,
            p_au_theta: 0.7, // delta_theta = 0.2
            p_mc_q: 0.55,
            p_au_q: 0.75, // delta_q = 0.2
            alpha_ms: 0.05,
            alpha_ms_star: 0.9,
        };
        // (0.04 / 0.4) * 0.85 = 0.085
        assert!((lemma_gain(&inputs).unwrap() - 0.085).abs() < 1e-14);
        assert!((lambda_star(&inputs).unwrap() - 0.5).abs() < 1e-14);
        let combined = analytic_combined_power(&inputs, 0.5);
        let mc = analytic_mc_power(&inputs, 0.5);
        let au = analytic_au_power(&inputs, 0.5);
        assert!((combined - mc.max(au) - 0.085).abs() < 1e-14);

        // A useless MS test gives no gain.
        let mut useless = inputs;
        useless.alpha_ms_star = 0.0500001;
        useless.alpha_ms = 0.05;
        assert!(lemma_gain(&useless).unwrap() < 1e-7);

        // Vanishing MC advantage kills the gain.
        let mut thin = inputs;
        thin.p_mc_theta = 0.700_000_1;
        assert!(lemma_gain(&thin).unwrap() < 1e-6);
    }

    #[test]
    fn analytic_power_boundaries() {
        let inputs = table_inputs();
        let mut never_rejects = inputs;
        never_rejects.alpha_ms = 0.0;
        assert_eq!(
            analytic_combined_power(&never_rejects, 1.0),
            never_rejects.p_mc_theta
        );
        let mut always_rejects = inputs;
        always_rejects.alpha_ms_star = 1.0;
        assert_eq!(
            analytic_combined_power(&always_rejects, 0.0),
            always_rejects.p_au_q
        );
    }

    #[test]
    fn verify_lemma_report_on_good_inputs() {
        let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
        let report = verify_lemma(&table_inputs(), &grid);
        assert!(report.assumptions_hold);
        let ls = report.lambda_star.unwrap();
        let (lo, hi) = report.superior_interval.unwrap();
        assert!(lo < ls && ls < hi, "{ls} not inside ({lo}, {hi})");
        assert!(report.identity_residual.unwrap().abs() < 1e-12);
        assert_eq!(report.curve.len(), 11);
        // The curves cross at lambda*.
        let diff = analytic_mc_power(&table_inputs(), ls) - analytic_au_power(&table_inputs(), ls);
        assert!(diff.abs() < 1e-12);
    }

    #[test]
    fn verify_lemma_flags_failures() {
        let mut bad = table_inputs();
        bad.p_au_q = 0.5; // delta_q < 0
        let report = verify_lemma(&bad, &[0.0, 0.5, 1.0]);
        assert!(!report.assumptions_hold);
        assert!(report.lambda_star.is_none());
        let failed: Vec<_> = report
            .checks
            .iter()
            .filter(|c| !c.holds)
            .map(|c| c.assumption)
            .collect();
        assert_eq!(failed, vec!["II"]);
    }

    #[test]
    fn superior_interval_is_tight() {
        let inputs = table_inputs();
        let report = verify_lemma(&inputs, &[0.0, 1.0]);
        let (lo, hi) = report.superior_interval.unwrap();
        let eps = 1e-9;
        for lambda in [lo + eps, hi - eps] {
            let c = analytic_combined_power(&inputs, lambda);
            assert!(c > analytic_mc_power(&inputs, lambda));
            assert!(c > analytic_au_power(&inputs, lambda));
        }
        for lambda in [lo - eps, hi + eps] {
            if (0.0..=1.0).contains(&lambda) {
                let c = analytic_combined_power(&inputs, lambda);
                let best =
                    analytic_mc_power(&inputs, lambda).max(analytic_au_power(&inputs, lambda));
                assert!(c <= best + 1e-12);
            }
        }
    }
}
