//! Data-generating distributions with exact moment-matched parameterizations.
//!
//! All samplers are inverse-CDF based or built from inverse-CDF normal draws,
//! so a given stream state always yields the same values:
//! - normal: quantile applied to one uniform (AS 241),
//! - exponential: `-mu * ln(u)`,
//! - shifted t: normal / sqrt(chi-square / df); the chi-square is an exact
//!   sum of squared normals for integer df and a Marsaglia-Tsang gamma draw
//!   otherwise,
//! - skew normal: the additive representation
//!   `xi + omega * (delta * |z0| + sqrt(1 - delta^2) * z1)`.

// Validation uses negated comparisons (`!(x > 0.0)`) so NaN fails closed.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;
use crate::special::ppnd16;

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;

/// A data-generating distribution with target expected value `mu`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DistributionSpec {
    Normal {
        mu: f64,
        sigma: f64,
    },
    /// Student-t with `df` degrees of freedom, shifted to mean `mu`.
    ShiftedT {
        mu: f64,
        df: f64,
    },
    Exponential {
        mu: f64,
    },
    /// Skew normal with shape `alpha`, location/scale solved so that the
    /// mean is `mu` and the variance is `target_var`.
    SkewNormal {
        mu: f64,
        alpha: f64,
        target_var: f64,
    },
}

impl DistributionSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            DistributionSpec::Normal { mu, sigma } => {
                require_finite("normal.mu", mu)?;
                if !(sigma > 0.0) {
                    return Err(Error::domain(format!(
                        "normal.sigma must be > 0, got {sigma}"
                    )));
                }
            }
            DistributionSpec::ShiftedT { mu, df } => {
                require_finite("t.mu", mu)?;
                if !(df > 2.0) {
                    return Err(Error::domain(format!(
                        "t.df must be > 2 so the variance exists, got {df}"
                    )));
                }
            }
            DistributionSpec::Exponential { mu } => {
                if !(mu > 0.0) {
                    return Err(Error::domain(format!(
                        "exponential.mu must be > 0, got {mu}"
                    )));
                }
            }
            DistributionSpec::SkewNormal {
                mu,
                alpha,
                target_var,
            } => {
                require_finite("skewnormal.mu", mu)?;
                require_finite("skewnormal.alpha", alpha)?;
                if !(target_var > 0.0) {
                    return Err(Error::domain(format!(
                        "skewnormal.var must be > 0, got {target_var}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Closed-form `(mean, variance)` of the distribution.
    pub fn moments(&self) -> (f64, f64) {
        match *self {
            DistributionSpec::Normal { mu, sigma } => (mu, sigma * sigma),
            DistributionSpec::ShiftedT { mu, df } => (mu, df / (df - 2.0)),
            DistributionSpec::Exponential { mu } => (mu, mu * mu),
            DistributionSpec::SkewNormal { mu, target_var, .. } => (mu, target_var),
        }
    }

    /// Family label used in reports ("normal", "t", ...).
    pub fn kind(&self) -> &'static str {
        match self {
            DistributionSpec::Normal { .. } => "normal",
            DistributionSpec::ShiftedT { .. } => "t",
            DistributionSpec::Exponential { .. } => "exponential",
            DistributionSpec::SkewNormal { .. } => "skewnormal",
        }
    }

    /// Target expected value.
    pub fn mean(&self) -> f64 {
        self.moments().0
    }

    /// Draws `n` independent values, deterministically in the stream state.
    pub fn sample(&self, n: usize, stream: &mut RngStream) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        match *self {
            DistributionSpec::Normal { mu, sigma } => {
                for _ in 0..n {
                    out.push(mu + sigma * standard_normal(stream));
                }
            }
            DistributionSpec::ShiftedT { mu, df } => {
                for _ in 0..n {
                    out.push(mu + student_t_draw(df, stream));
                }
            }
            DistributionSpec::Exponential { mu } => {
                for _ in 0..n {
                    out.push(-mu * stream.next_open01().ln());
                }
            }
            DistributionSpec::SkewNormal {
                mu,
                alpha,
                target_var,
            } => {
                // Parameterization is validated ahead of sampling.
                let params =
                    skew_normal_params(alpha, mu, target_var).expect("validated skew normal spec");
                for _ in 0..n {
                    out.push(params.draw(stream));
                }
            }
        }
        out
    }
}

fn require_finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!("{name} must be finite, got {v}")))
    }
}

/// Location/scale/shape triple of a skew normal distribution.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SkewNormalParams {
    pub xi: f64,
    pub omega: f64,
    pub alpha: f64,
}

impl SkewNormalParams {
    pub fn delta(&self) -> f64 {
        self.alpha / (1.0 + self.alpha * self.alpha).sqrt()
    }

    /// Mean implied by the parameters: `xi + omega * delta * sqrt(2/pi)`.
    pub fn mean(&self) -> f64 {
        self.xi + self.omega * self.delta() * SQRT_2_OVER_PI
    }

    /// Variance implied by the parameters: `omega^2 * (1 - 2 delta^2 / pi)`.
    pub fn variance(&self) -> f64 {
        let d = self.delta();
        self.omega * self.omega * (1.0 - 2.0 * d * d / std::f64::consts::PI)
    }

    fn draw(&self, stream: &mut RngStream) -> f64 {
        let d = self.delta();
        let z0 = standard_normal(stream);
        let z1 = standard_normal(stream);
        self.xi + self.omega * (d * z0.abs() + (1.0 - d * d).sqrt() * z1)
    }
}

/// Solves for the skew normal location and scale that hit `target_mean` and
/// `target_var` exactly, given the shape `alpha`.
pub fn skew_normal_params(
    alpha: f64,
    target_mean: f64,
    target_var: f64,
) -> Result<SkewNormalParams> {
    if !(target_var > 0.0) {
        return Err(Error::domain(format!(
            "skew normal target variance must be > 0, got {target_var}"
        )));
    }
    require_finite("alpha", alpha)?;
    require_finite("target_mean", target_mean)?;
    let delta = alpha / (1.0 + alpha * alpha).sqrt();
    let omega = (target_var / (1.0 - 2.0 * delta * delta / std::f64::consts::PI)).sqrt();
    let xi = target_mean - omega * delta * SQRT_2_OVER_PI;
    Ok(SkewNormalParams { xi, omega, alpha })
}

/// One standard normal draw by inverse CDF.
pub fn standard_normal(stream: &mut RngStream) -> f64 {
    ppnd16(stream.next_open01())
}

fn student_t_draw(df: f64, stream: &mut RngStream) -> f64 {
    let z = standard_normal(stream);
    z / (chi_square_draw(df, stream) / df).sqrt()
}

fn chi_square_draw(df: f64, stream: &mut RngStream) -> f64 {
    let rounded = df.round();
    if (df - rounded).abs() < 1e-9 && (1.0..=64.0).contains(&rounded) {
        // Exact representation with a fixed draw count.
        let k = rounded as usize;
        let mut acc = 0.0;
        for _ in 0..k {
            let z = standard_normal(stream);
            acc += z * z;
        }
        acc
    } else {
        2.0 * gamma_draw(0.5 * df, stream)
    }
}

// Marsaglia-Tsang squeeze for Gamma(shape, 1), shape >= 1. Validated specs
// guarantee shape = df/2 > 1.
fn gamma_draw(shape: f64, stream: &mut RngStream) -> f64 {
    debug_assert!(shape >= 1.0);
    let d = shape - 1.0 / 3.0;
    let c = 1.0 / (9.0 * d).sqrt();
    loop {
        let x = standard_normal(stream);
        let v = 1.0 + c * x;
        if v <= 0.0 {
            continue;
        }
        let v = v * v * v;
        let u = stream.next_open01();
        if u < 1.0 - 0.0331 * x.powi(4) {
            return d * v;
        }
        if u.ln() < 0.5 * x * x + d * (1.0 - v + v.ln()) {
            return d * v;
        }
    }
}
