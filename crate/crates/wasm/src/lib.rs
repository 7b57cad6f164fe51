//! Browser bindings for the combitest laboratory.
//!
//! Three operations back the demo page, all speaking JSON strings:
//! - [`lemma_report`]: analytic power curves, crossing point and gain for a
//!   six-rate model, plus a rendered SVG chart;
//! - [`mixture_sweep`]: an in-browser Monte Carlo lambda sweep with real
//!   test kernels (sequential, so keep replicate counts moderate);
//! - [`single_run`]: one drawn dataset with all four test outcomes and the
//!   branch the combined procedure takes.
//!
//! Build with `cargo build --target wasm32-unknown-unknown --release -p
//! combitest-wasm` followed by `wasm-bindgen --target web`.

use serde::{Deserialize, Serialize};
use wasm_bindgen::prelude::*;

use combitest::combined::{run_combined, ProcedureConfig};
use combitest::dist::DistributionSpec;
use combitest::kernels::{permutation_mean_test, TestOutcome, TwoSampleData};
use combitest::lemma::{verify_lemma, LemmaInputs, LemmaReport};
use combitest::mixture::{simulate_mixture, MixtureArm, MixtureSpec, MixtureSweep};
use combitest::rng::{Lane, RngStream};
use combitest::svg::{mixture_svg, power_curve_svg, CurveSeries};
use combitest::table::mixture_csv;

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

#[derive(Deserialize)]
struct LemmaRequest {
    inputs: LemmaInputs,
    /// Grid step for the analytic curves, default 0.05.
    #[serde(default)]
    grid_step: Option<f64>,
}

#[derive(Serialize)]
struct LemmaResponse {
    report: LemmaReport,
    svg: String,
}

/// Analytic report for a six-rate model:
/// `{"inputs": {"p_mc_theta": .92, ...}, "grid_step": 0.05}`.
#[wasm_bindgen]
pub fn lemma_report(request_json: &str) -> Result<String, JsError> {
    lemma_report_impl(request_json).map_err(|e| JsError::new(&e))
}

fn lemma_report_impl(request_json: &str) -> Result<String, String> {
    let request: LemmaRequest = serde_json::from_str(request_json).map_err(err)?;
    let step = request.grid_step.unwrap_or(0.05);
    if !(0.001..=0.5).contains(&step) {
        return Err("grid_step must lie in [0.001, 0.5]".to_string());
    }
    let count = (1.0 / step).round() as usize;
    let grid: Vec<f64> = (0..=count)
        .map(|i| (i as f64 / count as f64).min(1.0))
        .collect();
    let report = verify_lemma(&request.inputs, &grid);
    let series: Vec<CurveSeries> = [("MC", 0usize), ("AU", 1), ("Combined", 2)]
        .into_iter()
        .map(|(label, which)| CurveSeries {
            label: label.to_string(),
            points: report
                .curve
                .iter()
                .map(|p| (p.lambda, [p.mc, p.au, p.combined][which]))
                .collect(),
            analytic: None,
        })
        .collect();
    let svg = power_curve_svg(&series, "Analytic power across lambda").map_err(err)?;
    serde_json::to_string(&LemmaResponse { report, svg }).map_err(err)
}

#[derive(Deserialize)]
struct MixtureRequest {
    p_theta_dist1: DistributionSpec,
    p_theta_dist2: DistributionSpec,
    q_dist1: DistributionSpec,
    q_dist2: DistributionSpec,
    n1: usize,
    n2: usize,
    lambda_points: usize,
    replicates: u64,
    seed: u64,
}

#[derive(Serialize)]
struct MixtureResponse {
    sweep: MixtureSweep,
    csv: String,
    svg: String,
}

/// Runs a lambda sweep with the real Shapiro-Wilk/Welch/WMW kernels.
#[wasm_bindgen]
pub fn mixture_sweep(request_json: &str) -> Result<String, JsError> {
    mixture_sweep_impl(request_json).map_err(|e| JsError::new(&e))
}

fn mixture_sweep_impl(request_json: &str) -> Result<String, String> {
    let request: MixtureRequest = serde_json::from_str(request_json).map_err(err)?;
    if request.lambda_points < 2 || request.lambda_points > 51 {
        return Err("lambda_points must lie in [2, 51]".to_string());
    }
    if request.replicates > 50_000 {
        return Err("replicates capped at 50000 in the browser".to_string());
    }
    let k = request.lambda_points - 1;
    let grid: Vec<f64> = (0..=k).map(|i| i as f64 / k as f64).collect();
    let spec = MixtureSpec {
        id: "browser".to_string(),
        p_theta: MixtureArm {
            label: "p_theta".to_string(),
            dist1: request.p_theta_dist1,
            dist2: request.p_theta_dist2,
        },
        q: MixtureArm {
            label: "q".to_string(),
            dist1: request.q_dist1,
            dist2: request.q_dist2,
        },
        n1: request.n1,
        n2: request.n2,
        lambda_grid: grid,
        replicates: request.replicates,
        master_seed: request.seed,
        procedure: ProcedureConfig::default(),
    };
    let sweep = simulate_mixture(&spec).map_err(err)?;
    let response = MixtureResponse {
        csv: mixture_csv(&sweep),
        svg: mixture_svg(&sweep).map_err(err)?,
        sweep,
    };
    serde_json::to_string(&response).map_err(err)
}

#[derive(Deserialize)]
struct SingleRunRequest {
    dist1: DistributionSpec,
    dist2: DistributionSpec,
    n1: usize,
    n2: usize,
    seed: u64,
    replicate: u64,
}

#[derive(Serialize)]
struct SingleRunResponse {
    x: Vec<f64>,
    y: Vec<f64>,
    ms: TestOutcome,
    branch: &'static str,
    main: TestOutcome,
    welch: TestOutcome,
    wmw: TestOutcome,
    permutation: TestOutcome,
}

/// Draws one dataset and shows every kernel's decision plus the branch the
/// combined procedure takes.
#[wasm_bindgen]
pub fn single_run(request_json: &str) -> Result<String, JsError> {
    single_run_impl(request_json).map_err(|e| JsError::new(&e))
}

fn single_run_impl(request_json: &str) -> Result<String, String> {
    let request: SingleRunRequest = serde_json::from_str(request_json).map_err(err)?;
    if request.n1 < 3 || request.n2 < 3 || request.n1 + request.n2 > 5000 {
        return Err("group sizes must be at least 3 and sum to at most 5000".to_string());
    }
    request.dist1.validate().map_err(err)?;
    request.dist2.validate().map_err(err)?;
    let mut stream = RngStream::derive(
        request.seed,
        "browser-single",
        request.replicate,
        Lane::Data,
    );
    let x = request.dist1.sample(request.n1, &mut stream);
    let y = request.dist2.sample(request.n2, &mut stream);
    let data = TwoSampleData::new(x.clone(), y.clone()).map_err(err)?;
    let config = ProcedureConfig::default();
    let combined = run_combined(&data, &config).map_err(err)?;
    let welch = combitest::kernels::welch_t_test(&data, config.alpha).map_err(err)?;
    let wmw = combitest::kernels::wmw_test(&data, config.alpha);
    let mut perm_stream = RngStream::derive(
        request.seed,
        "browser-single",
        request.replicate,
        Lane::Permutation,
    );
    let permutation = permutation_mean_test(&data, config.alpha, 999, &mut perm_stream);
    let response = SingleRunResponse {
        x,
        y,
        ms: combined.ms,
        branch: match combined.branch {
            combitest::combined::Branch::Mc => "mc",
            combitest::combined::Branch::Au => "au",
        },
        main: combined.main,
        welch,
        wmw,
        permutation,
    };
    serde_json::to_string(&response).map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lemma_report_round_trips() {
        let request = r#"{
            "inputs": {
                "p_mc_theta": 0.92, "p_au_theta": 0.90,
                "p_mc_q": 0.59, "p_au_q": 0.74,
                "alpha_ms": 0.05, "alpha_ms_star": 0.85
            },
            "grid_step": 0.1
        }"#;
        let out = lemma_report_impl(request).unwrap();
        let value: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(value["svg"].as_str().unwrap().starts_with("<svg"));
        let ls = value["report"]["lambda_star"].as_f64().unwrap();
        assert!((ls - 0.882_352_941).abs() < 1e-6);
        assert_eq!(value["report"]["curve"].as_array().unwrap().len(), 11);
    }

    #[test]
    fn lemma_report_rejects_bad_json() {
        assert!(lemma_report_impl("{").is_err());
        assert!(lemma_report_impl(r#"{"inputs": {"p_mc_theta": 2.0}}"#).is_err());
    }

    #[test]
    fn mixture_sweep_runs_small() {
        let request = r#"{
            "p_theta_dist1": {"kind": "normal", "mu": 1.0, "sigma": 1.0},
            "p_theta_dist2": {"kind": "normal", "mu": 2.0, "sigma": 1.0},
            "q_dist1": {"kind": "shifted_t", "mu": 1.0, "df": 3.0},
            "q_dist2": {"kind": "shifted_t", "mu": 2.0, "df": 3.0},
            "n1": 12, "n2": 12,
            "lambda_points": 3,
            "replicates": 300,
            "seed": 9
        }"#;
        let out = mixture_sweep_impl(request).unwrap();
        let value: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert!(value["csv"]
            .as_str()
            .unwrap()
            .starts_with("lambda,procedure,power,se,analytic_power"));
        assert_eq!(value["sweep"]["points"].as_array().unwrap().len(), 3);
        assert!(value["svg"].as_str().unwrap().contains("polyline"));
    }

    #[test]
    fn mixture_sweep_caps_replicates() {
        let request = r#"{
            "p_theta_dist1": {"kind": "normal", "mu": 1.0, "sigma": 1.0},
            "p_theta_dist2": {"kind": "normal", "mu": 2.0, "sigma": 1.0},
            "q_dist1": {"kind": "shifted_t", "mu": 1.0, "df": 3.0},
            "q_dist2": {"kind": "shifted_t", "mu": 2.0, "df": 3.0},
            "n1": 12, "n2": 12,
            "lambda_points": 3,
            "replicates": 100000,
            "seed": 9
        }"#;
        assert!(mixture_sweep_impl(request).is_err());
    }

    #[test]
    fn single_run_reports_branch_and_outcomes() {
        let request = r#"{
            "dist1": {"kind": "exponential", "mu": 1.0},
            "dist2": {"kind": "exponential", "mu": 2.0},
            "n1": 20, "n2": 30,
            "seed": 5, "replicate": 0
        }"#;
        let out = single_run_impl(request).unwrap();
        let value: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(value["x"].as_array().unwrap().len(), 20);
        let branch = value["branch"].as_str().unwrap();
        assert!(branch == "mc" || branch == "au");
        // The reported main outcome matches the branch's kernel.
        let main_method = value["main"]["method"].as_str().unwrap();
        match branch {
            "mc" => assert_eq!(main_method, "welch_t"),
            _ => assert_eq!(main_method, "wmw"),
        }
        // Same request, same dataset.
        assert_eq!(out, single_run_impl(request).unwrap());
    }
}
