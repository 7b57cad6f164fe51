//! Result emission: CSV and JSON with full numeric precision, plus a text
//! table pairing null/alt scenarios into type 1 / type 2 error columns.

use std::fmt::Write as _;

use crate::engine::{Hypothesis, RateEstimate, ScenarioResult};
use crate::error::{Error, Result};
use crate::mixture::MixtureSweep;

/// Output format of [`emit_table`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
    Text,
}

impl OutputFormat {
    pub fn parse(text: &str) -> Result<Self> {
        match text {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "text" => Ok(OutputFormat::Text),
            other => Err(Error::domain(format!(
                "unknown format `{other}` (expected csv, json or text)"
            ))),
        }
    }
}

type RatePick = fn(&ScenarioResult) -> RateEstimate;

const PROCEDURES: [(&str, RatePick); 4] = [
    ("welch", |r| r.welch),
    ("wmw", |r| r.wmw),
    ("combined", |r| r.combined),
    ("permutation", |r| r.permutation),
];

/// Renders scenario results in the requested format.
pub fn emit_table(results: &[ScenarioResult], format: OutputFormat) -> Result<String> {
    if results.is_empty() {
        return Err(Error::domain("no results to emit".to_string()));
    }
    Ok(match format {
        OutputFormat::Csv => scenario_csv(results),
        OutputFormat::Json => scenario_json(results),
        OutputFormat::Text => scenario_text(results),
    })
}

/// CSV rows, one per (scenario, procedure), full f64 precision.
///
/// The conditional-rate columns are only defined for the combined procedure
/// and stay empty on the other rows.
pub fn scenario_csv(results: &[ScenarioResult]) -> String {
    let mut out = String::from(
        "scenario_id,procedure,hypothesis,rate,se,ms_rate,rate_given_pass,rate_given_reject,replicates,seed\n",
    );
    for r in results {
        for (name, pick) in PROCEDURES {
            let est = pick(r);
            let (ms, pass, reject) = if name == "combined" {
                (
                    r.ms_rejection.rate.to_string(),
                    r.combined_given_ms_pass
                        .map(|e| e.rate.to_string())
                        .unwrap_or_default(),
                    r.combined_given_ms_reject
                        .map(|e| e.rate.to_string())
                        .unwrap_or_default(),
                )
            } else {
                (String::new(), String::new(), String::new())
            };
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.scenario_id,
                name,
                r.hypothesis.as_str(),
                est.rate,
                est.std_error,
                ms,
                pass,
                reject,
                r.replicates_used,
                r.master_seed
            )
            .unwrap();
        }
    }
    out
}

/// Pretty-printed JSON of the result list.
pub fn scenario_json(results: &[ScenarioResult]) -> String {
    serde_json::to_string_pretty(results).expect("results serialize")
}

// ".0498"-style rate with 4 decimals.
fn rate4(v: f64) -> String {
    let s = format!("{v:.4}");
    match s.strip_prefix("0.") {
        Some(rest) => format!(".{rest}"),
        None => s,
    }
}

/// Text table pairing null/alt scenarios by label into type 1 / type 2 error
/// columns, procedures in the order Welch, WMW, Combined, Permutation.
pub fn scenario_text(results: &[ScenarioResult]) -> String {
    const DISPLAY: [&str; 4] = ["Welch's t", "WMW", "Combined", "Permutation"];
    let mut labels: Vec<&str> = Vec::new();
    for r in results {
        if !labels.contains(&r.label.as_str()) {
            labels.push(&r.label);
        }
    }
    let mut out = String::new();
    writeln!(
        out,
        "{:<12} | {:<12} | {:<18} | {:<18}",
        "Procedure", "Distribution", "Type 1 error prob.", "Type 2 error prob."
    )
    .unwrap();
    writeln!(out, "{}", "-".repeat(12 + 15 + 21 + 19)).unwrap();
    for label in labels {
        let null = results
            .iter()
            .find(|r| r.label == label && r.hypothesis == Hypothesis::Null);
        let alt = results
            .iter()
            .find(|r| r.label == label && r.hypothesis == Hypothesis::Alt);
        for (i, (_, pick)) in PROCEDURES.iter().enumerate() {
            let type1 = null
                .map(|r| rate4(pick(r).rate))
                .unwrap_or_else(|| "-".to_string());
            // Type 2 error probability: one minus the rejection rate under
            // the alternative.
            let type2 = alt
                .map(|r| rate4(1.0 - pick(r).rate))
                .unwrap_or_else(|| "-".to_string());
            writeln!(
                out,
                "{:<12} | {:<12} | {:<18} | {:<18}",
                DISPLAY[i], label, type1, type2
            )
            .unwrap();
        }
    }
    out
}

/// CSV of a lambda sweep: one row per (lambda, procedure).
pub fn mixture_csv(sweep: &MixtureSweep) -> String {
    let mut out = String::from("lambda,procedure,power,se,analytic_power\n");
    for p in &sweep.points {
        let rows: [(&str, RateEstimate, f64); 3] = [
            ("mc", p.mc, p.analytic_mc),
            ("au", p.au, p.analytic_au),
            ("combined", p.combined, p.analytic_combined),
        ];
        for (name, est, analytic) in rows {
            writeln!(
                out,
                "{},{},{},{},{}",
                p.lambda, name, est.rate, est.std_error, analytic
            )
            .unwrap();
        }
    }
    out
}

/// Pretty-printed JSON of a lambda sweep.
pub fn mixture_json(sweep: &MixtureSweep) -> String {
    serde_json::to_string_pretty(sweep).expect("sweep serializes")
}
