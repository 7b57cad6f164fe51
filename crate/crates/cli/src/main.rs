//! combitest command line: scenario/mixture simulation runs, analytic lemma
//! reports, and convex combinations of stored results.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{SecondsFormat, Utc};
use clap::{Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use combitest::config::{parse_config, render_config, ConfigFile};
use combitest::engine::{convex_combination, simulate_scenario, ScenarioResult};
use combitest::error::Error as CoreError;
use combitest::lemma::verify_lemma;
use combitest::mixture::simulate_mixture;
use combitest::svg::{mixture_svg, power_curve_svg, CurveSeries};
use combitest::table::{
    emit_table, mixture_csv, mixture_json, scenario_csv, scenario_json, OutputFormat,
};

#[derive(Parser)]
#[command(
    name = "combitest",
    version,
    about = "Simulation laboratory for combined test procedures"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenario sections of a config and emit rate tables.
    Simulate {
        /// Config file with [scenario ...] sections.
        config: PathBuf,
        /// Output directory for CSV/JSON/text artifacts and the manifest.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Stdout format: csv, json or text.
        #[arg(long, default_value = "text")]
        format: String,
        /// Override the replicate count of every scenario.
        #[arg(long)]
        replicates: Option<u64>,
        /// Worker threads (default: COMBITEST_WORKERS or all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the mixture sections of a config: lambda power sweeps.
    Mixture {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Override the per-lambda replicate count.
        #[arg(long)]
        replicates: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Evaluate the analytic power identities for [lemma ...] sections.
    Lemma {
        config: PathBuf,
        #[arg(long, default_value = ".")]
        out: PathBuf,
    },
    /// Convex combination of stored scenario results.
    Combine {
        /// JSON results file produced by `simulate`.
        results: PathBuf,
        /// Comma-separated scenario weights, e.g.
        /// `normal-alt=0.5,t3-alt=0.25,skewnormal-alt=0.25`.
        weights: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

#[derive(Debug)]
enum CliError {
    Core(CoreError),
    Io(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    // 2 config, 3 numeric, 4 degenerate-data threshold, 1 anything else.
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(CoreError::Config { .. })
            | CliError::Core(CoreError::ConfigValue { .. }) => 2,
            CliError::Core(CoreError::Numeric(_)) => 3,
            CliError::Core(CoreError::DegenerateThreshold { .. }) => 4,
            _ => 1,
        }
    }

    fn io(context: &str, e: impl std::fmt::Display) -> Self {
        CliError::Io(format!("{context}: {e}"))
    }
}

#[derive(Serialize)]
struct RunManifest {
    tool_version: &'static str,
    config_path: String,
    /// SHA-256 of the canonicalized configuration document.
    config_digest: String,
    master_seeds: Vec<u64>,
    workers: usize,
    started_at: String,
    finished_at: String,
    outputs: Vec<String>,
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Simulate {
            config,
            out,
            format,
            replicates,
            workers,
        } => simulate_cmd(&config, &out, &format, replicates, workers),
        Command::Mixture {
            config,
            out,
            replicates,
            workers,
        } => mixture_cmd(&config, &out, replicates, workers),
        Command::Lemma { config, out } => lemma_cmd(&config, &out),
        Command::Combine {
            results,
            weights,
            out,
        } => combine_cmd(&results, &weights, out.as_deref()),
    }
}

fn load_config(path: &Path) -> Result<(ConfigFile, String), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::io(&format!("reading {}", path.display()), e))?;
    let file = parse_config(&text)?;
    let canonical = render_config(&file);
    let mut hasher = Sha256::new();
    hasher.update(canonical.as_bytes());
    let digest = hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect::<String>();
    Ok((file, digest))
}

fn worker_count(flag: Option<usize>) -> usize {
    flag.or_else(|| {
        std::env::var("COMBITEST_WORKERS")
            .ok()
            .and_then(|v| v.parse().ok())
    })
    .filter(|&w| w > 0)
    .unwrap_or_else(|| {
        std::thread::available_parallelism()
            .map(|n| n.get())
            .unwrap_or(1)
    })
}

fn in_pool<T: Send>(workers: usize, job: impl FnOnce() -> T + Send) -> Result<T, CliError> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::io("building thread pool", e))?;
    Ok(pool.install(job))
}

fn write_artifact(
    dir: &Path,
    name: &str,
    content: &str,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(&format!("creating {}", dir.display()), e))?;
    let path = dir.join(name);
    fs::write(&path, content)
        .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
    outputs.push(name.to_string());
    Ok(())
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "run".to_string())
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn write_manifest(
    dir: &Path,
    stem: &str,
    manifest: &RunManifest,
    outputs: &mut Vec<String>,
) -> Result<(), CliError> {
    let name = format!("{stem}-manifest.json");
    let body = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    write_artifact(dir, &name, &body, outputs)
}

fn simulate_cmd(
    config_path: &Path,
    out_dir: &Path,
    format: &str,
    replicate_override: Option<u64>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let format = OutputFormat::parse(format)?;
    let started_at = now();
    let (file, digest) = load_config(config_path)?;
    let mut scenarios: Vec<_> = file.scenarios().cloned().collect();
    if scenarios.is_empty() {
        return Err(CoreError::Config {
            line: 0,
            message: "no scenarios defined".to_string(),
        }
        .into());
    }
    if let Some(n) = replicate_override {
        for s in &mut scenarios {
            s.replicates = n;
        }
    }
    let workers = worker_count(workers);
    let results: Vec<ScenarioResult> = in_pool(workers, || {
        let mut results = Vec::with_capacity(scenarios.len());
        for s in &scenarios {
            eprintln!("running scenario {} ({} replicates)...", s.id, s.replicates);
            results.push(simulate_scenario(s));
        }
        results.into_iter().collect::<Result<_, CoreError>>()
    })??;

    let stem = stem(config_path);
    let mut outputs = Vec::new();
    write_artifact(
        out_dir,
        &format!("{stem}-results.csv"),
        &scenario_csv(&results),
        &mut outputs,
    )?;
    write_artifact(
        out_dir,
        &format!("{stem}-results.json"),
        &scenario_json(&results),
        &mut outputs,
    )?;
    write_artifact(
        out_dir,
        &format!("{stem}-table.txt"),
        &emit_table(&results, OutputFormat::Text)?,
        &mut outputs,
    )?;
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        config_path: config_path.display().to_string(),
        config_digest: digest,
        master_seeds: scenarios.iter().map(|s| s.master_seed).collect(),
        workers,
        started_at,
        finished_at: now(),
        outputs: outputs.clone(),
    };
    write_manifest(out_dir, &stem, &manifest, &mut outputs)?;
    print!("{}", emit_table(&results, format)?);
    Ok(())
}

fn mixture_cmd(
    config_path: &Path,
    out_dir: &Path,
    replicate_override: Option<u64>,
    workers: Option<usize>,
) -> Result<(), CliError> {
    let started_at = now();
    let (file, digest) = load_config(config_path)?;
    let sections: Vec<_> = file.mixtures().cloned().collect();
    if sections.is_empty() {
        return Err(CoreError::Config {
            line: 0,
            message: "no mixtures defined".to_string(),
        }
        .into());
    }
    let workers = worker_count(workers);
    let stem = stem(config_path);
    let mut outputs = Vec::new();
    let mut seeds = Vec::new();
    for section in &sections {
        let mut spec = file.resolve_mixture(section)?;
        if let Some(n) = replicate_override {
            spec.replicates = n;
        }
        seeds.push(spec.master_seed);
        eprintln!(
            "running mixture {} ({} lambdas x {} replicates)...",
            spec.id,
            spec.lambda_grid.len(),
            spec.replicates
        );
        let sweep = in_pool(workers, || simulate_mixture(&spec))??;
        write_artifact(
            out_dir,
            &format!("{stem}-{}-sweep.csv", spec.id),
            &mixture_csv(&sweep),
            &mut outputs,
        )?;
        write_artifact(
            out_dir,
            &format!("{stem}-{}-sweep.json", spec.id),
            &mixture_json(&sweep),
            &mut outputs,
        )?;
        write_artifact(
            out_dir,
            &format!("{stem}-{}-power.svg", spec.id),
            &mixture_svg(&sweep)?,
            &mut outputs,
        )?;
        match (sweep.lambda_star, sweep.gain) {
            (Some(ls), Some(gain)) => println!(
                "{}: lambda* = {ls:.4}, predicted combined-power gain at lambda* = {gain:.4}",
                spec.id
            ),
            _ => println!(
                "{}: endpoint estimates violate the rate-model assumptions; no crossing point",
                spec.id
            ),
        }
        for p in &sweep.points {
            println!(
                "  lambda {:.3}: mc {:.4}  au {:.4}  combined {:.4}",
                p.lambda, p.mc.rate, p.au.rate, p.combined.rate
            );
        }
    }
    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION"),
        config_path: config_path.display().to_string(),
        config_digest: digest,
        master_seeds: seeds,
        workers,
        started_at,
        finished_at: now(),
        outputs: outputs.clone(),
    };
    write_manifest(out_dir, &stem, &manifest, &mut outputs)?;
    Ok(())
}

fn lemma_cmd(config_path: &Path, out_dir: &Path) -> Result<(), CliError> {
    let (file, _) = load_config(config_path)?;
    let sections: Vec<_> = file.lemmas().cloned().collect();
    if sections.is_empty() {
        return Err(CoreError::Config {
            line: 0,
            message: "no lemma sections defined".to_string(),
        }
        .into());
    }
    let stem = stem(config_path);
    let mut outputs = Vec::new();
    for section in &sections {
        let report = verify_lemma(&section.inputs, &section.lambda_grid);
        println!("[lemma {}]", section.id);
        for check in &report.checks {
            println!(
                "  ({}) {}: {}",
                check.assumption,
                check.description,
                if check.holds { "holds" } else { "FAILS" }
            );
        }
        match (report.lambda_star, report.gain) {
            (Some(ls), Some(gain)) => {
                println!("  lambda*           = {ls:.6}");
                println!("  gain at lambda*   = {gain:.6}");
                if let Some((lo, hi)) = report.superior_interval {
                    println!("  combined beats both main tests for lambda in ({lo:.6}, {hi:.6})");
                }
                if let Some(resid) = report.identity_residual {
                    println!("  identity residual = {resid:.2e}");
                }
            }
            _ => println!("  assumptions fail; no crossing point or gain"),
        }
        type Point = combitest::lemma::LemmaCurvePoint;
        type PointPick = fn(&Point) -> f64;
        let picks: [(&str, PointPick); 3] = [
            ("MC", |p| p.mc),
            ("AU", |p| p.au),
            ("Combined", |p| p.combined),
        ];
        let series: Vec<CurveSeries> = picks
            .into_iter()
            .map(|(label, pick)| CurveSeries {
                label: label.to_string(),
                points: report.curve.iter().map(|p| (p.lambda, pick(p))).collect(),
                analytic: None,
            })
            .collect();
        let svg = power_curve_svg(&series, &format!("Analytic power ({})", section.id))?;
        write_artifact(
            out_dir,
            &format!("{stem}-{}-curves.svg", section.id),
            &svg,
            &mut outputs,
        )?;
        write_artifact(
            out_dir,
            &format!("{stem}-{}-report.json", section.id),
            &serde_json::to_string_pretty(&report).expect("report serializes"),
            &mut outputs,
        )?;
    }
    Ok(())
}

fn combine_cmd(results_path: &Path, weights: &str, out: Option<&Path>) -> Result<(), CliError> {
    let text = fs::read_to_string(results_path)
        .map_err(|e| CliError::io(&format!("reading {}", results_path.display()), e))?;
    let results: Vec<ScenarioResult> = serde_json::from_str(&text)
        .map_err(|e| CliError::io(&format!("parsing {}", results_path.display()), e))?;
    let mut parts: Vec<(&ScenarioResult, f64)> = Vec::new();
    for item in weights.split(',') {
        let item = item.trim();
        if item.is_empty() {
            continue;
        }
        let (id, w) = item.split_once('=').ok_or_else(|| CoreError::ConfigValue {
            path: "weights".to_string(),
            message: format!("expected `scenario-id=weight`, got `{item}`"),
        })?;
        let weight: f64 = w.trim().parse().map_err(|_| CoreError::ConfigValue {
            path: format!("weights: {id}"),
            message: format!("expected a number, got `{w}`"),
        })?;
        let result = results
            .iter()
            .find(|r| r.scenario_id == id.trim())
            .ok_or_else(|| CoreError::ConfigValue {
                path: format!("weights: {id}"),
                message: "no such scenario in the results file".to_string(),
            })?;
        parts.push((result, weight));
    }
    // Weight violations are user-input errors, not numeric failures.
    let mix = convex_combination(&parts).map_err(|e| CoreError::ConfigValue {
        path: "weights".to_string(),
        message: e.to_string(),
    })?;
    println!("procedure,rate,se");
    println!("welch,{},{}", mix.welch.rate, mix.welch.std_error);
    println!("wmw,{},{}", mix.wmw.rate, mix.wmw.std_error);
    println!("combined,{},{}", mix.combined.rate, mix.combined.std_error);
    println!(
        "permutation,{},{}",
        mix.permutation.rate, mix.permutation.std_error
    );
    if let Some(path) = out {
        let body = serde_json::to_string_pretty(&mix).expect("combination serializes");
        fs::write(path, body)
            .map_err(|e| CliError::io(&format!("writing {}", path.display()), e))?;
    }
    Ok(())
}
