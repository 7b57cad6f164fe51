//! Sectioned key = value configuration files.
//!
//! ```text
//! # Two-sample scenario
//! [scenario normal-null]
//! dist1 = normal(mu = 1, sigma = 1)
//! dist2 = normal(mu = 1, sigma = 1)
//! n1 = 20
//! n2 = 30
//! replicates = 20000
//! seed = 20260810
//!
//! [mixture fig1]
//! p_theta = normal-alt        # references a [scenario] in the same file
//! q = t3-alt
//! lambda_grid = 0:0.1:1       # or an explicit comma list
//! replicates = 20000
//! seed = 7
//!
//! [lemma example]
//! p_mc_theta = 0.92
//! ...
//! ```
//!
//! Optional scenario keys: `label`, `hypothesis` (null/alt, inferred from the
//! two means when omitted), `alpha`, `alpha_ms` (default 0.05),
//! `permutation_b` (default 999). Distribution syntax: `normal(mu, sigma)`,
//! `t(mu, df)`, `exponential(mu)`, `skewnormal(mu, alpha, var)`.
//! Unknown keys are hard errors. `render_config` emits the canonical form
//! that parses back to the same entries.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::combined::ProcedureConfig;
use crate::dist::DistributionSpec;
use crate::engine::{Hypothesis, ScenarioConfig};
use crate::error::{Error, Result};
use crate::lemma::LemmaInputs;
use crate::mixture::{validate_lambda_grid, MixtureArm, MixtureSpec};
use crate::prob::Probability;

/// A mixture section as written in the file: arm scenarios by reference.
#[derive(Clone, Debug, PartialEq)]
pub struct MixtureSection {
    pub id: String,
    pub p_theta: String,
    pub q: String,
    pub lambda_grid: Vec<f64>,
    pub replicates: u64,
    pub master_seed: u64,
}

/// A lemma section: the six rates plus an optional grid.
#[derive(Clone, Debug, PartialEq)]
pub struct LemmaSection {
    pub id: String,
    pub inputs: LemmaInputs,
    pub lambda_grid: Vec<f64>,
}

/// One parsed section, in file order.
#[derive(Clone, Debug, PartialEq)]
pub enum ConfigEntry {
    Scenario(ScenarioConfig),
    Mixture(MixtureSection),
    Lemma(LemmaSection),
}

/// A parsed configuration document.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConfigFile {
    pub entries: Vec<ConfigEntry>,
}

impl ConfigFile {
    pub fn scenarios(&self) -> impl Iterator<Item = &ScenarioConfig> {
        self.entries.iter().filter_map(|e| match e {
            ConfigEntry::Scenario(s) => Some(s),
            _ => None,
        })
    }

    pub fn mixtures(&self) -> impl Iterator<Item = &MixtureSection> {
        self.entries.iter().filter_map(|e| match e {
            ConfigEntry::Mixture(m) => Some(m),
            _ => None,
        })
    }

    pub fn lemmas(&self) -> impl Iterator<Item = &LemmaSection> {
        self.entries.iter().filter_map(|e| match e {
            ConfigEntry::Lemma(l) => Some(l),
            _ => None,
        })
    }

    fn scenario_by_id(&self, id: &str) -> Option<&ScenarioConfig> {
        self.scenarios().find(|s| s.id == id)
    }

    /// Resolves a mixture section's arm references against the scenarios in
    /// this file.
    pub fn resolve_mixture(&self, section: &MixtureSection) -> Result<MixtureSpec> {
        let path = format!("mixture {}", section.id);
        let arm = |key: &str, reference: &str| -> Result<&ScenarioConfig> {
            self.scenario_by_id(reference).ok_or_else(|| {
                Error::config_value(
                    format!("{path}: {key}"),
                    format!("references unknown scenario `{reference}`"),
                )
            })
        };
        let theta = arm("p_theta", &section.p_theta)?;
        let q = arm("q", &section.q)?;
        if theta.n1 != q.n1 || theta.n2 != q.n2 {
            return Err(Error::config_value(
                path,
                format!(
                    "arms must share sample sizes, got {}x{} and {}x{}",
                    theta.n1, theta.n2, q.n1, q.n2
                ),
            ));
        }
        if theta.procedure != q.procedure {
            return Err(Error::config_value(path, "arms must share test levels"));
        }
        let spec = MixtureSpec {
            id: section.id.clone(),
            p_theta: MixtureArm {
                label: theta.label.clone(),
                dist1: theta.dist1,
                dist2: theta.dist2,
            },
            q: MixtureArm {
                label: q.label.clone(),
                dist1: q.dist1,
                dist2: q.dist2,
            },
            n1: theta.n1,
            n2: theta.n2,
            lambda_grid: section.lambda_grid.clone(),
            replicates: section.replicates,
            master_seed: section.master_seed,
            procedure: theta.procedure,
        };
        spec.validate()?;
        Ok(spec)
    }
}

struct RawSection {
    kind: String,
    id: String,
    line: usize,
    // key -> (value, line)
    values: BTreeMap<String, (String, usize)>,
    key_order: Vec<String>,
}

fn parse_sections(text: &str) -> Result<Vec<RawSection>> {
    let mut sections: Vec<RawSection> = Vec::new();
    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = match raw_line.find('#') {
            Some(pos) => &raw_line[..pos],
            None => raw_line,
        }
        .trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let inner = rest.strip_suffix(']').ok_or(Error::Config {
                line: line_no,
                message: "unterminated section header".to_string(),
            })?;
            let mut parts = inner.split_whitespace();
            let kind = parts.next().unwrap_or("").to_string();
            let id = parts.next().unwrap_or("").to_string();
            if !matches!(kind.as_str(), "scenario" | "mixture" | "lemma") {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("unknown section type `{kind}`"),
                });
            }
            if id.is_empty() || parts.next().is_some() {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("section header must be `[{kind} <id>]`"),
                });
            }
            if sections.iter().any(|s| s.id == id) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate section id `{id}`"),
                });
            }
            sections.push(RawSection {
                kind,
                id,
                line: line_no,
                values: BTreeMap::new(),
                key_order: Vec::new(),
            });
        } else if let Some((key, value)) = line.split_once('=') {
            let key = key.trim().to_string();
            let value = value.trim().to_string();
            let section = sections.last_mut().ok_or(Error::Config {
                line: line_no,
                message: "key outside of any section".to_string(),
            })?;
            if section.values.contains_key(&key) {
                return Err(Error::Config {
                    line: line_no,
                    message: format!("duplicate key `{key}`"),
                });
            }
            section.key_order.push(key.clone());
            section.values.insert(key, (value, line_no));
        } else {
            return Err(Error::Config {
                line: line_no,
                message: format!("expected `key = value` or a section header, got `{line}`"),
            });
        }
    }
    Ok(sections)
}

// Typed key extraction; unknown keys are rejected up front.
struct SectionReader<'a> {
    section: &'a RawSection,
    path: String,
}

impl<'a> SectionReader<'a> {
    fn new(section: &'a RawSection, allowed: &[&str]) -> Result<Self> {
        let path = format!("{} {}", section.kind, section.id);
        for key in &section.key_order {
            if !allowed.contains(&key.as_str()) {
                let line = section.values[key].1;
                return Err(Error::Config {
                    line,
                    message: format!("unknown key `{key}` in [{path}]"),
                });
            }
        }
        Ok(SectionReader { section, path })
    }

    fn raw(&mut self, key: &str) -> Option<&'a str> {
        self.section.values.get(key).map(|(v, _)| v.as_str())
    }

    fn required(&mut self, key: &str) -> Result<&'a str> {
        self.raw(key).ok_or_else(|| Error::Config {
            line: self.section.line,
            message: format!("[{}] is missing required key `{key}`", self.path),
        })
    }

    fn value_error(&self, key: &str, message: impl Into<String>) -> Error {
        Error::config_value(format!("{}: {key}", self.path), message)
    }

    fn f64(&mut self, key: &str) -> Result<Option<f64>> {
        match self.raw(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<f64>()
                .map(Some)
                .map_err(|_| self.value_error(key, format!("expected a number, got `{v}`"))),
        }
    }

    fn u64_required(&mut self, key: &str) -> Result<u64> {
        let v = self.required(key)?;
        v.parse::<u64>().map_err(|_| {
            self.value_error(key, format!("expected a nonnegative integer, got `{v}`"))
        })
    }

    fn usize_required(&mut self, key: &str) -> Result<usize> {
        Ok(self.u64_required(key)? as usize)
    }

    fn probability(&mut self, key: &str, default: f64) -> Result<Probability> {
        let v = self.f64(key)?.unwrap_or(default);
        Probability::new(v).map_err(|e| self.value_error(key, e.to_string()))
    }

    fn f64_required(&mut self, key: &str) -> Result<f64> {
        let v = self.required(key)?;
        v.parse::<f64>()
            .map_err(|_| self.value_error(key, format!("expected a number, got `{v}`")))
    }
}

fn parse_distribution(path: &str, key: &str, text: &str) -> Result<DistributionSpec> {
    let err = |msg: String| Error::config_value(format!("{path}: {key}"), msg);
    let open = text
        .find('(')
        .ok_or_else(|| err(format!("expected `kind(key = value, ...)`, got `{text}`")))?;
    let kind = text[..open].trim();
    let rest = text[open + 1..]
        .strip_suffix(')')
        .ok_or_else(|| err("missing closing parenthesis".to_string()))?;
    let mut fields: BTreeMap<&str, f64> = BTreeMap::new();
    for part in rest.split(',') {
        let part = part.trim();
        if part.is_empty() {
            continue;
        }
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| err(format!("expected `key = value`, got `{part}`")))?;
        let value = v
            .trim()
            .parse::<f64>()
            .map_err(|_| err(format!("expected a number for `{}`", k.trim())))?;
        fields.insert(k.trim(), value);
    }
    let mut take = |name: &str| -> Result<f64> {
        fields
            .remove(name)
            .ok_or_else(|| err(format!("`{kind}` requires parameter `{name}`")))
    };
    let spec = match kind {
        "normal" => DistributionSpec::Normal {
            mu: take("mu")?,
            sigma: take("sigma")?,
        },
        "t" => DistributionSpec::ShiftedT {
            mu: take("mu")?,
            df: take("df")?,
        },
        "exponential" => DistributionSpec::Exponential { mu: take("mu")? },
        "skewnormal" => DistributionSpec::SkewNormal {
            mu: take("mu")?,
            alpha: take("alpha")?,
            target_var: take("var")?,
        },
        other => {
            return Err(err(format!(
                "unknown distribution `{other}` (expected normal, t, exponential, skewnormal)"
            )))
        }
    };
    if let Some(extra) = fields.keys().next() {
        return Err(err(format!("unknown parameter `{extra}` for `{kind}`")));
    }
    spec.validate().map_err(|e| err(e.to_string()))?;
    Ok(spec)
}

fn parse_lambda_grid(path: &str, key: &str, text: &str) -> Result<Vec<f64>> {
    let err = |msg: String| Error::config_value(format!("{path}: {key}"), msg);
    let grid: Vec<f64> = if text.contains(':') {
        // start:step:end sugar
        let parts: Vec<&str> = text.split(':').collect();
        if parts.len() != 3 {
            return Err(err(format!("expected `start:step:end`, got `{text}`")));
        }
        let nums: Vec<f64> = parts
            .iter()
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| {
                err(format!(
                    "expected numbers in `start:step:end`, got `{text}`"
                ))
            })?;
        let (start, step, end) = (nums[0], nums[1], nums[2]);
        // step must be a positive finite number (NaN fails).
        if !step.is_finite() || step <= 0.0 || end < start {
            return Err(err("need step > 0 and end >= start".to_string()));
        }
        let count = ((end - start) / step).round() as usize;
        (0..=count)
            .map(|i| {
                let v = start + step * i as f64;
                // Snap near-integer artifacts like 0.30000000000000004.
                (v * 1e12).round() / 1e12
            })
            .collect()
    } else {
        text.split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| err(format!("expected a comma list of numbers, got `{text}`")))?
    };
    validate_lambda_grid(path, &grid).map_err(|e| err(e.to_string()))?;
    Ok(grid)
}

fn default_label(id: &str) -> String {
    id.trim_end_matches("-null")
        .trim_end_matches("-alt")
        .to_string()
}

const SCENARIO_KEYS: [&str; 11] = [
    "dist1",
    "dist2",
    "n1",
    "n2",
    "replicates",
    "seed",
    "alpha",
    "alpha_ms",
    "permutation_b",
    "label",
    "hypothesis",
];

fn parse_scenario(section: &RawSection) -> Result<ScenarioConfig> {
    let mut r = SectionReader::new(section, &SCENARIO_KEYS)?;
    let path = r.path.clone();
    let dist1 = parse_distribution(&path, "dist1", r.required("dist1")?)?;
    let dist2 = parse_distribution(&path, "dist2", r.required("dist2")?)?;
    let n1 = r.usize_required("n1")?;
    let n2 = r.usize_required("n2")?;
    let replicates = r.u64_required("replicates")?;
    let master_seed = r.u64_required("seed")?;
    let alpha = r.probability("alpha", 0.05)?;
    let alpha_ms = r.probability("alpha_ms", 0.05)?;
    let permutation_b = r.f64("permutation_b")?.unwrap_or(999.0);
    if !(permutation_b >= 1.0 && permutation_b.fract() == 0.0) {
        return Err(r.value_error("permutation_b", "expected a positive integer"));
    }
    let label = r
        .raw("label")
        .map(str::to_string)
        .unwrap_or_else(|| default_label(&section.id));
    let hypothesis = match r.raw("hypothesis") {
        Some("null") => Hypothesis::Null,
        Some("alt") => Hypothesis::Alt,
        Some(other) => {
            return Err(r.value_error(
                "hypothesis",
                format!("expected `null` or `alt`, got `{other}`"),
            ))
        }
        // Means equal: the scenario realizes the main null.
        None => {
            if dist1.mean() == dist2.mean() {
                Hypothesis::Null
            } else {
                Hypothesis::Alt
            }
        }
    };
    let config = ScenarioConfig {
        id: section.id.clone(),
        label,
        hypothesis,
        dist1,
        dist2,
        n1,
        n2,
        replicates,
        master_seed,
        procedure: ProcedureConfig { alpha_ms, alpha },
        permutation_b: permutation_b as u32,
    };
    config
        .validate()
        .map_err(|e| Error::config_value(format!("scenario {}", section.id), e.to_string()))?;
    Ok(config)
}

fn parse_mixture(section: &RawSection) -> Result<MixtureSection> {
    let mut r = SectionReader::new(
        section,
        &["p_theta", "q", "lambda_grid", "replicates", "seed"],
    )?;
    let path = r.path.clone();
    let p_theta = r.required("p_theta")?.to_string();
    let q = r.required("q")?.to_string();
    let lambda_grid = parse_lambda_grid(&path, "lambda_grid", r.required("lambda_grid")?)?;
    let replicates = r.u64_required("replicates")?;
    let master_seed = r.u64_required("seed")?;
    Ok(MixtureSection {
        id: section.id.clone(),
        p_theta,
        q,
        lambda_grid,
        replicates,
        master_seed,
    })
}

fn parse_lemma(section: &RawSection) -> Result<LemmaSection> {
    let mut r = SectionReader::new(
        section,
        &[
            "p_mc_theta",
            "p_au_theta",
            "p_mc_q",
            "p_au_q",
            "alpha_ms",
            "alpha_ms_star",
            "lambda_grid",
        ],
    )?;
    let path = r.path.clone();
    let inputs = LemmaInputs {
        p_mc_theta: r.f64_required("p_mc_theta")?,
        p_au_theta: r.f64_required("p_au_theta")?,
        p_mc_q: r.f64_required("p_mc_q")?,
        p_au_q: r.f64_required("p_au_q")?,
        alpha_ms: r.f64_required("alpha_ms")?,
        alpha_ms_star: r.f64_required("alpha_ms_star")?,
    };
    let lambda_grid = match r.raw("lambda_grid") {
        Some(text) => parse_lambda_grid(&path, "lambda_grid", text)?,
        None => (0..=20).map(|i| i as f64 / 20.0).collect(),
    };
    inputs
        .validate_rates()
        .map_err(|e| Error::config_value(path, e.to_string()))?;
    Ok(LemmaSection {
        id: section.id.clone(),
        inputs,
        lambda_grid,
    })
}

/// Parses a configuration document.
pub fn parse_config(text: &str) -> Result<ConfigFile> {
    let sections = parse_sections(text)?;
    if sections.is_empty() {
        return Err(Error::Config {
            line: 0,
            message: "no scenarios defined".to_string(),
        });
    }
    let mut entries = Vec::with_capacity(sections.len());
    for section in &sections {
        let entry = match section.kind.as_str() {
            "scenario" => ConfigEntry::Scenario(parse_scenario(section)?),
            "mixture" => ConfigEntry::Mixture(parse_mixture(section)?),
            "lemma" => ConfigEntry::Lemma(parse_lemma(section)?),
            _ => unreachable!("section kinds validated during lexing"),
        };
        entries.push(entry);
    }
    let file = ConfigFile { entries };
    // Arm references must resolve even if the caller never runs the sweep.
    for mixture in file.mixtures() {
        file.resolve_mixture(mixture)?;
    }
    Ok(file)
}

fn render_distribution(spec: &DistributionSpec) -> String {
    match *spec {
        DistributionSpec::Normal { mu, sigma } => format!("normal(mu = {mu}, sigma = {sigma})"),
        DistributionSpec::ShiftedT { mu, df } => format!("t(mu = {mu}, df = {df})"),
        DistributionSpec::Exponential { mu } => format!("exponential(mu = {mu})"),
        DistributionSpec::SkewNormal {
            mu,
            alpha,
            target_var,
        } => {
            format!("skewnormal(mu = {mu}, alpha = {alpha}, var = {target_var})")
        }
    }
}

fn render_grid(grid: &[f64]) -> String {
    grid.iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// Renders the canonical text form; `parse_config(render_config(f)) == f`.
pub fn render_config(file: &ConfigFile) -> String {
    let mut out = String::new();
    for (i, entry) in file.entries.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        match entry {
            ConfigEntry::Scenario(s) => {
                writeln!(out, "[scenario {}]", s.id).unwrap();
                writeln!(out, "label = {}", s.label).unwrap();
                writeln!(out, "hypothesis = {}", s.hypothesis.as_str()).unwrap();
                writeln!(out, "dist1 = {}", render_distribution(&s.dist1)).unwrap();
                writeln!(out, "dist2 = {}", render_distribution(&s.dist2)).unwrap();
                writeln!(out, "n1 = {}", s.n1).unwrap();
                writeln!(out, "n2 = {}", s.n2).unwrap();
                writeln!(out, "replicates = {}", s.replicates).unwrap();
                writeln!(out, "seed = {}", s.master_seed).unwrap();
                writeln!(out, "alpha = {}", s.procedure.alpha).unwrap();
                writeln!(out, "alpha_ms = {}", s.procedure.alpha_ms).unwrap();
                writeln!(out, "permutation_b = {}", s.permutation_b).unwrap();
            }
            ConfigEntry::Mixture(m) => {
                writeln!(out, "[mixture {}]", m.id).unwrap();
                writeln!(out, "p_theta = {}", m.p_theta).unwrap();
                writeln!(out, "q = {}", m.q).unwrap();
                writeln!(out, "lambda_grid = {}", render_grid(&m.lambda_grid)).unwrap();
                writeln!(out, "replicates = {}", m.replicates).unwrap();
                writeln!(out, "seed = {}", m.master_seed).unwrap();
            }
            ConfigEntry::Lemma(l) => {
                writeln!(out, "[lemma {}]", l.id).unwrap();
                writeln!(out, "p_mc_theta = {}", l.inputs.p_mc_theta).unwrap();
                writeln!(out, "p_au_theta = {}", l.inputs.p_au_theta).unwrap();
                writeln!(out, "p_mc_q = {}", l.inputs.p_mc_q).unwrap();
                writeln!(out, "p_au_q = {}", l.inputs.p_au_q).unwrap();
                writeln!(out, "alpha_ms = {}", l.inputs.alpha_ms).unwrap();
                writeln!(out, "alpha_ms_star = {}", l.inputs.alpha_ms_star).unwrap();
                writeln!(out, "lambda_grid = {}", render_grid(&l.lambda_grid)).unwrap();
            }
        }
    }
    out
}
