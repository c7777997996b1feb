//! Experiment configuration in TOML.

use std::fs;
use std::path::{Path, PathBuf};

use gibbs_core::sft::{build_subshift_rows, SubshiftSpec, Word};
use gibbs_core::thermo::Potential;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

/// Largest stream length accepted from a config.
pub const MAX_VALUES: usize = 20_000_000;
pub const MAX_HAAR_DEPTH: usize = 11;
pub const MAX_CONNES_LEVEL: usize = 8;

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Thermo,
    HaarCheck,
    Spectrum,
    Dixmier,
    Renewal,
    Connes,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Thermo => "thermo",
            Task::HaarCheck => "haar-check",
            Task::Spectrum => "spectrum",
            Task::Dixmier => "dixmier",
            Task::Renewal => "renewal",
            Task::Connes => "connes",
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    task: Task,
    #[serde(default)]
    seed: u64,
    output: Option<PathBuf>,
    subshift: RawSubshift,
    #[serde(default)]
    potential: RawPotential,
    #[serde(default)]
    params: Params,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSubshift {
    preset: Option<String>,
    alphabet_size: Option<usize>,
    adjacency: Option<Vec<Vec<u8>>>,
    file: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPotential {
    bernoulli: Option<Vec<f64>>,
    range: Option<usize>,
    values: Option<Vec<Entry>>,
    file: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Entry {
    word: String,
    value: f64,
}

/// Task parameters; each task reads the keys it knows and ignores the rest.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    // thermo
    pub gibbs_depth: Option<usize>,
    pub mass_depth: Option<usize>,
    pub pressure_t: Option<Vec<f64>>,
    // haar-check
    pub depth: Option<usize>,
    pub child_order: Option<String>,
    pub basis_dump_depth: Option<usize>,
    // spectrum and dixmier
    pub n: Option<usize>,
    pub restriction: Option<String>,
    pub include_boundary: Option<bool>,
    pub dump: Option<usize>,
    pub checkpoints: Option<Vec<usize>>,
    pub p_values: Option<Vec<f64>>,
    pub dimensions: Option<bool>,
    pub cylinders: Option<Vec<String>>,
    pub budget_nodes: Option<usize>,
    // renewal
    pub t_grid: Option<Vec<f64>>,
    pub r_grid: Option<Vec<f64>>,
    pub anchor: Option<String>,
    pub lalley_r: Option<Vec<f64>>,
    pub krw_t: Option<f64>,
    pub krw_samples: Option<usize>,
    // connes
    pub p: Option<String>,
    pub q: Option<String>,
    pub k_from: Option<usize>,
    pub k_to: Option<usize>,
    pub restarts: Option<usize>,
    pub iterations: Option<usize>,
}

/// A loaded, validated experiment.
#[derive(Debug)]
pub struct ExperimentConfig {
    pub sha256: String,
    pub task: Task,
    pub seed: u64,
    pub output: Option<PathBuf>,
    pub spec: SubshiftSpec,
    pub potential: Potential,
    pub params: Params,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::MissingFile {
        path: path.to_path_buf(),
        source,
    })
}

fn parse_err(path: &Path, message: impl Into<String>) -> CliError {
    CliError::Parse {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// 1-based word: digits like "121", dot-separated like "1.10.2", or "" / "e"
/// for the empty word.
pub fn parse_word(s: &str) -> CliResult<Word> {
    let s = s.trim();
    if s.is_empty() || s == "e" {
        return Ok(Word::empty());
    }
    let symbols: Option<Vec<u32>> = if s.contains('.') {
        s.split('.').map(|p| p.parse().ok()).collect()
    } else {
        s.chars().map(|c| c.to_digit(10)).collect()
    };
    let symbols = symbols.ok_or_else(|| CliError::Config(format!("bad word {s:?}")))?;
    Word::from_one_based(&symbols).map_err(|e| CliError::Config(format!("bad word {s:?}: {e}")))
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

/// Adjacency file: one row per line, entries separated by spaces or commas.
fn adjacency_file(path: &Path) -> CliResult<Vec<Vec<u8>>> {
    let text = read(path)?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(|l| {
            l.split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .map(|t| t.parse::<u8>().map_err(|_| parse_err(path, format!("bad entry {t:?}"))))
                .collect()
        })
        .collect()
}

fn build_spec(raw: &RawSubshift, base: &Path) -> CliResult<SubshiftSpec> {
    let bad = |e: gibbs_core::Error| CliError::Config(format!("subshift: {e}"));
    let sources = [raw.preset.is_some(), raw.adjacency.is_some(), raw.file.is_some()];
    if sources.iter().filter(|&&b| b).count() != 1 {
        return Err(CliError::Config(
            "subshift needs exactly one of preset, adjacency, file".into(),
        ));
    }
    let spec = if let Some(p) = &raw.preset {
        match p.as_str() {
            "full" => SubshiftSpec::full(raw.alphabet_size.unwrap_or(2)).map_err(bad)?,
            "golden-mean" => SubshiftSpec::golden_mean(),
            other => return Err(CliError::Config(format!("unknown preset {other:?}"))),
        }
    } else if let Some(rows) = &raw.adjacency {
        build_subshift_rows(rows).map_err(bad)?
    } else {
        let path = resolve(base, raw.file.as_ref().unwrap());
        build_subshift_rows(&adjacency_file(&path)?).map_err(bad)?
    };
    if let Some(l) = raw.alphabet_size {
        if l != spec.alphabet_size() {
            return Err(CliError::Config(format!(
                "alphabet_size {l} but the adjacency has {} symbols",
                spec.alphabet_size()
            )));
        }
    }
    Ok(spec)
}

/// Potential file: CSV with header `word,value`.
fn potential_file(path: &Path) -> CliResult<Vec<(Word, f64)>> {
    let text = read(path)?;
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut out = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        if rec.len() != 2 {
            return Err(parse_err(path, "expected word,value"));
        }
        let w = parse_word(&rec[0]).map_err(|e| parse_err(path, e.to_string()))?;
        let v: f64 = rec[1]
            .parse()
            .map_err(|_| parse_err(path, format!("bad value {:?}", &rec[1])))?;
        out.push((w, v));
    }
    Ok(out)
}

fn build_potential(raw: &RawPotential, spec: &SubshiftSpec, base: &Path) -> CliResult<Potential> {
    let bad = |e: gibbs_core::Error| CliError::Config(format!("potential: {e}"));
    let sources = [raw.bernoulli.is_some(), raw.values.is_some(), raw.file.is_some()];
    match sources.iter().filter(|&&b| b).count() {
        0 => return Ok(Potential::zero(spec)),
        1 => {}
        _ => {
            return Err(CliError::Config(
                "potential takes one of bernoulli, values, file".into(),
            ))
        }
    }
    if let Some(p) = &raw.bernoulli {
        return Potential::bernoulli(spec, p).map_err(bad);
    }
    let entries = match (&raw.values, &raw.file) {
        (Some(v), _) => v
            .iter()
            .map(|e| Ok((parse_word(&e.word)?, e.value)))
            .collect::<CliResult<Vec<_>>>()?,
        (_, Some(f)) => potential_file(&resolve(base, f))?,
        _ => unreachable!(),
    };
    let range = match raw.range {
        Some(r) => r,
        None => entries
            .first()
            .map(|e| e.0.len())
            .ok_or_else(|| CliError::Config("potential has no entries".into()))?,
    };
    Potential::from_entries(spec, range, &entries).map_err(bad)
}

fn check_params(task: Task, p: &Params) -> CliResult<()> {
    let over = |what: &str, v: usize, max: usize| {
        if v > max {
            Err(CliError::Config(format!("{what} = {v} exceeds the budget {max}")))
        } else {
            Ok(())
        }
    };
    if let Some(n) = p.n {
        over("n", n, MAX_VALUES)?;
    }
    if let Some(c) = &p.checkpoints {
        for &n in c {
            over("checkpoint", n, MAX_VALUES)?;
        }
    }
    if let Some(d) = p.depth {
        over("depth", d, MAX_HAAR_DEPTH)?;
    }
    if let Some(k) = p.k_to {
        over("k_to", k, MAX_CONNES_LEVEL)?;
    }
    if task == Task::Connes && (p.p.is_none() || p.q.is_none()) {
        return Err(CliError::Config("connes needs params.p and params.q".into()));
    }
    Ok(())
}

pub fn load(path: &Path) -> CliResult<ExperimentConfig> {
    let text = read(path)?;
    let raw: RawConfig = toml::from_str(&text).map_err(|e| parse_err(path, e.to_string()))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let spec = build_spec(&raw.subshift, base)?;
    let potential = build_potential(&raw.potential, &spec, base)?;
    check_params(raw.task, &raw.params)?;
    let sha256 = format!("{:x}", Sha256::digest(text.as_bytes()));
    Ok(ExperimentConfig {
        sha256,
        task: raw.task,
        seed: raw.seed,
        output: raw.output.map(|o| resolve(base, &o)),
        spec,
        potential,
        params: raw.params,
    })
}
