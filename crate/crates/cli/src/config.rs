use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use kgverb_core::filter::DEFAULT_FRACTION;
use kgverb_core::grouper::GroupingConfig;
use kgverb_core::ingest::LoadOptions;
use serde::Deserialize;

/// Parses a co-occurrence cutoff: a count, or `inf` to disable chaining.
pub fn parse_cutoff(s: &str) -> Result<u64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "∞" => Ok(u64::MAX),
        other => other.parse().map_err(|_| format!("`{s}` is neither a count nor `inf`")),
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum CutoffSpec {
    Count(u64),
    Text(String),
}

/// The optional JSON config file. Every field may be omitted.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    entities: Option<PathBuf>,
    triples: Option<PathBuf>,
    pages: Option<PathBuf>,
    max_depth: Option<usize>,
    cutoff: Option<CutoffSpec>,
    fraction: Option<f64>,
    strict: Option<bool>,
    repair: Option<bool>,
    workers: Option<usize>,
}

/// Settings shared by all stages after merging flags, environment and the
/// config file.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub entities: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub pages: Option<PathBuf>,
    pub grouping: GroupingConfig,
    pub fraction: f64,
    pub load: LoadOptions,
    pub workers: Option<usize>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            entities: None,
            triples: None,
            pages: None,
            grouping: GroupingConfig::default(),
            fraction: DEFAULT_FRACTION,
            load: LoadOptions::default(),
            workers: None,
        }
    }
}

/// Values given on the command line (or through the environment); each
/// one overrides the config file.
#[derive(Debug, Default)]
pub struct Overrides {
    pub entities: Option<PathBuf>,
    pub triples: Option<PathBuf>,
    pub pages: Option<PathBuf>,
    pub max_depth: Option<usize>,
    pub cutoff: Option<u64>,
    pub fraction: Option<f64>,
    pub strict: bool,
    pub repair: bool,
    pub workers: Option<usize>,
}

impl PipelineConfig {
    pub fn resolve(file: Option<&Path>, o: Overrides) -> Result<Self> {
        let f = match file {
            Some(p) => {
                let text = fs::read_to_string(p).with_context(|| format!("reading config {}", p.display()))?;
                serde_json::from_str::<ConfigFile>(&text).with_context(|| format!("parsing config {}", p.display()))?
            }
            None => ConfigFile::default(),
        };
        let d = PipelineConfig::default();
        let cutoff = match (o.cutoff, f.cutoff) {
            (Some(c), _) => c,
            (None, Some(CutoffSpec::Count(c))) => c,
            (None, Some(CutoffSpec::Text(s))) => parse_cutoff(&s).map_err(anyhow::Error::msg)?,
            (None, None) => d.grouping.cutoff,
        };
        let cfg = PipelineConfig {
            entities: o.entities.or(f.entities),
            triples: o.triples.or(f.triples),
            pages: o.pages.or(f.pages),
            grouping: GroupingConfig {
                max_depth: o.max_depth.or(f.max_depth).unwrap_or(d.grouping.max_depth),
                cutoff,
            },
            fraction: o.fraction.or(f.fraction).unwrap_or(d.fraction),
            load: LoadOptions {
                strict: o.strict || f.strict.unwrap_or(false),
                repair: o.repair || f.repair.unwrap_or(false),
            },
            workers: o.workers.or(f.workers),
        };
        if cfg.grouping.max_depth == 0 {
            bail!("max_depth must be at least 1");
        }
        if !(0.0..1.0).contains(&cfg.fraction) {
            bail!("fraction must lie in [0, 1), got {}", cfg.fraction);
        }
        if cfg.workers == Some(0) {
            bail!("workers must be at least 1");
        }
        Ok(cfg)
    }
}
