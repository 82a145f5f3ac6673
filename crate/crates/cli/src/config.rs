//! Experiment configuration, read from TOML.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use hin_recovery::validate::NullMode;
use hin_recovery::FeatureAggregation;
use serde::Deserialize;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Edge-list file, relative to the config file.
    pub input: PathBuf,
    #[serde(default)]
    pub header: bool,
    /// Meta-path whose walk table is explained; a link type name is the
    /// one-step case.
    pub target: String,
    #[serde(default = "default_alpha")]
    pub alpha: f64,
    #[serde(default = "default_true")]
    pub intercept: bool,
    /// Keep the hole target column in the design.
    #[serde(default)]
    pub keep_holes: bool,
    #[serde(default)]
    pub feature_agg: FeatureAggregation,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub seed: u64,
    /// Extra link types `name = "of"` holding the transpose of `of`.
    #[serde(default)]
    pub inverse: BTreeMap<String, String>,
    /// Link types merged into one, applied after the inverses.
    #[serde(default)]
    pub collapse: Vec<Collapse>,
    pub candidates: Candidates,
    #[serde(default)]
    pub cv: CvSettings,
    #[serde(default)]
    pub null: NullSettings,
    pub division: Option<DivisionSettings>,
}

/// Replaces every link type from `source` to `target` by their sum.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Collapse {
    pub name: String,
    pub source: String,
    pub target: String,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Candidates {
    pub enumerate: Option<Enumerate>,
    pub metapaths: Option<Vec<String>>,
    pub features: Option<Vec<FeatureGroup>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Enumerate {
    pub max_len: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FeatureGroup {
    pub name: String,
    pub metapaths: Vec<String>,
}

/// The single candidate source of a configuration.
#[derive(Clone, Debug)]
pub enum CandidateSource {
    Enumerate(usize),
    MetaPaths(Vec<String>),
    Features(Vec<FeatureGroup>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvSettings {
    #[serde(default = "default_train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "default_splits")]
    pub splits: usize,
}

impl Default for CvSettings {
    fn default() -> Self {
        Self {
            train_fraction: default_train_fraction(),
            splits: default_splits(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NullSettings {
    #[serde(default = "default_replicates")]
    pub replicates: usize,
    #[serde(default)]
    pub mode: NullMode,
    /// Link types to reshuffle; empty means every link type with at least
    /// two edges.
    #[serde(default)]
    pub link_types: Vec<String>,
}

impl Default for NullSettings {
    fn default() -> Self {
        Self {
            replicates: default_replicates(),
            mode: NullMode::default(),
            link_types: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DivisionSettings {
    pub pivot_type: String,
    /// Two-column TSV: node id, category label.
    pub categories: PathBuf,
    /// Meta-path through the pivot type that links the target endpoints.
    pub anchor: String,
}

fn default_alpha() -> f64 {
    0.05
}
fn default_true() -> bool {
    true
}
fn default_out() -> PathBuf {
    PathBuf::from("out")
}
fn default_train_fraction() -> f64 {
    0.8
}
fn default_splits() -> usize {
    10
}
fn default_replicates() -> usize {
    15
}

impl ExperimentConfig {
    /// Reads a config; relative paths inside it are resolved against the
    /// config file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut cfg: Self = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        cfg.input = base.join(&cfg.input);
        cfg.out = base.join(&cfg.out);
        if let Some(d) = cfg.division.as_mut() {
            d.categories = base.join(&d.categories);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            bail!("alpha must lie in (0, 1), got {}", self.alpha);
        }
        self.candidate_source()?;
        Ok(())
    }

    pub fn candidate_source(&self) -> Result<CandidateSource> {
        let c = &self.candidates;
        let given = [c.enumerate.is_some(), c.metapaths.is_some(), c.features.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            bail!("[candidates] must set exactly one of `enumerate`, `metapaths`, `features`");
        }
        Ok(if let Some(e) = &c.enumerate {
            if e.max_len == 0 {
                bail!("candidates.enumerate.max_len must be at least 1");
            }
            CandidateSource::Enumerate(e.max_len)
        } else if let Some(m) = &c.metapaths {
            CandidateSource::MetaPaths(m.clone())
        } else {
            CandidateSource::Features(c.features.clone().unwrap_or_default())
        })
    }
}
