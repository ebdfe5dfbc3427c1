use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::completer::CompleterConfig;
use crate::error::{Error, Result};
use crate::generators::GeneratorSpec;
use crate::graph::{load_edge_list, Graph};
use crate::matcher::MatcherConfig;

/// Completion methods compared by the harness, in the order their seeds are
/// drawn.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Proposed,
    Pa,
    RandomDe,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Proposed, Method::Pa, Method::RandomDe];

    pub fn name(self) -> &'static str {
        match self {
            Method::Proposed => "proposed",
            Method::Pa => "pa",
            Method::RandomDe => "random_de",
        }
    }

    pub fn parse(s: &str) -> Result<Method> {
        Method::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method {s:?}")))
    }
}

/// Where an experiment's network comes from.
///
/// A generator without a `seed` draws a fresh graph for every repeat from the
/// repeat's stream; with a `seed` the same graph is reused and only the
/// hidden nodes change.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Source {
    EdgeList { edge_list: PathBuf },
    Generator(GeneratorSpec),
}

impl Source {
    /// Default network id: the generator label or the file stem.
    pub fn label(&self) -> String {
        match self {
            Source::Generator(spec) => spec.label(),
            Source::EdgeList { edge_list } => edge_list
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| edge_list.display().to_string()),
        }
    }

    /// A graph that does not depend on the repeat stream, if there is one.
    pub fn fixed_graph(&self) -> Result<Option<Graph>> {
        match self {
            Source::EdgeList { edge_list } => {
                let text = std::fs::read_to_string(edge_list)?;
                Ok(Some(load_edge_list(&text)?))
            }
            Source::Generator(spec) if spec.seed.is_some() => Ok(Some(spec.generate_seeded()?)),
            Source::Generator(_) => Ok(None),
        }
    }

    /// Resolves relative edge-list paths against `base`.
    pub fn resolved(mut self, base: &Path) -> Self {
        if let Source::EdgeList { edge_list } = &mut self {
            if edge_list.is_relative() {
                *edge_list = base.join(&*edge_list);
            }
        }
        self
    }
}

fn default_hide_fraction() -> f64 {
    0.25
}

fn default_methods() -> Vec<Method> {
    Method::ALL.to_vec()
}

fn default_repeats() -> usize {
    5
}

/// One comparison of methods on one network.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Network id written to the CSV; defaults to the source label.
    #[serde(default)]
    pub network: Option<String>,
    pub source: Source,
    #[serde(default = "default_hide_fraction")]
    pub hide_fraction: f64,
    #[serde(default = "default_methods")]
    pub methods: Vec<Method>,
    #[serde(default = "default_repeats")]
    pub repeats: usize,
    #[serde(default)]
    pub completer: CompleterConfig,
    #[serde(default)]
    pub matcher: MatcherConfig,
    #[serde(default)]
    pub base_seed: u64,
    /// CSV destination used by the command line when `--out` is absent.
    #[serde(default)]
    pub output: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn new(source: Source) -> Self {
        ExperimentConfig {
            network: None,
            source,
            hide_fraction: default_hide_fraction(),
            methods: default_methods(),
            repeats: default_repeats(),
            completer: CompleterConfig::default(),
            matcher: MatcherConfig::default(),
            base_seed: 0,
            output: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn network_id(&self) -> String {
        self.network.clone().unwrap_or_else(|| self.source.label())
    }

    /// Methods in canonical order without duplicates.
    pub fn method_list(&self) -> Vec<Method> {
        let mut m = self.methods.clone();
        m.sort();
        m.dedup();
        m
    }

    /// Number of nodes hidden from an `n`-node graph.
    pub fn hide_count(&self, n: usize) -> usize {
        ((self.hide_fraction * n as f64).round() as usize).max(1)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.hide_fraction > 0.0 && self.hide_fraction < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "hide_fraction {} must lie in (0, 1)",
                self.hide_fraction
            )));
        }
        if self.repeats == 0 {
            return Err(Error::InvalidParameter("repeats must be at least 1".into()));
        }
        if self.methods.is_empty() {
            return Err(Error::InvalidParameter("no methods selected".into()));
        }
        if self.matcher.max_iters == 0 || !(self.matcher.tol >= 0.0) {
            return Err(Error::InvalidParameter("matcher needs max_iters >= 1 and tol >= 0".into()));
        }
        self.completer.validate()?;
        if let Source::Generator(spec) = &self.source {
            spec.validate()?;
        }
        Ok(())
    }
}

/// A named network for a scatter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NamedSource {
    pub name: String,
    pub source: Source,
}

/// Settings shared by every network of a sweep or scatter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSettings {
    pub hide_fraction: f64,
    pub repeats: usize,
    pub completer: CompleterConfig,
    pub matcher: MatcherConfig,
    pub base_seed: u64,
}

impl Default for RunSettings {
    fn default() -> Self {
        RunSettings {
            hide_fraction: default_hide_fraction(),
            repeats: default_repeats(),
            completer: CompleterConfig::default(),
            matcher: MatcherConfig::default(),
            base_seed: 0,
        }
    }
}

impl RunSettings {
    /// Experiment template for `source` comparing the proposed model with
    /// the random decoder.
    pub fn experiment(&self, network: String, source: Source) -> ExperimentConfig {
        ExperimentConfig {
            network: Some(network),
            source,
            hide_fraction: self.hide_fraction,
            methods: vec![Method::Proposed, Method::RandomDe],
            repeats: self.repeats,
            completer: self.completer.clone(),
            matcher: self.matcher,
            base_seed: self.base_seed,
            output: None,
        }
    }
}

fn default_sweep_p() -> Vec<f64> {
    vec![0.0, 0.2, 0.4, 0.6, 0.8, 1.0]
}

/// Watts–Strogatz rewiring sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub n: usize,
    pub k: usize,
    #[serde(default = "default_sweep_p")]
    pub p_values: Vec<f64>,
    #[serde(default)]
    pub settings: RunSettings,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            n: 256,
            k: 4,
            p_values: default_sweep_p(),
            settings: RunSettings::default(),
        }
    }
}

/// Clustering-versus-performance scatter.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScatterConfig {
    pub networks: Vec<NamedSource>,
    #[serde(default)]
    pub settings: RunSettings,
}
