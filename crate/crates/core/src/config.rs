//! Experiment configuration: one TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dynamics::DynamicsConfig;
use crate::error::{Error, Result};
use crate::learning::{CrossTaskActivation, LearningConfig, MembershipConfig};
use crate::pipeline::{HyperGrid, PipelineConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TraceLevel {
    #[default]
    None,
    /// Also write `sweep  energy  flips` per fold and group.
    Dynamics,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("out")
}

fn default_k_folds() -> usize {
    3
}

fn default_true() -> bool {
    true
}

fn default_bin_edges() -> Vec<usize> {
    PipelineConfig::default().bin_edges
}

/// Everything a run needs. Relative paths are resolved against the directory
/// of the configuration file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub graph_path: PathBuf,
    pub labels_path: PathBuf,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    /// Master seed; mandatory, there is no clock-based fallback.
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default = "default_k_folds")]
    pub k_folds: usize,
    /// Missing `(node, task)` pairs of labeled nodes are negative.
    #[serde(default = "default_true")]
    pub implicit_negatives: bool,
    /// Cardinality bins for task grouping; empty means one group.
    #[serde(default = "default_bin_edges")]
    pub bin_edges: Vec<usize>,
    #[serde(default)]
    pub similarity_cutoff: f64,
    #[serde(default)]
    pub nonconvergence_fatal: bool,
    #[serde(default)]
    pub trace: TraceLevel,
    #[serde(default)]
    pub membership: MembershipConfig,
    #[serde(default)]
    pub learning: LearningConfig,
    #[serde(default)]
    pub dynamics: DynamicsConfig,
    #[serde(default)]
    pub grid: HyperGrid,
}

impl ExperimentConfig {
    pub fn new(graph_path: impl Into<PathBuf>, labels_path: impl Into<PathBuf>, seed: u64) -> Self {
        let p = PipelineConfig::default();
        Self {
            graph_path: graph_path.into(),
            labels_path: labels_path.into(),
            output_dir: default_output_dir(),
            seed: Some(seed),
            k_folds: default_k_folds(),
            implicit_negatives: true,
            bin_edges: p.bin_edges,
            similarity_cutoff: p.similarity_cutoff,
            nonconvergence_fatal: p.nonconvergence_fatal,
            trace: TraceLevel::None,
            membership: p.membership,
            learning: p.learning,
            dynamics: p.dynamics,
            grid: HyperGrid::default(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.message().to_string()))
    }

    /// Read a TOML file and resolve its relative paths.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(format!("reading config {}", path.display()), e))?;
        let mut cfg = Self::from_toml_str(&text)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        cfg.resolve_paths(base);
        Ok(cfg)
    }

    pub fn resolve_paths(&mut self, base: &Path) {
        for p in [&mut self.graph_path, &mut self.labels_path, &mut self.output_dir] {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
    }

    pub fn seed(&self) -> Result<u64> {
        self.seed.ok_or_else(|| Error::config("seed", "a seed is required (set `seed` or pass --seed)"))
    }

    pub fn pipeline(&self) -> PipelineConfig {
        PipelineConfig {
            membership: self.membership,
            learning: self.learning.clone(),
            dynamics: self.dynamics,
            bin_edges: self.bin_edges.clone(),
            similarity_cutoff: self.similarity_cutoff,
            nonconvergence_fatal: self.nonconvergence_fatal,
        }
    }

    /// Check fields and that input files exist.
    pub fn validate(&self) -> Result<()> {
        self.seed()?;
        if !self.graph_path.is_file() {
            return Err(Error::config("graph_path", format!("file not found: {}", self.graph_path.display())));
        }
        if !self.labels_path.is_file() {
            return Err(Error::config("labels_path", format!("file not found: {}", self.labels_path.display())));
        }
        if self.k_folds < 2 {
            return Err(Error::config("k_folds", "must be >= 2"));
        }
        self.pipeline().validate()?;
        self.grid.validate()
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serialization(e.to_string()))
    }
}

/// Command-line overrides, applied after the file is loaded.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub graph_path: Option<PathBuf>,
    pub labels_path: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
    pub k_folds: Option<usize>,
    pub alpha: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub tau: Option<Vec<f64>>,
    pub bin_edges: Option<Vec<usize>>,
    pub crosstask_activation: Option<CrossTaskActivation>,
    pub max_sweeps: Option<usize>,
    pub trace: Option<TraceLevel>,
    pub nonconvergence_fatal: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(v) = &self.graph_path {
            cfg.graph_path = v.clone();
        }
        if let Some(v) = &self.labels_path {
            cfg.labels_path = v.clone();
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        if let Some(v) = self.seed {
            cfg.seed = Some(v);
        }
        if let Some(v) = self.k_folds {
            cfg.k_folds = v;
        }
        if let Some(v) = &self.alpha {
            cfg.grid.alpha = v.clone();
        }
        if let Some(v) = &self.beta {
            cfg.grid.beta = v.clone();
        }
        if let Some(v) = &self.tau {
            cfg.grid.tau = v.clone();
        }
        if let Some(v) = &self.bin_edges {
            cfg.bin_edges = v.clone();
        }
        if let Some(v) = self.crosstask_activation {
            cfg.learning.crosstask_activation = v;
        }
        if let Some(v) = self.max_sweeps {
            cfg.dynamics.max_sweeps = v;
        }
        if let Some(v) = self.trace {
            cfg.trace = v;
        }
        if self.nonconvergence_fatal {
            cfg.nonconvergence_fatal = true;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_file_gets_defaults() {
        let cfg = ExperimentConfig::from_toml_str("graph_path = \"g.tsv\"\nlabels_path = \"l.tsv\"\nseed = 7\n").unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.k_folds, 3);
        assert_eq!(cfg.grid, HyperGrid::default());
        assert_eq!(cfg.bin_edges, vec![9, 20, 50, 100]);
    }

    #[test]
    fn nested_sections_and_unknown_fields() {
        let text = "graph_path = \"g\"\nlabels_path = \"l\"\nseed = 1\n[grid]\nalpha = [0.0]\nbeta = [1.0]\n[learning]\nrho_grid_size = 8\ncrosstask_activation = \"own\"\n";
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.grid.alpha, vec![0.0]);
        assert_eq!(cfg.learning.rho_grid_size, 8);
        assert_eq!(cfg.learning.crosstask_activation, CrossTaskActivation::Own);
        let err = ExperimentConfig::from_toml_str("graph_path = \"g\"\nlabels_path = \"l\"\nseed = 1\nbogus = 2\n").unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn missing_seed_and_files_are_named() {
        let mut cfg = ExperimentConfig::from_toml_str("graph_path = \"/nonexistent/g\"\nlabels_path = \"l\"\n").unwrap();
        assert!(cfg.validate().unwrap_err().to_string().contains("seed"));
        cfg.seed = Some(1);
        let err = cfg.validate().unwrap_err();
        assert!(err.to_string().contains("graph_path"));
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn overrides_win() {
        let mut cfg = ExperimentConfig::new("g", "l", 1);
        Overrides {
            seed: Some(9),
            beta: Some(vec![0.0, 2.0]),
            max_sweeps: Some(7),
            ..Overrides::default()
        }
        .apply(&mut cfg);
        assert_eq!(cfg.seed, Some(9));
        assert_eq!(cfg.grid.beta, vec![0.0, 2.0]);
        assert_eq!(cfg.dynamics.max_sweeps, 7);
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ExperimentConfig::new("g.tsv", "l.tsv", 3);
        let back = ExperimentConfig::from_toml_str(&cfg.to_toml_string().unwrap()).unwrap();
        assert_eq!(cfg, back);
    }
}
